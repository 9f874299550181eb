#!/usr/bin/env python3
"""Regenerates the frozen reference values used by the metric tests.

The test images are closed-form sinusoid patterns so the exact same doubles
can be rebuilt in C++ (math.sin here and std::sin there hit the same libm).
Every metric below is computed from scratch with numpy, independently of the
library implementation under test. Output is a C++ header snippet on stdout.
"""

import math

import numpy as np
from scipy.signal import correlate2d


def pattern_a(h, w):
    img = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            img[i, j] = 0.5 + 0.35 * math.sin(0.31 * i + 0.47 * j) \
                + 0.15 * math.cos(0.9 * i - 0.23 * j)
    return img


def pattern_b(h, w):
    img = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            img[i, j] = 0.5 + 0.35 * math.sin(0.31 * i + 0.47 * j + 0.4) \
                + 0.15 * math.cos(0.9 * i - 0.23 * j - 0.2)
    return img


def gaussian_window(n, sigma):
    c = (n - 1) / 2.0
    g = np.empty((n, n))
    for y in range(n):
        for x in range(n):
            g[y, x] = math.exp(-((x - c) ** 2 + (y - c) ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def ssim_ref(a, b):
    h, w = a.shape
    win = min(11, h, w)
    if win % 2 == 0:
        win -= 1
    k = gaussian_window(win, 1.5)
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    mu_a = correlate2d(a, k, mode="valid")
    mu_b = correlate2d(b, k, mode="valid")
    var_a = correlate2d(a * a, k, mode="valid") - mu_a ** 2
    var_b = correlate2d(b * b, k, mode="valid") - mu_b ** 2
    cov = correlate2d(a * b, k, mode="valid") - mu_a * mu_b
    m = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) \
        / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
    return m.mean()


def vif_ref(dist, ref):
    # Pixel-domain VIF: 4 scales, window 2^(5-s)+1 with sigma N/5, inputs
    # scaled to [0,255], noise variance 2. The log base cancels in the ratio.
    sigma_nsq = 2.0
    eps = 1e-10
    ref = ref * 255.0
    dist = dist * 255.0
    num = den = 0.0
    for scale in range(1, 5):
        n = 2 ** (4 - scale + 1) + 1
        win = gaussian_window(n, n / 5.0)
        if scale > 1:
            ref = correlate2d(ref, win, mode="valid")[::2, ::2]
            dist = correlate2d(dist, win, mode="valid")[::2, ::2]
        mu1 = correlate2d(ref, win, mode="valid")
        mu2 = correlate2d(dist, win, mode="valid")
        s1 = correlate2d(ref * ref, win, mode="valid") - mu1 * mu1
        s2 = correlate2d(dist * dist, win, mode="valid") - mu2 * mu2
        s12 = correlate2d(ref * dist, win, mode="valid") - mu1 * mu2
        s1 = np.maximum(s1, 0.0)
        s2 = np.maximum(s2, 0.0)
        g = s12 / (s1 + eps)
        sv = s2 - g * s12
        g[s1 < eps] = 0.0
        sv[s1 < eps] = s2[s1 < eps]
        s1 = np.where(s1 < eps, 0.0, s1)
        sv[s2 < eps] = 0.0
        g[s2 < eps] = 0.0
        sv[g < 0] = s2[g < 0]
        g = np.maximum(g, 0.0)
        sv = np.maximum(sv, eps)
        num += np.log(1.0 + g * g * s1 / (sv + sigma_nsq)).sum()
        den += np.log(1.0 + s1 / sigma_nsq).sum()
    return num / den if den != 0.0 else float("nan")


def hist_counts(img, bins=256):
    idx = np.minimum((img * bins).astype(np.int64), bins - 1)
    idx = np.maximum(idx, 0)
    return np.bincount(idx.ravel(), minlength=bins).astype(float)


def entropy_ref(a):
    p = hist_counts(a) / a.size
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def mi_ref(a, b, bins=256):
    ia = np.minimum((a * bins).astype(np.int64), bins - 1).ravel()
    ib = np.minimum((b * bins).astype(np.int64), bins - 1).ravel()
    joint = np.zeros((bins, bins))
    for x, y in zip(ia, ib):
        joint[x, y] += 1.0
    joint /= a.size
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    mi = 0.0
    for x in range(bins):
        for y in range(bins):
            if joint[x, y] > 0:
                mi += joint[x, y] * math.log(joint[x, y] / (pa[x] * pb[y]))
    return mi


def ncc_ref(a, b):
    da = a - a.mean()
    db = b - b.mean()
    return float((da * db).sum() / math.sqrt((da * da).sum() * (db * db).sum()))


def main():
    a64, b64 = pattern_a(64, 64), pattern_b(64, 64)
    a32, b32 = pattern_a(32, 32), pattern_b(32, 32)
    a8, b8 = pattern_a(8, 8), pattern_b(8, 8)

    print("// Generated by tests/oracles/gen_reference.py; do not edit by hand.")
    print(f"constexpr double kRefSsim64 = {float(ssim_ref(a64, b64))!r};")
    print(f"constexpr double kRefSsim8 = {float(ssim_ref(a8, b8))!r};")
    print(f"constexpr double kRefVif64 = {float(vif_ref(b64.copy(), a64.copy()))!r};")
    print(f"constexpr double kRefVif32 = {float(vif_ref(b32.copy(), a32.copy()))!r};")
    print(f"constexpr double kRefMi64 = {float(mi_ref(a64, b64))!r};")
    print(f"constexpr double kRefEntropy64 = {entropy_ref(a64)!r};")
    print(f"constexpr double kRefNcc64 = {ncc_ref(a64, b64)!r};")
    print(f"constexpr double kRefMse64 = {float(((a64 - b64) ** 2).mean())!r};")


if __name__ == "__main__":
    main()
