#include <array>
#include <cmath>

#include "cgrp/ops.hpp"

namespace cgrp::ops {
namespace {

constexpr int kMaxRank = 4;

struct BcastPlan {
  Shape out_shape;
  std::array<int64_t, kMaxRank> out_dims{};   // padded to kMaxRank
  std::array<int64_t, kMaxRank> a_strides{};  // 0 where broadcast
  std::array<int64_t, kMaxRank> b_strides{};
  int64_t numel = 0;
  bool same_shape = false;
};

std::array<int64_t, kMaxRank> padded_dims(const Shape& s) {
  std::array<int64_t, kMaxRank> d{1, 1, 1, 1};
  size_t off = kMaxRank - s.size();
  for (size_t i = 0; i < s.size(); ++i) d[off + i] = s[i];
  return d;
}

std::array<int64_t, kMaxRank> strides_for(const std::array<int64_t, kMaxRank>& dims,
                                          const std::array<int64_t, kMaxRank>& out) {
  std::array<int64_t, kMaxRank> st{};
  int64_t acc = 1;
  for (int i = kMaxRank - 1; i >= 0; --i) {
    st[i] = (dims[i] == 1 && out[i] != 1) ? 0 : acc;
    acc *= dims[i];
  }
  return st;
}

BcastPlan make_plan(const Tensor& a, const Tensor& b) {
  check_arg(a.rank() <= kMaxRank && b.rank() <= kMaxRank, "broadcast supports rank <= 4");
  BcastPlan p;
  p.same_shape = a.shape() == b.shape();
  auto da = padded_dims(a.shape());
  auto db = padded_dims(b.shape());
  for (int i = 0; i < kMaxRank; ++i) {
    check_arg(da[i] == db[i] || da[i] == 1 || db[i] == 1,
              "shapes not broadcastable: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    p.out_dims[i] = std::max(da[i], db[i]);
  }
  size_t out_rank = std::max(a.shape().size(), b.shape().size());
  p.out_shape.assign(p.out_dims.begin() + (kMaxRank - out_rank), p.out_dims.end());
  p.a_strides = strides_for(da, p.out_dims);
  p.b_strides = strides_for(db, p.out_dims);
  p.numel = shape_numel(p.out_shape);
  return p;
}

/// Sum `g` (shaped like the broadcast output) down to `target` shape.
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor out(target);
  auto dt = padded_dims(target);
  auto dg = padded_dims(g.shape());
  std::array<int64_t, kMaxRank> tstr = strides_for(dt, dg);
  const double* gp = g.data();
  double* op = out.data();
  std::array<int64_t, kMaxRank> idx{};
  for (int64_t lin = 0; lin < g.numel(); ++lin) {
    int64_t rem = lin;
    for (int i = kMaxRank - 1; i >= 0; --i) {
      idx[i] = rem % dg[i];
      rem /= dg[i];
    }
    int64_t to = 0;
    for (int i = 0; i < kMaxRank; ++i) to += (dt[i] == 1 ? 0 : idx[i]) * tstr[i];
    op[to] += gp[lin];
  }
  return out;
}

template <class Fwd, class BwdA, class BwdB>
Var binary_op(const Var& a, const Var& b, Fwd fwd, BwdA dfa, BwdB dfb) {
  BcastPlan plan = make_plan(a.value(), b.value());
  Tensor out(plan.out_shape);
  const double* ap = a.value().data();
  const double* bp = b.value().data();
  double* op = out.data();
  if (plan.same_shape) {
    for (int64_t i = 0; i < plan.numel; ++i) op[i] = fwd(ap[i], bp[i]);
  } else {
    std::array<int64_t, kMaxRank> idx{};
    for (int64_t lin = 0; lin < plan.numel; ++lin) {
      int64_t rem = lin;
      for (int i = kMaxRank - 1; i >= 0; --i) {
        idx[i] = rem % plan.out_dims[i];
        rem /= plan.out_dims[i];
      }
      int64_t ia = 0, ib = 0;
      for (int i = 0; i < kMaxRank; ++i) {
        ia += idx[i] * plan.a_strides[i];
        ib += idx[i] * plan.b_strides[i];
      }
      op[lin] = fwd(ap[ia], bp[ib]);
    }
  }
  return make_op(std::move(out), {a, b}, [a, b, plan, dfa, dfb](Node& self) {
    const double* g = self.grad.data();
    const double* ap2 = a.value().data();
    const double* bp2 = b.value().data();
    auto acc = [&](const Var& v, const std::array<int64_t, kMaxRank>& vstr, auto df) {
      if (!v.requires_grad()) return;
      Tensor local(self.value.shape());
      double* lp = local.data();
      if (plan.same_shape) {
        for (int64_t i = 0; i < plan.numel; ++i) lp[i] = g[i] * df(ap2[i], bp2[i]);
      } else {
        std::array<int64_t, kMaxRank> idx{};
        for (int64_t lin = 0; lin < plan.numel; ++lin) {
          int64_t rem = lin;
          for (int i = kMaxRank - 1; i >= 0; --i) {
            idx[i] = rem % plan.out_dims[i];
            rem /= plan.out_dims[i];
          }
          int64_t ia = 0, ib = 0;
          for (int i = 0; i < kMaxRank; ++i) {
            ia += idx[i] * plan.a_strides[i];
            ib += idx[i] * plan.b_strides[i];
          }
          lp[lin] = g[lin] * df(ap2[ia], bp2[ib]);
        }
      }
      Tensor reduced = reduce_to(local, v.shape());
      Tensor& vg = v.node()->ensure_grad();
      for (int64_t i = 0; i < vg.numel(); ++i) vg[i] += reduced[i];
      (void)vstr;
    };
    acc(a, plan.a_strides, dfa);
    acc(b, plan.b_strides, dfb);
  });
}

template <class Fwd, class Bwd>
Var unary_op(const Var& v, Fwd fwd, Bwd dfdx) {
  Tensor out(v.shape());
  const double* xp = v.value().data();
  double* op = out.data();
  int64_t n = v.numel();
  for (int64_t i = 0; i < n; ++i) op[i] = fwd(xp[i]);
  return make_op(std::move(out), {v}, [v, dfdx](Node& self) {
    if (!v.requires_grad()) return;
    Tensor& vg = v.node()->ensure_grad();
    const double* g = self.grad.data();
    const double* xp2 = v.value().data();
    const double* yp = self.value.data();
    for (int64_t i = 0; i < vg.numel(); ++i) vg[i] += g[i] * dfdx(xp2[i], yp[i]);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var maximum(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y) { return x >= y ? 0.0 : 1.0; });
}

Var affine(const Var& v, double scale, double shift) {
  return unary_op(
      v, [scale, shift](double x) { return scale * x + shift; },
      [scale](double, double) { return scale; });
}

Var abs(const Var& v) {
  return unary_op(
      v, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var square(const Var& v) {
  return unary_op(
      v, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(const Var& v) {
  return unary_op(
      v, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var log(const Var& v) {
  return unary_op(
      v, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var pow(const Var& v, double e) {
  return unary_op(
      v, [e](double x) { return std::pow(x, e); },
      [e](double x, double y) { return x == 0.0 ? 0.0 : e * y / x; });
}

Var sigmoid(const Var& v) {
  return unary_op(
      v, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& v) {
  return unary_op(
      v, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& v) {
  return unary_op(
      v, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& v, double slope) {
  return unary_op(
      v, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var clamp(const Var& v, double lo, double hi) {
  return unary_op(
      v, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

}  // namespace cgrp::ops
