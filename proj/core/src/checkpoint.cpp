#include "cgrp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>

#include "cgrp/ioutil.hpp"

namespace cgrp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::string& out, uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

struct Cursor {
  const std::string& bytes;
  size_t pos = 0;

  void need(size_t n) const {
    check_arg(pos + n <= bytes.size(), "checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s(bytes.data() + pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : blocks)
    if (n == name) return &t;
  return nullptr;
}

bool Checkpoint::has_trained(const std::string& stage_name) const {
  for (const auto& s : trained)
    if (s == stage_name) return true;
  return false;
}

void Checkpoint::add_block(const std::string& name, const Tensor& t) {
  check_arg(find(name) == nullptr, "checkpoint: duplicate block " + name);
  blocks.emplace_back(name, t);
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_str(out, ckpt.stage);
  put_u64(out, static_cast<uint64_t>(ckpt.step));
  put_u32(out, static_cast<uint32_t>(ckpt.trained.size()));
  for (const auto& s : ckpt.trained) put_str(out, s);
  put_str(out, ckpt.config_json);
  put_u64(out, ckpt.blocks.size());
  for (const auto& [name, t] : ckpt.blocks) {
    check_arg(t.defined(), "checkpoint: undefined block " + name);
    put_str(out, name);
    put_u32(out, static_cast<uint32_t>(t.rank()));
    for (int64_t d = 0; d < t.rank(); ++d) put_u64(out, static_cast<uint64_t>(t.dim(d)));
    out.append(reinterpret_cast<const char*>(t.data()),
               static_cast<size_t>(t.numel()) * sizeof(double));
  }
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string bytes = read_file(path);
  Cursor c{bytes};
  c.need(4);
  check_arg(std::memcmp(bytes.data(), kMagic, 4) == 0, "checkpoint: bad magic in " + path);
  c.pos = 4;
  check_arg(c.u32() == kVersion, "checkpoint: unsupported version in " + path);

  Checkpoint ckpt;
  ckpt.stage = c.str();
  ckpt.step = static_cast<int64_t>(c.u64());
  uint32_t ntrained = c.u32();
  for (uint32_t i = 0; i < ntrained; ++i) ckpt.trained.push_back(c.str());
  ckpt.config_json = c.str();
  uint64_t nblocks = c.u64();
  ckpt.blocks.reserve(nblocks);
  for (uint64_t i = 0; i < nblocks; ++i) {
    std::string name = c.str();
    uint32_t rank = c.u32();
    check_arg(rank <= 8, "checkpoint: implausible rank for block " + name);
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int64_t>(c.u64());
    Tensor t(shape);
    size_t nbytes = static_cast<size_t>(t.numel()) * sizeof(double);
    c.need(nbytes);
    std::memcpy(t.data(), bytes.data() + c.pos, nbytes);
    c.pos += nbytes;
    ckpt.blocks.emplace_back(name, t);
  }
  check_arg(c.pos == bytes.size(), "checkpoint: trailing bytes in " + path);
  return ckpt;
}

std::string checkpoint_path(const std::string& root, const std::string& stage, int64_t step) {
  return (std::filesystem::path(root) / stage / (std::to_string(step) + ".ckpt")).string();
}

std::optional<std::string> latest_checkpoint(const std::string& root, const std::string& stage) {
  std::filesystem::path dir = std::filesystem::path(root) / stage;
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  int64_t best = -1;
  std::filesystem::path best_path;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ckpt") continue;
    std::string stem = entry.path().stem().string();
    if (stem.empty() || stem.find_first_not_of("0123456789") != std::string::npos) continue;
    int64_t step = std::stoll(stem);
    if (step > best) {
      best = step;
      best_path = entry.path();
    }
  }
  if (best < 0) return std::nullopt;
  return best_path.string();
}

void pack_params(Checkpoint& ckpt, const std::string& prefix, const nn::ParamMap& params) {
  for (const auto& e : params.entries())
    ckpt.add_block(prefix + "." + e.name, e.var.value().clone());
}

void unpack_params(const Checkpoint& ckpt, const std::string& prefix, nn::ParamMap& params,
                   bool strict) {
  for (const auto& e : params.entries()) {
    const Tensor* t = ckpt.find(prefix + "." + e.name);
    if (t == nullptr) {
      check_arg(!strict, "checkpoint: missing block " + prefix + "." + e.name);
      continue;
    }
    Var var = e.var;  // shares the node
    Tensor& dst = var.mutable_value();
    check_arg(t->same_shape(dst), "checkpoint: shape mismatch for " + prefix + "." + e.name);
    std::memcpy(dst.data(), t->data(), static_cast<size_t>(t->numel()) * sizeof(double));
  }
}

void pack_adam(Checkpoint& ckpt, const std::string& prefix, nn::Adam& adam,
               const nn::ParamMap& params) {
  if (adam.t() == 0) return;
  Tensor t_block({1});
  t_block[0] = static_cast<double>(adam.t());
  ckpt.add_block("adam." + prefix + ".t", t_block);
  const auto& entries = params.entries();
  check_arg(adam.m().size() == entries.size(), "pack_adam: optimizer/param count mismatch");
  for (size_t i = 0; i < entries.size(); ++i) {
    ckpt.add_block("adam." + prefix + "." + entries[i].name + ".m", adam.m()[i].clone());
    ckpt.add_block("adam." + prefix + "." + entries[i].name + ".v", adam.v()[i].clone());
  }
}

void unpack_adam(const Checkpoint& ckpt, const std::string& prefix, nn::Adam& adam,
                 const nn::ParamMap& params) {
  const Tensor* t_block = ckpt.find("adam." + prefix + ".t");
  if (t_block == nullptr) return;
  adam.set_t(static_cast<int64_t>((*t_block)[0]));
  const auto& entries = params.entries();
  adam.m().clear();
  adam.v().clear();
  for (const auto& e : entries) {
    const Tensor* m = ckpt.find("adam." + prefix + "." + e.name + ".m");
    const Tensor* v = ckpt.find("adam." + prefix + "." + e.name + ".v");
    check_arg(m != nullptr && v != nullptr, "checkpoint: incomplete optimizer state for " + prefix);
    adam.m().push_back(m->clone());
    adam.v().push_back(v->clone());
  }
}

}  // namespace cgrp
