#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgrp/nn.hpp"
#include "cgrp/tensor.hpp"

namespace cgrp {

/// Single-file training snapshot: named tensor blocks in a fixed order plus
/// the config echo that built them. Save -> load -> save is byte-identical.
struct Checkpoint {
  std::string stage;
  int64_t step = 0;
  std::vector<std::string> trained;  // stages whose weights in here were optimized
  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> blocks;

  const Tensor* find(const std::string& name) const;
  bool has_trained(const std::string& stage_name) const;
  void add_block(const std::string& name, const Tensor& t);
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Layout: <root>/<stage>/<step>.ckpt
std::string checkpoint_path(const std::string& root, const std::string& stage, int64_t step);
/// Highest-step checkpoint file under <root>/<stage>, if any.
std::optional<std::string> latest_checkpoint(const std::string& root, const std::string& stage);

/// Parameter packing helpers; block names are "<prefix>.<param name>".
void pack_params(Checkpoint& ckpt, const std::string& prefix, const nn::ParamMap& params);
/// Copies matching block values into the map. strict requires every
/// parameter to be present; the error names the prefix and parameter.
void unpack_params(const Checkpoint& ckpt, const std::string& prefix, nn::ParamMap& params,
                   bool strict = true);

/// Optimizer slots live under "adam.<prefix>..."; absent state is skipped.
void pack_adam(Checkpoint& ckpt, const std::string& prefix, nn::Adam& adam,
               const nn::ParamMap& params);
void unpack_adam(const Checkpoint& ckpt, const std::string& prefix, nn::Adam& adam,
                 const nn::ParamMap& params);

}  // namespace cgrp
