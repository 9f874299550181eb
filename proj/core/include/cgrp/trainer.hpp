#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cgrp/backbone.hpp"
#include "cgrp/checkpoint.hpp"
#include "cgrp/cpstn.hpp"
#include "cgrp/datasets.hpp"
#include "cgrp/difn.hpp"
#include "cgrp/losses.hpp"
#include "cgrp/mrrn.hpp"

namespace cgrp {

enum class Stage { cpstn, mrrn, difn, joint };
std::string stage_str(Stage s);
Stage stage_from_str(const std::string& s);

/// What the registration stage aligns the infrared against.
enum class PseudoSource { cpstn, vis, aligned_ir };
std::string pseudo_source_str(PseudoSource s);
PseudoSource pseudo_source_from_str(const std::string& s);

/// Infrared input for the fusion stage: the registered pipeline output, the
/// raw misaligned frame, or the ground-truth aligned frame.
enum class IrSource { pipeline, raw, aligned };
std::string ir_source_str(IrSource s);
IrSource ir_source_from_str(const std::string& s);

struct TrainConfig {
  Stage stage = Stage::cpstn;
  int64_t batch = 8;
  int64_t patch = 256;
  int64_t epochs = 300;
  int64_t steps = 0;  // >0 overrides epochs * steps-per-epoch
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999;
  uint64_t seed = 0;
  int64_t ckpt_every = 0;  // 0: final checkpoint only

  PseudoSource pseudo_source = PseudoSource::cpstn;
  IrSource ir_source = IrSource::pipeline;
  bool reg_grad_to_cpstn = false;  // keep the translator a fixed target for L_reg
  bool use_ifm = true;
  bool loss_pst = true;
  bool loss_cross = true;
  std::string init_stage;  // "" picks the stage's default prerequisite
  std::string backbone_weights;

  int64_t disc_width = 32, disc_pad = 1;
  LossWeights weights;
  TranslatorConfig translator;
  MrrnConfig mrrn;
  DifnConfig difn;

  void validate() const;
  std::string to_json() const;
  /// Applies the keys present in `text` on top of `base` (defaults when omitted).
  static TrainConfig from_json(const std::string& text, TrainConfig base);
  static TrainConfig from_json(const std::string& text);
};

/// The full network bundle. Subnetwork seeds are derived from the config
/// seed; the perceptual backbone is frozen and never checkpointed.
struct Model {
  explicit Model(const TrainConfig& cfg);

  TrainConfig cfg;
  Cpstn cpstn;
  Mrrn mrrn;
  Difn difn;
  Backbone backbone;
};

/// Full-model snapshot under the standard block prefixes
/// (cpstn.gen / cpstn.disc / mrrn / difn).
Checkpoint snapshot_model(Model& m, const std::string& stage, int64_t step,
                          const std::vector<std::string>& trained,
                          const std::string& config_json);
void apply_checkpoint(Model& m, const Checkpoint& ckpt);

struct ParamCounts {
  std::vector<std::pair<std::string, int64_t>> groups;
  int64_t total = 0;

  int64_t group(const std::string& name) const;
};
ParamCounts count_params(Model& m);
ParamCounts count_params(const Checkpoint& ckpt);

struct StepRecord {
  int64_t step = 0;
  double total = 0.0;
  std::vector<std::pair<std::string, double>> parts;
  double wall_ms = 0.0;
};

void write_ledger_line(std::ostream& os, const std::string& stage, const StepRecord& rec);
std::vector<std::pair<std::string, std::string>> parse_ledger_line(const std::string& line);

struct TrainResult {
  std::vector<StepRecord> history;
  std::string final_checkpoint;
  ParamCounts params;
};

/// Stage-wise optimization driver. Checkpoints land under
/// <ckpt_root>/<stage>/<step>.ckpt; prerequisite stages are loaded from the
/// same root and missing ones are hard errors naming the stage.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::string ckpt_root);

  TrainResult run(const std::vector<PairRecord>& records, std::ostream* ledger = nullptr);

  Model& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  StepRecord step_cpstn(const PatchBatch& pb);
  StepRecord step_mrrn(const PatchBatch& pb);
  StepRecord step_difn(const PatchBatch& pb);
  StepRecord step_joint(const PatchBatch& pb);
  std::string save(int64_t step);
  bool cpstn_trained() const;

  TrainConfig cfg_;
  std::string root_;
  Model model_;
  nn::Adam adam_gen_, adam_disc_, adam_mrrn_, adam_difn_;
  std::vector<std::string> trained_;
};

/// Inference-time ablation switches; each false reproduces one of the
/// reduced configurations (fuse raw pairs, register against the visible
/// image directly, plain-concatenation fusion).
struct PipelineOptions {
  bool use_cpstn = true;
  bool use_mrrn = true;
  bool use_ifm = true;
};

struct InferOutputs {
  GrayImage pseudo_ir;  // registration target actually used
  DeformationField field;
  GrayImage ir_reg;
  GrayImage fused;
};

/// translate -> estimate field -> resample -> fuse, padding inputs to the
/// network alignment and cropping every output back to the input size.
InferOutputs run_pipeline(const Model& m, const GrayImage& vis, const GrayImage& ir,
                          const PipelineOptions& opt = {});

struct TimingReport {
  double mean_s = 0.0;
  double stdev_s = 0.0;
  int64_t runs = 0;
};

/// Warmed-up wall-clock of the full pipeline forward on size x size inputs.
TimingReport time_inference(const Model& m, int64_t size = 64, int64_t runs = 50);

}  // namespace cgrp
