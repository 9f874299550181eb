#include "cgrp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace cgrp {

using nlohmann::ordered_json;
using namespace ops;

std::string stage_str(Stage s) {
  switch (s) {
    case Stage::cpstn: return "cpstn";
    case Stage::mrrn: return "mrrn";
    case Stage::difn: return "difn";
    case Stage::joint: return "joint";
  }
  return "?";
}

Stage stage_from_str(const std::string& s) {
  if (s == "cpstn") return Stage::cpstn;
  if (s == "mrrn") return Stage::mrrn;
  if (s == "difn") return Stage::difn;
  if (s == "joint") return Stage::joint;
  throw std::invalid_argument("unknown stage: " + s);
}

std::string pseudo_source_str(PseudoSource s) {
  switch (s) {
    case PseudoSource::cpstn: return "cpstn";
    case PseudoSource::vis: return "vis";
    case PseudoSource::aligned_ir: return "aligned_ir";
  }
  return "?";
}

PseudoSource pseudo_source_from_str(const std::string& s) {
  if (s == "cpstn") return PseudoSource::cpstn;
  if (s == "vis") return PseudoSource::vis;
  if (s == "aligned_ir") return PseudoSource::aligned_ir;
  throw std::invalid_argument("unknown pseudo source: " + s);
}

std::string ir_source_str(IrSource s) {
  switch (s) {
    case IrSource::pipeline: return "pipeline";
    case IrSource::raw: return "raw";
    case IrSource::aligned: return "aligned";
  }
  return "?";
}

IrSource ir_source_from_str(const std::string& s) {
  if (s == "pipeline") return IrSource::pipeline;
  if (s == "raw") return IrSource::raw;
  if (s == "aligned") return IrSource::aligned;
  throw std::invalid_argument("unknown ir source: " + s);
}

void TrainConfig::validate() const {
  check_arg(batch >= 1, "TrainConfig: batch must be >= 1");
  check_arg(epochs >= 1, "TrainConfig: epochs must be >= 1");
  check_arg(steps >= 0, "TrainConfig: steps must be >= 0");
  check_arg(lr > 0.0, "TrainConfig: learning rate must be positive");
  check_arg(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
            "TrainConfig: betas must lie in [0,1)");
  check_arg(patch >= 8, "TrainConfig: patch must be >= 8");
  check_arg(ckpt_every >= 0, "TrainConfig: ckpt_every must be >= 0");
  weights.validate();
}

std::string TrainConfig::to_json() const {
  ordered_json j;
  j["stage"] = stage_str(stage);
  j["batch"] = batch;
  j["patch"] = patch;
  j["epochs"] = epochs;
  j["steps"] = steps;
  j["lr"] = lr;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["seed"] = seed;
  j["ckpt_every"] = ckpt_every;
  j["pseudo_source"] = pseudo_source_str(pseudo_source);
  j["ir_source"] = ir_source_str(ir_source);
  j["reg_grad_to_cpstn"] = reg_grad_to_cpstn;
  j["use_ifm"] = use_ifm;
  j["loss_pst"] = loss_pst;
  j["loss_cross"] = loss_cross;
  j["init_stage"] = init_stage;
  j["backbone_weights"] = backbone_weights;
  j["disc_width"] = disc_width;
  j["disc_pad"] = disc_pad;
  j["weights"] = ordered_json{{"lambda_p", weights.lambda_p},
                              {"lambda_s", weights.lambda_s},
                              {"lambda_c", weights.lambda_c},
                              {"lambda_e", weights.lambda_e},
                              {"lambda_rev", weights.lambda_rev},
                              {"lambda_sm", weights.lambda_sm},
                              {"lambda_ssim", weights.lambda_ssim},
                              {"lambda_jg", weights.lambda_jg},
                              {"lambda_svs", weights.lambda_svs},
                              {"layers", weights.layers},
                              {"omegas", weights.omegas},
                              {"charbonnier_eps", weights.charbonnier_eps},
                              {"saliency_eps", weights.saliency_eps},
                              {"msssim_scales", weights.msssim.scales},
                              {"msssim_window", weights.msssim.window}};
  j["translator"] = ordered_json{{"width", translator.width},
                                 {"depth", translator.depth},
                                 {"resblocks", translator.resblocks},
                                 {"norm", translator.norm},
                                 {"squash", translator.squash}};
  j["mrrn"] = ordered_json{{"levels", mrrn.levels},
                           {"widths", mrrn.widths},
                           {"est_widths", mrrn.est_widths},
                           {"pad_inputs", mrrn.pad_inputs}};
  j["difn"] =
      ordered_json{{"width", difn.width}, {"growth", difn.growth}, {"blocks", difn.blocks}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  return from_json(text, TrainConfig{});
}

TrainConfig TrainConfig::from_json(const std::string& text, TrainConfig base) {
  ordered_json j = ordered_json::parse(text);
  TrainConfig c = std::move(base);
  if (j.contains("stage")) c.stage = stage_from_str(j["stage"].get<std::string>());
  if (j.contains("batch")) c.batch = j["batch"].get<int64_t>();
  if (j.contains("patch")) c.patch = j["patch"].get<int64_t>();
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int64_t>();
  if (j.contains("steps")) c.steps = j["steps"].get<int64_t>();
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
  if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("ckpt_every")) c.ckpt_every = j["ckpt_every"].get<int64_t>();
  if (j.contains("pseudo_source"))
    c.pseudo_source = pseudo_source_from_str(j["pseudo_source"].get<std::string>());
  if (j.contains("ir_source")) c.ir_source = ir_source_from_str(j["ir_source"].get<std::string>());
  if (j.contains("reg_grad_to_cpstn")) c.reg_grad_to_cpstn = j["reg_grad_to_cpstn"].get<bool>();
  if (j.contains("use_ifm")) c.use_ifm = j["use_ifm"].get<bool>();
  if (j.contains("loss_pst")) c.loss_pst = j["loss_pst"].get<bool>();
  if (j.contains("loss_cross")) c.loss_cross = j["loss_cross"].get<bool>();
  if (j.contains("init_stage")) c.init_stage = j["init_stage"].get<std::string>();
  if (j.contains("backbone_weights"))
    c.backbone_weights = j["backbone_weights"].get<std::string>();
  if (j.contains("disc_width")) c.disc_width = j["disc_width"].get<int64_t>();
  if (j.contains("disc_pad")) c.disc_pad = j["disc_pad"].get<int64_t>();
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    if (w.contains("lambda_p")) c.weights.lambda_p = w["lambda_p"].get<double>();
    if (w.contains("lambda_s")) c.weights.lambda_s = w["lambda_s"].get<double>();
    if (w.contains("lambda_c")) c.weights.lambda_c = w["lambda_c"].get<double>();
    if (w.contains("lambda_e")) c.weights.lambda_e = w["lambda_e"].get<double>();
    if (w.contains("lambda_rev")) c.weights.lambda_rev = w["lambda_rev"].get<double>();
    if (w.contains("lambda_sm")) c.weights.lambda_sm = w["lambda_sm"].get<double>();
    if (w.contains("lambda_ssim")) c.weights.lambda_ssim = w["lambda_ssim"].get<double>();
    if (w.contains("lambda_jg")) c.weights.lambda_jg = w["lambda_jg"].get<double>();
    if (w.contains("lambda_svs")) c.weights.lambda_svs = w["lambda_svs"].get<double>();
    if (w.contains("layers")) c.weights.layers = w["layers"].get<std::vector<int64_t>>();
    if (w.contains("omegas")) c.weights.omegas = w["omegas"].get<std::vector<double>>();
    if (w.contains("charbonnier_eps"))
      c.weights.charbonnier_eps = w["charbonnier_eps"].get<double>();
    if (w.contains("saliency_eps")) c.weights.saliency_eps = w["saliency_eps"].get<double>();
    if (w.contains("msssim_scales")) c.weights.msssim.scales = w["msssim_scales"].get<int64_t>();
    if (w.contains("msssim_window")) c.weights.msssim.window = w["msssim_window"].get<int64_t>();
  }
  if (j.contains("translator")) {
    const auto& t = j["translator"];
    if (t.contains("width")) c.translator.width = t["width"].get<int64_t>();
    if (t.contains("depth")) c.translator.depth = t["depth"].get<int64_t>();
    if (t.contains("resblocks")) c.translator.resblocks = t["resblocks"].get<int64_t>();
    if (t.contains("norm")) c.translator.norm = t["norm"].get<std::string>();
    if (t.contains("squash")) c.translator.squash = t["squash"].get<std::string>();
  }
  if (j.contains("mrrn")) {
    const auto& m = j["mrrn"];
    if (m.contains("levels")) c.mrrn.levels = m["levels"].get<int64_t>();
    if (m.contains("widths")) c.mrrn.widths = m["widths"].get<std::vector<int64_t>>();
    if (m.contains("est_widths")) c.mrrn.est_widths = m["est_widths"].get<std::vector<int64_t>>();
    if (m.contains("pad_inputs")) c.mrrn.pad_inputs = m["pad_inputs"].get<bool>();
  }
  if (j.contains("difn")) {
    const auto& d = j["difn"];
    if (d.contains("width")) c.difn.width = d["width"].get<int64_t>();
    if (d.contains("growth")) c.difn.growth = d["growth"].get<int64_t>();
    if (d.contains("blocks")) c.difn.blocks = d["blocks"].get<int64_t>();
  }
  return c;
}

namespace {

int64_t max_layer(const std::vector<int64_t>& layers) {
  check_arg(!layers.empty(), "TrainConfig: empty backbone layer list");
  return *std::max_element(layers.begin(), layers.end());
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string default_init_stage(const TrainConfig& cfg) {
  switch (cfg.stage) {
    case Stage::cpstn: return "";
    case Stage::mrrn: return cfg.pseudo_source == PseudoSource::cpstn ? "cpstn" : "";
    case Stage::difn: return cfg.ir_source == IrSource::pipeline ? "mrrn" : "";
    case Stage::joint: return "difn";
  }
  return "";
}

}  // namespace

Model::Model(const TrainConfig& config)
    : cfg(config),
      cpstn(config.translator, config.seed + 1, config.disc_width, config.disc_pad),
      mrrn(config.mrrn, config.seed + 2),
      difn(config.difn, config.seed + 3),
      backbone(max_layer(config.weights.layers)) {
  cfg.validate();
  if (!cfg.backbone_weights.empty()) backbone.load_weights(cfg.backbone_weights);
}

Checkpoint snapshot_model(Model& m, const std::string& stage, int64_t step,
                          const std::vector<std::string>& trained,
                          const std::string& config_json) {
  Checkpoint ckpt;
  ckpt.stage = stage;
  ckpt.step = step;
  ckpt.trained = trained;
  ckpt.config_json = config_json;
  pack_params(ckpt, "cpstn.gen", m.cpstn.gen_params());
  pack_params(ckpt, "cpstn.disc", m.cpstn.disc_params());
  pack_params(ckpt, "mrrn", m.mrrn.params());
  pack_params(ckpt, "difn", m.difn.params());
  return ckpt;
}

void apply_checkpoint(Model& m, const Checkpoint& ckpt) {
  unpack_params(ckpt, "cpstn.gen", m.cpstn.gen_params());
  unpack_params(ckpt, "cpstn.disc", m.cpstn.disc_params());
  unpack_params(ckpt, "mrrn", m.mrrn.params());
  unpack_params(ckpt, "difn", m.difn.params());
}

int64_t ParamCounts::group(const std::string& name) const {
  for (const auto& [n, c] : groups)
    if (n == name) return c;
  return 0;
}

ParamCounts count_params(Model& m) {
  ParamCounts pc;
  pc.groups = {{"cpstn.gen", m.cpstn.gen_params().count()},
               {"cpstn.disc", m.cpstn.disc_params().count()},
               {"mrrn", m.mrrn.params().count()},
               {"difn", m.difn.params().count()}};
  for (const auto& [n, c] : pc.groups) pc.total += c;
  return pc;
}

ParamCounts count_params(const Checkpoint& ckpt) {
  ParamCounts pc;
  pc.groups = {{"cpstn.gen", 0}, {"cpstn.disc", 0}, {"mrrn", 0}, {"difn", 0}};
  for (const auto& [name, t] : ckpt.blocks) {
    if (name.rfind("adam.", 0) == 0) continue;
    for (auto& [group, count] : pc.groups) {
      if (name.rfind(group + ".", 0) == 0) {
        count += t.numel();
        break;
      }
    }
  }
  for (const auto& [n, c] : pc.groups) pc.total += c;
  return pc;
}

void write_ledger_line(std::ostream& os, const std::string& stage, const StepRecord& rec) {
  char buf[64];
  os << "step=" << rec.step << " stage=" << stage;
  std::snprintf(buf, sizeof buf, "%.3f", rec.wall_ms);
  os << " wall_ms=" << buf;
  std::snprintf(buf, sizeof buf, "%.10g", rec.total);
  os << " total=" << buf;
  for (const auto& [k, v] : rec.parts) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    os << " " << k << "=" << buf;
  }
  os << "\n";
}

std::vector<std::pair<std::string, std::string>> parse_ledger_line(const std::string& line) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) {
    auto eq = tok.find('=');
    if (eq != std::string::npos) kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return kv;
}

Trainer::Trainer(const TrainConfig& cfg, std::string ckpt_root)
    : cfg_(cfg),
      root_(std::move(ckpt_root)),
      model_(cfg),
      adam_gen_(cfg.lr, cfg.beta1, cfg.beta2),
      adam_disc_(cfg.lr, cfg.beta1, cfg.beta2),
      adam_mrrn_(cfg.lr, cfg.beta1, cfg.beta2),
      adam_difn_(cfg.lr, cfg.beta1, cfg.beta2) {
  check_arg(!root_.empty(), "Trainer: checkpoint root required");
}

bool Trainer::cpstn_trained() const { return contains(trained_, "cpstn"); }

TrainResult Trainer::run(const std::vector<PairRecord>& records, std::ostream* ledger) {
  cfg_.validate();
  check_arg(!records.empty(), "train: no records");

  trained_.clear();
  std::string init = cfg_.init_stage.empty() ? default_init_stage(cfg_) : cfg_.init_stage;
  if (!init.empty()) {
    auto path = latest_checkpoint(root_, init);
    check_arg(path.has_value(), "stage " + stage_str(cfg_.stage) +
                                    " needs a prerequisite checkpoint for stage " + init +
                                    " under " + root_ + "/" + init + "; train that stage first");
    Checkpoint prev = load_checkpoint(*path);
    apply_checkpoint(model_, prev);
    trained_ = prev.trained;
  }
  if (cfg_.stage == Stage::joint)
    for (const char* s : {"cpstn", "mrrn", "difn"})
      check_arg(contains(trained_, s),
                std::string("stage joint needs trained cpstn, mrrn and difn weights; missing "
                            "stage ") +
                    s);
  if (!contains(trained_, stage_str(cfg_.stage))) trained_.push_back(stage_str(cfg_.stage));

  int64_t per_epoch = (static_cast<int64_t>(records.size()) + cfg_.batch - 1) / cfg_.batch;
  int64_t total_steps = cfg_.steps > 0 ? cfg_.steps : cfg_.epochs * per_epoch;

  std::mt19937_64 root_rng(cfg_.seed);
  TrainResult result;
  result.history.reserve(static_cast<size_t>(total_steps));
  if (ledger != nullptr) {
    ParamCounts pc = count_params(model_);
    *ledger << "stage=" << stage_str(cfg_.stage);
    for (const auto& [group, count] : pc.groups) *ledger << " params." << group << "=" << count;
    *ledger << " params.total=" << pc.total
            << " params.reg_fusion=" << pc.group("mrrn") + pc.group("difn") << "\n";
  }
  for (int64_t step = 1; step <= total_steps; ++step) {
    uint64_t batch_seed = root_rng();
    PatchBatch pb = sample_batch(records, cfg_.patch, cfg_.batch, batch_seed);
    auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    switch (cfg_.stage) {
      case Stage::cpstn: rec = step_cpstn(pb); break;
      case Stage::mrrn: rec = step_mrrn(pb); break;
      case Stage::difn: rec = step_difn(pb); break;
      case Stage::joint: rec = step_joint(pb); break;
    }
    rec.step = step;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (ledger != nullptr) write_ledger_line(*ledger, stage_str(cfg_.stage), rec);
    result.history.push_back(std::move(rec));
    if (cfg_.ckpt_every > 0 && step % cfg_.ckpt_every == 0 && step != total_steps) save(step);
  }
  result.final_checkpoint = save(total_steps);
  result.params = count_params(model_);
  return result;
}

std::string Trainer::save(int64_t step) {
  Checkpoint ckpt = snapshot_model(model_, stage_str(cfg_.stage), step, trained_, cfg_.to_json());
  switch (cfg_.stage) {
    case Stage::cpstn:
      pack_adam(ckpt, "cpstn.gen", adam_gen_, model_.cpstn.gen_params());
      pack_adam(ckpt, "cpstn.disc", adam_disc_, model_.cpstn.disc_params());
      break;
    case Stage::mrrn:
      pack_adam(ckpt, "mrrn", adam_mrrn_, model_.mrrn.params());
      if (cfg_.reg_grad_to_cpstn) pack_adam(ckpt, "cpstn.gen", adam_gen_, model_.cpstn.gen_params());
      break;
    case Stage::difn: pack_adam(ckpt, "difn", adam_difn_, model_.difn.params()); break;
    case Stage::joint:
      pack_adam(ckpt, "cpstn.gen", adam_gen_, model_.cpstn.gen_params());
      pack_adam(ckpt, "cpstn.disc", adam_disc_, model_.cpstn.disc_params());
      pack_adam(ckpt, "mrrn", adam_mrrn_, model_.mrrn.params());
      pack_adam(ckpt, "difn", adam_difn_, model_.difn.params());
      break;
  }
  std::string path = checkpoint_path(root_, stage_str(cfg_.stage), step);
  save_checkpoint(ckpt, path);
  return path;
}

StepRecord Trainer::step_cpstn(const PatchBatch& pb) {
  Var vis = Var::constant(pb.vis), ir = Var::constant(pb.ir_distorted);
  model_.cpstn.gen_params().zero_grad();
  CyclePaths paths = model_.cpstn.forward_cycles(vis, ir);

  std::vector<std::pair<std::string, Var>> comps;
  comps.emplace_back(
      "gan_g", add(gan_generator_loss(model_.cpstn.discriminate(paths.pseudo_ir, Domain::ir)),
                   gan_generator_loss(model_.cpstn.discriminate(paths.pseudo_vis, Domain::vis))));
  if (cfg_.loss_pst)
    comps.emplace_back("pst", pst_loss(paths, vis, ir, model_.backbone, cfg_.weights));
  if (cfg_.loss_cross) comps.emplace_back("cross", cross_loss(paths, cfg_.weights));
  TotalLoss g = total_loss(comps);
  backward(g.value);
  adam_gen_.step(model_.cpstn.gen_params());

  model_.cpstn.disc_params().zero_grad();
  Var d_loss =
      add(gan_discriminator_loss(model_.cpstn.discriminate(ir, Domain::ir),
                                 model_.cpstn.discriminate(paths.pseudo_ir.detach(), Domain::ir)),
          gan_discriminator_loss(
              model_.cpstn.discriminate(vis, Domain::vis),
              model_.cpstn.discriminate(paths.pseudo_vis.detach(), Domain::vis)));
  backward(d_loss);
  adam_disc_.step(model_.cpstn.disc_params());

  StepRecord rec;
  rec.total = g.value.item();
  rec.parts = g.parts;
  rec.parts.emplace_back("disc", d_loss.item());
  return rec;
}

StepRecord Trainer::step_mrrn(const PatchBatch& pb) {
  Var vis = Var::constant(pb.vis), ir = Var::constant(pb.ir_distorted);
  model_.mrrn.params().zero_grad();
  if (cfg_.reg_grad_to_cpstn) model_.cpstn.gen_params().zero_grad();

  Var pseudo;
  switch (cfg_.pseudo_source) {
    case PseudoSource::cpstn:
      pseudo = model_.cpstn.translate(vis, Direction::vis_to_ir);
      if (!cfg_.reg_grad_to_cpstn) pseudo = pseudo.detach();
      break;
    case PseudoSource::vis: pseudo = vis; break;
    case PseudoSource::aligned_ir: pseudo = Var::constant(pb.ir_aligned); break;
  }

  Var field = model_.mrrn.predict_field(pseudo, ir);
  Var ir_reg = Mrrn::register_image(ir, field);
  Var loss = registration_loss(ir_reg, pseudo, ir, field, model_.backbone, cfg_.weights);
  backward(loss);
  adam_mrrn_.step(model_.mrrn.params());
  if (cfg_.reg_grad_to_cpstn && cfg_.pseudo_source == PseudoSource::cpstn)
    adam_gen_.step(model_.cpstn.gen_params());

  StepRecord rec;
  rec.total = loss.item();
  rec.parts.emplace_back("reg", loss.item());
  return rec;
}

StepRecord Trainer::step_difn(const PatchBatch& pb) {
  Var vis = Var::constant(pb.vis), ir_dist = Var::constant(pb.ir_distorted);
  model_.difn.params().zero_grad();

  Var ir_in;
  switch (cfg_.ir_source) {
    case IrSource::aligned: ir_in = Var::constant(pb.ir_aligned); break;
    case IrSource::raw: ir_in = ir_dist; break;
    case IrSource::pipeline: {
      Var pseudo =
          cpstn_trained() ? model_.cpstn.translate(vis, Direction::vis_to_ir).detach() : vis;
      Var field = model_.mrrn.predict_field(pseudo, ir_dist).detach();
      ir_in = Mrrn::register_image(ir_dist, field);
      break;
    }
  }

  Var fused = model_.difn.fuse(ir_in, vis, cfg_.use_ifm);
  Var loss = fusion_loss(fused, ir_in, vis, cfg_.weights);
  backward(loss);
  adam_difn_.step(model_.difn.params());

  StepRecord rec;
  rec.total = loss.item();
  rec.parts.emplace_back("fus", loss.item());
  return rec;
}

StepRecord Trainer::step_joint(const PatchBatch& pb) {
  Var vis = Var::constant(pb.vis), ir = Var::constant(pb.ir_distorted);
  model_.cpstn.gen_params().zero_grad();
  model_.mrrn.params().zero_grad();
  model_.difn.params().zero_grad();

  CyclePaths paths = model_.cpstn.forward_cycles(vis, ir);
  std::vector<std::pair<std::string, Var>> comps;
  comps.emplace_back(
      "gan_g", add(gan_generator_loss(model_.cpstn.discriminate(paths.pseudo_ir, Domain::ir)),
                   gan_generator_loss(model_.cpstn.discriminate(paths.pseudo_vis, Domain::vis))));
  if (cfg_.loss_pst)
    comps.emplace_back("pst", pst_loss(paths, vis, ir, model_.backbone, cfg_.weights));
  if (cfg_.loss_cross) comps.emplace_back("cross", cross_loss(paths, cfg_.weights));

  Var pseudo_reg = cfg_.reg_grad_to_cpstn ? paths.pseudo_ir : paths.pseudo_ir.detach();
  Var field = model_.mrrn.predict_field(pseudo_reg, ir);
  Var ir_reg = Mrrn::register_image(ir, field);
  comps.emplace_back("reg",
                     registration_loss(ir_reg, pseudo_reg, ir, field, model_.backbone, cfg_.weights));

  Var fused = model_.difn.fuse(ir_reg, vis, cfg_.use_ifm);
  comps.emplace_back("fus", fusion_loss(fused, ir_reg, vis, cfg_.weights));

  TotalLoss g = total_loss(comps);
  backward(g.value);
  adam_gen_.step(model_.cpstn.gen_params());
  adam_mrrn_.step(model_.mrrn.params());
  adam_difn_.step(model_.difn.params());

  model_.cpstn.disc_params().zero_grad();
  Var d_loss =
      add(gan_discriminator_loss(model_.cpstn.discriminate(ir, Domain::ir),
                                 model_.cpstn.discriminate(paths.pseudo_ir.detach(), Domain::ir)),
          gan_discriminator_loss(
              model_.cpstn.discriminate(vis, Domain::vis),
              model_.cpstn.discriminate(paths.pseudo_vis.detach(), Domain::vis)));
  backward(d_loss);
  adam_disc_.step(model_.cpstn.disc_params());

  StepRecord rec;
  rec.total = g.value.item();
  rec.parts = g.parts;
  rec.parts.emplace_back("disc", d_loss.item());
  return rec;
}

InferOutputs run_pipeline(const Model& m, const GrayImage& vis, const GrayImage& ir,
                          const PipelineOptions& opt) {
  check_arg(vis.pixels.same_shape(ir.pixels), "run_pipeline: image sizes differ");
  int64_t h = vis.height(), w = vis.width();
  int64_t align = std::max(int64_t{1} << m.cfg.translator.depth,
                           int64_t{1} << (m.cfg.mrrn.levels - 1));
  int64_t pad_b = (align - h % align) % align, pad_r = (align - w % align) % align;

  Var x_vis = Var::constant(vis.pixels.reshaped({1, 1, h, w}));
  Var x_ir = Var::constant(ir.pixels.reshaped({1, 1, h, w}));
  if (pad_b > 0 || pad_r > 0) {
    x_vis = pad_edge(x_vis, 0, pad_b, 0, pad_r);
    x_ir = pad_edge(x_ir, 0, pad_b, 0, pad_r);
  }

  Var pseudo = opt.use_cpstn ? m.cpstn.translate(x_vis, Direction::vis_to_ir) : x_vis;
  Var field = opt.use_mrrn ? m.mrrn.predict_field(pseudo, x_ir)
                           : Var::constant(Tensor::zeros({1, 2, h + pad_b, w + pad_r}));
  Var ir_reg = Mrrn::register_image(x_ir, field);
  Var fused = m.difn.fuse(ir_reg, x_vis, opt.use_ifm);

  auto back = [&](const Var& v) { return crop(v, 0, 0, h, w).value().reshaped({h, w}); };
  return InferOutputs{
      make_image(back(pseudo), opt.use_cpstn ? Provenance::pseudo_ir : Provenance::real_vis),
      DeformationField::from_packed(crop(field, 0, 0, h, w).value()),
      make_image(back(ir_reg), Provenance::registered),
      make_image(back(fused), Provenance::fused)};
}

TimingReport time_inference(const Model& m, int64_t size, int64_t runs) {
  check_arg(size >= 8, "time_inference: size too small");
  check_arg(runs >= 1, "time_inference: need at least one run");
  std::mt19937_64 rng(99);
  GrayImage vis = make_image(Tensor::uniform({size, size}, rng), Provenance::real_vis);
  GrayImage ir = make_image(Tensor::uniform({size, size}, rng), Provenance::real_ir);
  for (int i = 0; i < 3; ++i) run_pipeline(m, vis, ir);

  std::vector<double> secs(static_cast<size_t>(runs));
  for (int64_t i = 0; i < runs; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    run_pipeline(m, vis, ir);
    secs[static_cast<size_t>(i)] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  double mean = 0.0;
  for (double s : secs) mean += s;
  mean /= static_cast<double>(runs);
  double var = 0.0;
  for (double s : secs) var += (s - mean) * (s - mean);
  if (runs > 1) var /= static_cast<double>(runs - 1);
  return {mean, std::sqrt(var), runs};
}

}  // namespace cgrp
