#include "cgrp/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "cgrp/ioutil.hpp"
#include "cgrp/metrics.hpp"
#include "cgrp/plot_svg.hpp"
#include "cgrp/png_io.hpp"
#include "cgrp/report.hpp"
#include "cgrp/trainer.hpp"

namespace cgrp {
namespace {

namespace fs = std::filesystem;

std::string fnv1a_hex(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string resolve_ckpt_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv("CGRP_CKPT_ROOT");
  check_arg(env != nullptr && *env != '\0',
            "no checkpoint root: pass --ckpt-root or set CGRP_CKPT_ROOT");
  return env;
}

std::string resolve_ckpt_file(const std::string& ckpt, const std::string& root_flag,
                              const std::string& stage) {
  if (!ckpt.empty()) return ckpt;
  std::string root = resolve_ckpt_root(root_flag);
  if (!stage.empty()) {
    auto p = latest_checkpoint(root, stage);
    check_arg(p.has_value(), "no " + stage + " checkpoint under " + root);
    return *p;
  }
  for (const char* s : {"joint", "difn", "mrrn", "cpstn"}) {
    auto p = latest_checkpoint(root, s);
    if (p) return *p;
  }
  throw std::invalid_argument("no checkpoints under " + root);
}

struct LoadedModel {
  Checkpoint ckpt;
  TrainConfig cfg;
  Model model;

  explicit LoadedModel(const std::string& path)
      : ckpt(load_checkpoint(path)), cfg(TrainConfig::from_json(ckpt.config_json)), model(cfg) {
    apply_checkpoint(model, ckpt);
  }
};

void require_trained(const Checkpoint& ckpt, const PipelineOptions& opt, bool need_fusion) {
  auto need = [&](const char* stage, bool used) {
    check_arg(!used || ckpt.has_trained(stage),
              std::string("checkpoint/stage mismatch: the pipeline needs trained ") + stage +
                  " weights but this checkpoint (stage " + ckpt.stage + ") has none; train " +
                  stage + " or disable that path");
  };
  need("cpstn", opt.use_cpstn);
  need("mrrn", opt.use_mrrn);
  need("difn", need_fusion);
}

std::vector<std::string> select_ids(const std::string& data, const std::string& manifest_flag,
                                    const std::string& split, std::string* corpus_out) {
  std::string mpath = manifest_flag;
  if (mpath.empty()) {
    std::string candidate = (fs::path(data) / "manifest.txt").string();
    if (fs::exists(candidate)) mpath = candidate;
  }
  if (mpath.empty()) {
    check_arg(split == "all", "eval: --split " + split + " needs a manifest (--manifest)");
    return list_pair_ids(data);
  }
  SplitManifest m = load_manifest(mpath);
  if (corpus_out != nullptr) *corpus_out = m.corpus;
  std::vector<std::string> ids;
  if (split == "train") ids = m.train;
  else if (split == "test") ids = m.test;
  else if (split == "all") {
    ids = m.train;
    ids.insert(ids.end(), m.test.begin(), m.test.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  } else {
    throw std::invalid_argument("eval: unknown split " + split);
  }
  check_arg(!ids.empty(), "eval: the " + split + " split of " + mpath + " is empty");
  return ids;
}

std::vector<PairRecord> load_records(const std::string& data, const std::vector<std::string>& ids,
                                     const std::string& expected_corpus) {
  std::vector<PairRecord> records;
  records.reserve(ids.size());
  for (const auto& id : ids) {
    check_arg(fs::exists(fs::path(data) / (id + "_field.dfld")),
              "manifest/corpus mismatch: no record " + id + " under " + data);
    PairRecord r = load_pair(data, id);
    check_arg(expected_corpus.empty() || r.corpus == expected_corpus,
              "manifest/corpus mismatch: record " + id + " belongs to corpus " + r.corpus +
                  ", manifest says " + expected_corpus);
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------- distort

struct DistortArgs {
  std::string input, out, corpus;
  double rot = 5.0, trans = 5.0, alpha = 6.0, sigma = 4.0, test_frac = 0.5;
  uint64_t seed = 0;
  bool force = false;
};

int cmd_distort(const DistortArgs& a, std::ostream& out) {
  check_arg(fs::is_directory(a.input), "distort: input directory not found: " + a.input);
  std::vector<std::string> ids;
  const std::string suffix = "_vis.png";
  for (const auto& e : fs::directory_iterator(a.input)) {
    if (!e.is_regular_file()) continue;
    std::string name = e.path().filename().string();
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  check_arg(!ids.empty(), "distort: no *_vis.png images under " + a.input);
  for (const auto& id : ids)
    check_arg(fs::exists(fs::path(a.input) / (id + "_ir.png")),
              "distort: missing " + id + "_ir.png next to " + id + "_vis.png");
  check_arg(!fs::exists(a.out) || a.force,
            "distort: output directory exists, pass --force to overwrite: " + a.out);

  fs::create_directories(a.out);
  std::string corpus = a.corpus.empty() ? fs::path(a.out).filename().string() : a.corpus;
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto sym = [&](double lim) { return (2.0 * unit(rng) - 1.0) * lim; };

  for (const auto& id : ids) {
    GrayImage vis = make_image(read_png_gray((fs::path(a.input) / (id + "_vis.png")).string()),
                               Provenance::real_vis);
    GrayImage ir = make_image(read_png_gray((fs::path(a.input) / (id + "_ir.png")).string()),
                              Provenance::real_ir);
    AffineParams aff;
    aff.rotation_deg = sym(a.rot);
    aff.tx = sym(a.trans);
    aff.ty = sym(a.trans);
    ElasticSpec elastic;
    elastic.sigma = a.sigma;
    elastic.alpha = unit(rng) * a.alpha;
    elastic.seed = rng();
    save_pair(synthesize_pair(vis, ir, aff, elastic, corpus, id), a.out);
  }

  SplitManifest m = split_corpus(ids, a.test_frac, a.seed);
  m.corpus = corpus;
  save_manifest(m, (fs::path(a.out) / "manifest.txt").string());
  out << "distorted " << ids.size() << " pairs into " << a.out << " (corpus " << corpus << ")\n";
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string data, manifest, split = "train", config_file, ckpt_root, ledger_file;
};

int cmd_train(const TrainArgs& a, const TrainConfig& cfg, std::ostream& out) {
  std::string root = resolve_ckpt_root(a.ckpt_root);
  std::string corpus;
  std::vector<std::string> ids = select_ids(a.data, a.manifest, a.split, &corpus);
  std::vector<PairRecord> records = load_records(a.data, ids, corpus);

  std::ofstream ledger;
  if (!a.ledger_file.empty()) {
    ledger.open(a.ledger_file);
    check_arg(ledger.good(), "train: cannot open ledger file " + a.ledger_file);
  }

  Trainer trainer(cfg, root);
  TrainResult result = trainer.run(records, ledger.is_open() ? &ledger : nullptr);

  out << "stage " << stage_str(cfg.stage) << ": " << result.history.size() << " steps on "
      << records.size() << " records\n";
  out << "checkpoint: " << result.final_checkpoint << "\n";
  for (const auto& [group, count] : result.params.groups)
    out << "params " << group << " = " << count << "\n";
  out << "params total = " << result.params.total << " (registration+fusion "
      << result.params.group("mrrn") + result.params.group("difn") << ")\n";
  if (!result.history.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", result.history.back().total);
    out << "final loss " << buf << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------ infer

struct InferArgs {
  std::string ckpt, ckpt_root, stage, vis, ir, out_dir;
  bool no_cpstn = false, no_mrrn = false, no_ifm = false, recolor = false;
};

Tensor recolor_fused(const Tensor& fused, const Tensor& rgb) {
  int64_t h = fused.dim(0), w = fused.dim(1);
  check_arg(rgb.defined() && rgb.rank() == 3 && rgb.dim(0) == h && rgb.dim(1) == w,
            "recolor: fused/color size mismatch");
  Tensor out({h, w, 3});
  for (int64_t i = 0; i < h * w; ++i) {
    double r = rgb[3 * i], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    double cb = (b - y) * 0.564, cr = (r - y) * 0.713;
    double yf = fused[i];
    double rf = yf + cr / 0.713;
    double bf = yf + cb / 0.564;
    double gf = (yf - 0.299 * rf - 0.114 * bf) / 0.587;
    out[3 * i] = std::clamp(rf, 0.0, 1.0);
    out[3 * i + 1] = std::clamp(gf, 0.0, 1.0);
    out[3 * i + 2] = std::clamp(bf, 0.0, 1.0);
  }
  return out;
}

int cmd_infer(const InferArgs& a, std::ostream& out) {
  LoadedModel lm(resolve_ckpt_file(a.ckpt, a.ckpt_root, a.stage));
  PipelineOptions opt{!a.no_cpstn, !a.no_mrrn, !a.no_ifm};
  require_trained(lm.ckpt, opt, true);

  PngImage vis_png = read_png(a.vis);
  check_arg(!a.recolor || vis_png.rgb.defined(),
            "infer: --recolor needs a color visible image, " + a.vis + " is grayscale");
  GrayImage vis = make_image(vis_png.gray, Provenance::real_vis);
  GrayImage ir = make_image(read_png_gray(a.ir), Provenance::real_ir);

  InferOutputs res = run_pipeline(lm.model, vis, ir, opt);
  fs::create_directories(a.out_dir);
  fs::path dir(a.out_dir);
  write_png_gray16(res.pseudo_ir.pixels, (dir / "pseudo_ir.png").string());
  save_field(res.field, (dir / "field.dfld").string());
  write_png_gray16(res.ir_reg.pixels, (dir / "ir_reg.png").string());
  write_png_gray16(res.fused.pixels, (dir / "fused.png").string());
  if (a.recolor)
    write_png_rgb8(recolor_fused(res.fused.pixels, vis_png.rgb),
                   (dir / "fused_color.png").string());
  out << "wrote pseudo_ir.png, field.dfld, ir_reg.png, fused.png"
      << (a.recolor ? ", fused_color.png" : "") << " under " << a.out_dir << "\n";
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string ckpt, ckpt_root, stage, data, manifest, split = "test", mode = "registration",
              out_dir, external_dir;
  bool no_cpstn = false, no_mrrn = false, no_ifm = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  check_arg(a.mode == "registration" || a.mode == "fusion",
            "eval: mode must be registration or fusion, got " + a.mode);
  std::string corpus;
  std::vector<std::string> ids = select_ids(a.data, a.manifest, a.split, &corpus);
  std::vector<PairRecord> records = load_records(a.data, ids, corpus);
  PipelineOptions opt{!a.no_cpstn, !a.no_mrrn, !a.no_ifm};

  std::vector<ReportRow> rows;
  std::string checkpoint_id, config_hash;

  if (a.mode == "registration")
    rows.push_back({"Misaligned Input", evaluate_registration(records, [](const PairRecord& r) {
                      return r.ir_distorted;
                    })});

  if (!a.external_dir.empty()) {
    std::string kind = a.mode == "registration" ? "_ir_reg.png" : "_fused.png";
    auto external = [&](const PairRecord& r) {
      std::string path = (fs::path(a.external_dir) / (r.id + kind)).string();
      check_arg(fs::exists(path), "eval: external output missing: " + path);
      return make_image(read_png_gray(path),
                        a.mode == "registration" ? Provenance::registered : Provenance::fused);
    };
    rows.push_back({"External", a.mode == "registration"
                                    ? evaluate_registration(records, external)
                                    : evaluate_fusion(records, external)});
    checkpoint_id = "external:" + a.external_dir;
  } else {
    std::string path = resolve_ckpt_file(a.ckpt, a.ckpt_root, a.stage);
    LoadedModel lm(path);
    require_trained(lm.ckpt, opt, a.mode == "fusion");
    checkpoint_id = fs::path(path).string();
    config_hash = fnv1a_hex(lm.ckpt.config_json);
    const Model& model = lm.model;
    if (a.mode == "registration")
      rows.push_back({"Ours", evaluate_registration(records, [&](const PairRecord& r) {
                        return run_pipeline(model, r.vis, r.ir_distorted, opt).ir_reg;
                      })});
    else
      rows.push_back({"Ours", evaluate_fusion(records, [&](const PairRecord& r) {
                        return run_pipeline(model, r.vis, r.ir_distorted, opt).fused;
                      })});
  }

  for (auto& row : rows) {
    row.report.checkpoint_id = checkpoint_id;
    row.report.config_hash = config_hash;
  }
  write_report_files(a.out_dir, rows);
  out << render_report_table(rows);
  out << "report written to " << a.out_dir << "\n";
  return 0;
}

// ------------------------------------------------------------------- plot

struct PlotArgs {
  std::string report, ledger, out_dir;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  check_arg(!a.report.empty() || !a.ledger.empty(), "plot: pass --report and/or --ledger");
  fs::create_directories(a.out_dir);
  if (!a.report.empty()) {
    write_report_files(a.out_dir, report_rows_from_json(read_file(a.report)));
    out << "regenerated report files under " << a.out_dir << "\n";
  }
  if (!a.ledger.empty()) {
    std::ifstream in(a.ledger);
    check_arg(in.good(), "plot: cannot read ledger " + a.ledger);
    std::vector<double> steps;
    std::map<std::string, std::vector<double>> series;
    std::string line;
    while (std::getline(in, line)) {
      auto kv = parse_ledger_line(line);
      double step = -1;
      std::vector<std::pair<std::string, double>> vals;
      for (const auto& [k, v] : kv) {
        if (k == "stage") continue;
        if (k == "step") step = std::stod(v);
        else if (k != "wall_ms") vals.emplace_back(k, std::stod(v));
      }
      if (step < 0 || vals.empty()) continue;
      steps.push_back(step);
      for (const auto& [k, v] : vals) {
        auto& vec = series[k];
        vec.resize(steps.size() - 1, std::nan(""));
        vec.push_back(v);
      }
      for (auto& [k, vec] : series) vec.resize(steps.size(), std::nan(""));
    }
    check_arg(!steps.empty(), "plot: no step records in " + a.ledger);
    std::vector<ChartSeries> cs;
    for (auto& [k, vec] : series) cs.push_back({k, std::move(vec)});
    write_file_atomic((fs::path(a.out_dir) / "loss.svg").string(),
                      svg_line_chart("training loss", steps, cs));
    out << "wrote loss.svg under " << a.out_dir << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cross-modality generation, registration and fusion pipeline"};
  app.require_subcommand(1);

  DistortArgs da;
  auto* distort = app.add_subcommand(
      "distort", "synthesize a misaligned corpus from aligned <id>_vis.png/<id>_ir.png pairs");
  distort->add_option("--input", da.input, "directory of aligned pairs")->required();
  distort->add_option("--out", da.out, "output corpus directory")->required();
  distort->add_option("--corpus", da.corpus, "corpus name (default: output directory name)");
  distort->add_option("--rot", da.rot, "max |rotation| in degrees (default 5)");
  distort->add_option("--trans", da.trans, "max |translation| in pixels (default 5)");
  distort->add_option("--alpha", da.alpha, "max elastic displacement in pixels (default 6)");
  distort->add_option("--elastic-sigma", da.sigma, "elastic smoothing sigma (default 4)");
  distort->add_option("--test-frac", da.test_frac, "test split fraction (default 0.5)");
  distort->add_option("--seed", da.seed, "corpus seed (default 0)");
  distort->add_flag("--force", da.force, "allow writing into an existing directory");

  TrainArgs ta;
  TrainConfig tc;
  std::string t_stage = "cpstn", t_pseudo = "cpstn", t_ir_source = "pipeline";
  bool t_no_ifm = false, t_no_pst = false, t_no_cross = false, t_no_cpstn = false,
       t_no_mrrn = false, t_grad_cpstn = false;
  auto* train = app.add_subcommand("train", "optimize one stage on a distorted corpus");
  train->add_option("--data", ta.data, "PairRecord corpus directory")->required();
  train->add_option("--manifest", ta.manifest, "manifest path (default <data>/manifest.txt)");
  train->add_option("--split", ta.split, "train|test|all (default train)");
  train->add_option("--config", ta.config_file, "JSON config file (flags override its keys)");
  train->add_option("--ckpt-root", ta.ckpt_root, "checkpoint root (default $CGRP_CKPT_ROOT)");
  train->add_option("--ledger", ta.ledger_file, "write per-step loss records to this file");
  auto* o_stage = train->add_option("--stage", t_stage, "cpstn|mrrn|difn|joint (default cpstn)");
  auto* o_batch = train->add_option("--batch", tc.batch, "batch size (default 8)");
  auto* o_patch = train->add_option("--patch", tc.patch, "patch size (default 256)");
  auto* o_epochs = train->add_option("--epochs", tc.epochs, "epochs (default 300)");
  auto* o_steps = train->add_option("--steps", tc.steps, "total steps, overrides --epochs");
  auto* o_lr = train->add_option("--lr", tc.lr, "learning rate (default 1e-3)");
  auto* o_seed = train->add_option("--seed", tc.seed, "training seed (default 0)");
  auto* o_every = train->add_option("--ckpt-every", tc.ckpt_every, "checkpoint cadence in steps");
  auto* o_pseudo =
      train->add_option("--pseudo-source", t_pseudo, "cpstn|vis|aligned_ir (default cpstn)");
  auto* o_irsrc =
      train->add_option("--ir-source", t_ir_source, "pipeline|raw|aligned (default pipeline)");
  auto* o_init = train->add_option("--init-stage", tc.init_stage,
                                   "stage whose latest checkpoint seeds this run");
  auto* o_bw = train->add_option("--backbone-weights", tc.backbone_weights,
                                 "optional VGGW blob for the perceptual backbone");
  train->add_flag("--disable-cpstn", t_no_cpstn, "register against the visible image directly");
  train->add_flag("--disable-mrrn", t_no_mrrn, "fuse the raw misaligned pair");
  train->add_flag("--disable-ifm", t_no_ifm, "replace the interaction gate with concatenation");
  train->add_flag("--disable-loss-pst", t_no_pst, "drop the perceptual style term");
  train->add_flag("--disable-loss-cross", t_no_cross, "drop the cross regularization term");
  train->add_flag("--reg-grad-to-cpstn", t_grad_cpstn,
                  "let registration gradients reach the translator");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "run the pipeline on one visible/infrared pair");
  infer->add_option("--ckpt", ia.ckpt, "checkpoint file");
  infer->add_option("--ckpt-root", ia.ckpt_root, "checkpoint root (default $CGRP_CKPT_ROOT)");
  infer->add_option("--stage", ia.stage, "stage to pick the latest checkpoint from");
  infer->add_option("--vis", ia.vis, "visible image (PNG)")->required();
  infer->add_option("--ir", ia.ir, "infrared image (PNG)")->required();
  infer->add_option("--out", ia.out_dir, "output directory")->required();
  infer->add_flag("--disable-cpstn", ia.no_cpstn, "register against the visible image directly");
  infer->add_flag("--disable-mrrn", ia.no_mrrn, "fuse the raw misaligned pair");
  infer->add_flag("--disable-ifm", ia.no_ifm, "replace the interaction gate with concatenation");
  infer->add_flag("--recolor", ia.recolor, "reinject the visible chroma into the fused output");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "score a checkpoint over a corpus split");
  eval->add_option("--ckpt", ea.ckpt, "checkpoint file");
  eval->add_option("--ckpt-root", ea.ckpt_root, "checkpoint root (default $CGRP_CKPT_ROOT)");
  eval->add_option("--stage", ea.stage, "stage to pick the latest checkpoint from");
  eval->add_option("--data", ea.data, "PairRecord corpus directory")->required();
  eval->add_option("--manifest", ea.manifest, "manifest path (default <data>/manifest.txt)");
  eval->add_option("--split", ea.split, "train|test|all (default test)");
  eval->add_option("--mode", ea.mode, "registration|fusion (default registration)");
  eval->add_option("--out", ea.out_dir, "report output directory")->required();
  eval->add_option("--external-dir", ea.external_dir,
                   "score third-party outputs (<id>_ir_reg.png / <id>_fused.png) instead");
  eval->add_flag("--disable-cpstn", ea.no_cpstn, "register against the visible image directly");
  eval->add_flag("--disable-mrrn", ea.no_mrrn, "fuse the raw misaligned pair");
  eval->add_flag("--disable-ifm", ea.no_ifm, "replace the interaction gate with concatenation");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "regenerate charts from a report or a ledger");
  plot->add_option("--report", pa.report, "report.json produced by eval");
  plot->add_option("--ledger", pa.ledger, "per-step ledger produced by train");
  plot->add_option("--out", pa.out_dir, "output directory")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (distort->parsed()) return cmd_distort(da, out);
    if (train->parsed()) {
      TrainConfig cfg;
      if (!ta.config_file.empty()) cfg = TrainConfig::from_json(read_file(ta.config_file), cfg);
      if (o_stage->count() || ta.config_file.empty()) cfg.stage = stage_from_str(t_stage);
      if (o_batch->count()) cfg.batch = tc.batch;
      if (o_patch->count()) cfg.patch = tc.patch;
      if (o_epochs->count()) cfg.epochs = tc.epochs;
      if (o_steps->count()) cfg.steps = tc.steps;
      if (o_lr->count()) cfg.lr = tc.lr;
      if (o_seed->count()) cfg.seed = tc.seed;
      if (o_every->count()) cfg.ckpt_every = tc.ckpt_every;
      if (o_pseudo->count()) cfg.pseudo_source = pseudo_source_from_str(t_pseudo);
      if (o_irsrc->count()) cfg.ir_source = ir_source_from_str(t_ir_source);
      if (o_init->count()) cfg.init_stage = tc.init_stage;
      if (o_bw->count()) cfg.backbone_weights = tc.backbone_weights;
      if (t_no_cpstn) cfg.pseudo_source = PseudoSource::vis;
      if (t_no_mrrn) cfg.ir_source = IrSource::raw;
      if (t_no_ifm) cfg.use_ifm = false;
      if (t_no_pst) cfg.loss_pst = false;
      if (t_no_cross) cfg.loss_cross = false;
      if (t_grad_cpstn) cfg.reg_grad_to_cpstn = true;
      return cmd_train(ta, cfg, out);
    }
    if (infer->parsed()) return cmd_infer(ia, out);
    if (eval->parsed()) return cmd_eval(ea, out);
    if (plot->parsed()) return cmd_plot(pa, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no command\n";
  return 1;
}

}  // namespace cgrp
