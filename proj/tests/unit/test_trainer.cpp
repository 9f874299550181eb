#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cgrp/metrics.hpp"
#include "cgrp/trainer.hpp"
#include "support/testutil.hpp"

using namespace cgrp;

namespace {

TrainConfig tiny_cfg() {
  TrainConfig c;
  c.stage = Stage::cpstn;
  c.batch = 1;
  c.patch = 16;
  c.steps = 2;
  c.seed = 5;
  c.weights.layers = {2};
  c.weights.omegas = {1.0 / 32};
  c.translator.width = 4;
  c.translator.depth = 1;
  c.translator.resblocks = 1;
  c.disc_width = 4;
  c.mrrn.levels = 2;
  c.mrrn.widths = {4, 8};
  c.mrrn.est_widths = {8, 16};
  c.difn.width = 2;
  c.difn.growth = 2;
  c.difn.blocks = 1;
  return c;
}

std::vector<PairRecord> toy_records(int n = 3) {
  std::vector<PairRecord> recs;
  for (int i = 0; i < n; ++i) {
    PairRecord r;
    r.corpus = "toy";
    r.id = "t" + std::to_string(i);
    Tensor vis = testutil::blob_scene(24, 24, 800 + i);
    r.vis = GrayImage{vis, Provenance::real_vis};
    r.ir_aligned = GrayImage{testutil::modality_remap(vis), Provenance::real_ir};
    r.ir_distorted = GrayImage{testutil::blob_scene(24, 24, 900 + i), Provenance::real_ir};
    r.gt_field = DeformationField::zero(24, 24);
    recs.push_back(std::move(r));
  }
  return recs;
}

double map_diff(const nn::ParamMap& a, const nn::ParamMap& b) {
  REQUIRE(a.entries().size() == b.entries().size());
  double worst = 0;
  for (size_t i = 0; i < a.entries().size(); ++i) {
    const Tensor& ta = a.entries()[i].var.value();
    const Tensor& tb = b.entries()[i].var.value();
    REQUIRE(ta.same_shape(tb));
    for (int64_t j = 0; j < ta.numel(); ++j)
      worst = std::max(worst, std::abs(ta[j] - tb[j]));
  }
  return worst;
}

double model_diff(Model& a, Model& b) {
  double d = map_diff(a.cpstn.gen_params(), b.cpstn.gen_params());
  d = std::max(d, map_diff(a.cpstn.disc_params(), b.cpstn.disc_params()));
  d = std::max(d, map_diff(a.mrrn.params(), b.mrrn.params()));
  return std::max(d, map_diff(a.difn.params(), b.difn.params()));
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("enum names round trip and reject unknowns") {
  for (Stage s : {Stage::cpstn, Stage::mrrn, Stage::difn, Stage::joint})
    CHECK(stage_from_str(stage_str(s)) == s);
  for (PseudoSource s : {PseudoSource::cpstn, PseudoSource::vis, PseudoSource::aligned_ir})
    CHECK(pseudo_source_from_str(pseudo_source_str(s)) == s);
  for (IrSource s : {IrSource::pipeline, IrSource::raw, IrSource::aligned})
    CHECK(ir_source_from_str(ir_source_str(s)) == s);
  CHECK_THROWS_AS(stage_from_str("resnet"), std::invalid_argument);
  CHECK_THROWS_AS(pseudo_source_from_str(""), std::invalid_argument);
  CHECK_THROWS_AS(ir_source_from_str("x"), std::invalid_argument);
}

TEST_CASE("config json round trips every field") {
  TrainConfig c = tiny_cfg();
  c.stage = Stage::difn;
  c.epochs = 17;
  c.lr = 5e-4;
  c.beta2 = 0.99;
  c.ckpt_every = 5;
  c.pseudo_source = PseudoSource::vis;
  c.ir_source = IrSource::aligned;
  c.reg_grad_to_cpstn = true;
  c.use_ifm = false;
  c.loss_pst = false;
  c.init_stage = "mrrn";
  c.backbone_weights = "weights.vggw";
  c.weights.lambda_sm = 3.5;
  c.weights.msssim.window = 7;
  c.translator.norm = "none";
  c.mrrn.pad_inputs = false;

  TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.stage == c.stage);
  CHECK(back.batch == c.batch);
  CHECK(back.patch == c.patch);
  CHECK(back.epochs == c.epochs);
  CHECK(back.steps == c.steps);
  CHECK(back.lr == c.lr);
  CHECK(back.beta2 == c.beta2);
  CHECK(back.seed == c.seed);
  CHECK(back.ckpt_every == c.ckpt_every);
  CHECK(back.pseudo_source == c.pseudo_source);
  CHECK(back.ir_source == c.ir_source);
  CHECK(back.reg_grad_to_cpstn == c.reg_grad_to_cpstn);
  CHECK(back.use_ifm == c.use_ifm);
  CHECK(back.loss_pst == c.loss_pst);
  CHECK(back.loss_cross == c.loss_cross);
  CHECK(back.init_stage == c.init_stage);
  CHECK(back.backbone_weights == c.backbone_weights);
  CHECK(back.disc_width == c.disc_width);
  CHECK(back.weights.lambda_sm == 3.5);
  CHECK(back.weights.layers == c.weights.layers);
  CHECK(back.weights.omegas == c.weights.omegas);
  CHECK(back.weights.msssim.window == 7);
  CHECK(back.translator.width == c.translator.width);
  CHECK(back.translator.norm == "none");
  CHECK(back.mrrn.widths == c.mrrn.widths);
  CHECK(back.mrrn.pad_inputs == false);
  CHECK(back.difn.growth == c.difn.growth);

  // keys act as overrides on top of the base config
  TrainConfig merged = TrainConfig::from_json("{\"lr\": 0.002}", c);
  CHECK(merged.lr == 0.002);
  CHECK(merged.stage == Stage::difn);
  CHECK(merged.weights.lambda_sm == 3.5);

  TrainConfig sparse = TrainConfig::from_json("{\"batch\": 9}");
  CHECK(sparse.batch == 9);
  CHECK(sparse.patch == TrainConfig{}.patch);
}

TEST_CASE("config validation rejects bad settings") {
  auto bad = [](auto mutate) {
    TrainConfig c = tiny_cfg();
    mutate(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  bad([](TrainConfig& c) { c.batch = 0; });
  bad([](TrainConfig& c) { c.epochs = 0; });
  bad([](TrainConfig& c) { c.steps = -1; });
  bad([](TrainConfig& c) { c.lr = 0.0; });
  bad([](TrainConfig& c) { c.beta1 = 1.0; });
  bad([](TrainConfig& c) { c.patch = 4; });
  bad([](TrainConfig& c) { c.ckpt_every = -2; });
  bad([](TrainConfig& c) { c.weights.lambda_jg = -1.0; });
}

TEST_CASE("models with equal seeds are identical and differ otherwise") {
  TrainConfig c = tiny_cfg();
  Model a(c), b(c);
  CHECK(model_diff(a, b) == 0.0);
  TrainConfig c2 = tiny_cfg();
  c2.seed = 6;
  Model d(c2);
  CHECK(model_diff(a, d) > 0.0);

  TrainConfig badcfg = tiny_cfg();
  badcfg.lr = -1.0;
  CHECK_THROWS_AS(Model{badcfg}, std::invalid_argument);
}

TEST_CASE("parameter counts add up across groups and snapshots") {
  TrainConfig c = tiny_cfg();
  Model m(c);
  ParamCounts pc = count_params(m);
  int64_t manual = 0;
  for (const nn::ParamMap* pm :
       {&m.cpstn.gen_params(), &m.cpstn.disc_params(), &m.mrrn.params(), &m.difn.params()})
    for (const auto& e : pm->entries()) manual += e.var.value().numel();
  int64_t grouped = 0;
  for (const auto& [name, count] : pc.groups) grouped += count;
  CHECK(pc.total == manual);
  CHECK(pc.total == grouped);
  CHECK(pc.group("mrrn") == m.mrrn.params().count());
  CHECK(pc.group("nope") == 0);

  Checkpoint snap = snapshot_model(m, "cpstn", 1, {"cpstn"}, c.to_json());
  ParamCounts from_ckpt = count_params(snap);
  CHECK(from_ckpt.total == pc.total);
  CHECK(from_ckpt.group("difn") == pc.group("difn"));
  snap.add_block("adam.mrrn.t", Tensor::scalar(1.0));
  CHECK(count_params(snap).total == pc.total);  // optimizer blocks not counted
}

TEST_CASE("ledger lines round trip through the parser") {
  StepRecord rec;
  rec.step = 12;
  rec.total = 3.25;
  rec.wall_ms = 7.125;
  rec.parts = {{"gan_g", 1.5}, {"pst", 0.25}};
  std::ostringstream os;
  write_ledger_line(os, "cpstn", rec);
  std::string line = os.str();
  CHECK(line.back() == '\n');
  auto kv = parse_ledger_line(line);
  REQUIRE(kv.size() == 6);
  CHECK(kv[0] == std::pair<std::string, std::string>{"step", "12"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"stage", "cpstn"});
  CHECK(kv[2] == std::pair<std::string, std::string>{"wall_ms", "7.125"});
  CHECK(kv[3] == std::pair<std::string, std::string>{"total", "3.25"});
  CHECK(kv[4] == std::pair<std::string, std::string>{"gan_g", "1.5"});
  CHECK(kv[5] == std::pair<std::string, std::string>{"pst", "0.25"});
  CHECK(parse_ledger_line("no pairs here").empty());
}

TEST_CASE("missing prerequisite checkpoints are hard errors naming the stage") {
  testutil::TempDir tmp("trainer-prereq");
  auto recs = toy_records();

  TrainConfig reg = tiny_cfg();
  reg.stage = Stage::mrrn;  // pseudo_source cpstn wants a translator checkpoint
  Trainer t1(reg, tmp.path());
  CHECK_THROWS_WITH_AS(t1.run(recs),
                       ("stage mrrn needs a prerequisite checkpoint for stage cpstn under " +
                        tmp.path() + "/cpstn; train that stage first")
                           .c_str(),
                       std::invalid_argument);

  TrainConfig fus = tiny_cfg();
  fus.stage = Stage::difn;  // ir_source pipeline wants registration weights
  Trainer t2(fus, tmp.path());
  CHECK_THROWS_AS(t2.run(recs), std::invalid_argument);

  TrainConfig joint = tiny_cfg();
  joint.stage = Stage::joint;
  Trainer t3(joint, tmp.path());
  CHECK_THROWS_AS(t3.run(recs), std::invalid_argument);

  CHECK_THROWS_AS(Trainer(tiny_cfg(), ""), std::invalid_argument);
}

TEST_CASE("fixed seeds reproduce the loss history exactly") {
  auto recs = toy_records();
  std::vector<std::vector<double>> totals;
  std::string first_header;
  for (int run = 0; run < 2; ++run) {
    testutil::TempDir tmp("trainer-repro");
    TrainConfig c = tiny_cfg();
    c.steps = 2;
    Trainer t(c, tmp.path());
    std::ostringstream ledger;
    TrainResult res = t.run(recs, &ledger);
    REQUIRE(res.history.size() == 2);
    std::vector<double> tot;
    for (const auto& rec : res.history) tot.push_back(rec.total);
    totals.push_back(tot);

    std::istringstream in(ledger.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.find("params.total=") != std::string::npos);
    CHECK(header.find("params.reg_fusion=") != std::string::npos);
    if (run == 0) first_header = header;
    else CHECK(header == first_header);

    Checkpoint final = load_checkpoint(res.final_checkpoint);
    CHECK(final.stage == "cpstn");
    CHECK(final.step == 2);
    CHECK(final.trained == std::vector<std::string>{"cpstn"});
    CHECK(final.find("adam.cpstn.gen.t") != nullptr);
  }
  CHECK(totals[0] == totals[1]);
  for (double v : totals[0]) CHECK(std::isfinite(v));
}

TEST_CASE("the fusion stage against aligned frames trains difn alone") {
  testutil::TempDir tmp("trainer-difn");
  auto recs = toy_records();
  TrainConfig c = tiny_cfg();
  c.stage = Stage::difn;
  c.ir_source = IrSource::aligned;
  c.steps = 2;
  Trainer t(c, tmp.path());
  TrainResult res = t.run(recs);
  REQUIRE(res.history.size() == 2);
  CHECK(res.history[0].parts.size() == 1);
  CHECK(res.history[0].parts[0].first == "fus");

  Model fresh(c);
  Model& trained = t.model();
  CHECK(map_diff(trained.difn.params(), fresh.difn.params()) > 0.0);
  CHECK(map_diff(trained.mrrn.params(), fresh.mrrn.params()) == 0.0);
  CHECK(map_diff(trained.cpstn.gen_params(), fresh.cpstn.gen_params()) == 0.0);

  Checkpoint final = load_checkpoint(res.final_checkpoint);
  CHECK(final.trained == std::vector<std::string>{"difn"});
}

TEST_CASE("stage chaining carries weights and the trained set forward") {
  testutil::TempDir tmp("trainer-chain");
  auto recs = toy_records();

  TrainConfig c1 = tiny_cfg();
  c1.steps = 1;
  Trainer t1(c1, tmp.path());
  TrainResult r1 = t1.run(recs);
  Checkpoint after_cpstn = load_checkpoint(r1.final_checkpoint);

  TrainConfig c2 = tiny_cfg();
  c2.stage = Stage::mrrn;
  c2.steps = 1;
  Trainer t2(c2, tmp.path());
  TrainResult r2 = t2.run(recs);
  Checkpoint after_mrrn = load_checkpoint(r2.final_checkpoint);
  CHECK(after_mrrn.has_trained("cpstn"));
  CHECK(after_mrrn.has_trained("mrrn"));
  CHECK_FALSE(after_mrrn.has_trained("difn"));

  // the registration stage keeps the translator frozen
  const Tensor* before = after_cpstn.find("cpstn.gen.ga.stem.w");
  const Tensor* after = after_mrrn.find("cpstn.gen.ga.stem.w");
  REQUIRE(before != nullptr);
  REQUIRE(after != nullptr);
  for (int64_t i = 0; i < before->numel(); ++i) CHECK((*before)[i] == (*after)[i]);

  // but its mrrn weights moved
  const Tensor* m0 = after_cpstn.find("mrrn.fe0a.w");
  const Tensor* m1 = after_mrrn.find("mrrn.fe0a.w");
  REQUIRE(m0 != nullptr);
  REQUIRE(m1 != nullptr);
  double d = 0;
  for (int64_t i = 0; i < m0->numel(); ++i) d = std::max(d, std::abs((*m0)[i] - (*m1)[i]));
  CHECK(d > 0.0);
}

TEST_CASE("the pipeline pads odd sizes and crops the outputs back") {
  TrainConfig c = tiny_cfg();
  Model m(c);
  GrayImage vis{testutil::blob_scene(15, 17, 810), Provenance::real_vis};
  GrayImage ir{testutil::blob_scene(15, 17, 811), Provenance::real_ir};

  InferOutputs out = run_pipeline(m, vis, ir);
  CHECK(out.pseudo_ir.pixels.dim(0) == 15);
  CHECK(out.pseudo_ir.pixels.dim(1) == 17);
  CHECK(out.fused.pixels.dim(0) == 15);
  CHECK(out.ir_reg.pixels.dim(1) == 17);
  CHECK(out.field.height() == 15);
  CHECK(out.field.width() == 17);
  CHECK(out.pseudo_ir.tag == Provenance::pseudo_ir);
  CHECK(out.ir_reg.tag == Provenance::registered);
  CHECK(out.fused.tag == Provenance::fused);
  CHECK(out.fused.pixels.min() >= 0.0);
  CHECK(out.fused.pixels.max() <= 1.0);

  GrayImage other{testutil::blob_scene(16, 16, 812), Provenance::real_ir};
  CHECK_THROWS_AS(run_pipeline(m, vis, other), std::invalid_argument);
}

TEST_CASE("pipeline ablations behave structurally") {
  TrainConfig c = tiny_cfg();
  Model m(c);
  GrayImage vis{testutil::blob_scene(16, 16, 813), Provenance::real_vis};
  GrayImage ir{testutil::blob_scene(16, 16, 814), Provenance::real_ir};

  PipelineOptions no_mrrn{true, false, true};
  InferOutputs out = run_pipeline(m, vis, ir, no_mrrn);
  CHECK(out.field.dx.abs_max() == 0.0);
  CHECK(out.field.dy.abs_max() == 0.0);
  for (int64_t i = 0; i < ir.pixels.numel(); ++i)
    CHECK(out.ir_reg.pixels[i] == ir.pixels[i]);  // zero field registers identically

  PipelineOptions no_cpstn{false, true, true};
  InferOutputs raw = run_pipeline(m, vis, ir, no_cpstn);
  CHECK(raw.pseudo_ir.tag == Provenance::real_vis);
  for (int64_t i = 0; i < vis.pixels.numel(); ++i)
    CHECK(raw.pseudo_ir.pixels[i] == vis.pixels[i]);

  PipelineOptions no_ifm{true, true, false};
  InferOutputs plain = run_pipeline(m, vis, ir, no_ifm);
  InferOutputs gated = run_pipeline(m, vis, ir);
  double d = 0;
  for (int64_t i = 0; i < plain.fused.pixels.numel(); ++i)
    d = std::max(d, std::abs(plain.fused.pixels[i] - gated.fused.pixels[i]));
  CHECK(d > 0.0);
}

TEST_CASE("inference timing reports warmed statistics") {
  TrainConfig c = tiny_cfg();
  Model m(c);
  TimingReport tr = time_inference(m, 8, 2);
  CHECK(tr.runs == 2);
  CHECK(tr.mean_s > 0.0);
  CHECK(tr.stdev_s >= 0.0);
  CHECK_THROWS_AS(time_inference(m, 4, 2), std::invalid_argument);
  CHECK_THROWS_AS(time_inference(m, 8, 0), std::invalid_argument);
}

}  // TEST_SUITE("trainer")
