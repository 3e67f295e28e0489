#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eerm/editor.hpp"
#include "eerm/errors.hpp"
#include "eerm/experiment.hpp"

using namespace eerm;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_synth(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.suite = SuiteKind::synth_shift;
  cfg.n_seeds = 2;
  cfg.train.epochs = 4;
  cfg.train.hidden_dim = 8;
  cfg.train.K = 2;
  cfg.train.s = 1;
  cfg.synth.base.nodes = 40;
  cfg.synth.n_envs = 4;
  cfg.out_dir = out;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("eerm_exp_" + name);
  fs::remove_all(p);
  return p;
}

EnvSuite two_block_suite() {
  // Invariant block of width 2, spurious block of width 1; spurious column
  // copies the label, invariant columns do too but with the opposite sign.
  Matrix x(4, 3);
  x << -1.0, -1.0, 1.0,  //
      1.0, 1.0, -1.0,    //
      -1.0, -1.0, 1.0,   //
      1.0, 1.0, -1.0;
  std::vector<Environment> envs;
  envs.push_back({0, Graph(4, {}, x, {0, 1, 0, 1})});
  envs.push_back({1, Graph(4, {}, x, {0, 1, 0, 1})});
  return EnvSuite(std::move(envs), {{0, EnvRole::train}, {1, EnvRole::test}}, FeatureSplit{2, 1});
}

ModelParams linear_readout(const Matrix& w) {
  ModelParams p;
  p.backbone = Backbone::sgc;
  p.standardize = false;
  p.weights = {w};
  return p;
}

}  // namespace

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(config_from_json(nlohmann::json{{"sede", 3}}), ContractError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"train", {{"lr", 0.1}}}}), ContractError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"synth", {{"base", {{"edges", 5}}}}}}),
               ContractError);
}

TEST(Config, WrongTypeRejected) {
  EXPECT_THROW(config_from_json(nlohmann::json{{"n_seeds", "ten"}}), ContractError);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig cfg = tiny_synth("out");
  cfg.train.beta = 0.25;
  cfg.metrics = {Metric::accuracy, Metric::f1};
  cfg.split = SplitKind::time_aware;
  const nlohmann::json j = config_to_json(cfg);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
}

TEST(Config, ToyNeedsLinearBackbone) {
  ExperimentConfig cfg;
  cfg.suite = SuiteKind::toy;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg.train.backbone = Backbone::linear_gcn;
  cfg.train.loss = LossKind::squared;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Ablation, InvariantOnlyReadoutHasZeroDrop) {
  const EnvSuite suite = two_block_suite();
  Matrix w = Matrix::Zero(3, 2);
  w(0, 1) = 1.0;  // class-1 score from the first invariant column only
  const auto ab = spurious_ablation(linear_readout(w), suite);
  EXPECT_DOUBLE_EQ(ab.acc_full, 1.0);
  EXPECT_DOUBLE_EQ(ab.drop(), 0.0);
}

TEST(Ablation, SpuriousOnlyReadoutCollapses) {
  const EnvSuite suite = two_block_suite();
  Matrix w = Matrix::Zero(3, 2);
  w(2, 0) = 1.0;  // class-0 score from the spurious column
  const auto ab = spurious_ablation(linear_readout(w), suite);
  EXPECT_DOUBLE_EQ(ab.acc_full, 1.0);
  EXPECT_DOUBLE_EQ(ab.acc_zeroed, 0.5);
  EXPECT_DOUBLE_EQ(spurious_ablation(linear_readout(w), suite, true).drop(), 0.0);
}

TEST(Report, SummaryMeanAndSampleStd) {
  std::vector<ResultRecord> recs = {{0, 2, "accuracy", 0.5, "erm"},
                                    {1, 2, "accuracy", 0.7, "erm"},
                                    {2, 2, "accuracy", 0.9, "erm"},
                                    {0, 2, "accuracy", 0.4, "eerm"}};
  const auto cells = summarize(recs);
  ASSERT_EQ(cells.size(), 2u);
  const auto& erm = cells[0].method == "erm" ? cells[0] : cells[1];
  const auto& eerm = cells[0].method == "erm" ? cells[1] : cells[0];
  EXPECT_NEAR(erm.mean, 0.7, 1e-15);
  EXPECT_NEAR(erm.std, 0.2, 1e-15);
  EXPECT_EQ(erm.n, 3);
  EXPECT_EQ(eerm.std, 0.0);
}

TEST(Report, CsvSortedWithHeader) {
  std::vector<ResultRecord> recs = {{1, 3, "accuracy", 0.25, "erm"},
                                    {0, 3, "accuracy", 0.5, "erm"},
                                    {0, 2, "accuracy", 0.75, "eerm"}};
  sort_records(recs);
  std::ostringstream out;
  write_results_csv(out, recs);
  EXPECT_EQ(out.str(),
            "method,seed,env_id,metric,value\n"
            "eerm,0,2,accuracy,0.75\n"
            "erm,0,3,accuracy,0.5\n"
            "erm,1,3,accuracy,0.25\n");
}

TEST(Report, SvgIsWellFormed) {
  std::vector<ResultRecord> recs = {{0, 2, "accuracy", 0.5, "erm"},
                                    {1, 2, "accuracy", 0.6, "erm"},
                                    {0, 2, "accuracy", 0.4, "eerm"},
                                    {0, 3, "accuracy", 0.8, "eerm"}};
  const auto cells = summarize(recs);
  const std::string svg = bar_chart_svg(cells, "accuracy");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg xmlns="), std::string::npos);
  EXPECT_EQ(svg.substr(svg.find_last_not_of('\n') - 5, 6), "</svg>");
  std::size_t opens = 0;
  std::size_t closes = 0;
  for (std::size_t i = 0; i < svg.size(); ++i) {
    opens += svg[i] == '<' ? 1 : 0;
    closes += svg[i] == '>' ? 1 : 0;
  }
  EXPECT_EQ(opens, closes);
  std::size_t rects = 0;
  for (std::size_t pos = svg.find("<rect"); pos != std::string::npos;
       pos = svg.find("<rect", pos + 1)) {
    ++rects;
  }
  EXPECT_GE(rects, cells.size());
}

TEST(WorkerSlots, EnvironmentCap) {
  ::setenv("EERM_THREADS", "2", 1);
  EXPECT_EQ(worker_slots(8), 2);
  EXPECT_EQ(worker_slots(1), 1);
  ::setenv("EERM_THREADS", "junk", 1);
  EXPECT_EQ(worker_slots(8), 8);
  ::unsetenv("EERM_THREADS");
  EXPECT_GE(worker_slots(0), 1);
}

TEST(Experiment, EvaluationNeverSamplesEdits) {
  ExperimentConfig cfg = tiny_synth(scratch("noedits"));
  const EnvSuite suite = build_suite(cfg, 0);
  const auto train = suite.graphs_with_role(EnvRole::train);
  const auto res = train_eerm(cfg.train, train, {});
  const auto before = sample_edits_calls();
  for (const auto* env : suite.with_role(EnvRole::test)) {
    evaluate(res.params, env->graph, Metric::accuracy, "test");
  }
  spurious_ablation(res.params, suite);
  EXPECT_EQ(sample_edits_calls(), before);
}

TEST(Experiment, OutputsAndThreadIndependence) {
  const fs::path a = scratch("a");
  const fs::path b = scratch("b");
  ExperimentConfig cfg = tiny_synth(a);
  cfg.threads = 1;
  const auto ra = run_and_emit(cfg);
  cfg.out_dir = b;
  cfg.threads = 3;
  const auto rb = run_and_emit(cfg);
  EXPECT_TRUE(ra.failures.empty());
  // 2 methods x 2 seeds x (2 test envs + 2 ablation rows).
  EXPECT_EQ(ra.records.size(), 16u);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  EXPECT_TRUE(fs::exists(a / "plots" / "accuracy.svg"));
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "eerm-seed1" / "manifest.json"));
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "erm-seed0" / "history.jsonl"));
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(summary.at("runs").size(), 4u);
  EXPECT_TRUE(summary.at("failed").empty());
  EXPECT_EQ(summary.at("config").at("n_seeds").get<int>(), 2);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, ToySuiteRecordsTheta) {
  ExperimentConfig cfg;
  cfg.suite = SuiteKind::toy;
  cfg.methods = {"erm"};
  cfg.train.backbone = Backbone::linear_gcn;
  cfg.train.loss = LossKind::squared;
  cfg.train.selection = ModelSelection::last;
  cfg.train.epochs = 5;
  cfg.toy.nodes = 50;
  cfg.write_checkpoints = false;
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.records.size(), 2u);
  EXPECT_EQ(res.records[0].metric, "theta1");
  EXPECT_EQ(res.records[0].env_id, -1);
}
