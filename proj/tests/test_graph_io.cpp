#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eerm/env_suite.hpp"
#include "eerm/errors.hpp"
#include "eerm/graph_io.hpp"

using namespace eerm;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("eerm_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
  }

 private:
  fs::path path_;
};

void write_three_nodes(const TempDir& d, const std::string& edges) {
  d.write("edges.txt", edges);
  d.write("features.csv", "1,0\n0,1\n1,1\n");
  d.write("labels.txt", "0\n1\n0\n");
}

}  // namespace

TEST(LoadGraph, DirectRead) {
  TempDir d;
  write_three_nodes(d, "0 1\n1 2\n");
  LoadReport rep;
  const Graph g = load_graph(d.path(), &rep);
  EXPECT_EQ(g.num_nodes(), 3);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
  EXPECT_EQ(rep.warnings(), 0u);
  EXPECT_EQ(g.labels(), (std::vector<int>{0, 1, 0}));
}

TEST(LoadGraph, DropsSelfLoopWithWarning) {
  TempDir d;
  write_three_nodes(d, "0 1\n2 2\n");
  LoadReport rep;
  const Graph g = load_graph(d.path(), &rep);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(rep.self_loops_dropped, 1u);
  EXPECT_EQ(rep.warnings(), 1u);
}

TEST(LoadGraph, Symmetrizes) {
  TempDir d;
  write_three_nodes(d, "0 1\n1 0\n");
  LoadReport rep;
  const Graph g = load_graph(d.path(), &rep);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}}));
  EXPECT_EQ(rep.duplicates_dropped, 0u);
}

TEST(LoadGraph, RepeatedLineIsDuplicate) {
  TempDir d;
  write_three_nodes(d, "0 1\n0 1\n");
  LoadReport rep;
  const Graph g = load_graph(d.path(), &rep);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(rep.duplicates_dropped, 1u);
}

TEST(LoadGraph, ParseErrorCarriesLineNumber) {
  TempDir d;
  write_three_nodes(d, "0 1\n# comment\n1 x\n");
  try {
    load_graph(d.path());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadGraph, EndpointOutOfRange) {
  TempDir d;
  write_three_nodes(d, "0 3\n");
  EXPECT_THROW(load_graph(d.path()), ParseError);
}

TEST(LoadGraph, LabelCountMismatch) {
  TempDir d;
  write_three_nodes(d, "0 1\n");
  d.write("labels.txt", "0\n1\n");
  EXPECT_THROW(load_graph(d.path()), StructureError);
}

TEST(LoadGraph, MaskLengthMismatch) {
  TempDir d;
  write_three_nodes(d, "0 1\n");
  d.write("train_mask.txt", "1\n0\n");
  EXPECT_THROW(load_graph(d.path()), StructureError);
}

TEST(LoadGraph, MissingFile) {
  TempDir d;
  EXPECT_THROW(load_graph(d.path()), IoError);
}

TEST(LoadGraph, RaggedFeatures) {
  std::istringstream in("1,2\n3\n");
  EXPECT_THROW(parse_feature_csv(in), ParseError);
}

TEST(SaveGraph, RoundTrip) {
  TempDir d;
  Matrix x(3, 2);
  x << 0.1, -2.5, 1e-300, 3.0, 1.0 / 3.0, 7.0;
  const Graph g(3, {{0, 2}}, x, {1, 0, 1}, {{"train", {true, false, true}}});
  save_graph(g, d.path() / "g");
  const Graph back = load_graph(d.path() / "g");
  EXPECT_EQ(back.edges(), g.edges());
  EXPECT_EQ(back.features(), g.features());
  EXPECT_EQ(back.labels(), g.labels());
  EXPECT_EQ(back.masks(), g.masks());
}

TEST(SaveGraph, RegressionTargets) {
  TempDir d;
  Vector y(2);
  y << 0.25, -1.0 / 7.0;
  const Graph g(2, {{0, 1}}, Matrix::Ones(2, 2), {}, {}, y);
  save_graph(g, d.path() / "g");
  const Graph back = load_graph(d.path() / "g");
  EXPECT_TRUE(back.is_regression());
  EXPECT_EQ(back.targets(), y);
}

TEST(FormatReal, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567}) {
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
}

TEST(Suite, SaveLoadKeepsRolesAndSplit) {
  TempDir d;
  std::vector<Environment> envs;
  for (int e = 0; e < 3; ++e) {
    envs.push_back({e, Graph(2, {{0, 1}}, Matrix::Constant(2, 3, e), {0, 1})});
  }
  const EnvSuite suite(std::move(envs),
                       {{0, EnvRole::train}, {1, EnvRole::valid}, {2, EnvRole::test}},
                       FeatureSplit{2, 1});
  save_suite(suite, d.path() / "s");
  const EnvSuite back = load_suite(d.path() / "s");
  EXPECT_EQ(back.size(), 3u);
  EXPECT_EQ(back.split_plan(), suite.split_plan());
  ASSERT_TRUE(back.feature_split().has_value());
  EXPECT_EQ(back.feature_split()->spurious_dim, 1);
  EXPECT_EQ(back.env(2).graph.features(), suite.env(2).graph.features());
}

TEST(Suite, TimeAwareSplit) {
  std::vector<Environment> envs;
  std::map<int, EnvRole> plan;
  for (int e : {5, 3, 9, 7}) {
    envs.push_back({e, Graph(1, {}, Matrix::Zero(1, 1), {0})});
    plan[e] = EnvRole::test;
  }
  const EnvSuite suite(std::move(envs), plan);
  const auto split = time_aware_split(suite);
  EXPECT_EQ(split.at(3), EnvRole::train);
  EXPECT_EQ(split.at(5), EnvRole::valid);
  EXPECT_EQ(split.at(7), EnvRole::test);
  EXPECT_EQ(split.at(9), EnvRole::test);
}

TEST(Suite, RejectsMismatchedFeatureWidths) {
  std::vector<Environment> envs;
  envs.push_back({0, Graph(1, {}, Matrix::Zero(1, 1), {0})});
  envs.push_back({1, Graph(1, {}, Matrix::Zero(1, 2), {0})});
  EXPECT_THROW(EnvSuite(std::move(envs), {{0, EnvRole::train}, {1, EnvRole::test}}),
               ContractError);
}
