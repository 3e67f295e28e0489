#include "eerm/env_suite.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "eerm/errors.hpp"
#include "eerm/graph_io.hpp"

namespace eerm {

std::string to_string(EnvRole role) {
  switch (role) {
    case EnvRole::train:
      return "train";
    case EnvRole::valid:
      return "valid";
    case EnvRole::test:
      return "test";
  }
  return "test";
}

EnvRole env_role_from_string(const std::string& s) {
  if (s == "train") {
    return EnvRole::train;
  }
  if (s == "valid") {
    return EnvRole::valid;
  }
  if (s == "test") {
    return EnvRole::test;
  }
  throw ContractError("unknown environment role '" + s + "'");
}

EnvSuite::EnvSuite(std::vector<Environment> envs, std::map<int, EnvRole> split_plan,
                   std::optional<FeatureSplit> feature_split)
    : envs_(std::move(envs)),
      split_plan_(std::move(split_plan)),
      feature_split_(feature_split) {
  require(!envs_.empty(), "env suite: no environments");
  std::set<int> ids;
  const int dim = envs_.front().graph.feature_dim();
  const bool regression = envs_.front().graph.is_regression();
  for (const auto& e : envs_) {
    require(ids.insert(e.id).second, "env suite: duplicate env id " + std::to_string(e.id));
    require(e.graph.feature_dim() == dim, "env suite: feature dimension differs across envs");
    require(e.graph.is_regression() == regression, "env suite: mixed regression/classification");
    require(split_plan_.contains(e.id), "env suite: env " + std::to_string(e.id) + " has no role");
  }
  for (const auto& [id, role] : split_plan_) {
    require(ids.contains(id), "env suite: split plan names unknown env " + std::to_string(id));
  }
  if (feature_split_) {
    require(feature_split_->invariant_dim + feature_split_->spurious_dim == dim,
            "env suite: feature split does not cover the feature dimension");
  }
}

const Environment& EnvSuite::env(int id) const {
  auto it = std::find_if(envs_.begin(), envs_.end(), [id](const auto& e) { return e.id == id; });
  require(it != envs_.end(), "env suite: unknown env " + std::to_string(id));
  return *it;
}

EnvRole EnvSuite::role(int id) const { return split_plan_.at(id); }

std::vector<const Environment*> EnvSuite::with_role(EnvRole role) const {
  std::vector<const Environment*> out;
  for (const auto& e : envs_) {
    if (split_plan_.at(e.id) == role) {
      out.push_back(&e);
    }
  }
  return out;
}

std::vector<Graph> EnvSuite::graphs_with_role(EnvRole role) const {
  std::vector<Graph> out;
  for (const auto* e : with_role(role)) {
    out.push_back(e->graph);
  }
  return out;
}

EnvSuite EnvSuite::with_split(std::map<int, EnvRole> split_plan) const {
  return EnvSuite(envs_, std::move(split_plan), feature_split_);
}

std::map<int, EnvRole> time_aware_split(const EnvSuite& suite) {
  require(suite.size() >= 3, "time-aware split needs at least 3 environments");
  std::vector<int> ids;
  for (const auto& e : suite.envs()) {
    ids.push_back(e.id);
  }
  std::sort(ids.begin(), ids.end());
  std::map<int, EnvRole> plan;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    plan[ids[i]] = i == 0 ? EnvRole::train : (i == 1 ? EnvRole::valid : EnvRole::test);
  }
  return plan;
}

void save_suite(const EnvSuite& suite, const std::filesystem::path& dir) {
  nlohmann::json manifest;
  manifest["envs"] = nlohmann::json::array();
  for (const auto& e : suite.envs()) {
    const std::string sub = "env_" + std::to_string(e.id);
    save_graph(e.graph, dir / sub);
    manifest["envs"].push_back(
        {{"id", e.id}, {"dir", sub}, {"role", to_string(suite.role(e.id))}});
  }
  if (suite.feature_split()) {
    manifest["feature_split"] = {{"invariant_dim", suite.feature_split()->invariant_dim},
                                 {"spurious_dim", suite.feature_split()->spurious_dim}};
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) {
    throw IoError("cannot write " + (dir / "manifest.json").string());
  }
  out << manifest.dump(2) << '\n';
}

EnvSuite load_suite(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw IoError("cannot open " + (dir / "manifest.json").string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw IoError((dir / "manifest.json").string() + ": " + ex.what());
  }
  std::vector<Environment> envs;
  std::map<int, EnvRole> plan;
  for (const auto& item : manifest.at("envs")) {
    const int id = item.at("id").get<int>();
    envs.push_back({id, load_graph(dir / item.at("dir").get<std::string>())});
    plan[id] = env_role_from_string(item.at("role").get<std::string>());
  }
  std::optional<FeatureSplit> split;
  if (manifest.contains("feature_split")) {
    split = FeatureSplit{manifest["feature_split"].at("invariant_dim").get<int>(),
                         manifest["feature_split"].at("spurious_dim").get<int>()};
  }
  return EnvSuite(std::move(envs), std::move(plan), split);
}

}  // namespace eerm
