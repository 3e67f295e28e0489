#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eerm/graph.hpp"

namespace eerm {

enum class EnvRole { train, valid, test };

std::string to_string(EnvRole role);
EnvRole env_role_from_string(const std::string& s);

struct Environment {
  int id = 0;
  Graph graph;
};

/// Column layout of suites built from invariant + spurious feature blocks.
struct FeatureSplit {
  int invariant_dim = 0;
  int spurious_dim = 0;
};

/// Ordered collection of graphs, one per environment, sharing feature dimension
/// and class count.
class EnvSuite {
 public:
  EnvSuite() = default;
  EnvSuite(std::vector<Environment> envs, std::map<int, EnvRole> split_plan,
           std::optional<FeatureSplit> feature_split = std::nullopt);

  const std::vector<Environment>& envs() const { return envs_; }
  const std::map<int, EnvRole>& split_plan() const { return split_plan_; }
  const std::optional<FeatureSplit>& feature_split() const { return feature_split_; }
  std::size_t size() const { return envs_.size(); }

  const Environment& env(int id) const;
  EnvRole role(int id) const;
  std::vector<const Environment*> with_role(EnvRole role) const;
  std::vector<Graph> graphs_with_role(EnvRole role) const;

  /// Same environments, roles reassigned.
  EnvSuite with_split(std::map<int, EnvRole> split_plan) const;

 private:
  std::vector<Environment> envs_;
  std::map<int, EnvRole> split_plan_;
  std::optional<FeatureSplit> feature_split_;
};

/// Ascending-id order: earliest environment trains, the next validates, the rest test.
std::map<int, EnvRole> time_aware_split(const EnvSuite& suite);

/// Writes env_<id>/ graph directories plus manifest.json (ids, roles, feature split).
void save_suite(const EnvSuite& suite, const std::filesystem::path& dir);
EnvSuite load_suite(const std::filesystem::path& dir);

}  // namespace eerm
