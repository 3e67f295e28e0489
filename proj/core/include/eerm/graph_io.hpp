#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "eerm/graph.hpp"

namespace eerm {

/// On-disk layout of one graph directory:
///
///   edges.txt        "u w" per line, 0-based; blank lines and '#' comments skipped
///   features.csv     N rows x d0 comma-separated reals
///   labels.txt       one class index per line        (classification graphs)
///   targets.txt      one real per line                (regression graphs)
///   <name>_mask.txt  one 0/1 per line, e.g. train_mask.txt
struct LoadReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;

  std::size_t warnings() const { return self_loops_dropped + duplicates_dropped; }
};

std::vector<Edge> parse_edge_list(std::istream& in, int num_nodes, LoadReport& report,
                                  const std::string& source = "edges.txt");
Matrix parse_feature_csv(std::istream& in, const std::string& source = "features.csv");
std::vector<int> parse_labels(std::istream& in, const std::string& source = "labels.txt");
Vector parse_targets(std::istream& in, const std::string& source = "targets.txt");
NodeMask parse_mask(std::istream& in, const std::string& source);

Graph load_graph(const std::filesystem::path& dir, LoadReport* report = nullptr);
void save_graph(const Graph& g, const std::filesystem::path& dir);

/// Comma-separated rows in the features.csv format.
void write_matrix_csv(std::ostream& out, const Matrix& m);

/// Writes `v` with enough digits to round-trip a double exactly.
std::string format_real(double v);

}  // namespace eerm
