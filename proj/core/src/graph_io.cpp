#include "eerm/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "eerm/errors.hpp"

namespace eerm {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool skippable(std::string_view line) { return line.empty() || line.front() == '#'; }

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    parts.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return parts;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
      ++i;
    }
    if (i > start) {
      parts.push_back(line.substr(start, i - start));
    }
  }
  return parts;
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) {
    throw IoError("cannot open " + p.string());
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) {
    throw IoError("cannot write " + p.string());
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_column(std::istream& in, const std::string& source, Parse parse) {
  std::vector<T> values;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (skippable(line)) {
      continue;
    }
    T v{};
    if (!parse(line, v)) {
      throw ParseError(source, line_no, "cannot parse '" + std::string(line) + "'");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    return std::to_string(v);
  }
  return std::string(buf, ptr);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) {
        out << ',';
      }
      out << format_real(m(r, c));
    }
    out << '\n';
  }
}

std::vector<Edge> parse_edge_list(std::istream& in, int num_nodes, LoadReport& report,
                                  const std::string& source) {
  std::set<std::pair<int, int>> seen_directed;
  std::set<Edge> seen;
  std::vector<Edge> edges;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (skippable(line)) {
      continue;
    }
    const auto tokens = split_ws(line);
    int u = 0;
    int w = 0;
    if (tokens.size() != 2 || !parse_number(tokens[0], u) || !parse_number(tokens[1], w)) {
      throw ParseError(source, line_no, "expected 'u w', got '" + std::string(line) + "'");
    }
    if (u < 0 || w < 0 || u >= num_nodes || w >= num_nodes) {
      throw ParseError(source, line_no,
                       "endpoint out of range [0, " + std::to_string(num_nodes) + ")");
    }
    if (u == w) {
      ++report.self_loops_dropped;
      continue;
    }
    if (!seen_directed.insert({u, w}).second) {
      ++report.duplicates_dropped;
      continue;
    }
    // The reverse direction of an existing edge is the symmetric closure, not a duplicate.
    const Edge e = Edge::make(u, w);
    if (seen.insert(e).second) {
      edges.push_back(e);
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

Matrix parse_feature_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (skippable(line)) {
      continue;
    }
    std::vector<double> row;
    for (auto cell : split(line, ',')) {
      double v = 0.0;
      if (!parse_number(cell, v)) {
        throw ParseError(source, line_no, "bad number '" + std::string(cell) + "'");
      }
      row.push_back(v);
    }
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(width) + " columns, got " +
                           std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return x;
}

std::vector<int> parse_labels(std::istream& in, const std::string& source) {
  return parse_column<int>(in, source, [](std::string_view s, int& v) {
    return parse_number(s, v) && v >= 0;
  });
}

Vector parse_targets(std::istream& in, const std::string& source) {
  const auto values = parse_column<double>(
      in, source, [](std::string_view s, double& v) { return parse_number(s, v); });
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

NodeMask parse_mask(std::istream& in, const std::string& source) {
  const auto values = parse_column<int>(in, source, [](std::string_view s, int& v) {
    return parse_number(s, v) && (v == 0 || v == 1);
  });
  NodeMask mask(values.size());
  std::transform(values.begin(), values.end(), mask.begin(), [](int v) { return v == 1; });
  return mask;
}

Graph load_graph(const std::filesystem::path& dir, LoadReport* report) {
  namespace fs = std::filesystem;
  LoadReport local;
  LoadReport& rep = report ? *report : local;

  auto feature_stream = open_input(dir / "features.csv");
  Matrix features = parse_feature_csv(feature_stream, (dir / "features.csv").string());
  const int n = static_cast<int>(features.rows());

  std::vector<int> labels;
  Vector targets;
  if (fs::exists(dir / "labels.txt")) {
    auto in = open_input(dir / "labels.txt");
    labels = parse_labels(in, (dir / "labels.txt").string());
    if (static_cast<int>(labels.size()) != n) {
      throw StructureError(dir.string() + ": " + std::to_string(labels.size()) +
                           " labels for " + std::to_string(n) + " feature rows");
    }
  } else if (fs::exists(dir / "targets.txt")) {
    auto in = open_input(dir / "targets.txt");
    targets = parse_targets(in, (dir / "targets.txt").string());
    if (targets.size() != n) {
      throw StructureError(dir.string() + ": " + std::to_string(targets.size()) +
                           " targets for " + std::to_string(n) + " feature rows");
    }
  } else {
    throw IoError(dir.string() + ": neither labels.txt nor targets.txt present");
  }

  auto edge_stream = open_input(dir / "edges.txt");
  auto edges = parse_edge_list(edge_stream, n, rep, (dir / "edges.txt").string());

  std::map<std::string, NodeMask> masks;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    constexpr std::string_view suffix = "_mask.txt";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      auto in = open_input(entry.path());
      auto m = parse_mask(in, entry.path().string());
      if (static_cast<int>(m.size()) != n) {
        throw StructureError(entry.path().string() + ": mask length " +
                             std::to_string(m.size()) + " != " + std::to_string(n));
      }
      masks.emplace(name.substr(0, name.size() - suffix.size()), std::move(m));
    }
  }
  return Graph(n, std::move(edges), std::move(features), std::move(labels), std::move(masks),
               std::move(targets));
}

void save_graph(const Graph& g, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  {
    auto out = open_output(dir / "edges.txt");
    for (const auto& e : g.edges()) {
      out << e.u << ' ' << e.w << '\n';
    }
  }
  {
    auto out = open_output(dir / "features.csv");
    write_matrix_csv(out, g.features());
  }
  if (g.is_regression()) {
    auto out = open_output(dir / "targets.txt");
    for (Eigen::Index i = 0; i < g.targets().size(); ++i) {
      out << format_real(g.targets()(i)) << '\n';
    }
  } else {
    auto out = open_output(dir / "labels.txt");
    for (int y : g.labels()) {
      out << y << '\n';
    }
  }
  for (const auto& [name, mask] : g.masks()) {
    auto out = open_output(dir / (name + "_mask.txt"));
    for (bool b : mask) {
      out << (b ? 1 : 0) << '\n';
    }
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.ends_with("_mask.txt") && !g.has_mask(name.substr(0, name.size() - 9))) {
      std::filesystem::remove(entry.path());
    }
  }
}

}  // namespace eerm
