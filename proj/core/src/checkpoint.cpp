#include "eerm/checkpoint.hpp"

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "eerm/errors.hpp"
#include "eerm/graph_io.hpp"

namespace eerm {

namespace fs = std::filesystem;

namespace {

void write_csv(const Matrix& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  write_matrix_csv(out, m);
}

Matrix read_csv(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  Matrix m = parse_feature_csv(in, path.string());
  if (m.rows() != rows || m.cols() != cols) {
    throw StructureError(path.string() + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", found " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  return m;
}

}  // namespace

void save_checkpoint(const ModelParams& p, const fs::path& dir) {
  p.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  nlohmann::json manifest = {{"backbone", to_string(p.backbone)},
                             {"hidden_dim", p.hidden_dim},
                             {"layers", p.layers},
                             {"standardize", p.standardize},
                             {"weights", nlohmann::json::array()}};
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    const std::string file = "w" + std::to_string(i) + ".csv";
    write_csv(p.weights[i], dir / file);
    manifest["weights"].push_back(
        {{"file", file}, {"rows", p.weights[i].rows()}, {"cols", p.weights[i].cols()}});
  }
  if (p.eval_stats) {
    Matrix stats(2, p.eval_stats->mean.size());
    stats.row(0) = p.eval_stats->mean;
    stats.row(1) = p.eval_stats->inv_std;
    write_csv(stats, dir / "eval_stats.csv");
    manifest["eval_stats"] = {{"file", "eval_stats.csv"}, {"cols", stats.cols()}};
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) {
    throw IoError("cannot write " + (dir / "manifest.json").string());
  }
  out << manifest.dump(2) << '\n';
}

ModelParams load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw IoError("cannot open " + (dir / "manifest.json").string());
  }
  ModelParams p;
  try {
    const auto manifest = nlohmann::json::parse(in);
    p.backbone = backbone_from_string(manifest.at("backbone").get<std::string>());
    p.hidden_dim = manifest.at("hidden_dim").get<int>();
    p.layers = manifest.at("layers").get<int>();
    p.standardize = manifest.at("standardize").get<bool>();
    for (const auto& w : manifest.at("weights")) {
      p.weights.push_back(read_csv(dir / w.at("file").get<std::string>(),
                                   w.at("rows").get<Eigen::Index>(),
                                   w.at("cols").get<Eigen::Index>()));
    }
    if (manifest.contains("eval_stats")) {
      const auto& s = manifest["eval_stats"];
      const Matrix stats = read_csv(dir / s.at("file").get<std::string>(), 2,
                                    s.at("cols").get<Eigen::Index>());
      p.eval_stats = ad::ColumnStats{stats.row(0), stats.row(1)};
    }
  } catch (const nlohmann::json::exception& ex) {
    throw IoError((dir / "manifest.json").string() + ": " + ex.what());
  }
  p.validate();
  return p;
}

}  // namespace eerm
