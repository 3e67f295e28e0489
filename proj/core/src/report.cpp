#include "eerm/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "eerm/errors.hpp"
#include "eerm/graph_io.hpp"

namespace eerm {

namespace fs = std::filesystem;

void sort_records(std::vector<ResultRecord>& records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.method, a.seed, a.env_id, a.metric) <
           std::tie(b.method, b.seed, b.env_id, b.metric);
  });
}

void write_results_csv(std::ostream& out, std::span<const ResultRecord> records) {
  out << "method,seed,env_id,metric,value\n";
  for (const auto& r : records) {
    out << r.method << ',' << r.seed << ',' << r.env_id << ',' << r.metric << ','
        << format_real(r.value) << '\n';
  }
}

std::vector<SummaryCell> summarize(std::span<const ResultRecord> records) {
  std::map<std::tuple<std::string, int, std::string>, std::vector<double>> groups;
  for (const auto& r : records) {
    groups[{r.method, r.env_id, r.metric}].push_back(r.value);
  }
  std::vector<SummaryCell> cells;
  for (const auto& [key, values] : groups) {
    SummaryCell c;
    std::tie(c.method, c.env_id, c.metric) = key;
    c.n = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) {
      sum += v;
    }
    c.mean = sum / c.n;
    if (c.n > 1) {
      double ss = 0.0;
      for (double v : values) {
        ss += (v - c.mean) * (v - c.mean);
      }
      c.std = std::sqrt(ss / (c.n - 1));
    }
    cells.push_back(c);
  }
  return cells;
}

namespace {

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += ch;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2"};

}  // namespace

std::string bar_chart_svg(std::span<const SummaryCell> cells, const std::string& metric) {
  std::vector<const SummaryCell*> sel;
  std::set<int> envs;
  std::vector<std::string> methods;
  double top = 0.0;
  double bottom = 0.0;
  for (const auto& c : cells) {
    if (c.metric != metric) {
      continue;
    }
    sel.push_back(&c);
    envs.insert(c.env_id);
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) {
      methods.push_back(c.method);
    }
    top = std::max(top, c.mean + c.std);
    bottom = std::min(bottom, c.mean - c.std);
  }
  if (top - bottom <= 0.0) {
    top = bottom + 1.0;
  }
  const double width = 720, height = 360, left = 60, right = 20, upper = 40, lower = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - upper - lower;
  const double group_w = plot_w / std::max<std::size_t>(1, envs.size());
  const double bar_w = group_w * 0.8 / std::max<std::size_t>(1, methods.size());
  auto y_of = [&](double v) { return upper + plot_h * (top - v) / (top - bottom); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << escape_xml(metric) << " per test environment</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << y_of(bottom) << "\" x2=\"" << left << "\" y2=\""
      << y_of(top) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << y_of(0.0) << "\" x2=\"" << width - right
      << "\" y2=\"" << y_of(0.0) << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = bottom + (top - bottom) * tick / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y_of(v) + 4, 1)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(v, 2)
        << "</text>\n";
  }
  int gi = 0;
  for (int env : envs) {
    const double gx = left + group_w * gi + group_w * 0.1;
    svg << "<text x=\"" << fixed(left + group_w * (gi + 0.5), 1) << "\" y=\"" << height - lower + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << (env < 0 ? std::string("all") : "env " + std::to_string(env)) << "</text>\n";
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto it = std::find_if(sel.begin(), sel.end(), [&](const SummaryCell* c) {
        return c->env_id == env && c->method == methods[mi];
      });
      if (it == sel.end()) {
        continue;
      }
      const SummaryCell& c = **it;
      const double x = gx + bar_w * static_cast<double>(mi);
      const double y0 = y_of(std::max(0.0, c.mean));
      const double y1 = y_of(std::min(0.0, c.mean));
      svg << "<rect x=\"" << fixed(x, 2) << "\" y=\"" << fixed(y0, 2) << "\" width=\""
          << fixed(bar_w * 0.9, 2) << "\" height=\"" << fixed(y1 - y0, 2) << "\" fill=\""
          << kPalette[mi % std::size(kPalette)] << "\"/>\n";
      const double cx = x + bar_w * 0.45;
      svg << "<line x1=\"" << fixed(cx, 2) << "\" y1=\"" << fixed(y_of(c.mean - c.std), 2)
          << "\" x2=\"" << fixed(cx, 2) << "\" y2=\"" << fixed(y_of(c.mean + c.std), 2)
          << "\" stroke=\"black\"/>\n";
    }
    ++gi;
  }
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const double lx = width - right - 100;
    const double ly = upper + 16.0 * static_cast<double>(mi);
    svg << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[mi % std::size(kPalette)] << "\"/>\n"
        << "<text x=\"" << lx + 14 << "\" y=\"" << ly + 9
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(methods[mi])
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_outputs(std::span<const ResultRecord> records, const fs::path& out_dir,
                  const nlohmann::json& extra) {
  require(!records.empty(), "emit_outputs: no records");
  std::error_code ec;
  fs::create_directories(out_dir / "plots", ec);
  if (ec) {
    throw IoError("cannot create " + (out_dir / "plots").string() + ": " + ec.message());
  }
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) {
      throw IoError("cannot write " + p.string());
    }
    return out;
  };
  {
    auto out = open(out_dir / "results.csv");
    write_results_csv(out, records);
  }
  const auto cells = summarize(records);
  nlohmann::json summary = extra;
  summary["cells"] = nlohmann::json::array();
  std::set<std::string> metrics;
  for (const auto& c : cells) {
    summary["cells"].push_back({{"method", c.method},
                                {"env_id", c.env_id},
                                {"metric", c.metric},
                                {"mean", c.mean},
                                {"std", c.std},
                                {"n", c.n}});
    metrics.insert(c.metric);
  }
  {
    auto out = open(out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  for (const auto& m : metrics) {
    auto out = open(out_dir / "plots" / (m + ".svg"));
    out << bar_chart_svg(cells, m);
  }
}

}  // namespace eerm
