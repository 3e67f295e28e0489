#include "eerm/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "eerm/checkpoint.hpp"
#include "eerm/errors.hpp"
#include "eerm/graph_io.hpp"
#include "eerm/random.hpp"
#include "eerm/toy_oracle.hpp"

namespace eerm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(SuiteKind k) {
  switch (k) {
    case SuiteKind::toy:
      return "toy";
    case SuiteKind::synth_shift:
      return "synth-shift";
    case SuiteKind::multi_graph_files:
      return "multi-graph-files";
  }
  return "toy";
}

std::string to_string(SplitKind k) {
  return k == SplitKind::domain_level ? "domain-level" : "time-aware";
}

namespace {

SuiteKind suite_from_string(const std::string& s) {
  if (s == "toy") {
    return SuiteKind::toy;
  }
  if (s == "synth-shift") {
    return SuiteKind::synth_shift;
  }
  if (s == "multi-graph-files") {
    return SuiteKind::multi_graph_files;
  }
  throw ContractError("unknown suite '" + s + "'");
}

SplitKind split_from_string(const std::string& s) {
  if (s == "domain-level") {
    return SplitKind::domain_level;
  }
  if (s == "time-aware") {
    return SplitKind::time_aware;
  }
  throw ContractError("unknown split '" + s + "'");
}

/// Reads keys of one JSON object, rejecting any key nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j.is_object(), where_ + ": expected a JSON object");
  }
  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (j_.contains(key)) {
      try {
        out = j_.at(key).get<T>();
      } catch (const json::exception& ex) {
        throw ContractError(where_ + "." + key + ": " + ex.what());
      }
    }
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      require(seen_.contains(k), where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_train(const json& j, TrainConfig& t) {
  Reader r(j, "train");
  r.get("K", t.K);
  r.get("beta", t.beta);
  r.get("s", t.s);
  r.get("T", t.T);
  r.get("alpha_f", t.alpha_f);
  r.get("alpha_g", t.alpha_g);
  r.get("epochs", t.epochs);
  r.get("weight_decay", t.weight_decay);
  r.get("hidden_dim", t.hidden_dim);
  r.get("layers", t.layers);
  r.get("standardize", t.standardize);
  r.get("train_editors", t.train_editors);
  r.get("reward_baseline", t.reward_baseline);
  r.get("descent_probes", t.descent_probes);
  r.get("dense_cap", t.dense_cap);
  std::string s;
  if (r.has("backbone")) {
    r.get("backbone", s);
    t.backbone = backbone_from_string(s);
  }
  if (r.has("loss")) {
    r.get("loss", s);
    t.loss = loss_from_string(s);
  }
  if (r.has("selection")) {
    r.get("selection", s);
    t.selection = selection_from_string(s);
  }
  if (r.has("valid_metric")) {
    r.get("valid_metric", s);
    t.valid_metric = metric_from_string(s);
  }
  r.finish();
}

json train_to_json(const TrainConfig& t) {
  return {{"K", t.K},
          {"beta", t.beta},
          {"s", t.s},
          {"T", t.T},
          {"alpha_f", t.alpha_f},
          {"alpha_g", t.alpha_g},
          {"epochs", t.epochs},
          {"weight_decay", t.weight_decay},
          {"hidden_dim", t.hidden_dim},
          {"layers", t.layers},
          {"standardize", t.standardize},
          {"train_editors", t.train_editors},
          {"reward_baseline", t.reward_baseline},
          {"descent_probes", t.descent_probes},
          {"dense_cap", t.dense_cap},
          {"backbone", to_string(t.backbone)},
          {"loss", to_string(t.loss)},
          {"selection", to_string(t.selection)},
          {"valid_metric", to_string(t.valid_metric)}};
}

}  // namespace

void ExperimentConfig::validate() const {
  require(n_seeds >= 1, "experiment: n_seeds must be >= 1");
  require(!methods.empty(), "experiment: no methods");
  for (const auto& m : methods) {
    require(m == "erm" || m == "eerm", "experiment: unknown method '" + m + "'");
  }
  require(!metrics.empty(), "experiment: no metrics");
  if (suite == SuiteKind::toy) {
    require(train.backbone == Backbone::linear_gcn && train.loss == LossKind::squared,
            "experiment: the toy suite needs backbone linear-gcn and squared loss");
    require(toy.nodes >= 2 && toy.nodes % 2 == 0 && toy.sigma2 > 0.0 && toy.n_envs >= 1,
            "experiment: bad toy settings");
  } else {
    require(train.loss == LossKind::cross_entropy,
            "experiment: classification suites need cross-entropy loss");
    require(train.backbone != Backbone::linear_gcn,
            "experiment: linear-gcn is only defined for the toy suite");
  }
  if (suite == SuiteKind::multi_graph_files) {
    require(!data_dir.empty(), "experiment: multi-graph-files needs data_dir");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  Reader r(j, "config");
  std::string s;
  if (r.has("suite")) {
    r.get("suite", s);
    cfg.suite = suite_from_string(s);
  }
  if (cfg.suite == SuiteKind::toy) {
    cfg.train.backbone = Backbone::linear_gcn;
    cfg.train.loss = LossKind::squared;
    cfg.train.selection = ModelSelection::last;
    cfg.train.weight_decay = 0.0;
  }
  if (r.has("method")) {
    r.get("method", s);
    cfg.methods = {s};
  }
  r.get("methods", cfg.methods);
  if (r.has("train")) {
    read_train(r.at("train"), cfg.train);
  }
  if (r.has("split")) {
    r.get("split", s);
    cfg.split = split_from_string(s);
  }
  if (r.has("metrics")) {
    std::vector<std::string> names;
    r.get("metrics", names);
    cfg.metrics.clear();
    for (const auto& n : names) {
      cfg.metrics.push_back(metric_from_string(n));
    }
  }
  if (r.has("out_dir")) {
    r.get("out_dir", s);
    cfg.out_dir = s;
  }
  r.get("n_seeds", cfg.n_seeds);
  r.get("first_seed", cfg.first_seed);
  r.get("threads", cfg.threads);
  r.get("write_checkpoints", cfg.write_checkpoints);
  if (r.has("data_dir")) {
    r.get("data_dir", s);
    cfg.data_dir = s;
  }
  if (r.has("toy")) {
    Reader t(r.at("toy"), "toy");
    t.get("nodes", cfg.toy.nodes);
    t.get("sigma2", cfg.toy.sigma2);
    t.get("n_envs", cfg.toy.n_envs);
    t.finish();
  }
  if (r.has("synth")) {
    Reader t(r.at("synth"), "synth");
    if (t.has("base_dir")) {
      t.get("base_dir", s);
      cfg.synth.base_dir = s;
    }
    if (t.has("base")) {
      Reader b(t.at("base"), "synth.base");
      b.get("nodes", cfg.synth.base.nodes);
      b.get("feature_dim", cfg.synth.base.feature_dim);
      b.get("communities", cfg.synth.base.communities);
      b.get("avg_degree", cfg.synth.base.avg_degree);
      b.get("homophily", cfg.synth.base.homophily);
      b.get("feature_noise", cfg.synth.base.feature_noise);
      b.finish();
    }
    t.get("n_envs", cfg.synth.n_envs);
    t.get("spurious_dim", cfg.synth.spurious_dim);
    t.get("num_classes", cfg.synth.num_classes);
    t.get("generator_depth", cfg.synth.generator_depth);
    t.get("seed", cfg.synth.seed);
    t.get("per_seed_data", cfg.synth.per_seed_data);
    t.finish();
  }
  r.finish();
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  std::vector<std::string> metrics;
  for (auto m : cfg.metrics) {
    metrics.push_back(to_string(m));
  }
  json j = {{"suite", to_string(cfg.suite)},
            {"methods", cfg.methods},
            {"train", train_to_json(cfg.train)},
            {"split", to_string(cfg.split)},
            {"metrics", metrics},
            {"out_dir", cfg.out_dir.string()},
            {"n_seeds", cfg.n_seeds},
            {"first_seed", cfg.first_seed},
            {"threads", cfg.threads},
            {"write_checkpoints", cfg.write_checkpoints},
            {"toy", {{"nodes", cfg.toy.nodes}, {"sigma2", cfg.toy.sigma2}, {"n_envs", cfg.toy.n_envs}}},
            {"synth",
             {{"base",
               {{"nodes", cfg.synth.base.nodes},
                {"feature_dim", cfg.synth.base.feature_dim},
                {"communities", cfg.synth.base.communities},
                {"avg_degree", cfg.synth.base.avg_degree},
                {"homophily", cfg.synth.base.homophily},
                {"feature_noise", cfg.synth.base.feature_noise}}},
              {"n_envs", cfg.synth.n_envs},
              {"spurious_dim", cfg.synth.spurious_dim},
              {"num_classes", cfg.synth.num_classes},
              {"generator_depth", cfg.synth.generator_depth},
              {"seed", cfg.synth.seed},
              {"per_seed_data", cfg.synth.per_seed_data}}}};
  if (cfg.synth.base_dir) {
    j["synth"]["base_dir"] = cfg.synth.base_dir->string();
  }
  if (!cfg.data_dir.empty()) {
    j["data_dir"] = cfg.data_dir.string();
  }
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw IoError(path.string() + ": " + ex.what());
  }
  return config_from_json(j);
}

EnvSuite build_suite(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  switch (cfg.suite) {
    case SuiteKind::toy: {
      ToyRecipe recipe;
      recipe.sigma_e = std::sqrt(cfg.toy.sigma2);
      recipe.n_envs = cfg.toy.n_envs;
      recipe.seed = run_seed;
      return gen_toy(perfect_matching_graph(cfg.toy.nodes), recipe).suite;
    }
    case SuiteKind::synth_shift: {
      const std::uint64_t data_seed =
          cfg.synth.per_seed_data ? derive_seed(cfg.synth.seed, run_seed) : cfg.synth.seed;
      Graph base;
      if (cfg.synth.base_dir) {
        base = load_graph(*cfg.synth.base_dir);
      } else {
        BaseGraphRecipe b = cfg.synth.base;
        b.seed = derive_seed(data_seed, 1);
        base = make_base_graph(b);
      }
      ShiftRecipe recipe;
      recipe.n_envs = cfg.synth.n_envs;
      recipe.seed = derive_seed(data_seed, 2);
      recipe.spurious_dim = cfg.synth.spurious_dim;
      recipe.num_classes = cfg.synth.num_classes;
      recipe.generator_depth = cfg.synth.generator_depth;
      EnvSuite suite = make_env_suite(base, recipe);
      return cfg.split == SplitKind::time_aware ? suite.with_split(time_aware_split(suite)) : suite;
    }
    case SuiteKind::multi_graph_files: {
      EnvSuite suite = load_suite(cfg.data_dir);
      return cfg.split == SplitKind::time_aware ? suite.with_split(time_aware_split(suite)) : suite;
    }
  }
  throw ContractError("build_suite: unknown suite kind");
}

AblationResult spurious_ablation(const ModelParams& p, const EnvSuite& suite, bool zero_invariant) {
  require(suite.feature_split().has_value(),
          "spurious_ablation: suite carries no invariant/spurious feature split");
  const auto split = *suite.feature_split();
  const auto train = suite.with_role(EnvRole::train);
  require(!train.empty(), "spurious_ablation: suite has no training environment");
  AblationResult out;
  for (const auto* env : train) {
    const Graph& g = env->graph;
    out.acc_full += evaluate(p, g, Metric::accuracy, "train");
    Matrix x = g.features();
    if (zero_invariant) {
      x.leftCols(split.invariant_dim).setZero();
    } else {
      x.rightCols(split.spurious_dim).setZero();
    }
    out.acc_zeroed += evaluate(p, g.with_features(std::move(x)), Metric::accuracy, "train");
  }
  out.acc_full /= static_cast<double>(train.size());
  out.acc_zeroed /= static_cast<double>(train.size());
  return out;
}

int worker_slots(int requested) {
  int slots = requested > 0 ? requested
                            : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("EERM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) {
      slots = std::min(slots, static_cast<int>(cap));
    }
  }
  return std::max(1, slots);
}

namespace {

struct RunOutput {
  std::vector<ResultRecord> records;
  json details;
  std::optional<RunFailure> failure;
};

RunOutput run_one(const ExperimentConfig& cfg, const std::string& method, int seed) {
  RunOutput out;
  const auto start = std::chrono::steady_clock::now();
  try {
    const EnvSuite suite = build_suite(cfg, static_cast<std::uint64_t>(seed));
    const auto train = suite.graphs_with_role(EnvRole::train);
    const auto valid = suite.graphs_with_role(EnvRole::valid);
    TrainConfig tc = cfg.train;
    tc.seed = static_cast<std::uint64_t>(seed);
    const TrainResult result =
        method == "eerm" ? train_eerm(tc, train, valid) : train_erm(tc, train, valid);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    out.details = {{"method", method},
                   {"seed", seed},
                   {"best_epoch", result.history.best_epoch},
                   {"mean_j1", result.history.mean_j1()},
                   {"wall_time", secs}};
    auto add = [&](int env_id, const std::string& metric, double value) {
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite " + metric + " on env " + std::to_string(env_id));
      }
      out.records.push_back({seed, env_id, metric, value, method, secs});
    };
    if (cfg.suite == SuiteKind::toy) {
      const Matrix& theta = result.params.weights[0];
      add(-1, "theta1", theta(0, 0));
      add(-1, "theta2", theta(1, 0));
      out.details["theta"] = {theta(0, 0), theta(1, 0)};
    } else {
      for (const auto* env : suite.with_role(EnvRole::test)) {
        for (auto m : cfg.metrics) {
          add(env->id, to_string(m), evaluate(result.params, env->graph, m, "test"));
        }
      }
      if (suite.feature_split()) {
        const auto ab = spurious_ablation(result.params, suite);
        const int train_env = suite.with_role(EnvRole::train).front()->id;
        add(train_env, "train-accuracy", ab.acc_full);
        add(train_env, "train-accuracy-x2-zeroed", ab.acc_zeroed);
        out.details["ablation_drop"] = ab.drop();
      }
    }
    if (cfg.write_checkpoints) {
      const fs::path dir = cfg.out_dir / "checkpoints" / (method + "-seed" + std::to_string(seed));
      save_checkpoint(result.params, dir);
      std::ofstream hist(dir / "history.jsonl");
      if (!hist) {
        throw IoError("cannot write " + (dir / "history.jsonl").string());
      }
      write_history_jsonl(hist, result.history);
    }
  } catch (const NumericalError& ex) {
    out.records.clear();
    out.failure = RunFailure{method, seed, ex.what()};
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    std::string method;
    int seed;
  };
  std::vector<Task> tasks;
  for (const auto& m : cfg.methods) {
    for (int i = 0; i < cfg.n_seeds; ++i) {
      tasks.push_back({m, static_cast<int>(cfg.first_seed) + i});
    }
  }
  std::vector<RunOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        outputs[i] = run_one(cfg, tasks[i].method, tasks[i].seed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    }
  };
  const int slots = std::min<int>(worker_slots(cfg.threads), static_cast<int>(tasks.size()));
  if (slots <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < slots; ++i) {
      pool.emplace_back(worker);
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }

  ExperimentResult result;
  result.details = json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& o = outputs[i];
    if (o.failure) {
      result.failures.push_back(*o.failure);
      continue;
    }
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
    result.details.push_back(o.details);
  }
  sort_records(result.records);
  return result;
}

ExperimentResult run_and_emit(const ExperimentConfig& cfg) {
  ExperimentResult result = run_experiment(cfg);
  json extra = {{"config", config_to_json(cfg)}, {"runs", result.details}};
  extra["failed"] = json::array();
  for (const auto& f : result.failures) {
    extra["failed"].push_back({{"method", f.method}, {"seed", f.seed}, {"error", f.error}});
  }
  if (cfg.suite == SuiteKind::toy) {
    const auto opt = erm_optimum(std::sqrt(cfg.toy.sigma2));
    extra["oracle"] = {{"erm", {opt.theta[0], opt.theta[1]}}, {"variance", {1.0, 0.0}}};
  }
  if (!result.records.empty()) {
    emit_outputs(result.records, cfg.out_dir, extra);
  }
  return result;
}

}  // namespace eerm
