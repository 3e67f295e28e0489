#include <benchmark/benchmark.h>

#include <memory>

#include "eerm/editor.hpp"
#include "eerm/models.hpp"
#include "eerm/objective.hpp"
#include "eerm/synth.hpp"
#include "eerm/trainer.hpp"

using namespace eerm;

namespace {

Graph base_graph(int nodes) {
  BaseGraphRecipe r;
  r.nodes = nodes;
  return make_base_graph(r);
}

}  // namespace

static void BM_SampleEdits(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const EditorPolicy policy(0, n, 5);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_edits(policy, seed++));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SampleEdits)->Arg(200)->Arg(600)->Arg(1000);

static void BM_MaterializeView(benchmark::State& state) {
  const Graph g = base_graph(static_cast<int>(state.range(0)));
  const EditSample s = sample_edits(EditorPolicy(0, g.num_nodes(), 5), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(materialize_view(g, s));
  }
}
BENCHMARK(BM_MaterializeView)->Arg(600);

static void BM_NormalizeAdjacency(benchmark::State& state) {
  const Graph g = base_graph(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize_adjacency(g));
  }
}
BENCHMARK(BM_NormalizeAdjacency)->Arg(600)->Arg(2000);

static void BM_Spmm(benchmark::State& state) {
  const Graph g = base_graph(static_cast<int>(state.range(0)));
  const SparseMatrix a = normalize_adjacency(g);
  const Matrix x = Matrix::Random(g.num_nodes(), 32);
  for (auto _ : state) {
    Matrix y = a * x;
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Spmm)->Arg(600)->Arg(2000);

static void BM_GcnForwardBackward(benchmark::State& state) {
  const Graph g = base_graph(static_cast<int>(state.range(0)));
  const auto op = propagation(Backbone::gcn, g);
  ModelShape shape;
  shape.input_dim = g.feature_dim();
  shape.output_dim = g.num_classes();
  const ModelParams p = init_params(shape, 0);
  std::vector<int> rows(g.num_nodes());
  for (int i = 0; i < g.num_nodes(); ++i) {
    rows[i] = i;
  }
  for (auto _ : state) {
    Tape t;
    std::vector<Var> w;
    for (const auto& m : p.weights) {
      w.push_back(t.leaf(m));
    }
    const Var out = forward(p, w, op, t.constant(g.features()), {rows});
    const Var loss = env_risk(out, g, rows, LossKind::cross_entropy);
    t.backward(loss);
    benchmark::DoNotOptimize(w[0].grad().data());
  }
}
BENCHMARK(BM_GcnForwardBackward)->Arg(600)->Arg(2000);

static void BM_EermEpoch(benchmark::State& state) {
  const Graph g = base_graph(600);
  TrainConfig c;
  c.epochs = 1;
  c.K = 3;
  c.s = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_eerm(c, std::span<const Graph>(&g, 1), {}));
  }
}
BENCHMARK(BM_EermEpoch)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
