#include "dspp/gru.hpp"
#include "dspp/ops.hpp"
#include "dspp/synth.hpp"
#include "dspp/tfe.hpp"
#include "dspp/train.hpp"

#include <benchmark/benchmark.h>

using namespace dspp;

namespace {

void BM_GruCell(benchmark::State& state) {
  const Index rows = state.range(0), dim = 64;
  Rng rng(1);
  ParameterStore store;
  GruParams p = make_gru(store, "gru", dim, dim, rng);
  const Matrix x = normal_matrix(rows, dim, 1.0, rng), h = normal_matrix(rows, dim, 1.0, rng);
  for (auto _ : state) {
    Graph g;
    Var out = gru_cell(g, p, g.constant(x), g.constant(h));
    g.backward(ops::sum(out));
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_GruCell)->Arg(1)->Arg(128);

void BM_TalLayer(benchmark::State& state) {
  const Index nodes = state.range(0), dim = 32;
  Rng rng(2);
  HawkesSpec spec = default_hawkes_spec();
  spec.users = nodes;
  spec.items = nodes;
  spec.horizon = 50.0;
  spec.base = Matrix::Constant(nodes, nodes, 0.02);
  spec.excitation = Matrix::Zero(nodes, nodes);
  const TemporalNetwork net = simulate(spec, 3);
  const Snapshot full = build_snapshots(net, 2)[1];
  ParameterStore store;
  NodeTables tables = make_node_tables(store, nodes, nodes, dim, rng);
  TfeParams tfe = make_tfe(store, dim, 1, rng);
  for (auto _ : state) {
    Graph g = Graph::inference();
    TalOutput out = tal_layer(g, full, tfe.layers[0], g.parameter(*tables.users), g.parameter(*tables.items));
    benchmark::DoNotOptimize(out.users.value().data());
  }
  state.counters["edges"] = static_cast<double>(full.edge_count());
}
BENCHMARK(BM_TalLayer)->Arg(32)->Arg(256);

void BM_TBatch(benchmark::State& state) {
  HawkesSpec spec = default_hawkes_spec();
  spec.horizon = static_cast<double>(state.range(0));
  const TemporalNetwork net = simulate(spec, 4);
  for (auto _ : state) benchmark::DoNotOptimize(t_batch(net.interactions()).batches.size());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * net.size()));
}
BENCHMARK(BM_TBatch)->Arg(1600)->Arg(16000);

void BM_Simulate(benchmark::State& state) {
  HawkesSpec spec = default_hawkes_spec();
  spec.horizon = static_cast<double>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(spec, ++seed).size());
}
BENCHMARK(BM_Simulate)->Arg(1600);

void BM_TrainingBlock(benchmark::State& state) {
  const TemporalNetwork net = simulate(default_hawkes_spec(), 5);
  TrainConfig c;
  c.dim = 16;
  c.heads = 4;
  c.snapshots = 16;
  c.batch_size = state.range(0);
  c.seed = 6;
  const Dataset d = prepare_dataset(net, c);
  DsppModel model(c.model(net.users(), net.items()), c.seed);
  const TrainData data = make_train_data(d);
  const SteadyState cache = steady_embeddings(d.train_snapshots, model.tables, model.tfe);
  const DynamicState dyn = initial_dynamic_state(model.tables, model.ase);
  const std::size_t end = std::min<std::size_t>(d.train.size(), static_cast<std::size_t>(c.batch_size));
  for (auto _ : state) {
    BlockResult r = run_block(model, data, dyn, cache, 0, end, c, 0);
    benchmark::DoNotOptimize(r.loss);
    model.params().zero_grad();
  }
}
BENCHMARK(BM_TrainingBlock)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
