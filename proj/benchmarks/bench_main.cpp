#include <benchmark/benchmark.h>

#include "reckit/batch.hpp"
#include "reckit/knn.hpp"
#include "reckit/mf.hpp"
#include "reckit/registry.hpp"
#include "reckit/synthetic.hpp"
#include "reckit/topn.hpp"

namespace {

using namespace reckit;

const RatingTable& ratings() {
  static const RatingTable t = synthetic_ratings(SyntheticOptions{.users = 943, .items = 1682, .seed = 1});
  return t;
}

void BM_ItemSimilarities(benchmark::State& state) {
  const auto ds = build_dataset(ratings());
  ItemItem ii;
  for (auto _ : state) {
    ii.fit(ratings());
    benchmark::DoNotOptimize(ii.similarities().size());
  }
  state.counters["pairs"] = static_cast<double>(ii.similarities().size());
  state.counters["items"] = static_cast<double>(ds.n_items());
}
BENCHMARK(BM_ItemSimilarities)->Unit(benchmark::kMillisecond);

void BM_BatchRecommend(benchmark::State& state) {
  auto rec = adapt_to_recommender(make_algorithm("item-item", {{"feedback", "implicit"}}));
  rec->fit(ratings());
  const auto users = ratings().distinct_users();
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(batch_recommend(*rec, users, 20, nullptr, workers));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * users.size()));
}
BENCHMARK(BM_BatchRecommend)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_BatchPredict(benchmark::State& state) {
  auto algo = make_algorithm("biased-mf", {{"features", 20}, {"iterations", 5}});
  algo->fit(ratings());
  const auto& pred = dynamic_cast<const Predictor&>(*algo);
  for (auto _ : state) benchmark::DoNotOptimize(batch_predict(pred, ratings(), 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * ratings().size()));
}
BENCHMARK(BM_BatchPredict)->Unit(benchmark::kMillisecond);

void BM_BiasedMFFit(benchmark::State& state) {
  const auto features = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    BiasedMF mf(BiasedMFOptions{.features = features, .iterations = 5});
    mf.fit(ratings());
    benchmark::DoNotOptimize(mf.loss_history().back());
  }
}
BENCHMARK(BM_BiasedMFFit)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ImplicitMFFit(benchmark::State& state) {
  for (auto _ : state) {
    ImplicitMF mf(ImplicitMFOptions{.features = 20, .iterations = 5});
    mf.fit(ratings());
    benchmark::DoNotOptimize(mf.loss_history().back());
  }
}
BENCHMARK(BM_ImplicitMFFit)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
