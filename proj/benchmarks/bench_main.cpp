#include "parak/dynamics.hpp"
#include "parak/io.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace parak;

MarkedGroup torus_z2() {
  FamilyTag t;
  t.family = Family::Torus;
  t.wPairs.push_back({Scalar(GQ(1, 0)), Scalar(GQ(0, 0))});
  t.wPairs.push_back({Scalar(GQ(0, 1)), Scalar(GQ(0, 0))});
  return construct_family(t);
}

void BM_EnumerateBall(benchmark::State& state) {
  MarkedGroup G = torus_z2();
  for (auto _ : state) {
    WordBall b = enumerate_ball(G, int(state.range(0)));
    benchmark::DoNotOptimize(b.elements.size());
  }
}
BENCHMARK(BM_EnumerateBall)->Arg(4)->Arg(8);

void BM_Recognize(benchmark::State& state) {
  MarkedGroup G = torus_z2();
  for (auto _ : state) {
    RecognitionReport r = recognize(G);
    benchmark::DoNotOptimize(r.tag.family);
  }
}
BENCHMARK(BM_Recognize);

void BM_SvdLimit(benchmark::State& state) {
  MarkedGroup G = torus_z2();
  std::vector<PseudoProjMap> seq;
  PseudoProjMap g = G.gens[0];
  for (int i = 0; i < 24; i++) {
    seq.push_back(g);
    g = g * g;
  }
  for (auto _ : state) {
    LambdaPair p = svd_limit(seq);
    benchmark::DoNotOptimize(p.P.kernelDim);
  }
}
BENCHMARK(BM_SvdLimit);

void BM_ZRank(benchmark::State& state) {
  std::vector<Scalar> vals = {Scalar(1.0), Scalar(std::sqrt(2.0)),
                              Scalar(cplx(0, 1)), Scalar(cplx(0, std::sqrt(2.0)))};
  AdditiveSubgroup W = AdditiveSubgroup::of(vals);
  for (auto _ : state) {
    RankResult r = z_rank(W);
    benchmark::DoNotOptimize(r.rank);
  }
}
BENCHMARK(BM_ZRank);

void BM_SampleLimitLines(benchmark::State& state) {
  MarkedGroup G = torus_z2();
  for (auto _ : state) {
    auto clusters = sample_limit_lines(G, int(state.range(0)));
    benchmark::DoNotOptimize(clusters.size());
  }
}
BENCHMARK(BM_SampleLimitLines)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
