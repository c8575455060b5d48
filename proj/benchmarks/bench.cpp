#include <conreg/divergence.hpp>
#include <conreg/dyadic.hpp>
#include <conreg/input_map.hpp>
#include <conreg/mass_mover.hpp>
#include <conreg/moser.hpp>
#include <conreg/regularizer.hpp>

#include <benchmark/benchmark.h>

using namespace conreg;

namespace {

std::shared_ptr<BoxRegion> unit() {
  return std::make_shared<BoxRegion>(std::vector<double>{0, 0}, std::vector<double>{1, 1});
}

double bump(const Vec2& z, double R) {
  double s = z.squaredNorm() / (R * R);
  return s < 1 ? std::exp(-1 / (1 - s)) : 0.0;
}

std::shared_ptr<BogovskiiField> dipole() {
  Vec2 q(0.15, 0.05);
  auto f = [q](const Vec2& z) { return bump(z - q, 0.25) - bump(z + q, 0.25); };
  auto phi = std::make_shared<ClosedFormScalar>(f, [](const Vec2&) { return Vec2(0, 0); },
                                                Box2{Vec2(-0.6, -0.6), Vec2(0.6, 0.6)});
  auto geom = SupportPair::nested(Region::box({Vec2(-0.6, -0.6), Vec2(0.6, 0.6)}), Region::box({Vec2(-1, -1), Vec2(1, 1)}));
  DivOptions o;
  o.check_grid = 0;
  return solve_divergence(phi, geom, o);
}

}  // namespace

static void BM_Whitney(benchmark::State& st) {
  WhitneyOptions o;
  o.t_max = int(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(whitney_decompose(unit(), 0.3, o).count(0));
}
BENCHMARK(BM_Whitney)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_ShearChainJet(benchmark::State& st) {
  BallCluster cl = BallCluster::make(2, {}, 0.08);
  auto path = gray_path(cl);
  std::vector<PrimitivePtr> chain;
  for (int r = 0; r < st.range(0); ++r)
    for (size_t j = 0; j + 1 < path.size(); ++j)
      chain.push_back(build_shear(cl, corner2(path[j]), corner2(path[j + 1]), 1e-4, {}));
  SmoothMap m(chain);
  Vec2 z(0.3, -0.4);
  for (auto _ : st) benchmark::DoNotOptimize(m.jet(z));
  st.SetItemsProcessed(st.iterations() * int64_t(chain.size()));
}
BENCHMARK(BM_ShearChainJet)->Arg(1)->Arg(8);

static void BM_BogovskiiValue(benchmark::State& st) {
  auto v = dipole();
  Vec2 z(0.1, 0.2);
  for (auto _ : st) benchmark::DoNotOptimize(v->value(z));
}
BENCHMARK(BM_BogovskiiValue)->Unit(benchmark::kMicrosecond);

static void BM_MoserJet(benchmark::State& st) {
  auto v = resample_flow(*dipole(), 1.0 / 96);
  MoserFlowMap m(v, int(st.range(0)), 0.05);
  Vec2 z(0.1, 0.2);
  for (auto _ : st) benchmark::DoNotOptimize(m.jet(z));
}
BENCHMARK(BM_MoserJet)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

static void BM_BalanceVolumes(benchmark::State& st) {
  int k = int(st.range(0));
  auto t1 = std::make_shared<TwistMap>(TwistMap::Params{Vec2(0.0, k ? 0.9 : 1.0), 0.3, 1e-3});
  CompositeMap F({t1});
  BallCluster c = BallCluster::make(2, k ? std::vector<int>{1} : std::vector<int>{}, 0.08);
  std::vector<Box2> W;
  if (k == 0)
    W = {{Vec2(-1, -1), Vec2(0, 0)}, {Vec2(0, -1), Vec2(1, 0)}, {Vec2(-1, 0), Vec2(0, 1)}, {Vec2(0, 0), Vec2(1, 1)}};
  else
    W = {{Vec2(-1, -0.9), Vec2(0, 0.9)}, {Vec2(0, -0.9), Vec2(1, 0.9)}};
  for (auto _ : st) benchmark::DoNotOptimize(balance_volumes(F, W, c).chain().size());
}
BENCHMARK(BM_BalanceVolumes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_RegularizeAffine(benchmark::State& st) {
  Mat2 A;
  A << 2, 0.3, 0, 0.5;
  auto f = std::make_shared<AffineMap>(A, Vec2(0.1, -0.2));
  PipelineConfig c;
  c.epsilon = 0.25;
  c.t_max = int(st.range(0));
  c.K0 = {Vec2(0.5, 0.06)};
  for (auto _ : st) benchmark::DoNotOptimize(regularize(f, unit(), c).report.processed);
}
BENCHMARK(BM_RegularizeAffine)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
