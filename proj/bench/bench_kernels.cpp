// Serial reference vs OpenMP for the three parallel kernels.

#include <fstream>
#include <sstream>

#include <benchmark/benchmark.h>

#include "hydranav/hybrid.hpp"
#include "hydranav/nav.hpp"

using namespace hydranav;

namespace {

nav::World cluttered(int count) {
    nav::World w;
    for (int i = 0; i < count; ++i) {
        const double a = 0.61803398875 * i * 6.283185307;
        const double r = 2.0 + 0.15 * i;
        w.obstacles.push_back({nav::Point(r * std::cos(a), r * std::sin(a)), 0.3});
    }
    return w;
}

hybrid::DirectedSystem fixture(const std::string& name) {
    std::ifstream in(std::string(HYDRANAV_SOURCE_DIR) + "/tests/fixtures/hybrid/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return hybrid::parse_directed(ss.str());
}

void sense_args(benchmark::internal::Benchmark* b) {
    for (int rays : {64, 1024, 8192}) b->Args({rays, 40});
}

void BM_sense_serial(benchmark::State& st) {
    auto w = cluttered(static_cast<int>(st.range(1)));
    nav::NavParams p;
    p.rays = static_cast<int>(st.range(0));
    p.sensor_range = 20;
    for (auto _ : st) benchmark::DoNotOptimize(nav::sense(w, nav::Point::Zero(), p));
}
BENCHMARK(BM_sense_serial)->Apply(sense_args);

void BM_sense_parallel(benchmark::State& st) {
    auto w = cluttered(static_cast<int>(st.range(1)));
    nav::NavParams p;
    p.rays = static_cast<int>(st.range(0));
    p.sensor_range = 20;
    for (auto _ : st) benchmark::DoNotOptimize(nav::sense_parallel(w, nav::Point::Zero(), p));
}
BENCHMARK(BM_sense_parallel)->Apply(sense_args);

void BM_cell_graph(benchmark::State& st) {
    auto h = hybrid::product(fixture("funnel_a.json").apex, fixture("funnel_b.json").apex);
    hybrid::ChainOptions o;
    o.grid = static_cast<int>(st.range(0));
    const bool parallel = st.range(1) != 0;
    for (auto _ : st) benchmark::DoNotOptimize(hybrid::build_cell_graph(h, o, parallel));
}
BENCHMARK(BM_cell_graph)->ArgsProduct({{16, 32}, {0, 1}})->ArgNames({"grid", "parallel"});

void BM_batch(benchmark::State& st) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(st.range(0)));
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
    const bool parallel = st.range(1) != 0;
    for (auto _ : st) benchmark::DoNotOptimize(nav::run_batch(seeds, nav::NavParams{}, false, parallel));
}
BENCHMARK(BM_batch)->ArgsProduct({{8}, {0, 1}})->ArgNames({"worlds", "parallel"})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
