#include <benchmark/benchmark.h>

#include "grushin/deficiency.hpp"
#include "grushin/params.hpp"

using namespace grushin;

// the acceptance grid: 79 alphas x 4 dimensions at c = 0
static void BM_ClassifySweep(benchmark::State& st) {
    for (auto _ : st) {
        int esa = 0;
        for (int i = 0; i <= 78; ++i)
            for (int n = 1; n <= 4; ++n)
                esa += classify({-0.9 + 0.05 * i, n, 0.0}).verdict == Verdict::EssentiallySelfAdjoint;
        benchmark::DoNotOptimize(esa);
    }
}
BENCHMARK(BM_ClassifySweep)->Unit(benchmark::kMicrosecond);

static void BM_ModeShooting(benchmark::State& st) {
    const auto op = mode_operator({1.0, 1, 2.0 / 3.0}, static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(numeric_deficiency(op, DeficiencySign::plus));
}
BENCHMARK(BM_ModeShooting)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_AggregateDeficiency(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(aggregate_deficiency({1.0, 1, 1.0}, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_AggregateDeficiency)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
