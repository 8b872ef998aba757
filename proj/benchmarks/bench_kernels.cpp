#include <benchmark/benchmark.h>

#include "grushin/bessel.hpp"
#include "grushin/curvature.hpp"
#include "grushin/frobenius.hpp"
#include "grushin/indexset.hpp"

using namespace grushin;

static void BM_BesselK(benchmark::State& st) {
    const double nu = st.range(0) / 4.0;
    double x = 0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(bessel_K(x, nu));
        x = x < 20.0 ? x * 1.1 : 0.1;
    }
}
BENCHMARK(BM_BesselK)->Arg(2)->Arg(10)->Arg(40);

static void BM_BesselKImaginaryOrder(benchmark::State& st) {
    double x = 0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(bessel_K_tilde(x, 1.5));
        x = x < 20.0 ? x * 1.1 : 0.1;
    }
}
BENCHMARK(BM_BesselKImaginaryOrder);

static void BM_BesselKComplex(benchmark::State& st) {
    double x = 0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(bessel_K_complex(x, cplx(0.3, 1.2)));
        x = x < 20.0 ? x * 1.1 : 0.1;
    }
}
BENCHMARK(BM_BesselKComplex);

// cutoff in grades; the torus basis has (2K+1)^n modes
static void BM_FrobeniusExpand(benchmark::State& st) {
    const GrushinParams p{0.5, 1, 0.3};
    const auto d = flat_model_series_data(p, static_cast<int>(st.range(0)));
    const auto seed = d.mode_vector({1});
    for (auto _ : st) benchmark::DoNotOptimize(expand(d, Root::plus, seed, static_cast<double>(st.range(1))));
}
BENCHMARK(BM_FrobeniusExpand)->Args({2, 8})->Args({2, 16})->Args({6, 16});

static void BM_ExtendedUnion(benchmark::State& st) {
    std::vector<IndexEntry> a, b;
    for (int i = 0; i < st.range(0); ++i) {
        a.push_back({cplx(0.37 * i, 0.0), i % 3});
        b.push_back({cplx(0.37 * i + (i % 2 ? 0.0 : 0.1), 0.0), i % 2});
    }
    const auto A = IndexSet::points(a), B = IndexSet::points(b);
    for (auto _ : st) benchmark::DoNotOptimize(extended_union(A, B, 1e9));
}
BENCHMARK(BM_ExtendedUnion)->Arg(8)->Arg(64)->Arg(512);

static void BM_Compose(benchmark::State& st) {
    const auto E = IndexFamily::double_space(IndexSet::smooth().shifted(2.0), IndexSet::smooth().shifted(1.5),
                                             IndexSet::generated({{0.0, 0}, LatticeKind::Theta, 0.5, 1.0}));
    for (auto _ : st) benchmark::DoNotOptimize(compose_indexsets(E, E, 0.5, 1, static_cast<double>(st.range(0))));
}
BENCHMARK(BM_Compose)->Arg(6)->Arg(12);

static void BM_FrameScalarCurvature(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto fc = flat_grushin_frame(0.5, n);
    Point p = Point::Constant(n + 1, 0.3);
    for (auto _ : st) benchmark::DoNotOptimize(scalar_from_christoffel(fc, p));
}
BENCHMARK(BM_FrameScalarCurvature)->Arg(1)->Arg(3);
