// Microbenchmarks for the hot paths: form assembly on interval and strip
// meshes, the generalized eigenvalue pencil, and the obstacle capacity.

#include <benchmark/benchmark.h>

#include <cmath>

#include "wsl/assembly.hpp"
#include "wsl/capacity.hpp"
#include "wsl/mesh.hpp"
#include "wsl/spectral.hpp"
#include "wsl/weights.hpp"

namespace {

wsl::WeightSet sign_changing_tau() {
    wsl::WeightSet ws = wsl::WeightSet::unit();
    ws.tau = [](const wsl::Point& p) { return p.x() < 0.5 ? 1.0 : -1.0; };
    return ws;
}

void bm_assemble_interval(benchmark::State& state) {
    const int elems = static_cast<int>(state.range(0));
    wsl::Mesh m = wsl::build_interval_mesh(1.0, elems, {1.0});
    wsl::WeightSet ws = wsl::WeightSet::unit();
    for (auto _ : state) {
        wsl::SymmetricForm Q = wsl::assemble_Q(m, ws);
        benchmark::DoNotOptimize(Q.matrix);
    }
    state.SetItemsProcessed(state.iterations() * elems);
}

void bm_assemble_strip(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    wsl::Mesh m = wsl::build_strip_mesh(
        [](double x) { return std::exp(-0.25 * x); }, 4.0, res,
        {1.0, 2.0, 3.0, 4.0});
    wsl::WeightSet ws = wsl::WeightSet::power_family(2.0, -1.0, 0.0);
    for (auto _ : state) {
        wsl::SymmetricForm Q = wsl::assemble_Q(m, ws);
        benchmark::DoNotOptimize(Q.matrix);
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(m.simplices.size()));
}

void bm_solve_pencil(benchmark::State& state) {
    const int elems = static_cast<int>(state.range(0));
    wsl::Mesh m = wsl::build_interval_mesh(1.0, elems, {1.0});
    wsl::WeightSet ws = sign_changing_tau();
    wsl::SymmetricForm Q = wsl::assemble_Q(m, ws);
    wsl::SymmetricForm M = wsl::assemble_weighted_mass(m, ws.tau, ws.V2);
    for (auto _ : state) {
        wsl::Spectrum s = wsl::solve_pencil(Q, M, 3, 1e-10, 1);
        benchmark::DoNotOptimize(s.positive);
    }
}

void bm_capacity(benchmark::State& state) {
    const int elems = static_cast<int>(state.range(0));
    wsl::Mesh m = wsl::build_interval_mesh(1.0, elems, {1.0});
    wsl::WeightSet ws = wsl::WeightSet::unit();
    wsl::SymmetricForm Q = wsl::assemble_Q(m, ws);
    std::vector<int> pinned;
    for (int i = 0; i < Q.dim(); ++i)
        if (m.nodes[i].x() > 0.45 && m.nodes[i].x() < 0.55)
            pinned.push_back(i);
    Eigen::VectorXd phi = Eigen::VectorXd::Ones(Q.dim());
    for (auto _ : state) {
        auto r = wsl::cap_pm(m, pinned, phi, Q, wsl::CapVariant::CapPlus);
        benchmark::DoNotOptimize(r.value);
    }
}

}  // namespace

BENCHMARK(bm_assemble_interval)->Arg(256)->Arg(2048)->Arg(16384);
BENCHMARK(bm_assemble_strip)->Arg(3)->Arg(6);
BENCHMARK(bm_solve_pencil)->Arg(256)->Arg(2048);
BENCHMARK(bm_capacity)->Arg(256)->Arg(2048);

BENCHMARK_MAIN();
