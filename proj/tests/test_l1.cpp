#include "wsl/l1.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace wsl;

namespace {

struct Setup {
    Mesh mesh;
    WeightSet ws;
    SymmetricForm Q;
    SymmetricForm M;
};

Setup unit_setup(int elems) {
    Setup s{build_interval_mesh(1.0, elems, {1.0}), WeightSet::unit(), {}, {}};
    s.Q = assemble_Q(s.mesh, s.ws);
    s.M = assemble_weighted_mass(s.mesh, s.ws.tau, s.ws.V2);
    return s;
}

const auto zero_field = [](const Point&) { return 0.0; };
const auto one_field = [](const Point&) { return 1.0; };

}  // namespace

TEST_CASE("off-spectrum solve: lambda = 0, f0 = 1 gives u = 1") {
    Setup s = unit_setup(64);
    LoadVector load = assemble_load(s.mesh, one_field, zero_field, s.ws);
    SolveOutcome out = fredholm_solve(s.Q, s.M, 0.0, load, 1e-12);
    CHECK(out.status == SolveStatus::Unique);
    REQUIRE(out.solution.has_value());
    // with unit weights Q u = (u,v)_{V0} + (grad) and u = 1 solves exactly
    for (int i = 0; i < out.solution->size(); ++i)
        CHECK(std::abs((*out.solution)[i] - 1.0) < 1e-10);
    CHECK(out.residual < 1e-10);
}

TEST_CASE("resonant right side is refused by the orthogonality test") {
    Setup s = unit_setup(64);
    Spectrum spec = solve_pencil(s.Q, s.M, 1, 1e-12, 1);
    const double l1 = spec.positive[0].value;  // = 1: constants
    CHECK(std::abs(l1 - 1.0) < 1e-10);

    LoadVector load = assemble_load(s.mesh, one_field, zero_field, s.ws);
    SolveOutcome out = fredholm_solve(s.Q, s.M, l1, load, 1e-12);
    CHECK(out.status == SolveStatus::Resonant);
    CHECK(!out.solution.has_value());
    REQUIRE(!out.orthogonality.empty());
    double max_r = 0.0;
    for (double r : out.orthogonality) max_r = std::max(max_r, std::abs(r));
    CHECK(max_r > 1e-3);
}

TEST_CASE("resonant but compatible right side is solved and projected") {
    Setup s = unit_setup(128);
    const double pi = std::acos(-1.0);
    auto f0 = [pi](const Point& p) { return std::cos(pi * p.x()); };
    LoadVector load = assemble_load(s.mesh, f0, zero_field, s.ws);
    SolveOutcome out = fredholm_solve(s.Q, s.M, 1.0, load, 1e-12);
    CHECK(out.status == SolveStatus::Resonant);
    REQUIRE(out.solution.has_value());
    CHECK(out.residual <= 1e-8);
    // the solution carries no component along the eigenspace
    REQUIRE(!out.eigenspace.empty());
    for (const auto& v : out.eigenspace)
        CHECK(std::abs(v.dot(s.Q.matrix * *out.solution)) < 1e-8);
}

TEST_CASE("eigenspace detection at and away from the spectrum") {
    Setup s = unit_setup(32);
    auto basis = eigenspace(1.0, s.Q, s.M);
    REQUIRE(basis.size() == 1);  // simple principal eigenvalue (constants)
    // Q-orthonormal
    CHECK(basis[0].dot(s.Q.matrix * basis[0]) == doctest::Approx(1.0));
    // nowhere near the spectrum
    CHECK(eigenspace(0.5, s.Q, s.M).empty());
    CHECK(eigenspace(-3.0, s.Q, s.M).empty());
}

TEST_CASE("iterated data truncation converges for an L1 right side") {
    Mesh mesh = build_interval_mesh(
        1.0, 128, {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0});
    WeightSet ws = WeightSet::unit();
    auto f0 = [](const Point& p) {
        return 1.0 / std::sqrt(std::max(p.x(), 1e-300));
    };

    ApproxOptions opts;
    ApproxSolution sol =
        approximate_solve(mesh, ws, f0, zero_field, 0.0, 8, opts);
    REQUIRE(sol.history.size() == 8);
    CHECK(sol.weak_residual < 1e-8);

    // truncated data approaches the target in L1(V2)
    for (std::size_t j = 1; j < sol.history.size(); ++j)
        CHECK(sol.history[j].data_l1_distance <=
              sol.history[j - 1].data_l1_distance + 1e-12);

    // bounded norm history: max/median <= 10 per configured exponent
    for (std::size_t k = 0; k < sol.q_list.size(); ++k) {
        std::vector<double> ns;
        for (const auto& st : sol.history) ns.push_back(st.norms[k]);
        std::sort(ns.begin(), ns.end());
        const double median = ns[ns.size() / 2];
        CHECK(ns.back() <= 10.0 * median);
    }

    // the clamp schedule does not change the limit
    ApproxOptions quad = opts;
    quad.quadratic_clamp = true;
    ApproxSolution sol2 =
        approximate_solve(mesh, ws, f0, zero_field, 0.0, 8, quad);
    const double denom = std::max(1.0, sol.limit.norm());
    CHECK((sol.limit - sol2.limit).norm() / denom < 1e-6);
}
