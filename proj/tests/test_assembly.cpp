#include "wsl/assembly.hpp"
#include "wsl/covering.hpp"

#include <doctest.h>

#include <cmath>

using namespace wsl;

namespace {
const auto one = [](const Point&) { return 1.0; };
}

TEST_CASE("1D stiffness-plus-mass matches hand assembly") {
    // two elements on (0,1), unit weights: Q = K + M with
    // K = (1/h) tridiag(-1, 2, -1), M = (h/6) tridiag(1, 4, 1), h = 1/2
    Mesh m = build_interval_mesh(1.0, 2, {1.0});
    WeightSet ws = WeightSet::unit();
    SymmetricForm Q = assemble_Q(m, ws);
    Eigen::MatrixXd D(Q.matrix);
    CHECK(D(0, 0) == doctest::Approx(2.0 + 1.0 / 6.0).epsilon(1e-14));
    CHECK(D(1, 1) == doctest::Approx(4.0 + 1.0 / 3.0).epsilon(1e-14));
    CHECK(D(2, 2) == doctest::Approx(2.0 + 1.0 / 6.0).epsilon(1e-14));
    CHECK(D(0, 1) == doctest::Approx(-2.0 + 1.0 / 12.0).epsilon(1e-14));
    CHECK(D(0, 2) == doctest::Approx(0.0));
    CHECK((D - D.transpose()).norm() == 0.0);  // exactly symmetric
}

TEST_CASE("constants see only the V0 mass") {
    // gradient of 1 vanishes, so 1' Q 1 = integral of V0 = |domain|
    Mesh m = build_interval_mesh(3.0, 7, {3.0});
    WeightSet ws = WeightSet::unit();
    SymmetricForm Q = assemble_Q(m, ws);
    Eigen::VectorXd c = Eigen::VectorXd::Ones(m.num_nodes());
    CHECK(Q.apply(c, c) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("single-element mass matrix") {
    Mesh m = build_interval_mesh(1.0, 1, {1.0});
    SymmetricForm M = assemble_weighted_mass(m, one, one);
    Eigen::MatrixXd D(M.matrix);
    CHECK(D(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(D(0, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(D(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("load vector of f0 = 1 on two elements") {
    Mesh m = build_interval_mesh(1.0, 2, {1.0});
    WeightSet ws = WeightSet::unit();
    LoadVector L = assemble_load(m, one, nullptr, ws);
    CHECK(L.values[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(L.values[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(L.values[2] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("1D boundary mass is a point measure") {
    Mesh m = build_interval_mesh(1.0, 4, {1.0});
    auto w = [](const Point& p) { return 2.0 + p.x(); };
    SymmetricForm B = assemble_boundary_mass(m, w, FacetTag::PhysicalGamma);
    Eigen::MatrixXd D(B.matrix);
    CHECK(D(0, 0) == doctest::Approx(2.0));  // W at x=0
    CHECK(D.sum() == doctest::Approx(2.0));
}

TEST_CASE("Dirichlet elimination shrinks the system") {
    Mesh m = build_interval_mesh(1.0, 2, {1.0});
    WeightSet ws = WeightSet::unit();
    SymmetricForm Q = assemble_Q(
        m, ws, {FacetTag::PhysicalGamma, FacetTag::TruncationCut});
    CHECK(Q.dim() == 1);
    CHECK(!Q.dofs.is_identity());
    Eigen::VectorXd red(1);
    red << 5.0;
    Eigen::VectorXd full = Q.dofs.prolong(red);
    CHECK(full.size() == 3);
    CHECK(full[0] == 0.0);
    CHECK(full[1] == 5.0);
    CHECK(full[2] == 0.0);
}

TEST_CASE("odd tau on a symmetric mesh has zero total mass") {
    Mesh m = build_interval_mesh(2.0, 16, {2.0});
    auto tau = [](const Point& p) { return p.x() - 1.0; };
    SymmetricForm M = assemble_weighted_mass(m, tau, one);
    Eigen::VectorXd c = Eigen::VectorXd::Ones(m.num_nodes());
    CHECK(std::abs(M.apply(c, c)) < 1e-13);
}

TEST_CASE("strip boundary mass integrates arc length") {
    auto profile = [](double) { return 1.0; };
    Mesh m = build_strip_mesh(profile, 2.0, 3, {1.0, 2.0});
    SymmetricForm B = assemble_boundary_mass(m, one, FacetTag::PhysicalGamma);
    Eigen::VectorXd c = Eigen::VectorXd::Ones(m.num_nodes());
    // flat profile: two straight sides of length 2 each
    CHECK(B.apply(c, c) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("assembly is linear in the coefficient") {
    Mesh m = build_interval_mesh(1.0, 5, {1.0});
    auto f = [](const Point& p) { return std::sin(p.x()); };
    auto f3 = [](const Point& p) { return 3.0 * std::sin(p.x()); };
    SymmetricForm A = assemble_weighted_mass(m, f, one);
    SymmetricForm A3 = assemble_weighted_mass(m, f3, one);
    CHECK((Eigen::MatrixXd(A3.matrix) - 3.0 * Eigen::MatrixXd(A.matrix))
              .norm() < 1e-14);
}

TEST_CASE("tail-restricted forms vanish past the last shell") {
    Mesh m = build_interval_mesh(1.0, 8, {0.5, 1.0});
    SymmetricForm T = assemble_weighted_mass_tail(m, one, one,
                                                  m.max_exhaustion_index());
    CHECK(Eigen::MatrixXd(T.matrix).norm() == 0.0);
    SymmetricForm T0 = assemble_weighted_mass_tail(m, one, one, 0);
    SymmetricForm M = assemble_weighted_mass(m, one, one);
    CHECK((Eigen::MatrixXd(T0.matrix) - Eigen::MatrixXd(M.matrix)).norm() <
          1e-14);
}

TEST_CASE("norm_w1q of a constant uses only V0") {
    Mesh m = build_interval_mesh(2.0, 9, {2.0});
    WeightSet ws = WeightSet::unit();
    Eigen::VectorXd c = Eigen::VectorXd::Constant(m.num_nodes(), 3.0);
    const double q = 1.5;
    // (integral of 3^q over (0,2))^{1/q}
    CHECK(norm_w1q(m, c, ws, q) ==
          doctest::Approx(3.0 * std::pow(2.0, 1.0 / q)).epsilon(1e-12));
}

TEST_CASE("extension copies matched nodes exactly and is local") {
    Mesh dom = build_interval_mesh(1.0, 16, {1.0});
    Mesh amb = build_interval_mesh(2.0, 32, {2.0});
    Covering cov = build_covering(dom, 0.25, 2.0);
    WeightSet ws = WeightSet::unit();
    Eigen::VectorXd u(dom.num_nodes());
    for (int i = 0; i < dom.num_nodes(); ++i) u[i] = dom.nodes[i].x();

    ExtensionResult er = extend(dom, u, cov, 1.0, amb, ws, 2.0);
    for (int a = 0; a < amb.num_nodes(); ++a) {
        const double x = amb.nodes[a].x();
        if (x <= 1.0 + 1e-12)
            CHECK(er.values[a] == u[(int)std::lround(x * 16)]);
    }
    // support: beyond the widest taper past the cut, all zero
    const double reach = 1.0 + cov.charts.front().r_hat;
    for (int a = 0; a < amb.num_nodes(); ++a)
        if (amb.nodes[a].x() > reach + 1e-12) CHECK(er.values[a] == 0.0);

    // delta-nesting: larger delta has support contained in smaller delta's
    ExtensionResult tight = extend(dom, u, cov, 4.0, amb, ws, 2.0);
    for (int a = 0; a < amb.num_nodes(); ++a)
        if (er.values[a] == 0.0) CHECK(tight.values[a] == 0.0);

    // linearity in u
    ExtensionResult er2 = extend(dom, 2.0 * u, cov, 1.0, amb, ws, 2.0);
    CHECK((er2.values - 2.0 * er.values).norm() < 1e-12);

    // a constant never overshoots
    Eigen::VectorXd c = Eigen::VectorXd::Ones(dom.num_nodes());
    ExtensionResult ec = extend(dom, c, cov, 1.0, amb, ws, 2.0);
    CHECK(ec.values.maxCoeff() <= 1.0 + 1e-12);
    CHECK(ec.values.minCoeff() >= -1e-12);
}
