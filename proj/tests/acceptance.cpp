// End-to-end acceptance gate: analytic spectra, dense-oracle equivalence,
// bound audits, and determinism of the command-line pipelines.

#include "wsl/assembly.hpp"
#include "wsl/bounds.hpp"
#include "wsl/capacity.hpp"
#include "wsl/covering.hpp"
#include "wsl/l1.hpp"
#include "wsl/mesh.hpp"
#include "wsl/spectral.hpp"
#include "wsl/weights.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef WSL_CLI_PATH
#error "WSL_CLI_PATH must point at the built command-line binary"
#endif
#ifndef WSL_CONFIG_DIR
#error "WSL_CONFIG_DIR must point at the shipped configuration files"
#endif

using namespace wsl;
namespace fs = std::filesystem;

namespace {

const auto one_field = [](const Point&) { return 1.0; };
const auto zero_field = [](const Point&) { return 0.0; };

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "wsl-acceptance" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& pipeline, const std::string& config,
            const fs::path& out, unsigned seed = 1) {
    std::ostringstream cmd;
    cmd << '"' << WSL_CLI_PATH << "\" " << pipeline << " --config \""
        << WSL_CONFIG_DIR << '/' << config << "\" --out \"" << out.string()
        << "\" --seed " << seed << " > \"" << (out / "cli.log").string()
        << "\" 2>&1";
    const int status = std::system(cmd.str().c_str());
    if (status == -1) return -1;
#ifdef WEXITSTATUS
    return WEXITSTATUS(status);
#else
    return status;
#endif
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

WeightSet split_tau_weights(double split = 0.5) {
    WeightSet ws = WeightSet::unit();
    ws.tau = [split](const Point& p) { return p.x() < split ? 1.0 : -1.0; };
    return ws;
}

// All generalized eigenvalues of the pencil through a dense congruence.
std::vector<double> dense_eigenvalues(const SymmetricForm& Q,
                                      const SymmetricForm& M) {
    Eigen::MatrixXd Qd(Q.matrix), Md(M.matrix);
    Eigen::LLT<Eigen::MatrixXd> llt(Qd);
    REQUIRE(llt.info() == Eigen::Success);
    Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd S = L.triangularView<Eigen::Lower>().solve(Md).transpose();
    S = L.triangularView<Eigen::Lower>().solve(S);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    std::vector<double> lambdas;
    const double mu_max = es.eigenvalues().cwiseAbs().maxCoeff();
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()[i]) > 1e-14 * mu_max)
            lambdas.push_back(1.0 / es.eigenvalues()[i]);
    std::sort(lambdas.begin(), lambdas.end());
    return lambdas;
}

}  // namespace

TEST_CASE("1: analytic Neumann spectrum on the unit interval") {
    // principal eigenvalue is exactly 1 at every resolution
    for (int elems : {2, 17, 128}) {
        Mesh m = build_interval_mesh(1.0, elems, {1.0});
        WeightSet ws = WeightSet::unit();
        SymmetricForm Q = assemble_Q(m, ws);
        SymmetricForm M = assemble_weighted_mass(m, ws.tau, ws.V2);
        Spectrum s = solve_pencil(Q, M, 1, 1e-12, 1);
        CHECK(std::abs(s.positive[0].value - 1.0) < 1e-10);
    }

    const auto t0 = std::chrono::steady_clock::now();
    Mesh m = build_interval_mesh(1.0, 2048, {1.0});
    WeightSet ws = WeightSet::unit();
    SymmetricForm Q = assemble_Q(m, ws);
    SymmetricForm M = assemble_weighted_mass(m, ws.tau, ws.V2);
    Spectrum s = solve_pencil(Q, M, 2, 1e-13, 1);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const double pi = std::acos(-1.0);
    CHECK(std::abs(s.positive[0].value - 1.0) < 1e-10);
    CHECK(std::abs(s.positive[1].value - (1.0 + pi * pi)) <
          1e-3 * (1.0 + pi * pi));
    CHECK(elapsed < 5.0);
}

TEST_CASE("2: spectral branches flip with the coefficient sign") {
    for (int elems : {8, 64}) {
        Mesh m = build_interval_mesh(1.0, elems, {1.0});
        WeightSet ws = split_tau_weights();
        SymmetricForm Q = assemble_Q(m, ws);
        SymmetricForm Mp = assemble_weighted_mass(m, ws.tau, ws.V2);
        SymmetricForm Mn = assemble_weighted_mass(
            m, [t = ws.tau](const Point& p) { return -t(p); }, ws.V2);
        Spectrum sp = solve_pencil(Q, Mp, 3, 1e-12, 1);
        Spectrum sn = solve_pencil(Q, Mn, 3, 1e-12, 1);
        REQUIRE(sp.positive.size() >= 3);
        REQUIRE(sp.negative.size() >= 3);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(sn.positive[i].value + sp.negative[i].value) <
                  1e-10);
            CHECK(std::abs(sn.negative[i].value + sp.positive[i].value) <
                  1e-10);
        }
    }
}

TEST_CASE("3: iterative results match dense computations at small size") {
    // the 64-element split-coefficient interval: 65 degrees of freedom
    Mesh m = build_interval_mesh(1.0, 64, {0.5, 1.0});
    WeightSet ws = split_tau_weights();
    SymmetricForm Q = assemble_Q(m, ws);
    SymmetricForm M = assemble_weighted_mass(m, ws.tau, ws.V2);
    REQUIRE(Q.dim() <= 200);

    std::vector<double> dense = dense_eigenvalues(Q, M);
    std::vector<double> dense_pos, dense_neg;
    for (double l : dense) (l > 0 ? dense_pos : dense_neg).push_back(l);
    std::sort(dense_neg.begin(), dense_neg.end(),
              [](double a, double b) { return a > b; });

    Spectrum s = solve_pencil(Q, M, 3, 1e-12, 1);
    for (int i = 0; i < 3; ++i) {
        CHECK(s.positive[i].value ==
              doctest::Approx(dense_pos[i]).epsilon(1e-8));
        CHECK(s.negative[i].value ==
              doctest::Approx(dense_neg[i]).epsilon(1e-8));
    }

    // capacity against a dense bordered (KKT) solve
    Eigen::VectorXd phi(m.nodes.size());
    for (std::size_t i = 0; i < m.nodes.size(); ++i)
        phi[i] = std::cos(2.0 * m.nodes[i].x());
    std::vector<int> pinned;
    for (std::size_t i = 0; i < m.nodes.size(); ++i)
        if (m.nodes[i].x() > 0.75) pinned.push_back(static_cast<int>(i));
    CapacityResult cap = cap_pm(m, pinned, phi, Q, CapVariant::CapPlus);
    {
        const int n = Q.dim();
        const int k = static_cast<int>(pinned.size());
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
        K.topLeftCorner(n, n) = Eigen::MatrixXd(Q.matrix);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        for (int j = 0; j < k; ++j) {
            K(n + j, pinned[j]) = 1.0;
            K(pinned[j], n + j) = 1.0;
            rhs[n + j] = phi[pinned[j]];
        }
        Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
        Eigen::VectorXd u = sol.head(n);
        const double dense_value = u.dot(Eigen::MatrixXd(Q.matrix) * u);
        CHECK(cap.value == doctest::Approx(dense_value).epsilon(1e-8));
    }

    // off-spectrum solve against a dense direct solve
    const double lambda = 0.5 * (dense_pos[0] + dense_pos[1]);
    LoadVector load = assemble_load(m, one_field, zero_field, ws);
    SolveOutcome out = fredholm_solve(Q, M, lambda, load, 1e-12);
    REQUIRE(out.solution.has_value());
    Eigen::MatrixXd A =
        Eigen::MatrixXd(Q.matrix) - lambda * Eigen::MatrixXd(M.matrix);
    Eigen::VectorXd u_dense = A.fullPivLu().solve(load.values);
    CHECK((*out.solution - u_dense).norm() <=
          1e-8 * std::max(1.0, u_dense.norm()));
}

TEST_CASE("4: embedding operator norm is exact for unit weights") {
    Mesh m = build_interval_mesh(1.0, 96, {1.0});
    WeightSet ws = WeightSet::unit();
    SymmetricForm Q = assemble_Q(m, ws);
    SymmetricForm M = assemble_weighted_mass(m, one_field, ws.V2);
    const double c = operator_norm_embedding(Q, M);
    CHECK(std::abs(c - 1.0) < 1e-10);
    SymmetricForm M4 =
        assemble_weighted_mass(m, one_field, [](const Point&) { return 4.0; });
    CHECK(operator_norm_embedding(Q, M4) ==
          doctest::Approx(2.0 * c).epsilon(1e-10));
}

TEST_CASE("5: tail sequences decay on the power-weighted strip") {
    auto profile = [](double x) { return std::exp(-0.25 * x); };
    Mesh m = build_strip_mesh(profile, 4.0, 3, {1.0, 2.0, 3.0, 4.0});
    WeightSet ws = WeightSet::power_family(2.0, -1.0, 0.0);
    SymmetricForm Q = assemble_Q(m, ws);

    auto check_sequence = [&](bool trace) {
        std::vector<double> sigma;
        for (int mm = 0; mm <= m.max_exhaustion_index(); ++mm) {
            if (trace) {
                SymmetricForm B = assemble_boundary_mass_tail(
                    m, ws.W, FacetTag::PhysicalGamma, mm);
                sigma.push_back(trace_tail_functional(Q, B, mm));
            } else {
                SymmetricForm T =
                    assemble_weighted_mass_tail(m, one_field, ws.V2, mm);
                sigma.push_back(tail_functional(Q, T, mm));
            }
        }
        for (std::size_t i = 1; i < sigma.size(); ++i)
            CHECK(sigma[i] <= sigma[i - 1] + 1e-8);
        CHECK(sigma.back() < sigma.front());
    };
    check_sequence(false);
    check_sequence(true);
}

TEST_CASE("6: two-sided gap audit on the three-domain instance") {
    // physical instance: lower rows plus case selection through the CLI
    fs::path out = scratch_dir("verify-bounds");
    CHECK(run_cli("verify-bounds", "three-domain.json", out) == 0);
    const std::string csv = slurp(out / "verify-bounds.csv");
    // a hard "fail" verdict sits alone in its column; skipped upper rows
    // legitimately carry "hypothesis failed, not evaluated"
    CHECK(csv.find(",fail,") == std::string::npos);
    CHECK(csv.find("ambient-gap") != std::string::npos);

    // constructed inputs with the smallness precondition met: both upper
    // rows must hold with nonnegative margin
    ComparisonInputs in;
    in.lambda1_Omega = 1.10;
    in.lambda1_N = 1.00;
    in.lambda2_N = 1.50;
    in.lambda1_plus_M = 0.99;
    in.lambda2_plus_M = 1.40;
    in.lambda1_minus_M = -0.98;
    in.lambda2_minus_M = -1.45;
    in.c_nu = 0.004;
    in.cap_plus = 0.01;
    in.cap_minus = 0.01;
    in.ell = 0.05;
    in.phi_extension_energy = 1.2;
    BoundReport rep = verify_comparison_bounds(in);
    CHECK(rep.all_passed());
    int upper = 0, lower = 0;
    for (const auto& row : rep.rows) {
        const double scale = std::max({1.0, std::abs(row.lhs), std::abs(row.rhs)});
        CHECK(row.margin >= -1e-8 * scale);
        CHECK(row.verdict == "pass");
        if (row.hypothesis.empty())
            ++lower;
        else
            ++upper;
    }
    CHECK(lower >= 2);
    CHECK(upper >= 2);
    CHECK(rep.selected_case >= 1);
}

TEST_CASE("7: resonance dichotomy along a spectral scan") {
    Mesh m = build_interval_mesh(1.0, 64, {1.0});
    WeightSet ws = split_tau_weights();
    SymmetricForm Q = assemble_Q(m, ws);
    SymmetricForm M = assemble_weighted_mass(m, ws.tau, ws.V2);
    Spectrum s = solve_pencil(Q, M, 2, 1e-12, 1);
    std::vector<double> truth = dense_eigenvalues(Q, M);

    const double lo = s.negative[0].value - 1.0;
    const double hi = s.positive[1].value + 1.0;
    const double cluster_tol = 1e-6;
    for (int k = 0; k < 200; ++k) {
        const double lambda = lo + (hi - lo) * k / 199.0;
        double dist = std::numeric_limits<double>::infinity();
        for (double t : truth) dist = std::min(dist, std::abs(lambda - t));
        const bool expect_resonant =
            dist <= cluster_tol * std::max(1.0, std::abs(lambda));
        CHECK(eigenspace(lambda, Q, M, cluster_tol).empty() !=
              expect_resonant);
    }
    // the exact eigenvalues themselves are classified as resonant
    for (const auto& e : {s.negative[0], s.positive[0], s.positive[1]})
        CHECK(!eigenspace(e.value, Q, M, cluster_tol).empty());

    // resonant load compatibility at the principal eigenvalue, tau = 1
    Mesh mu = build_interval_mesh(1.0, 128, {1.0});
    WeightSet unit = WeightSet::unit();
    SymmetricForm Qu = assemble_Q(mu, unit);
    SymmetricForm Mu = assemble_weighted_mass(mu, unit.tau, unit.V2);
    LoadVector bad = assemble_load(mu, one_field, zero_field, unit);
    SolveOutcome refused = fredholm_solve(Qu, Mu, 1.0, bad, 1e-12);
    CHECK(refused.status == SolveStatus::Resonant);
    CHECK(!refused.solution.has_value());
    double max_r = 0.0;
    for (double r : refused.orthogonality) max_r = std::max(max_r, std::abs(r));
    CHECK(max_r > 1e-3);

    const double pi = std::acos(-1.0);
    LoadVector good = assemble_load(
        mu, [pi](const Point& p) { return std::cos(pi * p.x()); }, zero_field,
        unit);
    SolveOutcome solved = fredholm_solve(Qu, Mu, 1.0, good, 1e-12);
    CHECK(solved.status == SolveStatus::Resonant);
    REQUIRE(solved.solution.has_value());
    CHECK(solved.residual <= 1e-8);
}

TEST_CASE("8: norm-bounded data truncation scheme") {
    fs::path out = scratch_dir("l1-solve");
    CHECK(run_cli("l1-solve", "l1-invsqrt.json", out) == 0);

    Mesh m = build_interval_mesh(
        1.0, 128, {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0});
    WeightSet ws = WeightSet::unit();
    auto f0 = [](const Point& p) {
        return 1.0 / std::sqrt(std::max(p.x(), 1e-300));
    };
    ApproxOptions linear;
    ApproxSolution a = approximate_solve(m, ws, f0, zero_field, 0.0, 8, linear);
    for (std::size_t k = 0; k < a.q_list.size(); ++k) {
        std::vector<double> ns;
        for (const auto& st : a.history) ns.push_back(st.norms[k]);
        std::sort(ns.begin(), ns.end());
        CHECK(ns.back() <= 10.0 * ns[ns.size() / 2]);
    }
    ApproxOptions quadratic = linear;
    quadratic.quadratic_clamp = true;
    ApproxSolution b =
        approximate_solve(m, ws, f0, zero_field, 0.0, 8, quadratic);
    CHECK((a.limit - b.limit).norm() /
              std::max(1.0, a.limit.norm()) < 1e-6);
}

TEST_CASE("9: certified sup bounds and level-set monotonicity") {
    fs::path out = scratch_dir("degiorgi");
    CHECK(run_cli("degiorgi", "degiorgi-interval.json", out) == 0);

    Mesh m = build_interval_mesh(1.0, 64, {1.0});
    Covering cov = build_covering(m, 0.3, 1.5);
    WeightSet ws = WeightSet::unit();
    int boundary = -1;
    for (std::size_t i = 0; i < cov.charts.size(); ++i)
        if (cov.charts[i].kind == 1) {
            boundary = static_cast<int>(i);
            break;
        }
    REQUIRE(boundary >= 0);

    LevelSetProbe probe{&m, &cov.charts[boundary], {}, &ws};
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> level(-1.5, 1.5);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        probe.u.resize(m.nodes.size());
        const double a = coeff(rng), b = coeff(rng), c = coeff(rng);
        for (std::size_t i = 0; i < m.nodes.size(); ++i) {
            const double x = m.nodes[i].x();
            probe.u[i] = a + b * x + c * std::cos(5.0 * x);
        }
        double h1 = level(rng), h2 = level(rng);
        if (h2 < h1) std::swap(h1, h2);
        const double t = cov.charts[boundary].r_hat;
        CHECK(psi(probe, h2, t) <= psi(probe, h1, t) + 1e-10);
        CHECK(psi(probe, h1, 0.5 * t) <= psi(probe, h1, t) + 1e-10);
    }
}

TEST_CASE("10: eigenfunction tails shrink on the decaying strip") {
    fs::path out = scratch_dir("decay");
    CHECK(run_cli("decay", "strip.json", out) == 0);
    const std::string csv = slurp(out / "decay.csv");
    CHECK(csv.find("tail_sup") != std::string::npos);
}

TEST_CASE("11: extension operator identity, support, and stability") {
    fs::path out = scratch_dir("extension-check");
    CHECK(run_cli("extension-check", "extension-interval.json", out) == 0);

    Mesh domain = build_interval_mesh(1.0, 64, {1.0});
    Mesh ambient = build_interval_mesh(2.0, 128, {2.0});
    Covering cov = build_covering(domain, 0.3, 1.5);
    WeightSet ws = WeightSet::unit();
    Eigen::VectorXd u(domain.nodes.size());
    for (std::size_t i = 0; i < domain.nodes.size(); ++i)
        u[i] = 1.0 + 0.5 * domain.nodes[i].x();
    ExtensionResult ext = extend(domain, u, cov, 1.5, ambient, ws);

    double r_hat_max = 0.0;
    for (const auto& c : cov.charts) r_hat_max = std::max(r_hat_max, c.r_hat);
    for (std::size_t i = 0; i < ambient.nodes.size(); ++i) {
        const double x = ambient.nodes[i].x();
        if (x <= 1.0 + 1e-12) {
            // identity on matched domain nodes (the meshes share nodes)
            const long k = std::lround(x * 64.0);
            if (std::abs(x - k / 64.0) < 1e-12)
                CHECK(ext.values[i] == u[k]);
        } else if (x > 1.0 + r_hat_max) {
            CHECK(ext.values[i] == 0.0);  // outside every inflated ball
        }
    }
}

TEST_CASE("12: repeated runs are byte-identical") {
    for (const auto& [pipeline, config, csv] :
         {std::tuple{"spectrum", "spectrum-interval.json", "spectrum.csv"},
          std::tuple{"l1-solve", "l1-invsqrt.json", "l1-solve.csv"},
          std::tuple{"verify-bounds", "three-domain.json",
                     "verify-bounds.csv"}}) {
        fs::path a = scratch_dir(std::string("det-a-") + pipeline);
        fs::path b = scratch_dir(std::string("det-b-") + pipeline);
        CHECK(run_cli(pipeline, config, a, 7) == 0);
        CHECK(run_cli(pipeline, config, b, 7) == 0);
        CHECK(slurp(a / csv) == slurp(b / csv));
        CHECK(slurp(a / "summary.txt") == slurp(b / "summary.txt"));
    }
}
