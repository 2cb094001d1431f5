#include "wsl/l1.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wsl {

std::string to_string(SolveStatus s) {
    return s == SolveStatus::Unique ? "Unique" : "Resonant";
}

std::vector<Eigen::VectorXd> eigenspace(double lambda, const SymmetricForm& Q,
                                        const SymmetricForm& Mtau,
                                        double cluster_tol) {
    const int n = Q.dim();
    const double scale = std::max(1.0, std::abs(lambda));
    // grow the computed window until it safely brackets |lambda|
    int count = 8;
    for (;;) {
        Spectrum s = solve_pencil(Q, Mtau, std::min(count, n), 1e-10);
        double reach_pos = s.positive.empty() ? 0.0 : s.positive.back().value;
        double reach_neg = s.negative.empty() ? 0.0 : -s.negative.back().value;
        const bool pos_done =
            s.positive.size() < static_cast<std::size_t>(std::min(count, n)) ||
            reach_pos > std::abs(lambda) + scale;
        const bool neg_done =
            s.negative.size() < static_cast<std::size_t>(std::min(count, n)) ||
            reach_neg > std::abs(lambda) + scale;
        if ((pos_done && neg_done) || count >= n) {
            std::vector<Eigen::VectorXd> basis;
            auto collect = [&](const std::vector<EigenPair>& branch) {
                for (const auto& ep : branch)
                    if (std::abs(ep.value - lambda) <= cluster_tol * scale)
                        basis.push_back(ep.vector);
            };
            collect(s.negative);
            collect(s.positive);
            // Q-orthonormalize (Gram-Schmidt in the Q inner product)
            std::vector<Eigen::VectorXd> out;
            for (auto v : basis) {
                for (const auto& w : out)
                    v -= w.dot(Q.matrix * v) * w;
                const double nq = std::sqrt(std::max(0.0, v.dot(Q.matrix * v)));
                if (nq > 1e-10) out.push_back(v / nq);
            }
            return out;
        }
        count *= 2;
    }
}

SolveOutcome fredholm_solve(const SymmetricForm& Q, const SymmetricForm& Mtau,
                            double lambda, const LoadVector& load, double tol,
                            double cluster_tol) {
    if (Q.dim() != Mtau.dim() || load.values.size() != Q.dim())
        throw std::invalid_argument("fredholm inputs have mismatched sizes");

    SolveOutcome out;
    // the shifted pencil Q_c - lambda M_{tau_c} equals Q - lambda M_tau for
    // every valid c, so the shift is recorded but never enters the numerics
    out.shift = lambda == 0.0 ? 0.0 : (lambda > 0 ? 2.0 : -2.0);

    out.eigenspace = eigenspace(lambda, Q, Mtau, cluster_tol);
    const Eigen::SparseMatrix<double> P = Q.matrix - lambda * Mtau.matrix;
    const double scale =
        std::max(1.0, load.values.norm());

    if (out.eigenspace.empty()) {
        out.status = SolveStatus::Unique;
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(P);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error(
                "ambiguous resonance: pencil numerically singular although "
                "lambda is outside every cluster");
        Eigen::VectorXd u = lu.solve(load.values);
        out.residual = (P * u - load.values).norm() / scale;
        out.solution = std::move(u);
        return out;
    }

    out.status = SolveStatus::Resonant;
    for (const auto& v : out.eigenspace)
        out.orthogonality.push_back(v.dot(load.values));
    const double orth_tol = std::max(tol, 1e-8) * scale;
    bool compatible = true;
    for (double r : out.orthogonality)
        if (std::abs(r) > orth_tol) compatible = false;
    if (!compatible) {
        out.note = "data not orthogonal to the eigenspace; no solution";
        return out;
    }

    // projected solve: least squares on the singular pencil, then remove the
    // eigenspace component in the Q inner product
    Eigen::MatrixXd Pd(P);
    Eigen::VectorXd u =
        Pd.completeOrthogonalDecomposition().solve(load.values);
    for (const auto& v : out.eigenspace)
        u -= v.dot(Q.matrix * u) * v;
    out.residual = (P * u - load.values).norm() / scale;
    out.solution = std::move(u);
    return out;
}

namespace {

// point-to-exhaustion-index through the radii (smallest m with |p| <= r_m)
int point_index(const Mesh& mesh, const Point& p) {
    const double r = mesh.dimension == 1 ? std::abs(p.x()) : p.norm();
    for (std::size_t m = 0; m < mesh.exhaustion_radii.size(); ++m)
        if (r <= mesh.exhaustion_radii[m] + 1e-12) return static_cast<int>(m + 1);
    return static_cast<int>(mesh.exhaustion_radii.size() + 1);
}

double l1_distance(const Mesh& mesh, const WeightSet& ws, const ScalarField& f,
                   const ScalarField& fj) {
    // order-2 quadrature of |f - f_j| against V2
    auto diff = [&](const Point& p) { return std::abs(f(p) - fj(p)); };
    double total = 0.0;
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const auto& s = mesh.simplices[e];
        if (mesh.dimension == 1) {
            const Point a = mesh.nodes[s[0]], b = mesh.nodes[s[1]];
            const double h = (b - a).norm();
            const double g = 0.5 / std::sqrt(3.0);
            for (double t : {0.5 - g, 0.5 + g}) {
                const Point x = a + t * (b - a);
                total += 0.5 * h * diff(x) * ws.V2(x);
            }
        } else {
            const Point a = mesh.nodes[s[0]], b = mesh.nodes[s[1]],
                        c = mesh.nodes[s[2]];
            const double area =
                0.5 * std::abs((b - a).x() * (c - a).y() -
                               (b - a).y() * (c - a).x());
            const Point mids[3] = {0.5 * (a + b), 0.5 * (b + c), 0.5 * (a + c)};
            for (const Point& x : mids)
                total += area / 3.0 * diff(x) * ws.V2(x);
        }
    }
    return total;
}

}  // namespace

ApproxSolution approximate_solve(const Mesh& mesh, const WeightSet& ws,
                                 const ScalarField& f0, const ScalarField& f1,
                                 double lambda, int stages,
                                 const ApproxOptions& opts) {
    if (stages < 2) throw std::invalid_argument("stages must be >= 2");

    SymmetricForm Q = assemble_Q(mesh, ws);
    SymmetricForm M = assemble_weighted_mass(mesh, ws.tau, ws.V2, 2, "massV2tau");

    ApproxSolution sol;
    sol.q_list = opts.q_list;
    const LoadVector exact_load = assemble_load(mesh, f0, f1, ws);

    for (int j = 1; j <= stages; ++j) {
        const double level =
            opts.quadratic_clamp ? static_cast<double>(j) * j : j;
        auto clampf = [&, level](const ScalarField& f) -> ScalarField {
            if (!f) return f;
            return [&mesh, f, level, j](const Point& p) {
                if (point_index(mesh, p) > j) return 0.0;  // zero past D_j
                return std::clamp(f(p), -level, level);
            };
        };
        const ScalarField f0j = clampf(f0);
        const ScalarField f1j = clampf(f1);
        const LoadVector load = assemble_load(mesh, f0j, f1j, ws);

        SolveOutcome stage_out;
        double removed = 0.0;
        // resonant data are projected off the eigenspace before solving
        LoadVector effective = load;
        auto basis = eigenspace(lambda, Q, M, opts.cluster_tol);
        if (!basis.empty()) {
            Eigen::MatrixXd V(Q.dim(), basis.size());
            for (std::size_t k = 0; k < basis.size(); ++k) V.col(k) = basis[k];
            const Eigen::VectorXd coeff =
                (V.transpose() * V).ldlt().solve(V.transpose() * load.values);
            const Eigen::VectorXd correction = V * coeff;
            removed = correction.norm();
            effective.values -= correction;
        }
        stage_out = fredholm_solve(Q, M, lambda, effective, opts.tol,
                                   opts.cluster_tol);
        if (!stage_out.solution)
            throw std::runtime_error(
                "approximation stage unsolvable after projection: internal "
                "fault");
        const Eigen::VectorXd& u = *stage_out.solution;

        ApproxStage rec;
        rec.stage = j;
        rec.data_l1_distance = f0 ? l1_distance(mesh, ws, f0, f0j) : 0.0;
        for (double q : opts.q_list) rec.norms.push_back(norm_w1q(mesh, u, ws, q));
        rec.weak_residual =
            ((Q.matrix - lambda * M.matrix) * u - effective.values).norm() /
            std::max(1.0, effective.values.norm());
        rec.removed_component = removed;
        sol.history.push_back(std::move(rec));
    }
    // Limit candidate: the stage data converge to the full data at every
    // quadrature point once the clamp level clears max |f| there, so the
    // stage solutions converge to the solve at the untruncated load. Compute
    // that solve directly (projected off the eigenspace like every stage).
    LoadVector effective = exact_load;
    auto basis = eigenspace(lambda, Q, M, opts.cluster_tol);
    if (!basis.empty()) {
        Eigen::MatrixXd V(Q.dim(), basis.size());
        for (std::size_t k = 0; k < basis.size(); ++k) V.col(k) = basis[k];
        const Eigen::VectorXd coeff =
            (V.transpose() * V).ldlt().solve(V.transpose() * exact_load.values);
        effective.values -= V * coeff;
    }
    SolveOutcome limit_out =
        fredholm_solve(Q, M, lambda, effective, opts.tol, opts.cluster_tol);
    if (!limit_out.solution)
        throw std::runtime_error("limit solve unsolvable after projection");
    sol.limit = *limit_out.solution;
    sol.weak_residual =
        ((Q.matrix - lambda * M.matrix) * sol.limit - effective.values).norm() /
        std::max(1.0, effective.values.norm());
    sol.note = "limit candidate solved at the untruncated data";
    return sol;
}

void ApproxSolution::write_csv(std::ostream& os) const {
    os.precision(17);
    os << "stage,data_l1_distance";
    for (double q : q_list) os << ",norm_w1q_" << q;
    os << ",weak_residual,removed_component\n";
    for (const auto& st : history) {
        os << st.stage << ',' << st.data_l1_distance;
        for (double v : st.norms) os << ',' << v;
        os << ',' << st.weak_residual << ',' << st.removed_component << '\n';
    }
}

}  // namespace wsl
