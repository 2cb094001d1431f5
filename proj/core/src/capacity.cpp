#include "wsl/capacity.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace wsl {

std::string to_string(CapVariant v) {
    switch (v) {
        case CapVariant::CapPlus: return "CapPlus";
        case CapVariant::CapMinus: return "CapMinus";
        case CapVariant::CNuGamma: return "CNuGamma";
    }
    return "?";
}

CapacityResult cap_pm(const Mesh& ambient, const std::vector<int>& region_nodes,
                      const Eigen::VectorXd& phi1, const SymmetricForm& Q,
                      CapVariant variant) {
    if (region_nodes.empty())
        throw std::invalid_argument("constrained region node set is empty");
    const int n = Q.dim();
    if (phi1.size() != n || ambient.num_nodes() != n)
        throw std::invalid_argument("capacity inputs have mismatched sizes");

    std::vector<bool> pinned(n, false);
    for (int i : region_nodes) {
        if (i < 0 || i >= n)
            throw std::invalid_argument("region node out of range");
        pinned[i] = true;
    }
    std::vector<int> free_nodes;
    for (int i = 0; i < n; ++i)
        if (!pinned[i]) free_nodes.push_back(i);

    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = pinned[i] ? phi1[i] : 0.0;

    if (!free_nodes.empty()) {
        std::vector<int> full_to_free(n, -1);
        for (std::size_t k = 0; k < free_nodes.size(); ++k)
            full_to_free[free_nodes[k]] = static_cast<int>(k);
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free_nodes.size());
        for (int k = 0; k < Q.matrix.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(Q.matrix, k); it;
                 ++it) {
                const int r = full_to_free[it.row()];
                if (r < 0) continue;
                const int c = full_to_free[it.col()];
                if (c >= 0)
                    trips.emplace_back(r, c, it.value());
                else
                    rhs[r] -= it.value() * phi1[it.col()];
            }
        Eigen::SparseMatrix<double> Qff(free_nodes.size(), free_nodes.size());
        Qff.setFromTriplets(trips.begin(), trips.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fac(Qff);
        if (fac.info() != Eigen::Success)
            throw std::runtime_error("capacity reduced system is singular");
        const Eigen::VectorXd uf = fac.solve(rhs);
        for (std::size_t k = 0; k < free_nodes.size(); ++k)
            u[free_nodes[k]] = uf[k];
    }

    CapacityResult res;
    res.variant = variant;
    res.minimizer = u;
    res.value = Q.apply(u, u);
    res.constraint_residual = 0.0;  // constraint imposed by elimination
    return res;
}

namespace {

// row of the facet-integrated normal flux of a P1 field across a Gamma facet
Eigen::VectorXd flux_row(const Mesh& mesh, const Mesh::Facet& f) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(mesh.num_nodes());
    if (mesh.dimension == 1) {
        const int a = f.nodes[0];
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            const auto& s = mesh.simplices[e];
            if (s[0] != a && s[1] != a) continue;
            const int b = s[0] == a ? s[1] : s[0];
            const double h = (mesh.nodes[b] - mesh.nodes[a]).norm();
            row[b] += 1.0 / h;
            row[a] -= 1.0 / h;
            return row;  // derivative into the domain; sign immaterial
        }
        throw std::invalid_argument("boundary node belongs to no element");
    }
    const int a = f.nodes[0], b = f.nodes[1];
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const auto& s = mesh.simplices[e];
        const bool ha = s[0] == a || s[1] == a || s[2] == a;
        const bool hb = s[0] == b || s[1] == b || s[2] == b;
        if (!ha || !hb) continue;
        Eigen::Matrix2d J;
        J.col(0) = mesh.nodes[s[1]] - mesh.nodes[s[0]];
        J.col(1) = mesh.nodes[s[2]] - mesh.nodes[s[0]];
        const Eigen::Matrix2d Jit = J.inverse().transpose();
        const Eigen::Vector2d g0 = Jit * Eigen::Vector2d(-1, -1);
        const Eigen::Vector2d g1 = Jit * Eigen::Vector2d(1, 0);
        const Eigen::Vector2d g2 = Jit * Eigen::Vector2d(0, 1);
        const Point pa = mesh.nodes[a], pb = mesh.nodes[b];
        const Point t = pb - pa;
        Eigen::Vector2d nrm(t.y(), -t.x());  // length-weighted normal
        // orient away from the off-facet vertex
        int c = s[0];
        for (int k : {s[0], s[1], s[2]})
            if (k != a && k != b) c = k;
        if (nrm.dot(mesh.nodes[c] - pa) > 0) nrm = -nrm;
        const Eigen::Matrix2d Ginv = mesh.metric_on(e).inverse();
        row[s[0]] += g0.dot(Ginv * nrm);
        row[s[1]] += g1.dot(Ginv * nrm);
        row[s[2]] += g2.dot(Ginv * nrm);
        return row;
    }
    throw std::invalid_argument("boundary facet belongs to no element");
}

struct QuadraticConstraint {
    Eigen::MatrixXd S;        // centered at kappa1
    double bound = 0.0;
    std::string name;
};

}  // namespace

CapacityResult c_nu_gamma(const Mesh& meshN, const std::vector<int>& omega_nodes,
                          const Eigen::VectorXd& kappa1,
                          const Eigen::VectorXd& phiOmega, double ell,
                          const SymmetricForm& Q, const WeightSet& ws) {
    if (!(ell > 0.0 && ell < 1.0))
        throw std::invalid_argument("ell must lie in (0,1)");
    const int n = meshN.num_nodes();
    if (Q.dim() != n || kappa1.size() != n || phiOmega.size() != n)
        throw std::invalid_argument("c_nu_gamma inputs have mismatched sizes");

    const Eigen::MatrixXd Qd = Eigen::MatrixXd(Q.matrix);

    // equality block: facet-integrated normal flux of (u - kappa1) over Gamma
    std::vector<Eigen::VectorXd> rows;
    for (const auto& f : meshN.facets)
        if (f.tag == FacetTag::PhysicalGamma) rows.push_back(flux_row(meshN, f));
    const int me = static_cast<int>(rows.size());
    Eigen::MatrixXd C(me, n);
    Eigen::VectorXd d(me);
    for (int i = 0; i < me; ++i) {
        C.row(i) = rows[i].transpose();
        d[i] = rows[i].dot(kappa1);
    }

    // quadratic constraints
    std::vector<bool> in_omega(n, false);
    for (int i : omega_nodes) in_omega[i] = true;
    auto fully_in_omega = [&](int e) {
        const auto& s = meshN.simplices[e];
        const int nv = meshN.dimension == 1 ? 2 : 3;
        for (int k = 0; k < nv; ++k)
            if (!in_omega[s[k]]) return false;
        return true;
    };
    std::vector<QuadraticConstraint> quads;
    {
        QuadraticConstraint gap;
        gap.S = Eigen::MatrixXd(
            assemble_weighted_mass_where(
                meshN, ws.tau, ws.V2,
                [&](int e) { return !fully_in_omega(e); })
                .matrix);
        gap.bound = ell;
        gap.name = "tau budget over N minus Omega";
        quads.push_back(std::move(gap));
    }
    for (int m = 1; m <= meshN.max_exhaustion_index(); ++m) {
        QuadraticConstraint cmp;
        cmp.S = Eigen::MatrixXd(
            assemble_Q_where(meshN, ws, [&](int e) {
                return meshN.simplex_exhaustion_index(e) <= m;
            }).matrix);
        cmp.bound = phiOmega.dot(cmp.S * phiOmega);
        cmp.name = "energy comparison on D_" + std::to_string(m);
        quads.push_back(std::move(cmp));
    }

    const int nq = static_cast<int>(quads.size());
    std::vector<double> mu(nq, 0.0);

    auto solve_with = [&](const std::vector<double>& mult) {
        Eigen::MatrixXd A = Qd;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < nq; ++k) {
            if (mult[k] == 0.0) continue;
            A += mult[k] * quads[k].S;
            rhs += mult[k] * (quads[k].S * kappa1);
        }
        Eigen::MatrixXd K(n + me, n + me);
        K.setZero();
        K.topLeftCorner(n, n) = A;
        K.topRightCorner(n, me) = C.transpose();
        K.bottomLeftCorner(me, n) = C;
        Eigen::VectorXd b(n + me);
        b.head(n) = rhs;
        b.tail(me) = d;
        const Eigen::VectorXd sol = K.colPivHouseholderQr().solve(b);
        return Eigen::VectorXd(sol.head(n));
    };
    auto violations = [&](const Eigen::VectorXd& u) {
        std::vector<double> v(nq);
        for (int k = 0; k < nq; ++k) {
            const Eigen::VectorXd w = u - kappa1;
            v[k] = w.dot(quads[k].S * w) - quads[k].bound;
        }
        return v;
    };
    auto feasible = [&](const std::vector<double>& viol) {
        for (int k = 0; k < nq; ++k)
            if (viol[k] > 1e-8 * std::max(1.0, std::abs(quads[k].bound)))
                return false;
        return true;
    };

    Eigen::VectorXd u = solve_with(mu);
    {
        const double eq_res = me ? (C * u - d).cwiseAbs().maxCoeff() : 0.0;
        const double scale = me ? std::max(1.0, d.cwiseAbs().maxCoeff()) : 1.0;
        if (eq_res > 1e-6 * scale) {
            std::ostringstream os;
            os << "flux-matching constraints infeasible (residual " << eq_res
               << ")";
            throw std::runtime_error(os.str());
        }
    }
    std::vector<double> viol = violations(u);
    int guard = 0;
    while (!feasible(viol)) {
        for (int k = 0; k < nq; ++k)
            if (viol[k] > 1e-8 * std::max(1.0, std::abs(quads[k].bound)))
                mu[k] = mu[k] == 0.0 ? 1.0 : mu[k] * 4.0;
        if (++guard > 60) {
            int worst = 0;
            for (int k = 1; k < nq; ++k)
                if (viol[k] > viol[worst]) worst = k;
            throw std::runtime_error("constraint infeasible: " +
                                     quads[worst].name);
        }
        u = solve_with(mu);
        viol = violations(u);
    }
    // back off the penalty toward complementarity: scale all multipliers
    if (guard > 0) {
        double lo = 0.0, hi = 1.0;
        std::vector<double> scaled(nq);
        for (int it = 0; it < 40; ++it) {
            const double t = 0.5 * (lo + hi);
            for (int k = 0; k < nq; ++k) scaled[k] = mu[k] * t;
            const Eigen::VectorXd ut = solve_with(scaled);
            if (feasible(violations(ut)))
                hi = t;
            else
                lo = t;
        }
        for (int k = 0; k < nq; ++k) mu[k] *= hi;
        u = solve_with(mu);
        viol = violations(u);
    }

    CapacityResult res;
    res.variant = CapVariant::CNuGamma;
    res.ell = ell;
    res.minimizer = u;
    res.value = Q.apply(u, u);
    double cres = me ? (C * u - d).cwiseAbs().maxCoeff() : 0.0;
    for (int k = 0; k < nq; ++k) cres = std::max(cres, viol[k]);
    res.constraint_residual = std::max(0.0, cres);
    std::ostringstream act;
    for (int k = 0; k < nq; ++k)
        if (mu[k] > 0.0) act << quads[k].name << "; ";
    res.active_constraints = act.str();
    res.note = "relaxed admissible set: value is a lower bound";
    return res;
}

namespace {

std::string verdict_of(double margin, double scale) {
    return margin >= -1e-8 * std::max(1.0, scale) ? "pass" : "fail";
}

}  // namespace

BoundReport verify_comparison_bounds(const ComparisonInputs& in) {
    BoundReport rep;
    if (!in.lambda1_minus_M || !in.lambda1_plus_M)
        throw std::invalid_argument(
            "ambient principal eigenvalues lambda1^-(M), lambda1^+(M) required");
    const double l1m = std::abs(*in.lambda1_minus_M);
    const double l1p = *in.lambda1_plus_M;

    // first lower bound: extension energy against the Dirichlet gap
    {
        BoundRow r;
        r.name = "extension-energy-gap";
        r.lhs = in.phi_extension_energy - in.lambda1_N;
        r.rhs = in.c_nu * (in.lambda2_N - in.lambda1_N) /
                (in.lambda2_N + in.lambda1_N);
        r.margin = r.lhs - r.rhs;
        r.verdict = verdict_of(r.margin, std::max(std::abs(r.lhs), std::abs(r.rhs)));
        rep.rows.push_back(r);
    }

    // ordering case selection for the second lower bound
    double L1 = 0.0, L2 = 0.0, C = 0.0;
    int row = 0;
    if (l1m <= l1p) {
        if (!in.lambda2_minus_M)
            throw std::invalid_argument(
                "case selection requires lambda2^-(M), which is missing");
        const double l2m = std::abs(*in.lambda2_minus_M);
        if (l1p <= l2m) {
            row = 1;
            L1 = l1m;
            L2 = l1p;
        } else {
            row = 2;
            L1 = l1m;
            L2 = l2m;
        }
        C = in.cap_minus;
    } else {
        if (!in.lambda2_plus_M)
            throw std::invalid_argument(
                "case selection requires lambda2^+(M), which is missing");
        const double l2p = *in.lambda2_plus_M;
        if (l1m <= l2p) {
            row = 3;
            L1 = l1p;
            L2 = l1m;
        } else {
            row = 4;
            L1 = l1p;
            L2 = l2p;
        }
        C = in.cap_plus;
    }
    rep.selected_case = row;
    {
        BoundRow r;
        r.name = "ambient-gap";
        r.case_row = row;
        r.lhs = in.lambda1_N - L1;
        r.rhs = C * (L2 - L1) / (L2 + L1);
        r.margin = r.lhs - r.rhs;
        r.verdict = verdict_of(r.margin, std::max(std::abs(r.lhs), std::abs(r.rhs)));
        rep.rows.push_back(r);
    }

    // smallness precondition for the upper bounds
    const bool hyp_cnu = in.c_nu < in.lambda1_N / 16.0 * (1.0 - in.ell) * (1.0 - in.ell);
    const double cap_ceiling = std::min(l1m, l1p) / 16.0;
    const bool hyp_plus = in.cap_plus < cap_ceiling;
    const bool hyp_minus = in.cap_minus < cap_ceiling;
    const bool hyp = hyp_cnu && hyp_plus && hyp_minus;
    const std::string hyp_str = hyp ? "smallness holds" : "smallness fails";

    auto conditional = [&](BoundRow r) {
        r.hypothesis = hyp_str;
        if (!hyp) {
            r.verdict = "hypothesis failed, not evaluated";
            r.margin = 0.0;
        }
        rep.rows.push_back(r);
    };
    {
        BoundRow r;
        r.name = "upper-omega-gap";
        r.lhs = in.lambda1_Omega - in.lambda1_N;
        r.rhs = 16.0 / (7.0 * (1.0 - in.ell)) *
                (in.lambda1_N * in.ell +
                 4.5 * std::sqrt(in.lambda1_N * in.c_nu));
        r.margin = r.rhs - r.lhs;  // upper bound: rhs must dominate
        r.verdict = verdict_of(r.margin, std::max(std::abs(r.lhs), std::abs(r.rhs)));
        conditional(r);
    }
    const double denom = std::min(l1m, l1p);
    {
        BoundRow r;
        r.name = "upper-ambient-gap-plus";
        r.lhs = in.lambda1_N - l1p;
        r.rhs = 4.0 / 7.0 * (17.0 + l1p / denom) * std::sqrt(l1p) *
                std::sqrt(in.cap_plus);
        r.margin = r.rhs - r.lhs;
        r.verdict = verdict_of(r.margin, std::max(std::abs(r.lhs), std::abs(r.rhs)));
        conditional(r);
    }
    {
        BoundRow r;
        r.name = "upper-ambient-gap-minus";
        r.lhs = in.lambda1_N - l1m;
        r.rhs = 4.0 / 7.0 * (17.0 + l1m / denom) * std::sqrt(l1m) *
                std::sqrt(in.cap_minus);
        r.margin = r.rhs - r.lhs;
        r.verdict = verdict_of(r.margin, std::max(std::abs(r.lhs), std::abs(r.rhs)));
        conditional(r);
    }
    return rep;
}

void BoundReport::write_csv(std::ostream& os) const {
    os.precision(17);
    os << "inequality,lhs,rhs,margin,verdict,hypothesis,case_row\n";
    for (const auto& r : rows)
        os << r.name << ',' << r.lhs << ',' << r.rhs << ',' << r.margin << ','
           << r.verdict << ',' << (r.hypothesis.empty() ? "-" : r.hypothesis)
           << ',' << r.case_row << '\n';
}

bool BoundReport::all_passed() const {
    for (const auto& r : rows)
        if (r.verdict == "fail") return false;
    return true;
}

SampledRange sample_tau_energy_range(const SymmetricForm& Q,
                                     const SymmetricForm& Mtau,
                                     double lambda1_minus, double lambda1_plus,
                                     int samples, unsigned seed) {
    if (!(lambda1_minus < 0.0 && lambda1_plus > 0.0))
        throw std::invalid_argument("branch extremes must straddle zero");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SampledRange out;
    out.samples = samples;
    out.min_value = std::numeric_limits<double>::infinity();
    out.max_value = -out.min_value;
    const int n = Q.dim();
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd u(n);
        for (int i = 0; i < n; ++i) u[i] = gauss(rng);
        const double qn = u.dot(Q.matrix * u);
        u /= std::sqrt(std::max(qn, 1e-300));
        const double t = u.dot(Mtau.matrix * u);
        out.min_value = std::min(out.min_value, t);
        out.max_value = std::max(out.max_value, t);
    }
    const double lo = 1.0 / lambda1_minus, hi = 1.0 / lambda1_plus;
    out.within = out.min_value >= lo - 1e-10 && out.max_value <= hi + 1e-10;
    return out;
}

}  // namespace wsl
