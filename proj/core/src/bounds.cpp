#include "wsl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wsl {

namespace {

struct PsiParts {
    double volume = 0.0;    // integral of u_h^2 over U(h,t) against V2
    double boundary = 0.0;  // integral of u_h^2 over U_Gamma(h,t) against W
};

PsiParts psi_parts(const LevelSetProbe& probe, double h, double t) {
    const Mesh& mesh = *probe.mesh;
    const Chart& c = *probe.chart;
    const WeightSet& ws = *probe.ws;
    const Eigen::VectorXd& u = probe.u;
    PsiParts out;

    auto add_volume = [&](const Point& x, double val, double dv) {
        if (!(c.to_chart(x).norm() < t)) return;
        if (!(val > h)) return;
        const double uh = val - h;
        out.volume += dv * uh * uh * ws.V2(x);
    };
    const double g = 0.5 / std::sqrt(3.0);
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const auto& s = mesh.simplices[e];
        if (mesh.dimension == 1) {
            const Point a = mesh.nodes[s[0]], b = mesh.nodes[s[1]];
            const double hlen = (b - a).norm();
            for (double tq : {0.5 - g, 0.5 + g}) {
                const Point x = a + tq * (b - a);
                const double val = (1.0 - tq) * u[s[0]] + tq * u[s[1]];
                add_volume(x, val, 0.5 * hlen);
            }
        } else {
            const Point a = mesh.nodes[s[0]], b = mesh.nodes[s[1]],
                        cc = mesh.nodes[s[2]];
            const double area = 0.5 * std::abs((b - a).x() * (cc - a).y() -
                                               (b - a).y() * (cc - a).x());
            const double bc[3][3] = {
                {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
            for (const auto& w : bc) {
                const Point x = w[0] * a + w[1] * b + w[2] * cc;
                const double val =
                    w[0] * u[s[0]] + w[1] * u[s[1]] + w[2] * u[s[2]];
                add_volume(x, val, area / 3.0);
            }
        }
    }
    for (const auto& f : mesh.facets) {
        if (f.tag != FacetTag::PhysicalGamma) continue;
        if (mesh.dimension == 1) {
            const int n = f.nodes[0];
            const Point x = mesh.nodes[n];
            if (!(c.to_chart(x).norm() < t)) continue;
            if (!(u[n] > h)) continue;
            const double uh = u[n] - h;
            out.boundary += uh * uh * ws.W(x);
        } else {
            const Point a = mesh.nodes[f.nodes[0]], b = mesh.nodes[f.nodes[1]];
            const double len = (b - a).norm();
            for (double tq : {0.5 - g, 0.5 + g}) {
                const Point x = a + tq * (b - a);
                if (!(c.to_chart(x).norm() < t)) continue;
                const double val =
                    (1.0 - tq) * u[f.nodes[0]] + tq * u[f.nodes[1]];
                if (!(val > h)) continue;
                const double uh = val - h;
                out.boundary += 0.5 * len * uh * uh * ws.W(x);
            }
        }
    }
    return out;
}

}  // namespace

double psi(const LevelSetProbe& probe, double h, double t) {
    if (!(t <= probe.chart->r_hat + 1e-12))
        throw std::invalid_argument("probe radius exceeds the chart");
    const PsiParts p = psi_parts(probe, h, t);
    return std::sqrt(p.volume + p.boundary);
}

DeGiorgiResult degiorgi_bound(const Mesh& mesh, const Covering& cov,
                              int chart_index, const Eigen::VectorXd& u,
                              const WeightSet& ws, const DeGiorgiData& data,
                              const DeGiorgiExponents& exp,
                              const DeGiorgiOptions& opts) {
    const Chart& c = cov.charts.at(chart_index);
    const double q2 = exp.q2, q3 = exp.q3, tV = exp.two_V, tW = exp.two_W;
    if (!(tV > 2.0 && tW > 2.0))
        throw std::invalid_argument("target exponents must exceed 2");
    const double floor_q = std::max(tV / (tV - 2.0), tW / (tW - 2.0));
    if (!(q2 > floor_q && q3 > floor_q))
        throw std::invalid_argument(
            "data exponents too small for the iteration (q > 2*/(2*-2) "
            "required)");
    const double eps =
        std::min({1.0 - 1.0 / q2 - 2.0 / tW, 1.0 - 1.0 / q3 - 2.0 / tV,
                  1.0 - 1.0 / q2 - 2.0 / tV, 1.0 - 1.0 / q3 - 2.0 / tW});
    if (!(eps > 0.0))
        throw std::invalid_argument("exponent gaps give a nonpositive epsilon");

    LevelSetProbe probe{&mesh, &c, u, &ws};
    DeGiorgiResult res;
    res.epsilon = eps;

    // calibrated stand-ins for the iteration constants
    const double C2 = opts.safety * std::max({opts.embed_V, opts.embed_W, 1.0});
    const double C3 = C2;

    const PsiParts base = psi_parts(probe, 0.0, c.r_hat);
    const double u2V = std::sqrt(base.volume);
    const double u2W = std::sqrt(base.boundary);
    const double e2 = q2 * tV / (q2 * (tV - 2.0) - tV);
    const double e3 = q3 * tW / (q3 * (tW - 2.0) - tW);
    res.h0 = C2 *
             std::max({std::pow(data.c2_norm, e2), std::pow(data.c3_norm, e3),
                       1.0}) *
             std::max(u2V, u2W);
    if (std::max(u2V, u2W) == 0.0) res.h0 = 0.0;

    // nodal max of u+ on the chart core
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (c.covers(mesh.nodes[i], c.r))
            res.nodal_max = std::max(res.nodal_max, std::max(0.0, u[i]));

    const double psi0 = psi(probe, res.h0, c.r_hat);
    if (psi0 <= opts.emit_tol && res.nodal_max <= res.h0) {
        res.h = 0.0;
        res.bound = res.h0;
        res.certified = true;
        return res;
    }

    // smallest h satisfying the geometric-decay entry condition
    const double gamma = std::pow(2.0, (1.0 + eps) / eps);
    const double dsum = data.f_norm + data.f1_norm + res.h0;
    double h = std::max({psi0, dsum, 1e-12});
    auto entry_ok = [&](double hh) {
        return 2.0 * C3 * std::pow(gamma, 1.0 + eps) *
                   std::pow(psi0 / hh, eps) * (dsum + hh) / hh <=
               1.0;
    };
    int guard = 0;
    while (!entry_ok(h) && guard++ < 200) h *= 2.0;

    double psi_prev = psi0;
    res.iterations = 0;
    bool emitted = psi_prev <= opts.emit_tol;
    for (int i = 1; i <= opts.iteration_cap && !emitted; ++i) {
        const double hi = res.h0 + h * (1.0 - std::pow(0.5, i));
        const double Ri = c.r + std::pow(0.5, i) * (c.r_hat - c.r);
        const double pi = psi(probe, hi, Ri);
        res.contraction =
            psi_prev > 0.0 ? pi / std::pow(psi_prev, 1.0 + eps) : 0.0;
        res.iterations = i;
        psi_prev = pi;
        if (pi <= opts.emit_tol) emitted = true;
    }
    if (!emitted) {
        res.h = h;
        res.bound = res.h0 + h;
        res.certified = false;
        res.note = "no certificate: iteration did not contract within the cap";
        return res;
    }

    // a-posteriori tightening of the certificate against the core ball
    int doublings = 0;
    while ((psi(probe, res.h0 + h, c.r) > 0.0 || res.nodal_max > res.h0 + h) &&
           doublings < 32) {
        h *= 2.0;
        ++doublings;
    }
    if (doublings > 0)
        res.note = "level doubled a posteriori " + std::to_string(doublings) +
                   " times";
    res.h = h;
    res.bound = res.h0 + h;
    res.certified = psi(probe, res.bound, c.r) == 0.0 &&
                    res.nodal_max <= res.bound;
    return res;
}

void write_degiorgi_csv(std::ostream& os, int chart_index,
                        const DeGiorgiResult& r) {
    os.precision(17);
    os << "chart,h0,h,epsilon,iterations,certified_bound,nodal_max,margin,"
          "certified\n";
    os << chart_index << ',' << r.h0 << ',' << r.h << ',' << r.epsilon << ','
       << r.iterations << ',' << r.bound << ',' << r.nodal_max << ','
       << (r.bound - r.nodal_max) << ',' << (r.certified ? 1 : 0) << '\n';
}

double tail_sup(const Eigen::VectorXd& u, const Mesh& mesh, int m) {
    double best = 0.0;
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (mesh.exhaustion_index[i] > m)
            best = std::max(best, std::abs(u[i]));
    return best;
}

double local_sup_ratio(const Mesh& mesh, const Chart& chart,
                       const Eigen::VectorXd& u, const WeightSet& ws,
                       double q) {
    const int n = std::max(2, mesh.dimension);
    if (!(q > n)) throw std::invalid_argument("local sup ratio requires q > n");

    double sup = 0.0;
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (chart.covers(mesh.nodes[i], chart.r_hat))
            sup = std::max(sup, std::abs(u[i]));
    if (sup == 0.0) return 0.0;

    // ||u||_{1,q} restricted to the chart patch: quadrature-point indicator
    const double g = 0.5 / std::sqrt(3.0);
    double total = 0.0;
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const auto& s = mesh.simplices[e];
        if (mesh.dimension == 1) {
            const Point a = mesh.nodes[s[0]], b = mesh.nodes[s[1]];
            const double hlen = (b - a).norm();
            const double du = std::abs(u[s[1]] - u[s[0]]) / hlen;
            for (double tq : {0.5 - g, 0.5 + g}) {
                const Point x = a + tq * (b - a);
                if (!chart.covers(x, chart.r_hat)) continue;
                const double val = (1.0 - tq) * u[s[0]] + tq * u[s[1]];
                total += 0.5 * hlen *
                         (std::pow(std::abs(val), q) * ws.V0(x) +
                          std::pow(du, q) * ws.V1(x));
            }
        } else {
            const Point a = mesh.nodes[s[0]], b = mesh.nodes[s[1]],
                        cc = mesh.nodes[s[2]];
            Eigen::Matrix2d J;
            J.col(0) = b - a;
            J.col(1) = cc - a;
            const double area = 0.5 * std::abs(J.determinant());
            const Eigen::Matrix2d Jit = J.inverse().transpose();
            const Eigen::Vector2d grad =
                u[s[0]] * (Jit * Eigen::Vector2d(-1, -1)) +
                u[s[1]] * (Jit * Eigen::Vector2d(1, 0)) +
                u[s[2]] * (Jit * Eigen::Vector2d(0, 1));
            const double dn = grad.norm();
            const double bc[3][3] = {
                {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
            for (const auto& w : bc) {
                const Point x = w[0] * a + w[1] * b + w[2] * cc;
                if (!chart.covers(x, chart.r_hat)) continue;
                const double val =
                    w[0] * u[s[0]] + w[1] * u[s[1]] + w[2] * u[s[2]];
                total += area / 3.0 *
                         (std::pow(std::abs(val), q) * ws.V0(x) +
                          std::pow(dn, q) * ws.V1(x));
            }
        }
    }
    const double denom = (chart.dpsi_norm() * (chart.r_hat - chart.r) + 1.0) *
                         std::pow(total, 1.0 / q);
    return denom > 0.0 ? sup / denom : 0.0;
}

}  // namespace wsl
