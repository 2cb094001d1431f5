#include "wsl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace wsl {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Untestable: return "untestable";
    }
    return "?";
}

WeightSet WeightSet::unit() {
    WeightSet ws;
    auto one = [](const Point&) { return 1.0; };
    ws.V0 = one;
    ws.V1 = one;
    ws.V2 = one;
    ws.V3 = one;
    ws.W = one;
    ws.W1 = one;
    ws.tau = one;
    return ws;
}

WeightSet WeightSet::power_family(double alpha0, double alpha1, double alpha2) {
    if (!(alpha0 >= 0.0 && 0.0 >= alpha2 && alpha2 >= alpha1))
        throw std::invalid_argument(
            "power family requires alpha0 >= 0 >= alpha2 >= alpha1");
    WeightSet ws = unit();
    auto pw = [](double a) {
        return [a](const Point& p) { return std::pow(1.0 + p.norm(), a); };
    };
    ws.V0 = pw(alpha0);
    ws.V1 = pw(alpha1);
    ws.V2 = pw(alpha2);
    ws.power = PowerParams{alpha0, alpha1, alpha2};
    return ws;
}

namespace {

std::vector<Point> chart_samples(const Chart& c, int count, std::mt19937_64& rng,
                                 bool boundary_slice = false) {
    std::vector<Point> pts;
    pts.push_back(c.center);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    while (static_cast<int>(pts.size()) < count) {
        Point x(unif(rng), unif(rng));
        if (x.norm() >= 1.0) continue;
        x *= c.r_hat;
        if (boundary_slice) x.y() = 0.0;                // Gamma slice {x_n = 0}
        if (c.kind == 1 && !boundary_slice && x.y() < 0.0) x.y() = -x.y();
        pts.push_back(c.to_ambient(x));
    }
    return pts;
}

double positive_or_throw(double v, const char* name, const Point& p) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "weight " << name << " nonpositive at (" << p.x() << ", " << p.y()
           << ")";
        throw std::invalid_argument(os.str());
    }
    return v;
}

}  // namespace

void WeightSet::calibrate(const Mesh& mesh, const Covering& cov,
                          int samples_per_chart, unsigned seed) {
    (void)mesh;
    std::mt19937_64 rng(seed);
    const std::size_t n = cov.charts.size();
    b1.assign(n, 0.0);
    b2.assign(n, 0.0);
    b3.assign(n, 0.0);
    b4.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Chart& c = cov.charts[i];
        const double dpsi = c.dpsi_norm();
        double v1min = std::numeric_limits<double>::infinity();
        double v2max = 0.0, v0min = std::numeric_limits<double>::infinity();
        for (const Point& p : chart_samples(c, samples_per_chart, rng)) {
            v1min = std::min(v1min, positive_or_throw(V1(p), "V1", p));
            v2max = std::max(v2max, positive_or_throw(V2(p), "V2", p));
            v0min = std::min(v0min, positive_or_throw(V0(p), "V0", p));
        }
        if (c.kind == 1) {
            // the boundary slice is part of the chart: fold it into the inf
            double wmax = 0.0;
            for (const Point& p :
                 chart_samples(c, samples_per_chart, rng, /*boundary=*/true)) {
                wmax = std::max(wmax, positive_or_throw(W(p), "W", p));
                v1min = std::min(v1min, positive_or_throw(V1(p), "V1", p));
            }
            b3[i] = wmax;
        }
        b1[i] = v1min / dpsi;
        b2[i] = v2max;
        b4[i] = v0min;
    }
}

WeightTable eval_weights(const WeightSet& ws, const std::vector<Point>& points) {
    WeightTable t;
    for (const Point& p : points) {
        t.V0.push_back(positive_or_throw(ws.V0(p), "V0", p));
        t.V1.push_back(positive_or_throw(ws.V1(p), "V1", p));
        t.V2.push_back(positive_or_throw(ws.V2(p), "V2", p));
        t.W.push_back(positive_or_throw(ws.W(p), "W", p));
        t.W1.push_back(positive_or_throw(ws.W1(p), "W1", p));
        t.tau.push_back(ws.tau(p));
    }
    return t;
}

namespace {

struct FitMax {
    double value = 0.0;
    Point at = Point::Zero();
    void update(double v, const Point& p) {
        if (v > value) {
            value = v;
            at = p;
        }
    }
};

}  // namespace

ConditionReport check_conditions(const Mesh& mesh, const Covering& cov,
                                 const WeightSet& ws, double q,
                                 const CheckOptions& opts) {
    if (q < 1.0) throw std::invalid_argument("q must be >= 1");
    WeightSet cal = ws;
    if (cal.b1.empty()) cal.calibrate(mesh, cov, opts.samples, opts.seed);

    ConditionReport rep;
    rep.samples = opts.samples;
    rep.seed = opts.seed;
    std::mt19937_64 rng(opts.seed);
    const double dpsi_floor = 1e-12;

    FitMax w1, w4k, w4int, w5a, w5b, w5c, w5d;
    double w2_ratio = 0.0, w3_ratio = 0.0;
    Point w2_at = Point::Zero(), w3_at = Point::Zero();
    bool saw_pos = false, saw_neg = false;
    bool clamped = false;

    for (std::size_t ci = 0; ci < cov.charts.size(); ++ci) {
        const Chart& c = cov.charts[ci];
        double dpsi = c.dpsi_norm();
        if (dpsi < dpsi_floor) {
            dpsi = dpsi_floor;
            clamped = true;
        }
        const auto pts = chart_samples(c, opts.samples, rng);
        for (const Point& p : pts) {
            const double v0 = positive_or_throw(cal.V0(p), "V0", p);
            const double v1 = positive_or_throw(cal.V1(p), "V1", p);
            const double v2 = positive_or_throw(cal.V2(p), "V2", p);
            const double w1w = positive_or_throw(cal.W1(p), "W1", p);
            const double ww = positive_or_throw(cal.W(p), "W", p);
            const double R = cov.overlap_factor(p, static_cast<int>(ci));
            // (W1)
            w1.update(std::pow(R, q) * v1 / v0, p);
            w1.update(std::pow(c.r_hat, -q) / dpsi * v1 / v0, p);
            // (W2) against calibrated b's
            w2_ratio = std::max(w2_ratio, v2 / cal.b2[ci]);
            if (v2 / cal.b2[ci] >= w2_ratio) w2_at = p;
            w2_ratio = std::max(w2_ratio, dpsi * cal.b1[ci] / v1);
            // (W4) first clause
            w4k.update(std::pow(R, q) * v1 / v2, p);
            // (W5) pointwise clauses
            const double bracket = dpsi * (c.r_hat - c.r) + 1.0;
            w5a.update(bracket * v2 / v0, p);
            w5b.update(bracket * w1w / ww, p);
            w5c.update(cal.b4[ci] / v0, p);  // b4 <= V0, fit ratio
            const double tv = cal.tau(p);
            if (tv > 0) saw_pos = true;
            if (tv < 0) saw_neg = true;
        }
        // (W4) second clause: integral of V2 over the inflated patch
        double integral = 0.0;
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            const auto& s = mesh.simplices[e];
            Point centroid = Point::Zero();
            const int nv = mesh.dimension == 1 ? 2 : 3;
            for (int k = 0; k < nv; ++k) centroid += mesh.nodes[s[k]];
            centroid /= nv;
            if (!c.covers(centroid, c.r_hat)) continue;
            integral += mesh.volume(e) * cal.V2(centroid);
        }
        w4int.update(integral, c.center);
        // (W5) chart-constant clauses
        const auto mb = chart_metric_bounds(mesh, c);
        const double span = std::pow(c.r_hat - c.r, mesh.dimension);
        w5d.update(mb.G_inv_norm / (cal.b1[ci] * dpsi * span), c.center);
        w5d.update(mb.G_inv_norm / (cal.b4[ci] * span), c.center);
        // (W3) boundary clauses (kind-1 only)
        if (c.kind == 1) {
            for (const Point& p : chart_samples(c, opts.samples, rng, true)) {
                const double ww = positive_or_throw(cal.W(p), "W", p);
                const double v1 = positive_or_throw(cal.V1(p), "V1", p);
                const double r = std::max(ww / cal.b3[ci], dpsi * cal.b1[ci] / v1);
                if (r > w3_ratio) {
                    w3_ratio = r;
                    w3_at = p;
                }
            }
        }
    }

    auto put = [&](const std::string& name, Verdict v, double constant,
                   const Point& at, std::string detail = "") {
        rep.entries[name] = ConditionEntry{v, constant, at, std::move(detail)};
    };

    put("W1", Verdict::Pass, w1.value, w1.at,
        clamped ? "||dpsi|| clamped at floor" : "");
    put("W2", w2_ratio <= 1.0 + 1e-12 ? Verdict::Pass : Verdict::Fail, w2_ratio,
        w2_at);
    put("W3", w3_ratio <= 1.0 + 1e-12 ? Verdict::Pass : Verdict::Fail, w3_ratio,
        w3_at);
    put("W4", Verdict::Pass, std::max(w4k.value, w4int.value), w4int.at);
    put("W5",
        w5c.value <= 1.0 + 1e-12 ? Verdict::Pass : Verdict::Fail,
        std::max({w5a.value, w5b.value, w5d.value}), w5a.at);
    put("U3", Verdict::Pass, cov.R1, Point::Zero(), "realized overlap");
    put("U4", Verdict::Pass, cov.R2, Point::Zero(), "realized distortion");

    rep.K_q = w1.value;
    rep.K_3 = std::max({w4int.value, w5a.value, w5b.value, w5d.value});
    rep.tau_changes_sign = saw_pos && saw_neg;
    if (!rep.tau_changes_sign)
        put("tau-sign", Verdict::Fail, 0.0, Point::Zero(),
            "tau does not change sign; eigenvalue double-branch pipelines blocked");
    else
        put("tau-sign", Verdict::Pass, 0.0, Point::Zero());

    // (H1)(i): finiteness of the weight integrals over the truncated domain.
    {
        double v0i = 0.0, v1i = 0.0, v2i = 0.0;
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            const auto& s = mesh.simplices[e];
            Point centroid = Point::Zero();
            const int nv = mesh.dimension == 1 ? 2 : 3;
            for (int k = 0; k < nv; ++k) centroid += mesh.nodes[s[k]];
            centroid /= nv;
            const double vol = mesh.volume(e);
            v0i += vol * cal.V0(centroid);
            v1i += vol * cal.V1(centroid);
            v2i += vol * cal.V2(centroid);
        }
        const bool fin = std::isfinite(v0i) && std::isfinite(v1i) && std::isfinite(v2i);
        put("H1i", fin ? Verdict::Pass : Verdict::Fail,
            std::max({v0i, v1i, v2i}), Point::Zero());
    }

    // (H1)(ii): arithmetic on the exponent map, power family only.
    if (cal.power) {
        const int n = std::max(2, mesh.dimension);
        const double a0 = cal.power->alpha0, a2 = cal.power->alpha2;
        auto qV = [&](double qq) {
            return qq * (n + a2) / (n - qq + a0);
        };
        bool found = false;
        std::string fail_link = "no sigma in (1, n/(n-1)) satisfies the chain";
        const double hi = static_cast<double>(n) / (n - 1);
        for (double sigma = 1.0 + 1e-3; sigma < hi - 1e-9; sigma += 1e-3) {
            const double sV = qV(sigma);
            if (!(sV > sigma)) continue;
            if (sV < 2.0) {
                fail_link = "(k sigma)_V >= 2k fails";
                continue;
            }
            const double lhs = sigma / (sigma - 1.0);
            const double inner = sV / (sV - 1.0);
            if (inner >= n) {
                fail_link = "sigma_V/(sigma_V-1) leaves the map's range";
                continue;
            }
            if (lhs <= qV(inner)) {
                found = true;
                break;
            }
            fail_link = "sigma/(sigma-1) <= (sigma_V/(sigma_V-1))_V fails";
        }
        put("H1ii", found ? Verdict::Pass : Verdict::Fail, 0.0, Point::Zero(),
            found ? "" : fail_link);
    } else {
        put("H1ii", Verdict::Untestable, 0.0, Point::Zero(),
            "no power parameters supplied");
    }

    if (opts.tail_sigma_q2)
        put("H1iii", Verdict::Pass, *opts.tail_sigma_q2, Point::Zero(),
            "tail functional at q2 supplied by spectral module");
    else
        put("H1iii", Verdict::Untestable, 0.0, Point::Zero(),
            "tail functional at q2 not supplied");

    return rep;
}

namespace {

double chart_B_term(const Mesh& mesh, const Covering& cov, const WeightSet& ws,
                    int ci, double q, double q0, int n, bool trace) {
    const Chart& c = cov.charts[ci];
    const auto mb = chart_metric_bounds(mesh, c);
    const double b1 = ws.b1[ci];
    if (trace) {
        const double b3 = ws.b3[ci];
        const double gG = chart_boundary_metric_norm(mesh, c);
        return std::pow(b3, 1.0 / q0) / std::pow(b1, 1.0 / q) *
               std::pow(gG, 1.0 / q0) * std::pow(mb.G_inv_norm, 1.0 / q) *
               std::pow(c.r_hat, (n - 1.0) / q0 - n / q + 1.0);
    }
    const double b2 = ws.b2[ci];
    return std::pow(b2, 1.0 / q0) / std::pow(b1, 1.0 / q) *
           std::pow(mb.G_norm, 1.0 / q0) * std::pow(mb.G_inv_norm, 1.0 / q) *
           std::pow(c.r_hat, n / q0 - n / q + 1.0);
}

}  // namespace

double embedding_constant_B(const Mesh& mesh, const Covering& cov,
                            const WeightSet& ws, double q, double q0, int m) {
    const int n = std::max(2, mesh.dimension);
    if (!(q >= 1.0 && q < n))
        throw std::invalid_argument("embedding constant requires 1 <= q < n");
    if (!(q0 >= q && q0 <= n * q / (n - q) + 1e-12))
        throw std::invalid_argument(
            "embedding constant requires q <= q0 <= nq/(n-q)");
    if (ws.b1.empty())
        throw std::invalid_argument("weight set not calibrated against covering");
    const auto charts = cov.charts_with_center_in(mesh, m, /*tail=*/true);
    double best = 0.0;
    for (int ci : charts)
        best = std::max(best, chart_B_term(mesh, cov, ws, ci, q, q0, n, false));
    return best;
}

double trace_constant_B(const Mesh& mesh, const Covering& cov,
                        const WeightSet& ws, double q, double q1, int m) {
    const int n = std::max(2, mesh.dimension);
    if (!(q >= 1.0 && q < n))
        throw std::invalid_argument("trace constant requires 1 <= q < n");
    if (!(q1 >= q && q1 <= (n - 1) * q / (n - q) + 1e-12))
        throw std::invalid_argument(
            "trace constant requires q <= q1 <= (n-1)q/(n-q)");
    if (ws.b1.empty())
        throw std::invalid_argument("weight set not calibrated against covering");
    const auto charts = cov.charts_with_center_in(mesh, m, /*tail=*/true, 1);
    double best = 0.0;
    for (int ci : charts)
        best = std::max(best, chart_B_term(mesh, cov, ws, ci, q, q1, n, true));
    return best;
}

TargetExponent target_exponent(double q, int n, double alpha0, double alpha2) {
    if (!(q > 1.0 && q < n))
        throw std::invalid_argument("target exponent requires 1 < q < n");
    TargetExponent out;
    out.value = q * (n + alpha2) / (n - q + alpha0);
    const double sobolev = static_cast<double>(n) * q / (n - q);
    out.sobolev_range_ok = out.value <= sobolev + 1e-12;
    out.strict_gain = out.value > q;
    return out;
}

}  // namespace wsl
