#pragma once

#include "wsl/covering.hpp"
#include "wsl/mesh.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wsl {

using ScalarField = std::function<double(const Point&)>;

/// The weight family V0..V3, W, W1, the indefinite coefficient tau, and the
/// per-chart calibration functions b1..b4. The b's default to the tightest
/// per-chart extrema of the corresponding weights; call calibrate() to fill
/// them from a covering.
struct WeightSet {
    ScalarField V0, V1, V2, V3, W, W1;
    ScalarField tau;

    // calibration: chart index -> value (filled by calibrate)
    std::vector<double> b1, b2, b3, b4;

    struct PowerParams {
        double alpha0 = 0.0, alpha1 = 0.0, alpha2 = 0.0;
    };
    std::optional<PowerParams> power;

    static WeightSet unit();
    static WeightSet power_family(double alpha0, double alpha1, double alpha2);

    /// Per-chart extrema of the weights over sampled points: b1 = inf V1/||dpsi||,
    /// b2 = sup V2, b3 = sup W (boundary charts), b4 = inf V0.
    void calibrate(const Mesh& mesh, const Covering& cov, int samples_per_chart,
                   unsigned seed);
};

/// Evaluates each weight at the given points; throws on a nonpositive value.
struct WeightTable {
    std::vector<double> V0, V1, V2, W, W1, tau;
};
WeightTable eval_weights(const WeightSet& ws, const std::vector<Point>& points);

enum class Verdict { Pass, Fail, Untestable };
std::string to_string(Verdict v);

struct ConditionEntry {
    Verdict verdict = Verdict::Untestable;
    double constant = 0.0;   // smallest constant making the inequality hold
    Point worst_point = Point::Zero();
    std::string detail;
};

struct ConditionReport {
    std::map<std::string, ConditionEntry> entries;  // "W1", ..., "H1i", ...
    double K_q = 0.0;   // fitted constant of (W1)
    double K_3 = 0.0;   // fitted constant of (W4)/(W5)
    int samples = 0;
    unsigned seed = 0;
    bool tau_changes_sign = false;
};

struct CheckOptions {
    int samples = 64;       // random samples per chart, plus quadrature points
    unsigned seed = 1;
    std::optional<double> tail_sigma_q2;  // (H1)(iii) surrogate, if computed
};

ConditionReport check_conditions(const Mesh& mesh, const Covering& cov,
                                 const WeightSet& ws, double q,
                                 const CheckOptions& opts = {});

/// The embedding constant B^m_{q,q0}: supremum over charts with center in
/// D^m of (b2^{1/q0}/b1^{1/q}) ||G||^{1/q0} ||G^{-1}||^{1/q} rhat^{n/q0-n/q+1}.
/// Returns 0 when no chart qualifies.
double embedding_constant_B(const Mesh& mesh, const Covering& cov,
                            const WeightSet& ws, double q, double q0, int m);

/// Trace analogue over kind-1 charts with center in Gamma^m, boundary
/// exponent rhat^{(n-1)/q1 - n/q + 1}.
double trace_constant_B(const Mesh& mesh, const Covering& cov,
                        const WeightSet& ws, double q, double q1, int m);

/// q |-> q_V of the power family: q (n + alpha2) / (n - q + alpha0).
/// Validates n q/(n-q) >= q_V; throws for q >= n.
struct TargetExponent {
    double value = 0.0;
    bool sobolev_range_ok = true;        // q_V <= nq/(n-q)
    bool strict_gain = true;             // q_V > q
};
TargetExponent target_exponent(double q, int n, double alpha0, double alpha2);

}  // namespace wsl
