#pragma once

#include "wsl/assembly.hpp"
#include "wsl/covering.hpp"

#include <iosfwd>
#include <string>

namespace wsl {

/// Level-set probe of a nodal field on one boundary chart: Psi(h,t) is the
/// square root of the (u-h)+ energies over {u > h} inside the chart ball of
/// radius t, volume part against V2 and Gamma part against W.
struct LevelSetProbe {
    const Mesh* mesh = nullptr;
    const Chart* chart = nullptr;
    Eigen::VectorXd u;
    const WeightSet* ws = nullptr;
};

double psi(const LevelSetProbe& probe, double h, double t);

struct DeGiorgiData {
    double f_norm = 0.0;   // ||f||_{q2, V2} on the chart patch
    double f1_norm = 0.0;  // ||f1||_{q3, W} on the boundary slice
    double c2_norm = 0.0;  // ||c2||_{q2, V2}
    double c3_norm = 0.0;  // ||c3||_{q3, W}
};

struct DeGiorgiExponents {
    double q2 = 4.0;
    double q3 = 4.0;
    double two_V = 6.0;  // target exponent of 2 under the volume embedding
    double two_W = 6.0;  // target exponent of 2 under the trace embedding
};

struct DeGiorgiOptions {
    double embed_V = 1.0;   // measured embedding operator norm
    double embed_W = 1.0;   // measured trace operator norm
    double safety = 2.0;    // multiplier on the measured constants
    double emit_tol = 1e-12;
    int iteration_cap = 64;
};

struct DeGiorgiResult {
    double h0 = 0.0;
    double h = 0.0;
    double epsilon = 0.0;
    double bound = 0.0;       // certified level h0 + h
    double nodal_max = 0.0;   // max of u+ on the chart patch
    int iterations = 0;
    bool certified = false;
    double contraction = 0.0;  // last Psi_i / Psi_{i-1}^{1+eps}
    std::string note;
};

/// Geometric truncation iteration h_i = h0 + h(1 - 2^-i),
/// R_i = r + 2^-i (rhat - r), driving Psi to zero; the returned level
/// certifies an upper bound for u+ on the chart core.
DeGiorgiResult degiorgi_bound(const Mesh& mesh, const Covering& cov,
                              int chart_index, const Eigen::VectorXd& u,
                              const WeightSet& ws, const DeGiorgiData& data,
                              const DeGiorgiExponents& exp,
                              const DeGiorgiOptions& opts = {});

void write_degiorgi_csv(std::ostream& os, int chart_index,
                        const DeGiorgiResult& r);

/// Discrete ess sup of |u| over nodes with exhaustion index > m.
double tail_sup(const Eigen::VectorXd& u, const Mesh& mesh, int m);

/// ||u||_inf on the chart patch divided by
/// [||dpsi||(rhat - r) + 1] ||u||_{1,q} on the patch; 0 when u vanishes there.
double local_sup_ratio(const Mesh& mesh, const Chart& chart,
                       const Eigen::VectorXd& u, const WeightSet& ws, double q);

}  // namespace wsl
