#pragma once

#include "wsl/assembly.hpp"
#include "wsl/spectral.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wsl {

enum class SolveStatus { Unique, Resonant };
std::string to_string(SolveStatus s);

struct SolveOutcome {
    SolveStatus status = SolveStatus::Unique;
    std::optional<Eigen::VectorXd> solution;
    std::vector<Eigen::VectorXd> eigenspace;  // Q-orthonormal basis at lambda
    std::vector<double> orthogonality;        // r_v = v . load per basis vector
    double residual = 0.0;
    double shift = 0.0;  // recorded internal shift c; the assembled system
                         // Q_c - lambda M_{tau_c} is algebraically shift-free
    std::string note;
};

/// Q-orthonormal basis of the eigenvalue cluster at lambda; empty when lambda
/// is farther than cluster_tol (relative) from the spectrum.
std::vector<Eigen::VectorXd> eigenspace(double lambda, const SymmetricForm& Q,
                                        const SymmetricForm& Mtau,
                                        double cluster_tol = 1e-6);

/// Solves (Q - lambda M_tau) u = load, or detects resonance and applies the
/// orthogonality criterion: solvable iff every r_v vanishes, in which case
/// the projected system is solved and the solution Q-orthogonalized against
/// the eigenspace.
SolveOutcome fredholm_solve(const SymmetricForm& Q, const SymmetricForm& Mtau,
                            double lambda, const LoadVector& load, double tol,
                            double cluster_tol = 1e-6);

struct ApproxOptions {
    std::vector<double> q_list{1.2, 1.4};
    bool quadratic_clamp = false;  // clamp at j^2 instead of j
    double tol = 1e-10;
    double cluster_tol = 1e-6;
};

struct ApproxStage {
    int stage = 0;
    double data_l1_distance = 0.0;   // L1(V2) distance of f0_j to f0
    std::vector<double> norms;       // per configured q
    double weak_residual = 0.0;
    double removed_component = 0.0;  // resonant projection magnitude
};

struct ApproxSolution {
    std::vector<ApproxStage> history;
    Eigen::VectorXd limit;
    double weak_residual = 0.0;
    std::vector<double> q_list;
    std::string note;
    void write_csv(std::ostream& os) const;
};

/// Solution by approximation: stage-j data clamps f0 at level j (or j^2) and
/// zeroes it past D_j, solves every stage through the Fredholm path, and
/// records the per-q norm history with the limit candidate.
ApproxSolution approximate_solve(const Mesh& mesh, const WeightSet& ws,
                                 const ScalarField& f0, const ScalarField& f1,
                                 double lambda, int stages,
                                 const ApproxOptions& opts = {});

}  // namespace wsl
