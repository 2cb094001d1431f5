#pragma once

#include "wsl/assembly.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace wsl {

struct EigenPair {
    double value = 0.0;
    Eigen::VectorXd vector;      // reduced numbering of the source forms
    double residual = 0.0;       // ||Q x - lambda M x|| / (scale ||x||)
    double normalization = 0.0;  // (tau x, x)_{V2} after scaling; +-1 or flagged
    bool q_normalized = false;   // kept Q-normalized: (tau x, x) degenerated
    int cluster = 0;             // eigenvalues within 1e-8 relative share an id
};

struct Spectrum {
    // negative branch ordered away from zero: lambda_1^- >= lambda_2^- >= ...
    std::vector<EigenPair> negative;
    // positive branch ordered away from zero: lambda_1^+ <= lambda_2^+ <= ...
    std::vector<EigenPair> positive;
    std::string note;
    DofMap dofs;

    void write_csv(std::ostream& os) const;
};

/// Extreme eigenvalues of Q x = lambda M x through the compact operator
/// A = Q^{-1} M, iterated with Q-inner-product orthogonalization; lambda =
/// 1/mu per branch. Deterministic for a fixed seed.
Spectrum solve_pencil(const SymmetricForm& Q, const SymmetricForm& Mtau,
                      int count_per_branch, double tol = 1e-10,
                      unsigned seed = 1);

/// Positive spectrum with zero boundary values on every tagged facet of N;
/// requires tau >= delta > 0 on N. Eigenvectors carry reduced numbering.
Spectrum dirichlet_spectrum(const Mesh& meshN, const WeightSet& ws, int count,
                            double tol = 1e-10, double delta = 1e-12);

/// Best constant of ||u||_{2,V2} <= C ||u||_Q: sqrt of the largest
/// eigenvalue of the mass form against Q.
double operator_norm_embedding(const SymmetricForm& Q,
                               const SymmetricForm& massV2, double tol = 1e-10);

/// sigma_m: the embedding norm against a mass form restricted past D_m.
double tail_functional(const SymmetricForm& Q,
                       const SymmetricForm& massV2_on_tail, int m,
                       double tol = 1e-10);

/// Trace analogue with the boundary mass restricted past Gamma_m.
double trace_tail_functional(const SymmetricForm& Q,
                             const SymmetricForm& boundary_mass_on_tail, int m,
                             double tol = 1e-10);

}  // namespace wsl
