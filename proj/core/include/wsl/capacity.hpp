#pragma once

#include "wsl/assembly.hpp"
#include "wsl/spectral.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wsl {

enum class CapVariant { CapPlus, CapMinus, CNuGamma };
std::string to_string(CapVariant v);

struct CapacityResult {
    double value = 0.0;
    Eigen::VectorXd minimizer;
    double constraint_residual = 0.0;  // max violation over constrained nodes
    CapVariant variant = CapVariant::CapPlus;
    double ell = 0.0;                  // CNuGamma budget parameter
    std::string active_constraints;
    std::string note;
};

/// Minimum Q-energy over fields pinned to phi1 on the given node set
/// (elimination of the constrained block; the value is the Schur-complement
/// energy of the constraint).
CapacityResult cap_pm(const Mesh& ambient, const std::vector<int>& region_nodes,
                      const Eigen::VectorXd& phi1, const SymmetricForm& Q,
                      CapVariant variant);

/// Relaxed boundary capacity: minimum Q-energy subject to, per Gamma facet,
/// matching the facet-integrated normal flux of kappa1; a quadratic budget
/// (tau (u-kappa1), u-kappa1)_{V2} <= ell over N minus Omega; and per-D_m
/// energy comparisons against phiOmega. The relaxation only enlarges the
/// admissible set, so the value is reported as a lower bound.
CapacityResult c_nu_gamma(const Mesh& meshN, const std::vector<int>& omega_nodes,
                          const Eigen::VectorXd& kappa1,
                          const Eigen::VectorXd& phiOmega, double ell,
                          const SymmetricForm& Q, const WeightSet& ws);

struct BoundRow {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    std::string verdict;      // pass | fail | hypothesis failed, not evaluated
    std::string hypothesis;   // smallness precondition status
    int case_row = 0;         // selected ordering row, 0 when not applicable
};

struct BoundReport {
    std::vector<BoundRow> rows;
    int selected_case = 0;
    std::string note;
    void write_csv(std::ostream& os) const;
    bool all_passed() const;
};

/// Numeric inputs of the two-sided eigenvalue comparison audit.
struct ComparisonInputs {
    double lambda1_N = 0.0;
    double lambda2_N = 0.0;
    double lambda1_Omega = 0.0;
    std::optional<double> lambda1_minus_M, lambda2_minus_M;
    std::optional<double> lambda1_plus_M, lambda2_plus_M;
    double c_nu = 0.0;
    double cap_plus = 0.0;
    double cap_minus = 0.0;
    double ell = 0.0;
    double phi_extension_energy = 0.0;  // squared graph norm of the extension
};

/// Audits both lower-bound inequalities (with the ordering case table) and,
/// when the smallness preconditions hold, both upper-bound inequalities with
/// constants 16/(7(1-ell)), 9/2, 4/7, 17 as printed.
BoundReport verify_comparison_bounds(const ComparisonInputs& in);

/// Sampled invariant: for Q-normalized u, (tau u, u)_{V2} stays inside
/// [1/lambda_1^-, 1/lambda_1^+].
struct SampledRange {
    double min_value = 0.0;
    double max_value = 0.0;
    int samples = 0;
    bool within = false;
};
SampledRange sample_tau_energy_range(const SymmetricForm& Q,
                                     const SymmetricForm& Mtau,
                                     double lambda1_minus, double lambda1_plus,
                                     int samples, unsigned seed);

}  // namespace wsl
