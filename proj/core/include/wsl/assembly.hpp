#pragma once

#include "wsl/covering.hpp"
#include "wsl/mesh.hpp"
#include "wsl/weights.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace wsl {

/// Reduced degree-of-freedom numbering after Dirichlet elimination.
/// Identity when no nodes are eliminated.
struct DofMap {
    int full_size = 0;
    std::vector<int> reduced_to_full;  // size = reduced dimension

    static DofMap identity(int n);
    static DofMap excluding(const Mesh& mesh, const std::set<FacetTag>& tags);

    int reduced_size() const { return static_cast<int>(reduced_to_full.size()); }
    bool is_identity() const;
    /// Scatter a reduced vector back to full node numbering (zeros elsewhere).
    Eigen::VectorXd prolong(const Eigen::VectorXd& reduced) const;
    Eigen::VectorXd restrict_to(const Eigen::VectorXd& full) const;
};

struct SymmetricForm {
    Eigen::SparseMatrix<double> matrix;
    std::string tag;  // Q | massV2tau | massV2 | boundaryW | boundaryW1 | custom
    DofMap dofs;

    // Split representation of forms that fuse an O(1/h^2) gradient term with
    // an O(1) mass term: the fused entries round the mass bits at the
    // gradient ulp, which pushes constants measurably out of the gradient
    // kernel. Applying the parts separately keeps that kernel exact; the
    // fused matrix remains the factorization/storage representation.
    bool has_split = false;
    Eigen::SparseMatrix<double> grad_part, mass_part;

    int dim() const { return static_cast<int>(matrix.rows()); }
    Eigen::VectorXd apply_vec(const Eigen::VectorXd& v) const {
        if (has_split) return grad_part * v + mass_part * v;
        return matrix * v;
    }
    double apply(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        return u.dot(apply_vec(v));
    }
    /// Coordinate-list text dump (row col value), one entry per stored pair.
    void write_coo(std::ostream& os) const;
    /// Reduce to the given dof map (drops eliminated rows/columns).
    SymmetricForm reduced(const DofMap& map) const;
};

struct LoadVector {
    Eigen::VectorXd values;
    std::string provenance;
    DofMap dofs;
};

/// Q[u,v] = integral of g(grad u, grad v) dV1 + u v dV0, P1 elements, mapped
/// quadrature of order 2. Dirichlet-tagged nodes are eliminated when the tag
/// set is nonempty.
SymmetricForm assemble_Q(const Mesh& mesh, const WeightSet& ws,
                         const std::set<FacetTag>& dirichlet_on = {},
                         int quad_order = 2);

/// (c u, v) against the positive weight: integral of c u v w dv_g.
SymmetricForm assemble_weighted_mass(const Mesh& mesh,
                                     const ScalarField& coefficient,
                                     const ScalarField& weight,
                                     int quad_order = 2,
                                     const std::string& tag = "custom");

/// Boundary mass over facets with the given tag. 1D facets are points and
/// carry the point measure weight(node).
SymmetricForm assemble_boundary_mass(const Mesh& mesh, const ScalarField& weight,
                                     FacetTag tag, int quad_order = 2,
                                     const std::string& form_tag = "boundaryW");

/// Right side: integral of f0 v dV2 + integral over Gamma of f1 v dW1.
LoadVector assemble_load(const Mesh& mesh, const ScalarField& f0,
                         const ScalarField& f1, const WeightSet& ws,
                         int quad_order = 2);

/// Q assembled only over elements selected by the predicate (element index).
SymmetricForm assemble_Q_where(const Mesh& mesh, const WeightSet& ws,
                               const std::function<bool(int)>& keep_element,
                               int quad_order = 2);

/// Weighted mass assembled only over selected elements.
SymmetricForm assemble_weighted_mass_where(
    const Mesh& mesh, const ScalarField& coefficient, const ScalarField& weight,
    const std::function<bool(int)>& keep_element, int quad_order = 2);

/// Restrict a mass form to simplices whose exhaustion index exceeds m
/// (volume forms) or boundary facets past m (boundary forms).
SymmetricForm assemble_weighted_mass_tail(const Mesh& mesh,
                                          const ScalarField& coefficient,
                                          const ScalarField& weight, int m,
                                          int quad_order = 2);
SymmetricForm assemble_boundary_mass_tail(const Mesh& mesh,
                                          const ScalarField& weight,
                                          FacetTag tag, int m,
                                          int quad_order = 2);

/// ( integral |u|^q dV0 + integral |grad u|^q dV1 )^{1/q} by element
/// quadrature of the nodal field u.
double norm_w1q(const Mesh& mesh, const Eigen::VectorXd& u, const WeightSet& ws,
                double q, int quad_order = 2);

/// Nodal extension of u from the domain mesh to the ambient mesh through
/// boundary-chart reflection and a normalized partition of unity of chart
/// cutoffs. delta >= 1 shrinks the cutoff support toward the core balls.
struct ExtensionResult {
    Eigen::VectorXd values;    // on ambient nodes
    double norm_ratio = 0.0;   // ||Eu||_{1,q,ambient} / ||u||_{1,q,domain}
};
ExtensionResult extend(const Mesh& domain, const Eigen::VectorXd& u,
                       const Covering& cov, double delta, const Mesh& ambient,
                       const WeightSet& ws, double q = 2.0);

}  // namespace wsl
