#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wsl {

using Point = Eigen::Vector2d;

enum class FacetTag { PhysicalGamma, TruncationCut, DirichletOuter };

std::string to_string(FacetTag tag);
FacetTag facet_tag_from_string(const std::string& s);

/// Simplicial mesh of a truncated model domain (1D interval or 2D strip).
/// Nodes carry an exhaustion index m(p): the smallest m with p in D_m.
/// Facets partition the topological boundary and carry exactly one tag.
struct Mesh {
    int dimension = 1;
    std::vector<Point> nodes;
    // 1D: {a,b,-1}; 2D: triangle {a,b,c}.
    std::vector<std::array<int, 3>> simplices;

    struct Facet {
        std::array<int, 2> nodes{-1, -1};  // 1D facet: single node (second = -1)
        FacetTag tag = FacetTag::PhysicalGamma;
    };
    std::vector<Facet> facets;

    std::vector<int> exhaustion_index;          // per node, 1-based
    std::vector<Eigen::Matrix2d> metric;        // per simplex; empty = identity
    std::vector<double> exhaustion_radii;       // radii defining D_m
    std::string note;                           // degenerate-input reports

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_simplices() const { return static_cast<int>(simplices.size()); }
    int max_exhaustion_index() const;

    Eigen::Matrix2d metric_on(int simplex) const;
    double volume(int simplex) const;           // metric volume
    /// Smallest m such that every node of the simplex lies in D_m.
    int simplex_exhaustion_index(int simplex) const;

    bool node_on_tag(int node, FacetTag tag) const;
    std::vector<int> nodes_on_tag(FacetTag tag) const;

    /// Throws on violated invariants (nonpositive volume, doubly tagged facet,
    /// broken D_m nesting).
    void validate() const;

    void write(std::ostream& os) const;
    static Mesh read(std::istream& is);
};

Mesh build_interval_mesh(double length, int elements,
                         std::vector<double> exhaustion_radii);

struct StripOptions {
    double min_thickness = 5e-3;   // smallest resolvable half-width
    double min_angle_deg = 15.0;   // triangle quality floor
};

Mesh build_strip_mesh(const std::function<double(double)>& profile,
                      double x_max, int resolution,
                      std::vector<double> exhaustion_radii,
                      const StripOptions& opts = {});

/// Uniform refinement (edge bisection). Tags and exhaustion nesting are
/// preserved by construction.
Mesh refine_uniform(const Mesh& mesh);

/// Locate the P1 value of nodal field u at point p (linear scan; desk scale).
/// Returns nullopt if p lies outside every simplex.
std::optional<double> interpolate(const Mesh& mesh,
                                  const Eigen::VectorXd& u, const Point& p,
                                  double tol = 1e-10);

}  // namespace wsl
