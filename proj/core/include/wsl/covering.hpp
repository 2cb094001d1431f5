#pragma once

#include "wsl/mesh.hpp"

#include <Eigen/Dense>

#include <vector>

namespace wsl {

/// One chart of the covering: an affine map psi(x) = A x + center from the
/// reference ball B(0, r_hat) onto the inflated patch. kind 0 = interior,
/// kind 1 = boundary (half-space {x_n >= 0} maps into the domain, the slice
/// {x_n = 0} onto Gamma).
struct Chart {
    int kind = 0;
    Point center = Point::Zero();
    Eigen::Matrix2d map = Eigen::Matrix2d::Identity();
    double r = 0.0;
    double r_hat = 0.0;

    Point to_ambient(const Point& x) const { return center + map * x; }
    Point to_chart(const Point& p) const { return map.inverse() * (p - center); }
    bool covers(const Point& p, double radius) const {
        return to_chart(p).norm() < radius;
    }
    double dpsi_norm() const;      // ||d psi||
    double dpsi_inv_norm() const;  // ||d psi^{-1}||
};

struct Covering {
    std::vector<Chart> charts;
    double R1 = 0.0;        // realized max overlap of the inflated patches
    double R2 = 0.0;        // realized metric distortion bound
    int base_index = 1;     // m_*

    /// Overlap factor field: sum over charts whose inflated patch contains p
    /// of ||d psi^{-1}|| / (r_hat - r), restricted to charts overlapping
    /// chart (kind, i).
    double overlap_factor(const Point& p, int chart_index) const;

    std::vector<int> charts_with_center_in(const Mesh& mesh, int m,
                                           bool tail, int kind = -1) const;
};

/// Greedy ball cover of the mesh nodes. Boundary charts are seeded on
/// PhysicalGamma nodes with half-space maps aligned to the inward normal;
/// interior charts cover the rest. R1 and R2 are measured, not assumed.
Covering build_covering(const Mesh& mesh, double chart_radius,
                        double inflation);

/// Brute-force overlap count at the mesh nodes (oracle for R1).
int max_node_overlap(const Mesh& mesh, const Covering& cov);

/// ||G_{k,i}|| and ||G^{-1}_{k,i}||: extrema of sqrt(det) of the pulled-back
/// metric over mesh simplices meeting the inflated patch.
struct ChartMetricBounds {
    double G_norm = 1.0;
    double G_inv_norm = 1.0;
};
ChartMetricBounds chart_metric_bounds(const Mesh& mesh, const Chart& chart);

/// sqrt(det) bound of the boundary-restricted metric of a kind-1 chart.
double chart_boundary_metric_norm(const Mesh& mesh, const Chart& chart);

}  // namespace wsl
