#include "wsl/covering.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace wsl {

double Chart::dpsi_norm() const {
    return map.jacobiSvd().singularValues()(0);
}

double Chart::dpsi_inv_norm() const {
    const auto sv = map.jacobiSvd().singularValues();
    return 1.0 / sv(sv.size() - 1);
}

namespace {

int index_of_point(const Point& p, const std::vector<double>& radii) {
    const double r = p.norm();
    for (std::size_t m = 0; m < radii.size(); ++m)
        if (r <= radii[m] + 1e-12) return static_cast<int>(m) + 1;
    return static_cast<int>(radii.size()) + 1;
}

Eigen::Vector2d inward_normal_at(const Mesh& mesh, int node) {
    if (mesh.dimension == 1) {
        // Interval (0, L): inward direction at an endpoint.
        const double x = mesh.nodes[node].x();
        double far = x;
        for (const auto& p : mesh.nodes) far = std::max(far, p.x());
        return (x < 0.5 * far) ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(-1, 0);
    }
    // Average of outward facet normals, flipped inward.
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : mesh.nodes) centroid += p;
    centroid /= mesh.num_nodes();
    for (const auto& f : mesh.facets) {
        if (f.tag != FacetTag::PhysicalGamma) continue;
        if (f.nodes[0] != node && f.nodes[1] != node) continue;
        const Eigen::Vector2d t = mesh.nodes[f.nodes[1]] - mesh.nodes[f.nodes[0]];
        Eigen::Vector2d n(-t.y(), t.x());
        n.normalize();
        const Eigen::Vector2d midp =
            0.5 * (mesh.nodes[f.nodes[0]] + mesh.nodes[f.nodes[1]]);
        if (n.dot(centroid - midp) < 0) n = -n;  // orient inward
        acc += n;
    }
    if (acc.norm() < 1e-14)
        throw std::runtime_error("cannot orient boundary chart at node " +
                                 std::to_string(node));
    return acc.normalized();
}

}  // namespace

Covering build_covering(const Mesh& mesh, double chart_radius, double inflation) {
    if (chart_radius <= 0.0)
        throw std::invalid_argument("chart radius must be positive");
    if (inflation <= 1.0)
        throw std::invalid_argument("inflation must exceed 1");
    // Chart radius must be resolvable: at least one mesh edge fits inside.
    double min_edge = std::numeric_limits<double>::infinity();
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const auto& s = mesh.simplices[e];
        min_edge = std::min(min_edge,
                            (mesh.nodes[s[1]] - mesh.nodes[s[0]]).norm());
    }
    if (chart_radius < min_edge)
        throw std::invalid_argument("chart radius not resolvable by mesh");

    Covering cov;
    const auto gamma_nodes = mesh.nodes_on_tag(FacetTag::PhysicalGamma);

    auto covered = [&](const Point& p) {
        for (const auto& c : cov.charts)
            if ((p - c.center).norm() < c.r) return true;
        return false;
    };

    // Boundary charts first: centers on Gamma, x_n axis mapped to the
    // inward normal.
    for (int node : gamma_nodes) {
        const Point p = mesh.nodes[node];
        if (covered(p)) continue;
        Chart c;
        c.kind = 1;
        c.center = p;
        c.r = chart_radius;
        c.r_hat = inflation * chart_radius;
        const Eigen::Vector2d nu = inward_normal_at(mesh, node);
        if (mesh.dimension == 1) {
            c.map << nu.x(), 0.0, 0.0, 1.0;
        } else {
            // columns: tangent, inward normal (x_n = second coordinate)
            c.map << nu.y(), nu.x(), -nu.x(), nu.y();
        }
        cov.charts.push_back(c);
    }
    // Interior charts for the remaining nodes.
    for (int node = 0; node < mesh.num_nodes(); ++node) {
        const Point p = mesh.nodes[node];
        if (covered(p)) continue;
        Chart c;
        c.kind = 0;
        c.center = p;
        c.r = chart_radius;
        c.r_hat = inflation * chart_radius;
        cov.charts.push_back(c);
    }

    cov.R1 = max_node_overlap(mesh, cov);
    double r2 = 0.0;
    for (const auto& c : cov.charts) {
        const auto mb = chart_metric_bounds(mesh, c);
        r2 = std::max(r2, c.dpsi_norm() * c.dpsi_inv_norm() *
                              std::max(1.0, mb.G_norm * mb.G_inv_norm));
        r2 = std::max(r2, mb.G_norm * mb.G_inv_norm);
    }
    cov.R2 = r2;
    cov.base_index = 1;
    return cov;
}

int max_node_overlap(const Mesh& mesh, const Covering& cov) {
    int best = 0;
    for (const auto& p : mesh.nodes) {
        int count = 0;
        for (const auto& c : cov.charts)
            if (c.covers(p, c.r_hat)) ++count;
        best = std::max(best, count);
    }
    return best;
}

double Covering::overlap_factor(const Point& p, int chart_index) const {
    const Chart& base = charts[chart_index];
    if (!base.covers(p, base.r_hat)) return 0.0;
    double sum = 0.0;
    for (const auto& c : charts)
        if (c.covers(p, c.r_hat))
            sum += c.dpsi_inv_norm() / (c.r_hat - c.r);
    return sum;
}

std::vector<int> Covering::charts_with_center_in(const Mesh& mesh, int m,
                                                 bool tail, int kind) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < charts.size(); ++i) {
        if (kind >= 0 && charts[i].kind != kind) continue;
        const int idx = index_of_point(charts[i].center, mesh.exhaustion_radii);
        const bool in_tail = idx > m;
        if (in_tail == tail) out.push_back(static_cast<int>(i));
    }
    return out;
}

ChartMetricBounds chart_metric_bounds(const Mesh& mesh, const Chart& chart) {
    ChartMetricBounds out;
    double gmax = 0.0, ginvmax = 0.0;
    bool any = false;
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const auto& s = mesh.simplices[e];
        bool meets = false;
        for (int k = 0; k < (mesh.dimension == 1 ? 2 : 3); ++k)
            if (chart.covers(mesh.nodes[s[k]], chart.r_hat)) meets = true;
        if (!meets) continue;
        any = true;
        const Eigen::Matrix2d G = mesh.metric_on(e);
        if (mesh.dimension == 1) {
            const Eigen::Vector2d a = chart.map.col(0);
            const double g11 = a.dot(G * a);
            gmax = std::max(gmax, g11);
            ginvmax = std::max(ginvmax, 1.0 / g11);
        } else {
            const Eigen::Matrix2d gab = chart.map.transpose() * G * chart.map;
            gmax = std::max(gmax, gab.determinant());
            ginvmax = std::max(ginvmax, gab.inverse().determinant());
        }
    }
    if (any) {
        out.G_norm = std::sqrt(gmax);
        out.G_inv_norm = std::sqrt(ginvmax);
    }
    return out;
}

double chart_boundary_metric_norm(const Mesh& mesh, const Chart& chart) {
    if (chart.kind != 1)
        throw std::invalid_argument("boundary metric requires a kind-1 chart");
    if (mesh.dimension == 1) return 1.0;  // point boundary, empty determinant
    double gmax = 0.0;
    bool any = false;
    const Eigen::Vector2d t = chart.map.col(0);
    for (const auto& f : mesh.facets) {
        if (f.tag != FacetTag::PhysicalGamma) continue;
        if (!chart.covers(mesh.nodes[f.nodes[0]], chart.r_hat) &&
            !chart.covers(mesh.nodes[f.nodes[1]], chart.r_hat))
            continue;
        // pulled-back boundary metric along the chart's Gamma slice
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            const auto& s = mesh.simplices[e];
            bool owns = false;
            for (int k = 0; k < 3; ++k)
                if (s[k] == f.nodes[0]) owns = true;
            if (!owns) continue;
            const Eigen::Matrix2d G = mesh.metric_on(e);
            gmax = std::max(gmax, t.dot(G * t));
            any = true;
            break;
        }
    }
    return any ? std::sqrt(gmax) : 1.0;
}

}  // namespace wsl
