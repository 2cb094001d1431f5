#include "wsl/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace wsl {

namespace {

struct QuadPoint {
    double w;            // weight, reference measure already folded in
    Eigen::Vector3d bc;  // barycentric coordinates (third unused in 1D)
};

std::vector<QuadPoint> line_rule(int order) {
    // Gauss-Legendre on [0,1], expressed in barycentric (1-t, t).
    std::vector<double> ts, wsv;
    if (order <= 1) {
        ts = {0.5};
        wsv = {1.0};
    } else if (order <= 3) {
        const double a = 0.5 / std::sqrt(3.0);
        ts = {0.5 - a, 0.5 + a};
        wsv = {0.5, 0.5};
    } else {
        const double a = 0.5 * std::sqrt(3.0 / 5.0);
        ts = {0.5 - a, 0.5, 0.5 + a};
        wsv = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    }
    std::vector<QuadPoint> out;
    for (std::size_t i = 0; i < ts.size(); ++i)
        out.push_back({wsv[i], Eigen::Vector3d(1.0 - ts[i], ts[i], 0.0)});
    return out;
}

std::vector<QuadPoint> triangle_rule(int order) {
    std::vector<QuadPoint> out;
    if (order <= 1) {
        out.push_back({1.0, Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3)});
    } else if (order <= 2) {
        // edge-midpoint rule, exact to degree 2
        out.push_back({1.0 / 3, Eigen::Vector3d(0.5, 0.5, 0.0)});
        out.push_back({1.0 / 3, Eigen::Vector3d(0.0, 0.5, 0.5)});
        out.push_back({1.0 / 3, Eigen::Vector3d(0.5, 0.0, 0.5)});
    } else {
        // 6-point rule, exact to degree 4
        const double a1 = 0.816847572980459, b1 = 0.091576213509771;
        const double a2 = 0.108103018168070, b2 = 0.445948490915965;
        const double w1 = 0.109951743655322, w2 = 0.223381589678011;
        out.push_back({w1, Eigen::Vector3d(a1, b1, b1)});
        out.push_back({w1, Eigen::Vector3d(b1, a1, b1)});
        out.push_back({w1, Eigen::Vector3d(b1, b1, a1)});
        out.push_back({w2, Eigen::Vector3d(a2, b2, b2)});
        out.push_back({w2, Eigen::Vector3d(b2, a2, b2)});
        out.push_back({w2, Eigen::Vector3d(b2, b2, a2)});
    }
    return out;
}

struct ElementGeometry {
    int nv = 2;
    std::array<int, 3> ids{};
    std::array<Point, 3> x{};
    double measure = 0.0;      // Euclidean length / area
    double sqrt_det_g = 1.0;   // metric volume factor
    // physical gradients of the P1 shape functions
    std::array<Eigen::Vector2d, 3> grad{};
    Eigen::Matrix2d g_inv = Eigen::Matrix2d::Identity();
    double g_ss = 1.0;         // 1D metric along the segment
};

ElementGeometry element_geometry(const Mesh& mesh, int e) {
    ElementGeometry eg;
    const auto& s = mesh.simplices[e];
    const Eigen::Matrix2d G = mesh.metric_on(e);
    if (mesh.dimension == 1) {
        eg.nv = 2;
        eg.ids = {s[0], s[1], -1};
        eg.x = {mesh.nodes[s[0]], mesh.nodes[s[1]], Point::Zero()};
        const Point d = eg.x[1] - eg.x[0];
        const double h = d.norm();
        if (!(h > 0))
            throw std::invalid_argument("degenerate segment " + std::to_string(e));
        const Point t = d / h;
        eg.g_ss = t.dot(G * t);
        if (!(eg.g_ss > 0))
            throw std::invalid_argument("singular metric on element " +
                                        std::to_string(e));
        eg.measure = h;
        eg.sqrt_det_g = std::sqrt(eg.g_ss);
        eg.grad[0] = -t / h;  // d/ds along the segment, embedded
        eg.grad[1] = t / h;
    } else {
        eg.nv = 3;
        eg.ids = s;
        for (int k = 0; k < 3; ++k) eg.x[k] = mesh.nodes[s[k]];
        Eigen::Matrix2d J;
        J.col(0) = eg.x[1] - eg.x[0];
        J.col(1) = eg.x[2] - eg.x[0];
        const double det = J.determinant();
        if (!(std::abs(det) > 0))
            throw std::invalid_argument("degenerate triangle " + std::to_string(e));
        eg.measure = std::abs(det) / 2.0;
        const double detG = G.determinant();
        if (!(detG > 0))
            throw std::invalid_argument("singular metric on element " +
                                        std::to_string(e));
        eg.sqrt_det_g = std::sqrt(detG);
        eg.g_inv = G.inverse();
        const Eigen::Matrix2d Jit = J.inverse().transpose();
        eg.grad[0] = Jit * Eigen::Vector2d(-1.0, -1.0);
        eg.grad[1] = Jit * Eigen::Vector2d(1.0, 0.0);
        eg.grad[2] = Jit * Eigen::Vector2d(0.0, 1.0);
    }
    return eg;
}

Point quad_point(const ElementGeometry& eg, const Eigen::Vector3d& bc) {
    Point p = Point::Zero();
    for (int k = 0; k < eg.nv; ++k) p += bc[k] * eg.x[k];
    return p;
}

double grad_pair(const ElementGeometry& eg, int i, int j) {
    if (eg.nv == 2) {
        // 1D: g(grad u, grad v) = u' v' / g_ss, gradients stored as t/h
        return eg.grad[i].dot(eg.grad[j]) / eg.g_ss;
    }
    return eg.grad[i].dot(eg.g_inv * eg.grad[j]);
}

SymmetricForm from_triplets(int n, std::vector<Eigen::Triplet<double>>& trips,
                            const std::string& tag) {
    SymmetricForm f;
    f.matrix.resize(n, n);
    f.matrix.setFromTriplets(trips.begin(), trips.end());
    f.matrix.makeCompressed();
    f.tag = tag;
    f.dofs = DofMap::identity(n);
    return f;
}

// Mirrored insertion keeps the stored matrix symmetric to the last bit.
void add_sym(std::vector<Eigen::Triplet<double>>& trips, int i, int j,
             double v) {
    if (v == 0.0) return;
    trips.emplace_back(i, j, v);
    if (i != j) trips.emplace_back(j, i, v);
}

}  // namespace

DofMap DofMap::identity(int n) {
    DofMap m;
    m.full_size = n;
    m.reduced_to_full.resize(n);
    for (int i = 0; i < n; ++i) m.reduced_to_full[i] = i;
    return m;
}

DofMap DofMap::excluding(const Mesh& mesh, const std::set<FacetTag>& tags) {
    std::vector<bool> drop(mesh.num_nodes(), false);
    for (const auto& f : mesh.facets) {
        if (!tags.count(f.tag)) continue;
        for (int n : f.nodes)
            if (n >= 0) drop[n] = true;
    }
    DofMap m;
    m.full_size = mesh.num_nodes();
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (!drop[i]) m.reduced_to_full.push_back(i);
    return m;
}

bool DofMap::is_identity() const {
    if (reduced_size() != full_size) return false;
    for (int i = 0; i < full_size; ++i)
        if (reduced_to_full[i] != i) return false;
    return true;
}

Eigen::VectorXd DofMap::prolong(const Eigen::VectorXd& reduced) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(full_size);
    for (int i = 0; i < reduced_size(); ++i) out[reduced_to_full[i]] = reduced[i];
    return out;
}

Eigen::VectorXd DofMap::restrict_to(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(reduced_size());
    for (int i = 0; i < reduced_size(); ++i) out[i] = full[reduced_to_full[i]];
    return out;
}

void SymmetricForm::write_coo(std::ostream& os) const {
    os.precision(17);
    for (int k = 0; k < matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

namespace {

Eigen::SparseMatrix<double> reduce_matrix(
    const Eigen::SparseMatrix<double>& matrix,
    const std::vector<int>& full_to_reduced, int reduced_size) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
            const int r = full_to_reduced[it.row()];
            const int c = full_to_reduced[it.col()];
            if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
        }
    Eigen::SparseMatrix<double> out(reduced_size, reduced_size);
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
}

}  // namespace

SymmetricForm SymmetricForm::reduced(const DofMap& map) const {
    if (map.full_size != dim())
        throw std::invalid_argument("dof map does not match form dimension");
    std::vector<int> full_to_reduced(map.full_size, -1);
    for (int i = 0; i < map.reduced_size(); ++i)
        full_to_reduced[map.reduced_to_full[i]] = i;
    SymmetricForm f;
    f.matrix = reduce_matrix(matrix, full_to_reduced, map.reduced_size());
    f.tag = tag;
    f.dofs = map;
    if (has_split) {
        f.has_split = true;
        f.grad_part =
            reduce_matrix(grad_part, full_to_reduced, map.reduced_size());
        f.mass_part =
            reduce_matrix(mass_part, full_to_reduced, map.reduced_size());
    }
    return f;
}

namespace {

SymmetricForm assemble_volume(const Mesh& mesh, const ScalarField& grad_weight,
                              const ScalarField& mass_coeff,
                              const ScalarField& mass_weight, int quad_order,
                              const std::string& tag, int skip_below_index = 0,
                              const std::function<bool(int)>& keep = {}) {
    const auto rule = mesh.dimension == 1 ? line_rule(quad_order)
                                          : triangle_rule(quad_order);
    std::vector<Eigen::Triplet<double>> trips;
    const bool split = static_cast<bool>(grad_weight) &&
                       static_cast<bool>(mass_coeff) &&
                       static_cast<bool>(mass_weight);
    std::vector<Eigen::Triplet<double>> grad_trips, mass_trips;
    auto* split_grad = split ? &grad_trips : nullptr;
    auto* split_mass = split ? &mass_trips : nullptr;
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        if (skip_below_index > 0 &&
            mesh.simplex_exhaustion_index(e) <= skip_below_index)
            continue;
        if (keep && !keep(e)) continue;
        const ElementGeometry eg = element_geometry(mesh, e);
        // Gradient and mass blocks are accumulated separately: the gradient
        // term is O(1/h^2) while the mass term is O(1), and fusing them per
        // quadrature point loses the mass bits at the gradient ulp. The
        // gradient block keeps its exact sign-cancellation structure this
        // way (constants stay in its kernel to the last bit).
        Eigen::Matrix<long double, 3, 3> kg, km;
        kg.setZero();
        km.setZero();
        for (const auto& qp : rule) {
            const Point x = quad_point(eg, qp.bc);
            const long double dv =
                static_cast<long double>(qp.w) * eg.measure * eg.sqrt_det_g;
            const double gw = grad_weight ? grad_weight(x) : 0.0;
            const double mw =
                mass_coeff && mass_weight ? mass_coeff(x) * mass_weight(x) : 0.0;
            for (int i = 0; i < eg.nv; ++i)
                for (int j = i; j < eg.nv; ++j) {
                    if (gw != 0.0)
                        kg(i, j) += dv * static_cast<long double>(gw) *
                                    grad_pair(eg, i, j);
                    if (mw != 0.0)
                        km(i, j) += dv * static_cast<long double>(mw) *
                                    qp.bc[i] * qp.bc[j];
                }
        }
        for (int i = 0; i < eg.nv; ++i)
            for (int j = i; j < eg.nv; ++j) {
                const double g = static_cast<double>(kg(i, j));
                const double m = static_cast<double>(km(i, j));
                add_sym(trips, eg.ids[i], eg.ids[j], g + m);
                if (split_grad) add_sym(*split_grad, eg.ids[i], eg.ids[j], g);
                if (split_mass) add_sym(*split_mass, eg.ids[i], eg.ids[j], m);
            }
    }
    SymmetricForm f = from_triplets(mesh.num_nodes(), trips, tag);
    if (split) {
        f.has_split = true;
        const int n = mesh.num_nodes();
        f.grad_part.resize(n, n);
        f.grad_part.setFromTriplets(grad_trips.begin(), grad_trips.end());
        f.grad_part.makeCompressed();
        f.mass_part.resize(n, n);
        f.mass_part.setFromTriplets(mass_trips.begin(), mass_trips.end());
        f.mass_part.makeCompressed();
    }
    return f;
}

}  // namespace

SymmetricForm assemble_Q(const Mesh& mesh, const WeightSet& ws,
                         const std::set<FacetTag>& dirichlet_on,
                         int quad_order) {
    auto one = [](const Point&) { return 1.0; };
    SymmetricForm q =
        assemble_volume(mesh, ws.V1, one, ws.V0, quad_order, "Q");
    if (dirichlet_on.empty()) return q;
    return q.reduced(DofMap::excluding(mesh, dirichlet_on));
}

SymmetricForm assemble_Q_where(const Mesh& mesh, const WeightSet& ws,
                               const std::function<bool(int)>& keep_element,
                               int quad_order) {
    auto one = [](const Point&) { return 1.0; };
    return assemble_volume(mesh, ws.V1, one, ws.V0, quad_order, "custom", 0,
                           keep_element);
}

SymmetricForm assemble_weighted_mass(const Mesh& mesh,
                                     const ScalarField& coefficient,
                                     const ScalarField& weight, int quad_order,
                                     const std::string& tag) {
    return assemble_volume(mesh, nullptr, coefficient, weight, quad_order, tag);
}

SymmetricForm assemble_weighted_mass_where(
    const Mesh& mesh, const ScalarField& coefficient, const ScalarField& weight,
    const std::function<bool(int)>& keep_element, int quad_order) {
    return assemble_volume(mesh, nullptr, coefficient, weight, quad_order,
                           "custom", 0, keep_element);
}

SymmetricForm assemble_weighted_mass_tail(const Mesh& mesh,
                                          const ScalarField& coefficient,
                                          const ScalarField& weight, int m,
                                          int quad_order) {
    return assemble_volume(mesh, nullptr, coefficient, weight, quad_order,
                           "massV2", m);
}

namespace {

SymmetricForm assemble_boundary(const Mesh& mesh, const ScalarField& weight,
                                FacetTag tag, int quad_order,
                                const std::string& form_tag, int skip_below) {
    std::vector<Eigen::Triplet<double>> trips;
    bool any = false;
    const auto rule = line_rule(quad_order);
    for (const auto& f : mesh.facets) {
        if (f.tag != tag) continue;
        if (skip_below > 0) {
            int mi = 0;
            for (int n : f.nodes)
                if (n >= 0) mi = std::max(mi, mesh.exhaustion_index[n]);
            if (mi <= skip_below) continue;
        }
        any = true;
        if (mesh.dimension == 1) {
            const int n = f.nodes[0];
            add_sym(trips, n, n, weight(mesh.nodes[n]));
        } else {
            const int a = f.nodes[0], b = f.nodes[1];
            const Point pa = mesh.nodes[a], pb = mesh.nodes[b];
            const double len = (pb - pa).norm();
            Eigen::Matrix2d fe = Eigen::Matrix2d::Zero();
            for (const auto& qp : rule) {
                const Point x = qp.bc[0] * pa + qp.bc[1] * pb;
                const double dw = qp.w * len * weight(x);
                fe(0, 0) += dw * qp.bc[0] * qp.bc[0];
                fe(0, 1) += dw * qp.bc[0] * qp.bc[1];
                fe(1, 1) += dw * qp.bc[1] * qp.bc[1];
            }
            add_sym(trips, a, a, fe(0, 0));
            add_sym(trips, std::min(a, b), std::max(a, b),
                    fe(0, 1));
            add_sym(trips, b, b, fe(1, 1));
        }
    }
    if (!any)
        std::cerr << "warning: boundary mass over tag '" << to_string(tag)
                  << "' is empty; returning the zero form\n";
    return from_triplets(mesh.num_nodes(), trips, form_tag);
}

}  // namespace

SymmetricForm assemble_boundary_mass(const Mesh& mesh, const ScalarField& weight,
                                     FacetTag tag, int quad_order,
                                     const std::string& form_tag) {
    return assemble_boundary(mesh, weight, tag, quad_order, form_tag, 0);
}

SymmetricForm assemble_boundary_mass_tail(const Mesh& mesh,
                                          const ScalarField& weight,
                                          FacetTag tag, int m, int quad_order) {
    return assemble_boundary(mesh, weight, tag, quad_order, "boundaryW", m);
}

LoadVector assemble_load(const Mesh& mesh, const ScalarField& f0,
                         const ScalarField& f1, const WeightSet& ws,
                         int quad_order) {
    LoadVector load;
    load.values = Eigen::VectorXd::Zero(mesh.num_nodes());
    load.provenance = "f0 against V2 + f1 against W1";
    load.dofs = DofMap::identity(mesh.num_nodes());
    const auto rule = mesh.dimension == 1 ? line_rule(quad_order)
                                          : triangle_rule(quad_order);
    if (f0) {
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            const ElementGeometry eg = element_geometry(mesh, e);
            for (const auto& qp : rule) {
                const Point x = quad_point(eg, qp.bc);
                const double dv =
                    qp.w * eg.measure * eg.sqrt_det_g * f0(x) * ws.V2(x);
                for (int i = 0; i < eg.nv; ++i)
                    load.values[eg.ids[i]] += dv * qp.bc[i];
            }
        }
    }
    if (f1) {
        const auto brule = line_rule(quad_order);
        for (const auto& f : mesh.facets) {
            if (f.tag != FacetTag::PhysicalGamma) continue;
            if (mesh.dimension == 1) {
                const int n = f.nodes[0];
                load.values[n] += f1(mesh.nodes[n]) * ws.W1(mesh.nodes[n]);
            } else {
                const Point pa = mesh.nodes[f.nodes[0]];
                const Point pb = mesh.nodes[f.nodes[1]];
                const double len = (pb - pa).norm();
                for (const auto& qp : brule) {
                    const Point x = qp.bc[0] * pa + qp.bc[1] * pb;
                    const double dw = qp.w * len * f1(x) * ws.W1(x);
                    load.values[f.nodes[0]] += dw * qp.bc[0];
                    load.values[f.nodes[1]] += dw * qp.bc[1];
                }
            }
        }
    }
    return load;
}

double norm_w1q(const Mesh& mesh, const Eigen::VectorXd& u, const WeightSet& ws,
                double q, int quad_order) {
    if (u.size() != mesh.num_nodes())
        throw std::invalid_argument("field size does not match mesh");
    const auto rule = mesh.dimension == 1 ? line_rule(quad_order)
                                          : triangle_rule(quad_order);
    double total = 0.0;
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const ElementGeometry eg = element_geometry(mesh, e);
        // P1 gradient is constant per element
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int k = 0; k < eg.nv; ++k) g += u[eg.ids[k]] * eg.grad[k];
        const double gnorm =
            eg.nv == 2 ? std::abs(g.dot(eg.x[1] - eg.x[0]) /
                                  (eg.x[1] - eg.x[0]).norm()) /
                             std::sqrt(eg.g_ss)
                       : std::sqrt(std::max(0.0, g.dot(eg.g_inv * g)));
        for (const auto& qp : rule) {
            const Point x = quad_point(eg, qp.bc);
            double val = 0.0;
            for (int k = 0; k < eg.nv; ++k) val += qp.bc[k] * u[eg.ids[k]];
            const double dv = qp.w * eg.measure * eg.sqrt_det_g;
            total += dv * (std::pow(std::abs(val), q) * ws.V0(x) +
                           std::pow(gnorm, q) * ws.V1(x));
        }
    }
    return std::pow(total, 1.0 / q);
}

namespace {

double cutoff(double rho, double r_in, double r_out) {
    if (rho <= r_in) return 1.0;
    if (rho >= r_out) return 0.0;
    const double s = (r_out - rho) / (r_out - r_in);
    return s * s * (3.0 - 2.0 * s);
}

}  // namespace

ExtensionResult extend(const Mesh& domain, const Eigen::VectorXd& u,
                       const Covering& cov, double delta, const Mesh& ambient,
                       const WeightSet& ws, double q) {
    if (delta < 1.0) throw std::invalid_argument("delta must be >= 1");
    if (u.size() != domain.num_nodes())
        throw std::invalid_argument("field size does not match domain mesh");

    // Gamma nodes of the domain must sit in the core ball of a boundary chart.
    std::vector<int> uncovered;
    for (int n : domain.nodes_on_tag(FacetTag::PhysicalGamma)) {
        bool ok = false;
        for (const Chart& c : cov.charts)
            if (c.kind == 1 && c.covers(domain.nodes[n], c.r)) {
                ok = true;
                break;
            }
        if (!ok) uncovered.push_back(n);
    }
    if (!uncovered.empty()) {
        std::ostringstream os;
        os << "boundary nodes outside every boundary chart:";
        for (int n : uncovered) os << ' ' << n;
        throw std::invalid_argument(os.str());
    }

    // Match ambient nodes to domain nodes (exact copy there).
    std::vector<int> domain_node(ambient.num_nodes(), -1);
    for (int a = 0; a < ambient.num_nodes(); ++a)
        for (int d = 0; d < domain.num_nodes(); ++d)
            if ((ambient.nodes[a] - domain.nodes[d]).norm() < 1e-9) {
                domain_node[a] = d;
                break;
            }

    // Truncation cuts act as flat reflection planes with the same cutoff
    // profile, so the extension tapers smoothly past the cut instead of
    // dropping to zero across one ambient element.
    struct CutPlane {
        Point center;
        Point normal;  // outward unit normal
        double r, r_hat;
    };
    std::vector<CutPlane> cuts;
    if (!cov.charts.empty()) {
        const double cr = cov.charts.front().r;
        const double crh = cov.charts.front().r_hat;
        for (const auto& f : domain.facets) {
            if (f.tag != FacetTag::TruncationCut) continue;
            CutPlane cp;
            Point n0;
            if (domain.dimension == 1) {
                cp.center = domain.nodes[f.nodes[0]];
                n0 = Point(1.0, 0.0);
            } else {
                const Point a = domain.nodes[f.nodes[0]];
                const Point b = domain.nodes[f.nodes[1]];
                cp.center = 0.5 * (a + b);
                const Point t = (b - a).normalized();
                n0 = Point(-t.y(), t.x());
            }
            // orient outward: the inward probe must land inside the domain
            const double eps = 1e-6 * std::max(1.0, cp.center.norm());
            cp.normal = interpolate(domain, u, cp.center - eps * n0) ? n0 : -n0;
            cp.r = cr;
            cp.r_hat = crh;
            cuts.push_back(cp);
        }
    }

    ExtensionResult out;
    out.values = Eigen::VectorXd::Zero(ambient.num_nodes());
    for (int a = 0; a < ambient.num_nodes(); ++a) {
        if (domain_node[a] >= 0) {
            out.values[a] = u[domain_node[a]];
            continue;
        }
        const Point p = ambient.nodes[a];
        double num = 0.0, den = 0.0;
        for (const Chart& c : cov.charts) {
            if (c.kind != 1) continue;
            Point x = c.to_chart(p);
            const double r_out = c.r + (c.r_hat - c.r) / delta;
            const double z = cutoff(x.norm(), c.r, r_out);
            if (z <= 0.0) continue;
            // reflect through the chart's flat boundary slice
            if (domain.dimension == 1)
                x.x() = std::abs(x.x());
            else
                x.y() = std::abs(x.y());
            const auto val = interpolate(domain, u, c.to_ambient(x));
            if (!val) continue;
            num += z * (*val);
            den += z;
        }
        for (const CutPlane& cp : cuts) {
            const double d = (p - cp.center).dot(cp.normal);
            if (d <= 0.0) continue;  // inside or on the cut: charts rule
            const double r_out = cp.r + (cp.r_hat - cp.r) / delta;
            const double z = cutoff((p - cp.center).norm(), cp.r, r_out);
            if (z <= 0.0) continue;
            const auto val =
                interpolate(domain, u, p - 2.0 * d * cp.normal);
            if (!val) continue;
            num += z * (*val);
            den += z;
        }
        out.values[a] = den > 0.0 ? num / std::max(den, 1.0) : 0.0;
    }

    const double base = norm_w1q(domain, u, ws, q);
    out.norm_ratio = base > 0.0 ? norm_w1q(ambient, out.values, ws, q) / base : 0.0;
    return out;
}

}  // namespace wsl
