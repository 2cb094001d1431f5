#include "wsl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wsl {

std::string to_string(FacetTag tag) {
    switch (tag) {
        case FacetTag::PhysicalGamma: return "PhysicalGamma";
        case FacetTag::TruncationCut: return "TruncationCut";
        case FacetTag::DirichletOuter: return "DirichletOuter";
    }
    return "?";
}

FacetTag facet_tag_from_string(const std::string& s) {
    if (s == "PhysicalGamma") return FacetTag::PhysicalGamma;
    if (s == "TruncationCut") return FacetTag::TruncationCut;
    if (s == "DirichletOuter") return FacetTag::DirichletOuter;
    throw std::invalid_argument("unknown facet tag: " + s);
}

namespace {

int index_from_radii(const Point& p, const std::vector<double>& radii) {
    const double r = p.norm();
    for (std::size_t m = 0; m < radii.size(); ++m)
        if (r <= radii[m] + 1e-12) return static_cast<int>(m) + 1;
    return static_cast<int>(radii.size()) + 1;
}

void check_radii_increasing(const std::vector<double>& radii) {
    if (radii.empty())
        throw std::invalid_argument("exhaustion radii must be nonempty");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] <= 0.0)
            throw std::invalid_argument("exhaustion radii must be positive");
        if (i > 0 && radii[i] <= radii[i - 1])
            throw std::invalid_argument("exhaustion radii must be strictly increasing");
    }
}

}  // namespace

int Mesh::max_exhaustion_index() const {
    return exhaustion_index.empty()
               ? 0
               : *std::max_element(exhaustion_index.begin(), exhaustion_index.end());
}

Eigen::Matrix2d Mesh::metric_on(int simplex) const {
    if (metric.empty()) return Eigen::Matrix2d::Identity();
    return metric[simplex];
}

double Mesh::volume(int simplex) const {
    const auto& s = simplices[simplex];
    const Eigen::Matrix2d g = metric_on(simplex);
    if (dimension == 1) {
        const Eigen::Vector2d e = nodes[s[1]] - nodes[s[0]];
        return std::sqrt(e.dot(g * e));
    }
    const Eigen::Vector2d e1 = nodes[s[1]] - nodes[s[0]];
    const Eigen::Vector2d e2 = nodes[s[2]] - nodes[s[0]];
    const double euclid = 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    return euclid * std::sqrt(g.determinant());
}

int Mesh::simplex_exhaustion_index(int simplex) const {
    const auto& s = simplices[simplex];
    int m = 0;
    for (int k = 0; k < (dimension == 1 ? 2 : 3); ++k)
        m = std::max(m, exhaustion_index[s[k]]);
    return m;
}

bool Mesh::node_on_tag(int node, FacetTag tag) const {
    for (const auto& f : facets) {
        if (f.tag != tag) continue;
        if (f.nodes[0] == node || f.nodes[1] == node) return true;
    }
    return false;
}

std::vector<int> Mesh::nodes_on_tag(FacetTag tag) const {
    std::set<int> out;
    for (const auto& f : facets) {
        if (f.tag != tag) continue;
        out.insert(f.nodes[0]);
        if (f.nodes[1] >= 0) out.insert(f.nodes[1]);
    }
    return {out.begin(), out.end()};
}

void Mesh::validate() const {
    if (dimension != 1 && dimension != 2)
        throw std::invalid_argument("mesh dimension must be 1 or 2");
    if (exhaustion_index.size() != nodes.size())
        throw std::invalid_argument("exhaustion index count mismatch");
    for (int e = 0; e < num_simplices(); ++e) {
        if (volume(e) <= 0.0)
            throw std::invalid_argument("simplex " + std::to_string(e) +
                                        " has nonpositive volume");
    }
    std::set<std::array<int, 2>> seen;
    for (const auto& f : facets) {
        std::array<int, 2> key = f.nodes;
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second)
            throw std::invalid_argument("boundary facet carries two tags");
    }
    for (int i : exhaustion_index)
        if (i < 1) throw std::invalid_argument("exhaustion index below 1");
}

Mesh build_interval_mesh(double length, int elements,
                         std::vector<double> exhaustion_radii) {
    if (length <= 0.0) throw std::invalid_argument("length must be positive");
    if (elements < 1) throw std::invalid_argument("need at least one element");
    check_radii_increasing(exhaustion_radii);
    for (double r : exhaustion_radii)
        if (r > length + 1e-12)
            throw std::invalid_argument("exhaustion radius exceeds domain length");

    Mesh mesh;
    mesh.dimension = 1;
    if (exhaustion_radii.back() < length - 1e-12) {
        exhaustion_radii.push_back(length);
        mesh.note = "exhaustion radii did not cover (0," + std::to_string(length) +
                    "); appended " + std::to_string(length) + " as final radius";
    }
    mesh.exhaustion_radii = exhaustion_radii;

    const double h = length / elements;
    for (int i = 0; i <= elements; ++i) {
        const Point p(i * h, 0.0);
        mesh.nodes.push_back(p);
        mesh.exhaustion_index.push_back(index_from_radii(p, exhaustion_radii));
    }
    for (int i = 0; i < elements; ++i)
        mesh.simplices.push_back({i, i + 1, -1});
    mesh.facets.push_back({{0, -1}, FacetTag::PhysicalGamma});
    mesh.facets.push_back({{elements, -1}, FacetTag::TruncationCut});
    mesh.validate();
    return mesh;
}

Mesh build_strip_mesh(const std::function<double(double)>& profile,
                      double x_max, int resolution,
                      std::vector<double> exhaustion_radii,
                      const StripOptions& opts) {
    if (x_max <= 0.0) throw std::invalid_argument("x_max must be positive");
    if (resolution < 1) throw std::invalid_argument("resolution must be positive");
    check_radii_increasing(exhaustion_radii);

    const int nx = std::max(2, static_cast<int>(std::lround(resolution * x_max)));
    const int ny = std::max(2, resolution);  // cells across the full width
    const double hx = x_max / nx;

    std::vector<double> rho(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        const double x = i * hx;
        rho[i] = profile(x);
        if (!(rho[i] > 0.0) || !std::isfinite(rho[i]))
            throw std::invalid_argument("profile must be positive and bounded at x=" +
                                        std::to_string(x));
        if (rho[i] < opts.min_thickness)
            throw std::invalid_argument(
                "profile below resolvable thickness " +
                std::to_string(opts.min_thickness) + " at x=" + std::to_string(x));
    }

    Mesh mesh;
    mesh.dimension = 2;

    // Node grid: column-major, y graded to the local half-width.
    auto id = [&](int i, int j) { return i * (ny + 1) + j; };
    double max_norm = 0.0;
    for (int i = 0; i <= nx; ++i) {
        for (int j = 0; j <= ny; ++j) {
            const double x = i * hx;
            const double y = rho[i] * (2.0 * j / ny - 1.0);
            mesh.nodes.emplace_back(x, y);
            max_norm = std::max(max_norm, mesh.nodes.back().norm());
        }
    }
    if (max_norm > exhaustion_radii.back() + 1e-12) {
        exhaustion_radii.push_back(max_norm);
        mesh.note = "exhaustion radii did not cover the strip; appended " +
                    std::to_string(max_norm) + " as final radius";
    }
    mesh.exhaustion_radii = exhaustion_radii;
    for (const auto& p : mesh.nodes)
        mesh.exhaustion_index.push_back(index_from_radii(p, exhaustion_radii));

    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1),
                      d = id(i, j + 1);
            mesh.simplices.push_back({a, b, c});
            mesh.simplices.push_back({a, c, d});
        }
    }

    // Curved sides are the physical boundary; the two straight cuts are
    // truncation artifacts.
    for (int i = 0; i < nx; ++i) {
        mesh.facets.push_back({{id(i, 0), id(i + 1, 0)}, FacetTag::PhysicalGamma});
        mesh.facets.push_back({{id(i, ny), id(i + 1, ny)}, FacetTag::PhysicalGamma});
    }
    for (int j = 0; j < ny; ++j) {
        mesh.facets.push_back({{id(0, j), id(0, j + 1)}, FacetTag::TruncationCut});
        mesh.facets.push_back({{id(nx, j), id(nx, j + 1)}, FacetTag::TruncationCut});
    }

    // Triangle quality floor.
    const double floor_rad = opts.min_angle_deg * M_PI / 180.0;
    for (int e = 0; e < mesh.num_simplices(); ++e) {
        const auto& s = mesh.simplices[e];
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector2d u = mesh.nodes[s[(k + 1) % 3]] - mesh.nodes[s[k]];
            const Eigen::Vector2d v = mesh.nodes[s[(k + 2) % 3]] - mesh.nodes[s[k]];
            const double ang = std::acos(
                std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0));
            if (ang < floor_rad)
                throw std::invalid_argument(
                    "triangle quality below min angle floor near x=" +
                    std::to_string(mesh.nodes[s[k]].x()));
        }
    }

    mesh.validate();
    return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
    Mesh out;
    out.dimension = mesh.dimension;
    out.nodes = mesh.nodes;
    out.exhaustion_radii = mesh.exhaustion_radii;
    out.note = mesh.note;

    std::map<std::array<int, 2>, int> midpoint;
    auto mid = [&](int a, int b) {
        std::array<int, 2> key{std::min(a, b), std::max(a, b)};
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int idx = static_cast<int>(out.nodes.size());
        out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
        midpoint[key] = idx;
        return idx;
    };

    const bool has_metric = !mesh.metric.empty();
    if (mesh.dimension == 1) {
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            const auto& s = mesh.simplices[e];
            const int m = mid(s[0], s[1]);
            out.simplices.push_back({s[0], m, -1});
            out.simplices.push_back({m, s[1], -1});
            if (has_metric) {
                out.metric.push_back(mesh.metric[e]);
                out.metric.push_back(mesh.metric[e]);
            }
        }
        out.facets = mesh.facets;
    } else {
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            const auto& s = mesh.simplices[e];
            const int ab = mid(s[0], s[1]), bc = mid(s[1], s[2]), ca = mid(s[2], s[0]);
            out.simplices.push_back({s[0], ab, ca});
            out.simplices.push_back({ab, s[1], bc});
            out.simplices.push_back({ca, bc, s[2]});
            out.simplices.push_back({ab, bc, ca});
            if (has_metric)
                for (int k = 0; k < 4; ++k) out.metric.push_back(mesh.metric[e]);
        }
        for (const auto& f : mesh.facets) {
            const int m = mid(f.nodes[0], f.nodes[1]);
            out.facets.push_back({{f.nodes[0], m}, f.tag});
            out.facets.push_back({{m, f.nodes[1]}, f.tag});
        }
    }

    for (const auto& p : out.nodes)
        out.exhaustion_index.push_back(index_from_radii(p, out.exhaustion_radii));
    out.validate();
    return out;
}

std::optional<double> interpolate(const Mesh& mesh, const Eigen::VectorXd& u,
                                  const Point& p, double tol) {
    if (mesh.dimension == 1) {
        for (const auto& s : mesh.simplices) {
            const double a = mesh.nodes[s[0]].x(), b = mesh.nodes[s[1]].x();
            if (p.x() < std::min(a, b) - tol || p.x() > std::max(a, b) + tol) continue;
            const double t = (p.x() - a) / (b - a);
            return (1.0 - t) * u[s[0]] + t * u[s[1]];
        }
        return std::nullopt;
    }
    for (const auto& s : mesh.simplices) {
        const Eigen::Vector2d a = mesh.nodes[s[0]], b = mesh.nodes[s[1]],
                              c = mesh.nodes[s[2]];
        Eigen::Matrix2d T;
        T.col(0) = b - a;
        T.col(1) = c - a;
        const Eigen::Vector2d lam = T.inverse() * (p - a);
        const double l0 = 1.0 - lam[0] - lam[1];
        if (lam[0] >= -tol && lam[1] >= -tol && l0 >= -tol)
            return l0 * u[s[0]] + lam[0] * u[s[1]] + lam[1] * u[s[2]];
    }
    return std::nullopt;
}

void Mesh::write(std::ostream& os) const {
    os << "wslmesh " << dimension << ' ' << nodes.size() << ' '
       << simplices.size() << ' ' << facets.size() << ' '
       << exhaustion_radii.size() << '\n';
    os << "radii";
    os.precision(17);
    for (double r : exhaustion_radii) os << ' ' << r;
    os << '\n';
    os << "nodes\n";
    for (std::size_t i = 0; i < nodes.size(); ++i)
        os << nodes[i].x() << ' ' << nodes[i].y() << ' ' << exhaustion_index[i]
           << '\n';
    os << "simplices\n";
    for (const auto& s : simplices) {
        os << s[0] << ' ' << s[1];
        if (dimension == 2) os << ' ' << s[2];
        os << '\n';
    }
    os << "facets\n";
    for (const auto& f : facets) {
        os << f.nodes[0];
        if (dimension == 2) os << ' ' << f.nodes[1];
        os << ' ' << to_string(f.tag) << '\n';
    }
}

Mesh Mesh::read(std::istream& is) {
    Mesh mesh;
    std::string magic;
    std::size_t nn, ns, nf, nr;
    is >> magic >> mesh.dimension >> nn >> ns >> nf >> nr;
    if (magic != "wslmesh") throw std::invalid_argument("not a wslmesh stream");
    std::string section;
    is >> section;
    if (section != "radii") throw std::invalid_argument("expected radii section");
    mesh.exhaustion_radii.resize(nr);
    for (auto& r : mesh.exhaustion_radii) is >> r;
    is >> section;
    if (section != "nodes") throw std::invalid_argument("expected nodes section");
    mesh.nodes.resize(nn);
    mesh.exhaustion_index.resize(nn);
    for (std::size_t i = 0; i < nn; ++i)
        is >> mesh.nodes[i].x() >> mesh.nodes[i].y() >> mesh.exhaustion_index[i];
    is >> section;
    if (section != "simplices")
        throw std::invalid_argument("expected simplices section");
    mesh.simplices.resize(ns);
    for (auto& s : mesh.simplices) {
        s = {-1, -1, -1};
        is >> s[0] >> s[1];
        if (mesh.dimension == 2) is >> s[2];
    }
    is >> section;
    if (section != "facets") throw std::invalid_argument("expected facets section");
    mesh.facets.resize(nf);
    for (auto& f : mesh.facets) {
        f.nodes = {-1, -1};
        std::string tag;
        is >> f.nodes[0];
        if (mesh.dimension == 2) is >> f.nodes[1];
        is >> tag;
        f.tag = facet_tag_from_string(tag);
    }
    mesh.validate();
    return mesh;
}

}  // namespace wsl
