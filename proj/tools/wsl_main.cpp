// wsl: batch front end for the weighted spectral laboratory.
// One subcommand per pipeline; JSON config in, CSV + summary out.

#include "wsl/assembly.hpp"
#include "wsl/bounds.hpp"
#include "wsl/capacity.hpp"
#include "wsl/covering.hpp"
#include "wsl/l1.hpp"
#include "wsl/mesh.hpp"
#include "wsl/report.hpp"
#include "wsl/spectral.hpp"
#include "wsl/weights.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
using namespace wsl;

namespace {

std::vector<double> radii_from(const json& cfg, double fallback_length) {
    if (cfg.contains("radii")) return cfg["radii"].get<std::vector<double>>();
    std::vector<double> r;
    for (double x = fallback_length / 4.0; x < fallback_length * 0.999;
         x += fallback_length / 4.0)
        r.push_back(x);
    r.push_back(fallback_length);
    return r;
}

Mesh interval_from(const json& d) {
    const double length = d.value("length", 1.0);
    const int elements = d.value("elements", 64);
    Mesh m = build_interval_mesh(length, elements, radii_from(d, length));
    if (d.value("type", "interval") == std::string("ambient-box")) {
        // outer truncation carries homogeneous Dirichlet data
        for (auto& f : m.facets)
            if (f.tag == FacetTag::TruncationCut) f.tag = FacetTag::DirichletOuter;
    }
    return m;
}

Mesh domain_from(const json& cfg) {
    const json& d = cfg.at("domain");
    const std::string type = d.value("type", "interval");
    if (type == "interval" || type == "ambient-box") return interval_from(d);
    if (type == "strip") {
        const double x_max = d.value("x_max", 4.0);
        const double half = d.value("half_width", 1.0);
        const double decay = d.value("profile_decay", 0.5);
        const int resolution = d.value("resolution", 4);
        auto profile = [half, decay](double x) {
            return half * std::exp(-decay * x);
        };
        return build_strip_mesh(profile, x_max, resolution,
                                radii_from(d, x_max));
    }
    throw std::invalid_argument("unknown domain type: " + type);
}

WeightSet weights_from(const json& cfg) {
    const json w = cfg.value("weights", json::object());
    const std::string preset = w.value("preset", "unit");
    WeightSet ws;
    if (preset == "unit") {
        ws = WeightSet::unit();
    } else if (preset == "power") {
        ws = WeightSet::power_family(w.value("alpha0", 2.0),
                                     w.value("alpha1", -1.0),
                                     w.value("alpha2", 0.0));
    } else if (preset == "piecewise") {
        // radial step profile: value of each weight per |x| interval, base 1
        struct Piece {
            double from, to, V0, V1, V2;
        };
        std::vector<Piece> pieces;
        for (const auto& pj : w.value("pieces", json::array()))
            pieces.push_back({pj.value("from", 0.0), pj.value("to", 0.0),
                              pj.value("V0", 1.0), pj.value("V1", 1.0),
                              pj.value("V2", 1.0)});
        auto member = [pieces](int which) {
            return [pieces, which](const Point& p) {
                const double r = p.norm();
                for (const auto& pc : pieces)
                    if (r >= pc.from && r < pc.to)
                        return which == 0 ? pc.V0 : which == 1 ? pc.V1 : pc.V2;
                return 1.0;
            };
        };
        ws = WeightSet::unit();
        ws.V0 = member(0);
        ws.V1 = member(1);
        ws.V2 = member(2);
    } else {
        throw std::invalid_argument("unknown weight preset: " + preset);
    }
    const json t = w.value("tau", json("one"));
    if (t.is_string()) {
        const std::string name = t.get<std::string>();
        if (name == "one")
            ws.tau = [](const Point&) { return 1.0; };
        else if (name == "minus-one")
            ws.tau = [](const Point&) { return -1.0; };
        else if (name == "zero")
            ws.tau = [](const Point&) { return 0.0; };
        else
            throw std::invalid_argument("unknown tau preset: " + name);
    } else if (t.contains("pocket")) {
        // {"pocket": [a, b]} -> -1 for |x| in [a, b), +1 elsewhere
        const double a = t["pocket"].at(0).get<double>();
        const double b = t["pocket"].at(1).get<double>();
        ws.tau = [a, b](const Point& p) {
            const double r = p.norm();
            return (r >= a && r < b) ? -1.0 : 1.0;
        };
    } else {
        // {"split": s, "left": a, "right": b} -> a for |x| < s, b beyond
        const double split = t.value("split", 0.5);
        const double left = t.value("left", 1.0);
        const double right = t.value("right", -1.0);
        ws.tau = [split, left, right](const Point& p) {
            return p.norm() < split ? left : right;
        };
    }
    return ws;
}

Covering covering_from(const json& cfg, const Mesh& mesh) {
    const json c = cfg.value("covering", json::object());
    const double radius = c.value("chart_radius", 0.25);
    const double inflation = c.value("inflation", 2.0);
    return build_covering(mesh, radius, inflation);
}

ScalarField field_from(const std::string& name) {
    if (name == "one") return [](const Point&) { return 1.0; };
    if (name == "zero") return nullptr;
    if (name == "cos-pi") return [](const Point& p) { return std::cos(M_PI * p.x()); };
    if (name == "invsqrt")
        return [](const Point& p) { return 1.0 / std::sqrt(std::max(p.x(), 1e-300)); };
    if (name == "linear") return [](const Point& p) { return p.x(); };
    throw std::invalid_argument("unknown field preset: " + name);
}

std::string csv_of_spectrum(const Spectrum& s) {
    std::ostringstream os;
    s.write_csv(os);
    return os.str();
}

void fix_sign(Eigen::VectorXd& u) {
    if (u.maxCoeff() < -u.minCoeff()) u = -u;
}

// ---------------------------------------------------------------- pipelines

int pipe_spectrum(const json& cfg, const std::string& out, unsigned seed,
                  bool dirichlet) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    const int count = cfg.value("count", 4);
    const double tol = cfg.value("tolerances", json::object()).value("solver", 1e-10);

    Summary sum;
    Spectrum spec;
    if (dirichlet) {
        spec = dirichlet_spectrum(mesh, ws, count, tol);
    } else {
        SymmetricForm Q = assemble_Q(mesh, ws);
        SymmetricForm M =
            assemble_weighted_mass(mesh, ws.tau, ws.V2, 2, "massV2tau");
        spec = solve_pencil(Q, M, count, tol, static_cast<unsigned>(seed));
    }
    write_file(out + "/spectrum.csv", csv_of_spectrum(spec));

    sum.add("pipeline", std::string(dirichlet ? "dirichlet-spectrum" : "spectrum"));
    sum.add("count_requested", static_cast<long long>(count));
    if (!spec.positive.empty()) sum.add("lambda_1_plus", spec.positive[0].value);
    if (!spec.negative.empty()) sum.add("lambda_1_minus", spec.negative[0].value);
    if (!spec.note.empty()) sum.add("note", spec.note);
    bool residuals_ok = true;
    for (const auto& e : spec.positive) residuals_ok &= e.residual <= tol;
    for (const auto& e : spec.negative) residuals_ok &= e.residual <= tol;
    sum.assert_that("residuals_within_tolerance", residuals_ok);

    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_embed_const(const json& cfg, const std::string& out, unsigned seed) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    Covering cov = covering_from(cfg, mesh);
    ws.calibrate(mesh, cov, cfg.value("samples", 64),
                 static_cast<unsigned>(seed));
    const json ex = cfg.value("exponents", json::object());
    const double q = ex.value("q", 1.0);
    const double q0 = ex.value("q0", 1.0);
    const double q1 = ex.value("q1", 1.0);
    const int m_max = mesh.max_exhaustion_index();

    SymmetricForm Q = assemble_Q(mesh, ws);
    SymmetricForm M = assemble_weighted_mass(
        mesh, [](const Point&) { return 1.0; }, ws.V2, 2, "massV2");
    const double op_norm = operator_norm_embedding(Q, M);

    std::ostringstream csv;
    csv.precision(17);
    csv << "m,embedding_B,trace_B\n";
    Summary sum;
    for (int m = 0; m <= m_max; ++m) {
        const double b = embedding_constant_B(mesh, cov, ws, q, q0, m);
        const double tb = trace_constant_B(mesh, cov, ws, q, q1, m);
        csv << m << ',' << format_double(b) << ',' << format_double(tb) << '\n';
    }
    write_file(out + "/embed-const.csv", csv.str());
    sum.add("pipeline", std::string("embed-const"));
    sum.add("operator_norm_embedding", op_norm);
    sum.add("charts", static_cast<long long>(cov.charts.size()));
    sum.add("R1", cov.R1);
    sum.add("R2", cov.R2);
    sum.assert_that("operator_norm_nonnegative", op_norm >= 0.0);
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_tail(const json& cfg, const std::string& out, bool trace) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    SymmetricForm Q = assemble_Q(mesh, ws);
    auto one = [](const Point&) { return 1.0; };

    std::ostringstream csv;
    csv.precision(17);
    csv << "m,sigma_m\n";
    std::vector<double> sigmas;
    const int m_max = mesh.max_exhaustion_index();
    for (int m = 0; m <= m_max; ++m) {
        SymmetricForm tail_mass =
            trace
                ? assemble_boundary_mass_tail(mesh, ws.W,
                                              FacetTag::PhysicalGamma, m)
                : assemble_weighted_mass_tail(mesh, one, ws.V2, m);
        const double s = trace ? trace_tail_functional(Q, tail_mass, m)
                               : tail_functional(Q, tail_mass, m);
        sigmas.push_back(s);
        csv << m << ',' << format_double(s) << '\n';
    }
    write_file(out + std::string(trace ? "/trace-tail.csv" : "/tail.csv"),
               csv.str());

    Summary sum;
    sum.add("pipeline", std::string(trace ? "trace-tail" : "tail"));
    bool mono = true;
    for (std::size_t i = 1; i < sigmas.size(); ++i)
        mono &= sigmas[i] <= sigmas[i - 1] + 1e-8;
    sum.add("sigma_first", sigmas.front());
    sum.add("sigma_last", sigmas.back());
    sum.assert_that("tail_sequence_nonincreasing", mono);
    sum.assert_that("tail_decreases_overall", sigmas.back() < sigmas.front());
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

struct ThreeDomain {
    Mesh meshM, meshN, meshO;
    WeightSet ws;
    Spectrum specM, specN, specO;
    CapacityResult capP, capM, cnu;
    ComparisonInputs inputs;
};

ThreeDomain three_domain(const json& cfg, unsigned seed) {
    ThreeDomain td;
    const json g = cfg.value("three_domain", json::object());
    const double lo = g.value("omega_length", 1.0);
    const double ln = g.value("n_length", 1.25);
    const double lm = g.value("box_length", 3.0);
    const int per_unit = g.value("elements_per_unit", 16);
    const double flip = g.value("tau_flip", ln);  // tau negative past this
    const double ell = g.value("ell", 0.5);

    auto radii = [&](double len) {
        std::vector<double> r{len / 2, len};
        return r;
    };
    td.meshO = build_interval_mesh(lo, static_cast<int>(std::lround(lo * per_unit)),
                                   radii(lo));
    td.meshN = build_interval_mesh(ln, static_cast<int>(std::lround(ln * per_unit)),
                                   radii(ln));
    td.meshM = build_interval_mesh(lm, static_cast<int>(std::lround(lm * per_unit)),
                                   radii(lm));
    for (auto& f : td.meshM.facets)
        if (f.tag == FacetTag::TruncationCut) f.tag = FacetTag::DirichletOuter;

    td.ws = weights_from(cfg);
    if (!cfg.value("weights", json::object()).contains("tau"))
        td.ws.tau = [flip](const Point& p) {
            return p.norm() < flip ? 1.0 : -1.0;
        };

    const double tol = 1e-10;
    // ambient double-branch spectrum (outer cut Dirichlet)
    SymmetricForm Qm = assemble_Q(td.meshM, td.ws, {FacetTag::DirichletOuter});
    SymmetricForm Mm =
        assemble_weighted_mass(td.meshM, td.ws.tau, td.ws.V2, 2, "massV2tau")
            .reduced(Qm.dofs);
    td.specM = solve_pencil(Qm, Mm, 2, tol, seed);

    td.specN = dirichlet_spectrum(td.meshN, td.ws, 2, tol);

    SymmetricForm Qo = assemble_Q(td.meshO, td.ws);
    SymmetricForm Mo =
        assemble_weighted_mass(td.meshO, td.ws.tau, td.ws.V2, 2, "massV2tau");
    td.specO = solve_pencil(Qo, Mo, 2, tol, seed);

    // capacities: pin everything outside N to the ambient principal modes
    SymmetricForm QmFull = assemble_Q(td.meshM, td.ws);
    std::vector<int> outside;
    for (int i = 0; i < td.meshM.num_nodes(); ++i)
        if (td.meshM.nodes[i].x() > ln + 1e-12) outside.push_back(i);
    Eigen::VectorXd phiP = Qm.dofs.prolong(td.specM.positive.at(0).vector);
    Eigen::VectorXd phiMi = Qm.dofs.prolong(td.specM.negative.at(0).vector);
    fix_sign(phiP);
    fix_sign(phiMi);
    td.capP = cap_pm(td.meshM, outside, phiP, QmFull, CapVariant::CapPlus);
    td.capM = cap_pm(td.meshM, outside, phiMi, QmFull, CapVariant::CapMinus);

    // C_nu on N: kappa1 from the Dirichlet solve, phiOmega extended by zero
    SymmetricForm Qn = assemble_Q(td.meshN, td.ws);
    Eigen::VectorXd kappa1 = td.specN.dofs.prolong(td.specN.positive.at(0).vector);
    fix_sign(kappa1);
    Eigen::VectorXd phiO = Eigen::VectorXd::Zero(td.meshN.num_nodes());
    Eigen::VectorXd phiOmega = td.specO.positive.at(0).vector;
    fix_sign(phiOmega);
    std::vector<int> omega_nodes;
    for (int i = 0; i < td.meshN.num_nodes(); ++i) {
        const double x = td.meshN.nodes[i].x();
        if (x <= lo + 1e-12) {
            omega_nodes.push_back(i);
            // aligned meshes: locate the Omega node at the same coordinate
            for (int j = 0; j < td.meshO.num_nodes(); ++j)
                if (std::abs(td.meshO.nodes[j].x() - x) < 1e-9)
                    phiO[i] = phiOmega[j];
        }
    }
    td.cnu = c_nu_gamma(td.meshN, omega_nodes, kappa1, phiO, ell, Qn, td.ws);

    // extension energy of phi_Omega into M (zero past Omega), budget measured
    Eigen::VectorXd phiExt = Eigen::VectorXd::Zero(td.meshM.num_nodes());
    for (int j = 0; j < td.meshO.num_nodes(); ++j)
        for (int i = 0; i < td.meshM.num_nodes(); ++i)
            if (std::abs(td.meshM.nodes[i].x() - td.meshO.nodes[j].x()) < 1e-9)
                phiExt[i] = phiOmega[j];
    const double phi_energy = QmFull.apply(phiExt, phiExt);
    SymmetricForm gapMass = assemble_weighted_mass_where(
        td.meshM, td.ws.tau, td.ws.V2,
        [&](int e) {
            const auto& s = td.meshM.simplices[e];
            return td.meshM.nodes[s[0]].x() > lo - 1e-12 &&
                   td.meshM.nodes[s[1]].x() > lo - 1e-12;
        });
    const double budget = phiExt.dot(gapMass.matrix * phiExt);

    td.inputs.lambda1_N = td.specN.positive.at(0).value;
    td.inputs.lambda2_N = td.specN.positive.at(1).value;
    td.inputs.lambda1_Omega = td.specO.positive.at(0).value;
    td.inputs.lambda1_plus_M = td.specM.positive.at(0).value;
    td.inputs.lambda1_minus_M = td.specM.negative.at(0).value;
    if (td.specM.positive.size() > 1)
        td.inputs.lambda2_plus_M = td.specM.positive.at(1).value;
    if (td.specM.negative.size() > 1)
        td.inputs.lambda2_minus_M = td.specM.negative.at(1).value;
    td.inputs.c_nu = td.cnu.value;
    td.inputs.cap_plus = td.capP.value;
    td.inputs.cap_minus = td.capM.value;
    td.inputs.ell = std::max(ell, budget);
    td.inputs.phi_extension_energy = phi_energy;
    return td;
}

int pipe_capacity(const json& cfg, const std::string& out, unsigned seed) {
    ThreeDomain td = three_domain(cfg, seed);
    std::ostringstream csv;
    csv.precision(17);
    csv << "variant,value,constraint_residual,ell,active_constraints\n";
    for (const CapacityResult* r : {&td.capP, &td.capM, &td.cnu})
        csv << to_string(r->variant) << ',' << format_double(r->value) << ','
            << format_double(r->constraint_residual) << ','
            << format_double(r->ell) << ",\"" << r->active_constraints
            << "\"\n";
    write_file(out + "/capacity.csv", csv.str());

    Summary sum;
    sum.add("pipeline", std::string("capacity"));
    sum.add("cap_plus", td.capP.value);
    sum.add("cap_minus", td.capM.value);
    sum.add("c_nu_lower_bound", td.cnu.value);
    sum.assert_that("capacities_nonnegative",
                    td.capP.value >= 0 && td.capM.value >= 0 &&
                        td.cnu.value >= 0);
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_verify_bounds(const json& cfg, const std::string& out, unsigned seed) {
    ThreeDomain td = three_domain(cfg, seed);
    BoundReport rep = verify_comparison_bounds(td.inputs);
    std::ostringstream csv;
    rep.write_csv(csv);
    write_file(out + "/verify-bounds.csv", csv.str());

    Summary sum;
    sum.add("pipeline", std::string("verify-bounds"));
    sum.add("selected_case", static_cast<long long>(rep.selected_case));
    sum.add("lambda_1_N", td.inputs.lambda1_N);
    sum.add("lambda_1_omega", td.inputs.lambda1_Omega);
    sum.add("lambda_1_plus_M", *td.inputs.lambda1_plus_M);
    sum.add("lambda_1_minus_M", *td.inputs.lambda1_minus_M);
    sum.add("ell_used", td.inputs.ell);
    for (const auto& r : rep.rows)
        sum.assert_that(r.name, r.verdict != "fail");

    // sampled invariant: the tau energy of Q-normalized fields stays between
    // the reciprocals of the branch extremes
    SymmetricForm Qm = assemble_Q(td.meshM, td.ws, {FacetTag::DirichletOuter});
    SymmetricForm Mm =
        assemble_weighted_mass(td.meshM, td.ws.tau, td.ws.V2, 2, "massV2tau")
            .reduced(Qm.dofs);
    const SampledRange sr = sample_tau_energy_range(
        Qm, Mm, td.specM.negative.at(0).value, td.specM.positive.at(0).value,
        cfg.value("range_samples", 200), seed);
    sum.add("tau_energy_min", sr.min_value);
    sum.add("tau_energy_max", sr.max_value);
    sum.assert_that("tau_energy_range", sr.within);

    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_l1_solve(const json& cfg, const std::string& out) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    const double lambda = cfg.value("lambda", 0.0);
    const int stages = cfg.value("stages", 8);
    ApproxOptions opts;
    opts.q_list = cfg.value("q_list", std::vector<double>{1.2, 1.4});
    opts.quadratic_clamp = cfg.value("quadratic_clamp", false);
    const ScalarField f0 = field_from(cfg.value("f0", "one"));
    const ScalarField f1 = field_from(cfg.value("f1", "zero"));

    ApproxSolution sol = approximate_solve(mesh, ws, f0, f1, lambda, stages, opts);
    std::ostringstream csv;
    sol.write_csv(csv);
    write_file(out + "/l1-solve.csv", csv.str());

    Summary sum;
    sum.add("pipeline", std::string("l1-solve"));
    sum.add("lambda", lambda);
    sum.add("weak_residual", sol.weak_residual);
    for (std::size_t k = 0; k < opts.q_list.size(); ++k) {
        std::vector<double> hist;
        for (const auto& st : sol.history) hist.push_back(st.norms[k]);
        std::vector<double> sorted = hist;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        const double maxv = sorted.back();
        std::ostringstream ql;
        ql << opts.q_list[k];
        sum.add("norm_max_over_median_q" + ql.str(),
                median > 0 ? maxv / median : 0.0);
        sum.assert_that("bounded_history_q" + ql.str(),
                        median > 0 && maxv / median <= 10.0);
    }
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_resonance_scan(const json& cfg, const std::string& out, unsigned seed) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    SymmetricForm Q = assemble_Q(mesh, ws);
    SymmetricForm M =
        assemble_weighted_mass(mesh, ws.tau, ws.V2, 2, "massV2tau");
    const int per_branch = cfg.value("count", 2);
    Spectrum spec = solve_pencil(Q, M, per_branch, 1e-10, seed);
    const double cluster_tol = cfg.value("cluster_tol", 1e-6);
    const int points = cfg.value("points", 200);

    std::vector<double> eigenvalues;
    for (const auto& e : spec.negative) eigenvalues.push_back(e.value);
    for (const auto& e : spec.positive) eigenvalues.push_back(e.value);
    const double lo = spec.negative.empty() ? -1.0
                                            : spec.negative.back().value - 1.0;
    const double hi = spec.positive.empty() ? 1.0
                                            : spec.positive.back().value + 1.0;

    std::ostringstream csv;
    csv.precision(17);
    csv << "lambda,status,distance_to_spectrum\n";
    bool dichotomy = true;
    for (int i = 0; i < points; ++i) {
        const double lambda = lo + (hi - lo) * i / (points - 1);
        const auto basis = eigenspace(lambda, Q, M, cluster_tol);
        double dist = std::numeric_limits<double>::infinity();
        for (double ev : eigenvalues) dist = std::min(dist, std::abs(lambda - ev));
        const bool resonant = !basis.empty();
        const bool should =
            dist <= cluster_tol * std::max(1.0, std::abs(lambda));
        if (resonant != should) dichotomy = false;
        csv << format_double(lambda) << ','
            << (resonant ? "Resonant" : "Unique") << ',' << format_double(dist)
            << '\n';
    }
    // the eigenvalues themselves must classify as resonant
    for (double ev : eigenvalues) {
        const auto basis = eigenspace(ev, Q, M, cluster_tol);
        if (basis.empty()) dichotomy = false;
        csv << format_double(ev) << ','
            << (!basis.empty() ? "Resonant" : "Unique") << ",0\n";
    }
    write_file(out + "/resonance-scan.csv", csv.str());

    Summary sum;
    sum.add("pipeline", std::string("resonance-scan"));
    sum.add("points", static_cast<long long>(points));
    sum.assert_that("dichotomy", dichotomy);
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_degiorgi(const json& cfg, const std::string& out, unsigned seed) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    Covering cov = covering_from(cfg, mesh);

    SymmetricForm Q = assemble_Q(mesh, ws);
    SymmetricForm M =
        assemble_weighted_mass(mesh, ws.tau, ws.V2, 2, "massV2tau");
    Spectrum spec = solve_pencil(Q, M, 1, 1e-10, seed);
    Eigen::VectorXd u = spec.positive.at(0).vector;
    fix_sign(u);
    const double lambda = spec.positive.at(0).value;

    DeGiorgiExponents exps;
    const json ex = cfg.value("exponents", json::object());
    exps.q2 = ex.value("q2", 4.0);
    exps.q3 = ex.value("q3", 4.0);
    exps.two_V = ex.value("two_V", 6.0);
    exps.two_W = ex.value("two_W", 6.0);

    DeGiorgiOptions opts;
    auto one = [](const Point&) { return 1.0; };
    opts.embed_V = operator_norm_embedding(
        Q, assemble_weighted_mass(mesh, one, ws.V2, 2, "massV2"));
    opts.embed_W = operator_norm_embedding(
        Q, assemble_boundary_mass(mesh, ws.W, FacetTag::PhysicalGamma));
    opts.safety = cfg.value("safety", 2.0);

    // zero-order data of the eigenfunction equation: c2 = -lambda tau
    DeGiorgiData data;
    {
        double total = 0.0;
        for (int e = 0; e < mesh.num_simplices(); ++e) {
            Point c = Point::Zero();
            const int nv = mesh.dimension == 1 ? 2 : 3;
            for (int k = 0; k < nv; ++k) c += mesh.nodes[mesh.simplices[e][k]];
            c /= nv;
            total += mesh.volume(e) *
                     std::pow(std::abs(lambda * ws.tau(c)), exps.q2) * ws.V2(c);
        }
        data.c2_norm = std::pow(total, 1.0 / exps.q2);
    }

    Summary sum;
    sum.add("pipeline", std::string("degiorgi"));
    std::ostringstream csv;
    bool all_dominate = true;
    bool wrote_header = false;
    for (std::size_t k = 0; k < cov.charts.size(); ++k) {
        if (cov.charts[k].kind != 1) continue;
        DeGiorgiResult r =
            degiorgi_bound(mesh, cov, static_cast<int>(k), u, ws, data, exps, opts);
        std::ostringstream row;
        write_degiorgi_csv(row, static_cast<int>(k), r);
        if (wrote_header) {
            const std::string s = row.str();
            csv << s.substr(s.find('\n') + 1);
        } else {
            csv << row.str();
            wrote_header = true;
        }
        all_dominate &= r.certified && r.bound >= r.nodal_max;
    }
    write_file(out + "/degiorgi.csv", csv.str());
    sum.assert_that("certificate_dominates_nodal_max", all_dominate);
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_decay(const json& cfg, const std::string& out, unsigned seed) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    SymmetricForm Q = assemble_Q(mesh, ws);
    SymmetricForm M =
        assemble_weighted_mass(mesh, ws.tau, ws.V2, 2, "massV2tau");
    Spectrum spec = solve_pencil(Q, M, 1, 1e-10, seed);
    Eigen::VectorXd u = spec.positive.at(0).vector;
    fix_sign(u);

    std::ostringstream csv;
    csv.precision(17);
    csv << "m,tail_sup\n";
    std::vector<double> sups;
    for (int m = 0; m <= mesh.max_exhaustion_index(); ++m) {
        const double s = tail_sup(u, mesh, m);
        sups.push_back(s);
        csv << m << ',' << format_double(s) << '\n';
    }
    write_file(out + "/decay.csv", csv.str());

    Summary sum;
    sum.add("pipeline", std::string("decay"));
    bool mono = true;
    for (std::size_t i = 1; i < sups.size(); ++i) mono &= sups[i] <= sups[i - 1];
    const double factor = cfg.value("decay_factor", 0.5);
    // compare the last nonempty tail against the full sup
    double last_nonzero = 0.0;
    for (double s : sups)
        if (s > 0.0) last_nonzero = s;
    sum.add("sup_first", sups.front());
    sum.add("sup_last_nonempty", last_nonzero);
    sum.assert_that("tail_sup_nonincreasing", mono);
    sum.assert_that("tail_sup_decays",
                    last_nonzero < factor * sups.front());
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_extension_check(const json& cfg, const std::string& out) {
    const json d = cfg.value("extension", json::object());
    const double delta = d.value("delta", 1.0);
    const double q = d.value("q", 2.0);
    const std::string field = d.value("field", "linear");

    Summary sum;
    sum.add("pipeline", std::string("extension-check"));
    std::ostringstream csv;
    csv.precision(17);
    csv << "refinement,norm_ratio\n";

    Mesh domain = domain_from(cfg);
    json acfg = cfg;
    acfg["domain"]["length"] = cfg["domain"].value("length", 1.0) *
                               d.value("ambient_scale", 2.0);
    acfg["domain"]["elements"] = static_cast<int>(
        cfg["domain"].value("elements", 64) * d.value("ambient_scale", 2.0));
    Mesh ambient = domain_from(acfg);
    WeightSet ws = weights_from(cfg);

    std::vector<double> ratios;
    bool exact_on_domain = true;
    for (int lvl = 0; lvl < 2; ++lvl) {
        if (lvl > 0) {
            domain = refine_uniform(domain);
            ambient = refine_uniform(ambient);
        }
        Covering cov = covering_from(cfg, domain);
        const ScalarField uf = field_from(field);
        Eigen::VectorXd u(domain.num_nodes());
        for (int i = 0; i < domain.num_nodes(); ++i) u[i] = uf(domain.nodes[i]);
        ExtensionResult er = extend(domain, u, cov, delta, ambient, ws, q);
        ratios.push_back(er.norm_ratio);
        csv << lvl << ',' << format_double(er.norm_ratio) << '\n';
        for (int i = 0; i < ambient.num_nodes(); ++i)
            for (int j = 0; j < domain.num_nodes(); ++j)
                if ((ambient.nodes[i] - domain.nodes[j]).norm() < 1e-9)
                    exact_on_domain &= er.values[i] == u[j];
    }
    write_file(out + "/extension-check.csv", csv.str());
    sum.add("ratio_coarse", ratios[0]);
    sum.add("ratio_fine", ratios[1]);
    sum.assert_that("exact_on_domain_nodes", exact_on_domain);
    sum.assert_that("ratio_stable_under_refinement",
                    std::abs(ratios[1] - ratios[0]) <=
                        0.1 * std::max(ratios[0], 1e-12));
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

int pipe_check_conditions(const json& cfg, const std::string& out,
                          unsigned seed) {
    Mesh mesh = domain_from(cfg);
    WeightSet ws = weights_from(cfg);
    Covering cov = covering_from(cfg, mesh);
    CheckOptions opts;
    opts.samples = cfg.value("samples", 64);
    opts.seed = seed;
    const double q = cfg.value("exponents", json::object()).value("q", 2.0);
    ConditionReport rep = check_conditions(mesh, cov, ws, q, opts);

    std::ostringstream csv;
    csv.precision(17);
    csv << "condition,verdict,constant,worst_x,worst_y,detail\n";
    for (const auto& [name, e] : rep.entries)
        csv << name << ',' << to_string(e.verdict) << ','
            << format_double(e.constant) << ',' << format_double(e.worst_point.x())
            << ',' << format_double(e.worst_point.y()) << ",\"" << e.detail
            << "\"\n";
    write_file(out + "/check-conditions.csv", csv.str());

    Summary sum;
    sum.add("pipeline", std::string("check-conditions"));
    sum.add("K_q", rep.K_q);
    sum.add("K_3", rep.K_3);
    sum.add("tau_changes_sign", std::string(rep.tau_changes_sign ? "yes" : "no"));
    bool ok = true;
    for (const auto& [name, e] : rep.entries)
        if (e.verdict == Verdict::Fail && name != "tau-sign") ok = false;
    sum.assert_that("no_condition_failures", ok);
    std::ostringstream ss;
    sum.write(ss);
    write_file(out + "/summary.txt", ss.str());
    return sum.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted spectral laboratory"};
    app.require_subcommand(1);

    const std::vector<std::string> pipelines{
        "spectrum",      "dirichlet-spectrum", "embed-const",
        "tail",          "trace-tail",         "capacity",
        "verify-bounds", "l1-solve",           "resonance-scan",
        "degiorgi",      "decay",              "extension-check",
        "check-conditions"};

    std::string config_path, out_dir = "out";
    std::uint64_t seed = 1;
    int threads = 1;
    std::string chosen;
    for (const auto& p : pipelines) {
        auto* sub = app.add_subcommand(p);
        sub->add_option("--config", config_path, "JSON run configuration")
            ->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--threads", threads, "worker parallelism bound");
        sub->callback([&chosen, p]() { chosen = p; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0) {
            std::cerr << "valid pipelines:";
            for (const auto& p : pipelines) std::cerr << ' ' << p;
            std::cerr << '\n';
            return 2;
        }
        return 0;
    }

    try {
        Eigen::setNbThreads(std::max(1, threads));
        std::ifstream is(config_path);
        if (!is) throw std::runtime_error("cannot read config: " + config_path);
        json cfg = json::parse(is);
        const unsigned s = static_cast<unsigned>(seed);

        if (chosen == "spectrum") return pipe_spectrum(cfg, out_dir, s, false);
        if (chosen == "dirichlet-spectrum")
            return pipe_spectrum(cfg, out_dir, s, true);
        if (chosen == "embed-const") return pipe_embed_const(cfg, out_dir, s);
        if (chosen == "tail") return pipe_tail(cfg, out_dir, false);
        if (chosen == "trace-tail") return pipe_tail(cfg, out_dir, true);
        if (chosen == "capacity") return pipe_capacity(cfg, out_dir, s);
        if (chosen == "verify-bounds") return pipe_verify_bounds(cfg, out_dir, s);
        if (chosen == "l1-solve") return pipe_l1_solve(cfg, out_dir);
        if (chosen == "resonance-scan")
            return pipe_resonance_scan(cfg, out_dir, s);
        if (chosen == "degiorgi") return pipe_degiorgi(cfg, out_dir, s);
        if (chosen == "decay") return pipe_decay(cfg, out_dir, s);
        if (chosen == "extension-check") return pipe_extension_check(cfg, out_dir);
        if (chosen == "check-conditions")
            return pipe_check_conditions(cfg, out_dir, s);
        std::cerr << "unknown pipeline\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
