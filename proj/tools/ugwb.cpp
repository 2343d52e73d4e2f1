// ugwb: command-line experiments for ultra-generalized Wannier bases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ugwb/ugwb.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ugwb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

struct Common {
    std::uint64_t seed = 0;
    std::string out = ".";
};

/// Raised for flag values that parse but make no sense.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path prepare_out(const Common& c) {
    fs::path dir(c.out);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text.data(), text.size()); }

/// Writes the report, echoes it to stdout and maps the check verdict to an exit code.
int finish(const fs::path& path, json report, bool ok) {
    report["ok"] = ok;
    const std::string text = report.dump(2) + "\n";
    write_text(path, text);
    std::cout << text;
    return ok ? kExitOk : kExitInvariant;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("cannot parse '" + item + "' as a number");
        }
        if (used != item.size()) throw UsageError("cannot parse '" + item + "' as a number");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty list");
    return out;
}

json localization_sample(double q, std::uint64_t seed) {
    const auto g = LocalizationFunction::exponential(q);
    const auto chk = check_localization_function(g, 2, 20.0, 4096, seed);
    return {{"name", g.name},
            {"c_g", g.c_g},
            {"max_triangle_ratio", chk.max_triangle_ratio},
            {"samples", chk.samples},
            {"ok", chk.ok()}};
}

json ugwb_json(const Ugwb& u, const UgwbReport& rep) {
    json levels = json::array();
    std::size_t v = 0;
    for (const auto& l : u.levels) {
        json li = json::array();
        for (std::size_t c = 0; c < l.multiplicity(); ++c) li.push_back(rep.localization_integrals[v++]);
        levels.push_back({{"lambda", l.lambda},
                          {"radius", l.radius},
                          {"radius_clamped", l.radius_clamped},
                          {"multiplicity", l.multiplicity()},
                          {"localization_integrals", li}});
    }
    json j;
    j["q"] = u.q;
    j["f"] = u.f_kind;
    j["route"] = to_string(u.route);
    j["floor"] = u.floor;
    j["m_bound"] = u.m_bound;
    j["hs_norm_sq"] = u.hs_norm_sq;
    j["hs_overflow"] = u.hs_overflow;
    j["fitted_beta"] = u.fitted_beta ? json(*u.fitted_beta) : json(nullptr);
    j["decay_margin_ok"] = u.decay_margin_ok;
    j["level_count"] = u.levels.size();
    j["vector_count"] = u.total_vectors();
    j["max_multiplicity"] = u.max_multiplicity();
    j["levels"] = levels;
    j["checks"] = {{"decreasing", rep.decreasing},
                   {"positive", rep.positive},
                   {"orthonormality_residual", rep.orthonormality_residual},
                   {"max_localization_integral", rep.max_localization_integral},
                   {"bounded_by_m", rep.bounded_by_m},
                   {"max_g_localization_ratio", rep.max_g_localization_ratio},
                   {"max_normalization_defect", rep.max_normalization_defect},
                   {"ok", rep.ok()}};
    return j;
}

json projection_json(const ProjectionReport& r) {
    return {{"hermiticity_residual", r.hermiticity_residual},
            {"idempotency_residual", r.idempotency_residual},
            {"decay_violations", r.decay_violations},
            {"max_decay_ratio", r.max_decay_ratio},
            {"tol", r.tol},
            {"passed", r.passed}};
}

json grid_json(const GridSpec& g) {
    return {{"dim", g.dim()},
            {"half_width", g.half_width()},
            {"points_per_axis", g.points_per_axis()},
            {"spacing", g.spacing()}};
}

// landau-spectrum

struct SpectrumArgs {
    double b = 1.0, q = 1.0, tol = 1e-10;
    int n = 0, k_max = 10;
};

int run_landau_spectrum(const SpectrumArgs& a, const Common& c) {
    const LandauSpec spec{a.b, a.n, a.q, a.k_max};
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto dir = prepare_out(c);
    const auto rows = landau_spectrum(spec, a.tol);

    std::string csv = "k,lambda,lower,upper,radius,radius_upper\n";
    json jrows = json::array();
    bool bracketed = true, below_cap = true, monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::optional<double> r_up;
        if (spec.n == 0) {
            const double u = radius_bracket_0k(r.k, a.q, a.b).upper;
            r_up = std::sqrt(u * u - 1.0);
            if (!(*r.lower_bound < r.lambda && r.lambda < *r.upper_bound)) bracketed = false;
            if (!radius_bracket_0k(r.k, a.q, a.b).contains(jbracket(r.radius))) bracketed = false;
            if (i > 0 && !(r.lambda < rows[i - 1].lambda)) monotone = false;
        }
        if (r.lambda > std::exp(-a.q) + a.tol) below_cap = false;
        auto opt = [](const std::optional<double>& v) { return v ? g17(*v) : std::string(); };
        csv += std::to_string(r.k) + "," + g17(r.lambda) + "," + opt(r.lower_bound) + "," + opt(r.upper_bound) + "," +
               g17(r.radius) + "," + opt(r_up) + "\n";
        auto jopt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        jrows.push_back({{"k", r.k},
                         {"lambda", r.lambda},
                         {"err_estimate", r.err_estimate},
                         {"lower", jopt(r.lower_bound)},
                         {"upper", jopt(r.upper_bound)},
                         {"radius", r.radius},
                         {"radius_clamped", r.radius_clamped},
                         {"radius_upper", jopt(r_up)}});
    }
    write_text(dir / "landau_spectrum.csv", csv);
    json report{{"command", "landau-spectrum"},
                {"b", a.b},
                {"q", a.q},
                {"n", a.n},
                {"k_max", a.k_max},
                {"tol", a.tol},
                {"energy", spec.energy()},
                {"rows", jrows},
                {"checks", {{"bracketed", bracketed}, {"below_exp_minus_q", below_cap}, {"decreasing", monotone}}}};
    return finish(dir / "landau_spectrum.json", report, bracketed && below_cap && monotone);
}

// landau-validate

struct ValidateArgs {
    SpectrumArgs s;
    int grid = 64;
    double half_width = 6.0;
    int toeplitz_k = 4;
};

int run_landau_validate(const ValidateArgs& a, const Common& c) {
    const LandauSpec spec{a.s.b, a.s.n, a.s.q, a.s.k_max};
    GridSpec grid;
    try {
        spec.validate();
        grid = GridSpec(2, a.half_width, a.grid);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto dir = prepare_out(c);

    const Eigen::MatrixXcd phi = landau_basis_matrix(spec.n, spec.b, grid, -spec.n, spec.k_max);
    const Eigen::MatrixXcd gram = grid.weight() * (phi.adjoint() * phi);
    const double gram_residual = (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();

    const int tk = std::min(a.toeplitz_k, spec.k_max);
    double toeplitz_off = 0.0;
    double toeplitz_diag_err = 0.0;
    const auto radial = landau_spectrum(spec, a.s.tol);
    for (int k = -spec.n; k <= tk; ++k)
        for (int kp = k; kp <= tk; ++kp) {
            const cplx v = toeplitz_element(spec, k, kp);
            if (k == kp) {
                toeplitz_diag_err =
                    std::max(toeplitz_diag_err, std::fabs(v.real() - radial[static_cast<std::size_t>(k + spec.n)].lambda));
            } else {
                toeplitz_off = std::max(toeplitz_off, std::abs(v));
            }
        }

    const auto p = landau_grid_projection(spec.n, spec.b, grid);
    const auto u = build_ugwb(p, spec.q);
    const auto rep = check_ugwb(u);

    std::vector<double> ref;
    for (const auto& r : radial) ref.push_back(r.lambda);
    std::sort(ref.rbegin(), ref.rend());
    json rel = json::array();
    for (std::size_t i = 0; i < std::min(ref.size(), u.levels.size()); ++i)
        rel.push_back(std::fabs(u.levels[i].lambda - ref[i]) / ref[i]);

    const bool gram_ok = gram_residual <= 1e-6;
    const bool toeplitz_ok = toeplitz_off <= 1e-8;
    json report{{"command", "landau-validate"},
                {"b", spec.b},
                {"q", spec.q},
                {"n", spec.n},
                {"k_max", spec.k_max},
                {"grid", grid_json(grid)},
                {"seed", c.seed},
                {"gram_residual", gram_residual},
                {"toeplitz_k_max", tk},
                {"toeplitz_offdiag_max", toeplitz_off},
                {"toeplitz_diag_max_error", toeplitz_diag_err},
                {"projection_rank", p.range_basis()->cols()},
                {"grid_vs_radial_rel_error", rel},
                {"localization_function", localization_sample(spec.q, c.seed)},
                {"ugwb", ugwb_json(u, rep)},
                {"checks", {{"gram", gram_ok}, {"toeplitz_diagonal", toeplitz_ok}, {"ugwb", rep.ok()}}}};
    return finish(dir / "landau_validate.json", report, gram_ok && toeplitz_ok && rep.ok());
}

// landau-kernel

struct KernelArgs {
    double b = 1.0;
    int n = 0;
    int grid = 64;
    double half_width = 6.0;
    int k_trunc = -1;
};

int run_landau_kernel(const KernelArgs& a, const Common& c) {
    GridSpec grid;
    try {
        LandauSpec{a.b, a.n, 1.0, 0}.validate();
        grid = GridSpec(2, a.half_width, a.grid);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto dir = prepare_out(c);
    const int kt = a.k_trunc >= -a.n ? a.k_trunc : landau_default_k_trunc(a.n, a.b, corner_radius(grid));
    const auto p = landau_grid_projection(a.n, a.b, grid, kt);
    write_kernel_file(dir / "landau.ugwk", p);
    const auto pr = verify_projection(p, 1e-10);
    json report{{"command", "landau-kernel"},
                {"b", a.b},
                {"n", a.n},
                {"k_trunc", kt},
                {"grid", grid_json(grid)},
                {"rank", p.range_basis()->cols()},
                {"kernel_file", "landau.ugwk"},
                {"projection", projection_json(pr)}};
    return finish(dir / "landau_kernel.json", report, pr.passed);
}

// ugwb

struct UgwbArgs {
    std::string input;
    double q = 1.0;
    double rel_tol = 1e-6;
    std::optional<double> floor;
};

int run_ugwb(const UgwbArgs& a, const Common& c) {
    if (!(a.q > 0.0)) throw UsageError("--q must be positive");
    if (!(a.rel_tol > 0.0)) throw UsageError("--rel-tol must be positive");
    const auto p = read_kernel_file(a.input);
    const auto dir = prepare_out(c);
    UgwbOptions opts;
    opts.rel_tol = a.rel_tol;
    opts.floor = a.floor;
    const auto u = build_ugwb(p, a.q, opts);
    const auto rep = check_ugwb(u);
    const auto pr = verify_projection(p, 1e-8);
    const bool proj_ok = pr.hermiticity_residual <= pr.tol && pr.idempotency_residual <= pr.tol;
    json report = ugwb_json(u, rep);
    report["command"] = "ugwb";
    report["input"] = fs::path(a.input).filename().string();
    report["grid"] = grid_json(p.grid());
    report["seed"] = c.seed;
    report["projection"] = projection_json(pr);
    report["localization_function"] = localization_sample(a.q, c.seed);
    return finish(dir / "ugwb.json", report, rep.ok() && proj_ok);
}

// hofstadter

struct HofstadterArgs {
    std::string flux = "1/3";
    int size = 24;
    std::string boundary = "open";
    std::string window = "auto-lowest";
    double margin = 1e-8;
};

int run_hofstadter(const HofstadterArgs& a, const Common& c) {
    LatticeModel m;
    try {
        m = LatticeModel{a.size, Flux::parse(a.flux), a.boundary == "periodic" ? Boundary::periodic : Boundary::open};
        if (a.boundary != "open" && a.boundary != "periodic") throw UsageError("--boundary must be open or periodic");
        if (a.size < 1 || static_cast<std::size_t>(a.size) * static_cast<std::size_t>(a.size) > kMaxGridPoints)
            throw UsageError("--size out of range");
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    Eigen::MatrixXcd h;
    try {
        h = hofstadter_hamiltonian(m);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto dir = prepare_out(c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd eigs = es.eigenvalues();
    SpectralWindow w;
    if (a.window == "auto-lowest") {
        w = auto_lowest_window(eigs, m.flux);
    } else {
        const auto v = parse_list(a.window);
        if (v.size() != 2 || !(v[0] < v[1])) throw UsageError("--window must be lo,hi with lo < hi, or auto-lowest");
        w = {v[0], v[1]};
    }
    auto p = spectral_projection(h, m.grid(), w, a.margin);

    DecayFitOptions fo;
    fo.metric = m.boundary == Boundary::periodic ? DistanceMode::periodic : DistanceMode::euclidean;
    json decay;
    bool beta_ok = false;
    try {
        const auto fit = kernel_decay_fit(p, fo);
        beta_ok = fit.beta > 0.0;
        json bins = json::array();
        for (const auto& [d, lv] : fit.bins) bins.push_back({d, lv});
        decay = {{"beta", finite_or_null(fit.beta)},
                 {"c", fit.c},
                 {"c_envelope_fit_range", fit.c_envelope},
                 {"r2", fit.r2},
                 {"infinite", fit.infinite},
                 {"localized", fit.localized},
                 {"bins", bins}};
        if (fit.infinite) {
            decay["c_all_entries"] = nullptr;
        } else if (fit.beta > 0.0) {
            // prefactor that makes C e^{-beta |x-y|} dominate every entry
            double c_all = 0.0;
            const auto& k = p.kernel();
            const auto& g = p.grid();
            for (Eigen::Index j = 0; j < k.cols(); ++j)
                for (Eigen::Index i = 0; i < k.rows(); ++i)
                    c_all = std::max(c_all, std::abs(k(i, j)) * std::exp(fit.beta * g.distance(i, j)));
            c_all *= 1.0 + 1e-12;
            decay["c_all_entries"] = c_all;
            p.set_decay(DecayEnvelope{c_all, fit.beta});
        }
    } catch (const DegenerateFit& e) {
        decay = {{"error", e.what()}};
    }

    json marker = nullptr;
    if (m.boundary == Boundary::open && m.size >= 18) marker = bulk_average(chern_marker(p, m), m.size);

    write_kernel_file(dir / "hofstadter.ugwk", p);
    const auto pr = verify_projection(p, 1e-10);
    json report{{"command", "hofstadter"},
                {"flux", m.flux.str()},
                {"size", m.size},
                {"boundary", to_string(m.boundary)},
                {"window", {w.lo, w.hi}},
                {"rank", p.range_basis()->cols()},
                {"gap", finite_or_null(gap_at(eigs, w.hi))},
                {"spectrum_min", eigs(0)},
                {"spectrum_max", eigs(eigs.size() - 1)},
                {"decay_fit", decay},
                {"chern_marker_bulk_average", marker},
                {"kernel_file", "hofstadter.ugwk"},
                {"projection", projection_json(pr)},
                {"checks", {{"projection", pr.passed}, {"beta_positive", beta_ok}}}};
    return finish(dir / "hofstadter.json", report, pr.passed && beta_ok);
}

// trace-density

struct TraceArgs {
    std::string input;
    std::string boxes;
    double q = 1.0;
};

int run_trace_density(const TraceArgs& a, const Common& c) {
    if (!(a.q > 0.0)) throw UsageError("--q must be positive");
    auto boxes = parse_list(a.boxes);
    if (boxes.size() < 2) throw UsageError("--boxes needs at least two values");
    std::sort(boxes.begin(), boxes.end());
    const auto p = read_kernel_file(a.input);
    std::vector<TraceDensityPoint> seq;
    try {
        seq = trace_per_unit_volume(p, boxes);
    } catch (const BoxExceedsGrid& e) {
        throw UsageError(e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto dir = prepare_out(c);
    const auto lim = extrapolate_trace_density(seq);
    const auto u = build_ugwb(p, a.q);
    const auto d = prop24_diagnostic(u, seq);

    std::string csv = "L,trace,value\n";
    json pts = json::array();
    bool nondecreasing = true;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        csv += g17(seq[i].half_width) + "," + g17(seq[i].trace) + "," + g17(seq[i].value) + "\n";
        pts.push_back({{"L", seq[i].half_width}, {"trace", seq[i].trace}, {"value", seq[i].value}});
        if (i > 0 && seq[i].trace < seq[i - 1].trace - 1e-12 * std::fabs(seq[i - 1].trace)) nondecreasing = false;
    }
    write_text(dir / "trace_density.csv", csv);
    const bool consistent = d.verdict == Verdict::consistent;
    json report{{"command", "trace-density"},
                {"input", fs::path(a.input).filename().string()},
                {"grid", grid_json(p.grid())},
                {"q", a.q},
                {"points", pts},
                {"extrapolation", {{"intercept", lim.intercept}, {"slope", lim.slope}, {"limit", lim.limit}, {"power", lim.power}}},
                {"diagnostic",
                 {{"m_star", d.m_star},
                  {"min_gap", finite_or_null(d.min_gap)},
                  {"resolution", d.resolution},
                  {"gaps_bounded_away", d.gaps_bounded_away},
                  {"limit", d.limit},
                  {"limit_positive", d.limit_positive},
                  {"verdict", to_string(d.verdict)}}},
                {"checks", {{"trace_nondecreasing", nondecreasing}, {"consistent", consistent}}}};
    return finish(dir / "trace_density.json", report, nondecreasing && consistent);
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "Seed for sampled checks");
    sub->add_option("--out", c.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ultra-generalized Wannier basis experiments"};
    app.require_subcommand(1);
    Common common;

    SpectrumArgs spec;
    auto* ls = app.add_subcommand("landau-spectrum", "Radial eigenvalues lambda_{n,k} with brackets and radii");
    ls->add_option("--b", spec.b, "Magnetic field strength")->required();
    ls->add_option("--q", spec.q, "Decay rate of f = exp(-q<x>)")->required();
    ls->add_option("--n", spec.n, "Landau level")->required();
    ls->add_option("--k-max", spec.k_max, "Largest angular index")->required();
    ls->add_option("--tol", spec.tol, "Absolute quadrature tolerance");
    add_common(ls, common);

    ValidateArgs val;
    auto* lv = app.add_subcommand("landau-validate", "Grid pipeline against the radial reference");
    lv->add_option("--b", val.s.b, "Magnetic field strength")->required();
    lv->add_option("--q", val.s.q, "Decay rate of f = exp(-q<x>)")->required();
    lv->add_option("--n", val.s.n, "Landau level")->required();
    lv->add_option("--k-max", val.s.k_max, "Largest angular index")->required();
    lv->add_option("--grid", val.grid, "Points per axis")->required();
    lv->add_option("--half-width", val.half_width, "Box half-width")->required();
    lv->add_option("--tol", val.s.tol, "Absolute quadrature tolerance");
    lv->add_option("--toeplitz-k", val.toeplitz_k, "Largest k in the Toeplitz diagonality check");
    add_common(lv, common);

    KernelArgs ker;
    auto* lk = app.add_subcommand("landau-kernel", "Write the grid projection of a Landau level");
    lk->add_option("--b", ker.b, "Magnetic field strength")->required();
    lk->add_option("--n", ker.n, "Landau level")->required();
    lk->add_option("--grid", ker.grid, "Points per axis")->required();
    lk->add_option("--half-width", ker.half_width, "Box half-width")->required();
    lk->add_option("--k-trunc", ker.k_trunc, "Largest angular index kept");
    add_common(lk, common);

    UgwbArgs ug;
    auto* uw = app.add_subcommand("ugwb", "Build and check the UGWB of a kernel file");
    uw->add_option("--input", ug.input, "Kernel file")->required()->check(CLI::ExistingFile);
    uw->add_option("--q", ug.q, "Decay rate of f = exp(-q<x>)")->required();
    uw->add_option("--rel-tol", ug.rel_tol, "Degeneracy tolerance");
    uw->add_option("--floor", ug.floor, "Absolute eigenvalue floor");
    add_common(uw, common);

    HofstadterArgs hof;
    auto* hs = app.add_subcommand("hofstadter", "Spectral projection of the Hofstadter model");
    hs->add_option("--flux", hof.flux, "Flux per plaquette p/q")->required();
    hs->add_option("--size", hof.size, "Lattice side N")->required();
    hs->add_option("--boundary", hof.boundary)->check(CLI::IsMember({"open", "periodic"}));
    hs->add_option("--window", hof.window, "lo,hi or auto-lowest")->required();
    hs->add_option("--margin", hof.margin, "Required distance of the window edges from the spectrum");
    add_common(hs, common);

    TraceArgs tr;
    auto* td = app.add_subcommand("trace-density", "Trace per unit volume and the consistency verdict");
    td->add_option("--input", tr.input, "Kernel file")->required()->check(CLI::ExistingFile);
    td->add_option("--boxes", tr.boxes, "Comma-separated box half-widths")->required();
    td->add_option("--q", tr.q, "Decay rate for the UGWB used by the verdict");
    add_common(td, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ls) return run_landau_spectrum(spec, common);
        if (*lv) return run_landau_validate(val, common);
        if (*lk) return run_landau_kernel(ker, common);
        if (*uw) return run_ugwb(ug, common);
        if (*hs) return run_hofstadter(hof, common);
        if (*td) return run_trace_density(tr, common);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        json err{{"ok", false}, {"error", e.what()}};
        std::cout << err.dump(2) << "\n";
        return kExitInvariant;
    }
    return kExitUsage;
}
