#include "nelsonlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "nelsonlab/circle.hpp"
#include "nelsonlab/estimators.hpp"
#include "nelsonlab/hidden.hpp"
#include "nelsonlab/madelung.hpp"
#include "nelsonlab/nelson.hpp"
#include "nelsonlab/reduce.hpp"
#include "nelsonlab/schrodinger.hpp"

namespace nelsonlab::harness {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// small helpers
// ---------------------------------------------------------------------------

Metric metric_le(const std::string& name, double value, double tol) {
    return {name, value, tol, "<=", value <= tol, false};
}

Metric metric_ge(const std::string& name, double value, double tol) {
    return {name, value, tol, ">=", value >= tol, false};
}

Metric metric_zero(const std::string& name, double value) {
    return {name, value, 0.0, "==", value == 0.0, false};
}

Metric metric_runtime(const std::string& name, double seconds, double tol) {
    return {name, seconds, tol, "<=", seconds <= tol, true};
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << text;
}

void write_json_file(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

// Minimal static line plot; plot data also lands in CSV next to it.
void write_svg_lines(const fs::path& path, const std::string& title,
                     const std::vector<std::string>& labels,
                     const std::vector<std::vector<std::pair<double, double>>>& series) {
    const int W = 720, H = 420, ML = 60, MR = 20, MT = 40, MB = 40;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" +
                      std::to_string(W) + "' height='" + std::to_string(H) + "'>\n";
    svg += "<rect width='100%' height='100%' fill='white'/>\n";
    svg += "<text x='" + std::to_string(W / 2) + "' y='24' text-anchor='middle' "
           "font-family='sans-serif' font-size='16'>" + title + "</text>\n";
    auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };
    svg += "<line x1='" + std::to_string(ML) + "' y1='" + std::to_string(H - MB) +
           "' x2='" + std::to_string(W - MR) + "' y2='" + std::to_string(H - MB) +
           "' stroke='black'/>\n";
    svg += "<line x1='" + std::to_string(ML) + "' y1='" + std::to_string(MT) + "' x2='" +
           std::to_string(ML) + "' y2='" + std::to_string(H - MB) + "' stroke='black'/>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        std::string pts;
        for (const auto& [x, y] : series[k])
            pts += std::to_string(px(x)) + "," + std::to_string(py(y)) + " ";
        svg += "<polyline fill='none' stroke='" + std::string(colors[k % 5]) +
               "' stroke-width='1.5' points='" + pts + "'/>\n";
        if (k < labels.size())
            svg += "<text x='" + std::to_string(ML + 8) + "' y='" +
                   std::to_string(MT + 16 * (k + 1)) + "' font-family='sans-serif' "
                   "font-size='12' fill='" + std::string(colors[k % 5]) + "'>" +
                   labels[k] + "</text>\n";
    }
    svg += "</svg>\n";
    write_text(path, svg);
}

// Expected L1 fluctuation of an N-walker histogram against the density p.
double expected_l1_error(const ScalarField& truth, std::size_t walkers) {
    double acc = 0.0;
    for (int k = 0; k < truth.grid.n; ++k) {
        const double p = std::clamp(truth.values[k] * truth.grid.weight(k), 0.0, 1.0);
        acc += std::sqrt(2.0 * p * (1.0 - p) / (kPi * static_cast<double>(walkers)));
    }
    return acc;
}

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

json params_defaults() {
    return json{{"mass", 1.0},
                {"nu", 0.5},
                {"osmotic_coupling", 1.0},
                {"hbar_convention", "calibrated"}};
}

PhysParams params_from(const json& p, ScalarField potential) {
    return PhysParams::make(p.at("mass").get<double>(), p.at("nu").get<double>(),
                            p.at("osmotic_coupling").get<double>(),
                            hbar_convention_from_string(p.at("hbar_convention")),
                            std::move(potential));
}

struct Benchmark {
    std::string name;
    Grid grid;
    PhysParams params;
    WaveField psi0;
    double t_char = 0.0;
};

Benchmark make_benchmark(const std::string& state, const json& grid_cfg,
                         const json& params_cfg, const json& bench_cfg) {
    Benchmark b;
    b.name = state;
    b.grid = Grid::line(grid_cfg.at("n").get<int>(), grid_cfg.at("x_min").get<double>(),
                        grid_cfg.at("x_max").get<double>());
    if (state == "free_gaussian") {
        b.params = params_from(params_cfg, make_scalar(b.grid, 0.0));
        const double sigma0 = bench_cfg.at("sigma0").get<double>();
        b.psi0 = gaussian_packet(b.grid, b.params, 0.0, sigma0, 0.0);
        // variance doubles after 2 m sigma0^2 / hbar
        b.t_char = 2.0 * b.params.mass * sigma0 * sigma0 / b.params.hbar;
    } else if (state == "harmonic_coherent") {
        const double omega = bench_cfg.at("omega").get<double>();
        const double x0 = bench_cfg.at("x0").get<double>();
        const double mass = params_cfg.at("mass").get<double>();
        b.params = params_from(params_cfg, harmonic_potential(b.grid, mass, omega));
        const double width = std::sqrt(b.params.hbar / (2.0 * b.params.mass * omega));
        b.psi0 = gaussian_packet(b.grid, b.params, x0, width, 0.0);
        b.t_char = 2.0 * kPi / omega;  // one trap period
    } else {
        throw std::invalid_argument("unknown benchmark state: " + state);
    }
    return b;
}

json triangle_defaults() {
    return json{{"experiment", "triangle"},
                {"state", "both"},
                {"grid", {{"n", 256}, {"x_min", -8.0}, {"x_max", 8.0}}},
                {"params", params_defaults()},
                {"benchmark", {{"sigma0", 0.70710678118654752}, {"omega", 1.0}, {"x0", 1.0}}},
                {"ensemble", {{"walkers", 100000}, {"dt", 0.001}, {"seed", 20250802}}},
                {"checkpoints", 5},
                {"output", {{"dump_walkers", 200}}},
                {"tolerances", {{"l1", 0.05}, {"runtime_seconds", 120.0}}}};
}

json energy_defaults() {
    return json{{"experiment", "energy-conservation"},
                {"state", "harmonic_coherent"},
                {"grid", {{"x_min", -8.0}, {"x_max", 8.0}}},
                {"grids", {512, 1024}},
                {"params", params_defaults()},
                {"benchmark", {{"sigma0", 0.70710678118654752}, {"omega", 1.0}, {"x0", 1.0}}},
                {"dt", 0.001},
                {"snapshot_stride", 50},
                {"tolerances", {{"drift", 0.005}, {"refinement_gain", 2.0}}}};
}

json hbar_defaults() {
    return json{{"experiment", "hbar-consistency"},
                {"states", {"free_gaussian", "harmonic_coherent"}},
                {"n_coarse", 512},
                {"n_fine", 1024},
                {"dt", 0.001},
                {"params", params_defaults()},
                {"tolerances",
                 {{"shrink_min", 2.5}, {"plateau_max", 1.5}, {"separation_min", 10.0}}}};
}

json noise_defaults() {
    return json{{"experiment", "noise-constant-scaling"},
                {"grid", {{"n", 384}, {"x_min", -6.0}, {"x_max", 6.0}}},
                {"params", params_defaults()},
                {"omega", 1.0},
                {"dts", {0.004, 0.002, 0.001}},
                {"walkers", 100000},
                {"samples", 52},
                {"seed", 661421},
                {"tolerances", {{"exponent_band", 0.1}, {"amplitude_rel", 0.05}}}};
}

json bias_defaults() {
    return json{{"experiment", "estimator-bias"},
                {"grid", {{"n", 512}, {"x_min", -10.0}, {"x_max", 10.0}}},
                {"params", params_defaults()},
                {"sigma0", 0.70710678118654752},
                {"window", {{"t_start", 0.6}, {"t_end", 1.0}}},
                {"dt", 0.001},
                {"walkers", 100000},
                {"seed", 97511},
                {"alphas", {0.0, 0.25, 0.5, 0.75, 1.0}},
                {"tolerances", {{"slope_band", 0.1}, {"runtime_seconds", 180.0}}}};
}

json hidden_defaults() {
    return json{{"experiment", "hidden-decomposition"},
                {"x_grid", {{"n", 128}, {"x_min", -6.0}, {"x_max", 6.0}}},
                {"y_grid", {{"n", 129}, {"x_min", -4.0}, {"x_max", 4.0}}},
                {"params", params_defaults()},
                {"omega", 1.0},
                {"target_dt", 0.001},
                {"correlation", 0.6},
                {"tolerances", {{"identity", 1e-10}}}};
}

json circle_defaults() {
    return json{{"experiment", "circle-wallstrom"},
                {"wave_n", 256},
                {"w_values", {0.0, 0.3, 1.0, 2.0}},
                {"ensemble_w", {0.3, 1.0}},
                {"params", params_defaults()},
                {"ensemble", {{"walkers", 100000}, {"dt", 0.01}, {"t_final", 10.0}, {"seed", 445566}}},
                {"hist_n", 64},
                {"dynamics_dt", 0.001},
                {"tolerances", {{"l1", 0.03}}}};
}

json reversal_defaults() {
    return json{{"experiment", "time-reversal"},
                {"grid", {{"n", 384}, {"x_min", -6.0}, {"x_max", 6.0}}},
                {"params", params_defaults()},
                {"omega", 1.0},
                {"ensemble", {{"walkers", 100000}, {"dt", 0.001}, {"t_final", 1.0}, {"seed", 778899}}},
                {"bundle", {{"walkers", 2000}, {"samples", 41}}},
                {"window",
                 {{"grid_n", 384},
                  {"x_min", -8.0},
                  {"x_max", 8.0},
                  {"sigma0", 0.70710678118654752},
                  {"t_start", 0.2},
                  {"t_end", 0.7}}},
                {"tolerances", {{"l1_floor", 0.05}, {"l1_factor", 3.0}}}};
}

void collect_unknown_keys(const json& user, const json& defaults, const std::string& path,
                          std::vector<std::string>& out) {
    if (defaults.is_object()) {
        if (!user.is_object()) {
            out.push_back(path + ": expected an object");
            return;
        }
        for (const auto& [key, value] : user.items()) {
            if (!defaults.contains(key)) {
                out.push_back(path + ": unknown key '" + key + "'");
                continue;
            }
            collect_unknown_keys(value, defaults.at(key), path + "." + key, out);
        }
        return;
    }
    if (defaults.is_array()) {
        if (!user.is_array()) out.push_back(path + ": expected an array");
        return;
    }
    if (defaults.is_number() && !user.is_number())
        out.push_back(path + ": expected a number");
    if (defaults.is_string() && !user.is_string())
        out.push_back(path + ": expected a string");
}

void merge_into(json& base, const json& user) {
    if (!user.is_object() || !base.is_object()) {
        base = user;
        return;
    }
    for (const auto& [key, value] : user.items()) {
        if (base.contains(key) && base.at(key).is_object() && value.is_object())
            merge_into(base.at(key), value);
        else
            base[key] = value;
    }
}

void check_positive(const json& cfg, const std::string& pointer, const std::string& name,
                    std::vector<std::string>& out, bool allow_zero = false) {
    const json* node = &cfg;
    std::string token, rest = pointer;
    while (!rest.empty()) {
        const auto dot = rest.find('.');
        token = rest.substr(0, dot);
        rest = (dot == std::string::npos) ? "" : rest.substr(dot + 1);
        if (!node->contains(token)) return;
        node = &node->at(token);
    }
    if (!node->is_number()) {
        out.push_back(name + " must be a number");
        return;
    }
    const double v = node->get<double>();
    if (allow_zero ? v < 0.0 : v <= 0.0)
        out.push_back(name + " must be " + (allow_zero ? ">= 0" : "> 0"));
}

void semantic_checks(const json& cfg, std::vector<std::string>& out) {
    const std::string exp = cfg.at("experiment").get<std::string>();

    if (cfg.contains("params")) {
        check_positive(cfg, "params.mass", "params.mass", out);
        check_positive(cfg, "params.nu", "params.nu", out, true);
        check_positive(cfg, "params.osmotic_coupling", "params.osmotic_coupling", out, true);
        const std::string conv = cfg.at("params").at("hbar_convention").get<std::string>();
        if (conv != "calibrated" && conv != "halved")
            out.push_back("params.hbar_convention must be 'calibrated' or 'halved'");
    }
    for (const char* section : {"grid", "x_grid", "y_grid"}) {
        if (!cfg.contains(section)) continue;
        const json& g = cfg.at(section);
        if (g.contains("n") && (!g.at("n").is_number_integer() || g.at("n").get<int>() < 8))
            out.push_back(std::string(section) + ".n must be an integer >= 8");
        if (g.contains("x_min") && g.contains("x_max") &&
            !(g.at("x_max").get<double>() > g.at("x_min").get<double>()))
            out.push_back(std::string(section) + " needs x_max > x_min");
    }
    if (cfg.contains("ensemble")) {
        const json& e = cfg.at("ensemble");
        if (!e.at("walkers").is_number_integer() || e.at("walkers").get<long long>() < 1)
            out.push_back("ensemble.walkers must be a positive integer");
        check_positive(cfg, "ensemble.dt", "ensemble.dt", out);
        if (e.contains("t_final")) check_positive(cfg, "ensemble.t_final", "ensemble.t_final", out);
        if (!e.at("seed").is_number_integer() || e.at("seed").get<long long>() < 0)
            out.push_back("ensemble.seed must be a nonnegative integer");
    }
    if (cfg.contains("walkers") &&
        (!cfg.at("walkers").is_number_integer() || cfg.at("walkers").get<long long>() < 1))
        out.push_back("walkers must be a positive integer");
    if (cfg.contains("dt")) check_positive(cfg, "dt", "dt", out);

    if (exp == "triangle") {
        const std::string st = cfg.at("state").get<std::string>();
        if (st != "both" && st != "free_gaussian" && st != "harmonic_coherent")
            out.push_back("state must be one of both|free_gaussian|harmonic_coherent");
        if (cfg.at("checkpoints").get<int>() < 1) out.push_back("checkpoints must be >= 1");
    }
    if (exp == "estimator-bias") {
        for (const auto& a : cfg.at("alphas")) {
            if (!a.is_number() || a.get<double>() < 0.0 || a.get<double>() > 1.0)
                out.push_back("alphas must lie in [0, 1] (beta = 1 - alpha must stay >= 0)");
        }
        if (!(cfg.at("window").at("t_end").get<double>() >
              cfg.at("window").at("t_start").get<double>()))
            out.push_back("window.t_end must exceed window.t_start");
    }
    if (exp == "noise-constant-scaling") {
        for (const auto& d : cfg.at("dts"))
            if (!d.is_number() || d.get<double>() <= 0.0)
                out.push_back("dts must be positive numbers");
        if (cfg.at("samples").get<int>() < 3) out.push_back("samples must be >= 3");
    }
    if (exp == "hidden-decomposition") {
        const double r = cfg.at("correlation").get<double>();
        if (!(r > -1.0 && r < 1.0)) out.push_back("correlation must lie in (-1, 1)");
    }
    if (exp == "circle-wallstrom") {
        if (cfg.at("hist_n").get<int>() < 8) out.push_back("hist_n must be >= 8");
        check_positive(cfg, "dynamics_dt", "dynamics_dt", out);
    }
}

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

struct ArtifactSink {
    fs::path dir;
    std::vector<std::string> names;

    fs::path file(const std::string& name) {
        names.push_back(name);
        return dir / name;
    }
};

void run_triangle_state(const json& cfg, const std::string& state, ArtifactSink& sink,
                        std::vector<Metric>& metrics, json& rows_out) {
    const double t_begin = now_seconds();
    Benchmark bench =
        make_benchmark(state, cfg.at("grid"), cfg.at("params"), cfg.at("benchmark"));
    const double dt = cfg.at("ensemble").at("dt").get<double>();
    const auto walkers = cfg.at("ensemble").at("walkers").get<std::size_t>();
    const auto seed = cfg.at("ensemble").at("seed").get<uint64_t>();
    const int checkpoints = cfg.at("checkpoints").get<int>();
    const double l1_tol = cfg.at("tolerances").at("l1").get<double>();

    const auto nsteps = static_cast<std::size_t>(std::llround(bench.t_char / dt));
    WaveTrajectory traj = evolve(bench.psi0, nsteps * dt, dt, bench.params, 1);

    HydroState st0 = decompose(traj.at(0), bench.params);
    Ensemble e = init_ensemble_from_density(st0.rho, walkers, seed);
    ScalarField fp = st0.rho;
    bool fp_valid = true;
    write_csv(st0, sink.file(state + "_hydro_t0.csv").string());

    const auto dump_walkers = cfg.at("output").at("dump_walkers").get<std::size_t>();
    std::ofstream walker_csv(sink.file(state + "_walkers.csv"));
    walker_csv.precision(17);
    walker_csv << "t,walker_id,x\n";

    std::vector<std::size_t> marks;
    for (int j = 1; j <= checkpoints; ++j)
        marks.push_back(static_cast<std::size_t>(std::llround(
            static_cast<double>(nsteps) * j / checkpoints)));

    json rows = json::array();
    std::vector<std::pair<double, double>> plot_sde, plot_fp, plot_psi;
    for (std::size_t k = 0; k < nsteps; ++k) {
        const HydroState st = decompose(traj.at(k), bench.params);
        e = sde_step(e, st.b_fwd, NoiseSpec{bench.params.nu, dt, TimeDirection::Forward});
        FokkerPlanckResult fr = fokker_planck_step(fp, st.b_fwd, bench.params.nu, dt);
        fp = std::move(fr.rho);
        fp_valid = fp_valid && fr.valid;

        if (std::find(marks.begin(), marks.end(), k + 1) == marks.end()) continue;
        const double t = (k + 1) * dt;
        for (std::size_t w = 0; w < std::min(dump_walkers, e.size()); ++w)
            walker_csv << t << ',' << w << ',' << e.positions[w] << '\n';
        const ScalarField hist = histogram(e, bench.grid);
        ScalarField psi2 = normalize(density(traj.at(k + 1)));
        const double l1_sde_fp = l1_distance(hist, fp);
        const double l1_sde_psi = l1_distance(hist, psi2);
        const double l1_fp_psi = l1_distance(fp, psi2);
        const double mc = expected_l1_error(psi2, walkers);
        rows.push_back(json{{"t", t},
                            {"L1_sde_vs_fp", l1_sde_fp},
                            {"L1_sde_vs_psi2", l1_sde_psi},
                            {"L1_fp_vs_psi2", l1_fp_psi},
                            {"mc_stderr", mc}});
        const std::string tag = state + ".t" + std::to_string(t);
        metrics.push_back(metric_le(tag + ".L1_sde_vs_fp", l1_sde_fp, l1_tol));
        metrics.push_back(metric_le(tag + ".L1_sde_vs_psi2", l1_sde_psi, l1_tol));
        metrics.push_back(metric_le(tag + ".L1_fp_vs_psi2", l1_fp_psi, l1_tol));

        std::ofstream os(sink.file(state + "_densities_t" + std::to_string(t) + ".csv"));
        os.precision(17);
        os << "x,sde,fp,psi2\n";
        for (int i = 0; i < bench.grid.n; ++i)
            os << bench.grid.node(i) << ',' << hist.values[i] << ',' << fp.values[i] << ','
               << psi2.values[i] << '\n';
        if (k + 1 == marks.back()) {
            for (int i = 0; i < bench.grid.n; ++i) {
                plot_sde.emplace_back(bench.grid.node(i), hist.values[i]);
                plot_fp.emplace_back(bench.grid.node(i), fp.values[i]);
                plot_psi.emplace_back(bench.grid.node(i), psi2.values[i]);
            }
        }
    }
    metrics.push_back(metric_zero(state + ".fp_clipping_invalid", fp_valid ? 0.0 : 1.0));
    const double elapsed = now_seconds() - t_begin;
    metrics.push_back(metric_runtime(state + ".runtime_seconds", elapsed,
                                     cfg.at("tolerances").at("runtime_seconds").get<double>()));
    rows_out[state] = std::move(rows);
    write_svg_lines(sink.file(state + "_final_densities.svg"),
                    "final densities: " + state, {"sde", "fokker-planck", "|psi|^2"},
                    {plot_sde, plot_fp, plot_psi});
}

RunReport run_triangle(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    const std::string state = cfg.at("state").get<std::string>();
    json rows = json::object();
    if (state == "both" || state == "free_gaussian")
        run_triangle_state(cfg, "free_gaussian", sink, rep.metrics, rows);
    if (state == "both" || state == "harmonic_coherent")
        run_triangle_state(cfg, "harmonic_coherent", sink, rep.metrics, rows);
    write_json_file(sink.file("triangle_l1.json"), rows);
    return rep;
}

RunReport run_energy_conservation(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    const double dt = cfg.at("dt").get<double>();
    const int stride = cfg.at("snapshot_stride").get<int>();
    const std::string state = cfg.at("state").get<std::string>();
    std::vector<double> drifts;
    json summary = json::array();
    for (const auto& jn : cfg.at("grids")) {
        const int n = jn.get<int>();
        json grid_cfg = cfg.at("grid");
        grid_cfg["n"] = n;
        Benchmark bench = make_benchmark(state, grid_cfg, cfg.at("params"), cfg.at("benchmark"));
        const auto nsteps = static_cast<std::size_t>(std::llround(bench.t_char / dt));
        WaveTrajectory traj = evolve(bench.psi0, nsteps * dt, dt, bench.params, stride);

        write_json_file(sink.file("run_meta_n" + std::to_string(n) + ".json"),
                        json{{"state", state},
                             {"grid", {{"n", n},
                                       {"x_min", grid_cfg.at("x_min").get<double>()},
                                       {"x_max", grid_cfg.at("x_max").get<double>()}}},
                             {"params", cfg.at("params")},
                             {"hbar", bench.params.hbar},
                             {"dt", dt},
                             {"stride", stride},
                             {"steps", nsteps}});
        if (n == cfg.at("grids").front().get<int>()) {
            // decimated complex snapshots for the coarse run
            WaveTrajectory dump;
            dump.dt = traj.dt;
            dump.stride = traj.stride;
            const std::size_t keep = std::max<std::size_t>(1, traj.size() / 8);
            for (std::size_t s = 0; s < traj.size(); s += keep)
                dump.snapshots.push_back(traj.at(s));
            write_csv(dump, sink.file("snapshots_n" + std::to_string(n) + ".csv").string());
        }

        std::ofstream os(sink.file("energy_n" + std::to_string(n) + ".csv"));
        os.precision(17);
        os << "t,averaged_energy,oracle_energy\n";
        double e0 = 0.0, emax_dev = 0.0;
        for (std::size_t s = 0; s < traj.size(); ++s) {
            const HydroState hs = decompose(traj.at(s), bench.params);
            const double eh = averaged_energy(hs, bench.params);
            const double eo = energy_expectation(traj.at(s), bench.params);
            if (s == 0) e0 = eh;
            emax_dev = std::max(emax_dev, std::abs(eh - e0));
            os << traj.at(s).time << ',' << eh << ',' << eo << '\n';
        }
        const double drift = emax_dev / std::abs(e0);
        drifts.push_back(drift);
        summary.push_back(json{{"n", n}, {"relative_drift", drift}});
        rep.metrics.push_back(
            metric_le("drift.n" + std::to_string(n), drift,
                      cfg.at("tolerances").at("drift").get<double>()));
    }
    if (drifts.size() >= 2) {
        const double gain = drifts.front() / drifts.back();
        rep.metrics.push_back(metric_ge("refinement_gain", gain,
                                        cfg.at("tolerances").at("refinement_gain").get<double>()));
        summary.push_back(json{{"refinement_gain", gain}});
    }
    write_json_file(sink.file("energy_summary.json"), summary);
    return rep;
}

RunReport run_hbar_consistency(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    json out = json::array();
    for (const auto& js : cfg.at("states")) {
        const std::string name = js.get<std::string>();
        const ConsistencyState kind = (name == "free_gaussian")
                                          ? ConsistencyState::FreeGaussian
                                          : ConsistencyState::HarmonicCoherent;
        const json& p = cfg.at("params");
        const HbarConsistencyReport r = hbar_consistency(
            p.at("mass").get<double>(), p.at("nu").get<double>(),
            p.at("osmotic_coupling").get<double>(), kind, cfg.at("n_coarse").get<int>(),
            cfg.at("n_fine").get<int>(), cfg.at("dt").get<double>());
        json entry{{"state", name},
                   {"winner", to_string(r.winner)},
                   {"shrink_ratio_calibrated", r.shrink_ratio_calibrated},
                   {"shrink_ratio_halved", r.shrink_ratio_halved},
                   {"fine_residual_ratio", r.fine_residual_ratio},
                   {"residuals", json::array()}};
        for (const auto& e : r.entries)
            entry["residuals"].push_back(json{{"convention", to_string(e.convention)},
                                              {"n", e.n_nodes},
                                              {"residual_norm", e.residual_norm}});
        out.push_back(entry);
        rep.metrics.push_back(metric_ge(name + ".shrink_ratio_calibrated",
                                        r.shrink_ratio_calibrated,
                                        cfg.at("tolerances").at("shrink_min").get<double>()));
        rep.metrics.push_back(metric_le(name + ".shrink_ratio_halved", r.shrink_ratio_halved,
                                        cfg.at("tolerances").at("plateau_max").get<double>()));
        rep.metrics.push_back(metric_ge(name + ".fine_residual_ratio", r.fine_residual_ratio,
                                        cfg.at("tolerances").at("separation_min").get<double>()));
        rep.metrics.push_back(metric_zero(
            name + ".winner_is_calibrated",
            r.winner == HbarConvention::Calibrated ? 0.0 : 1.0));
    }
    write_json_file(sink.file("hbar_consistency.json"), out);
    return rep;
}

RunReport run_noise_scaling(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    NoiseScalingConfig nc;
    nc.grid_n = cfg.at("grid").at("n").get<int>();
    nc.x_min = cfg.at("grid").at("x_min").get<double>();
    nc.x_max = cfg.at("grid").at("x_max").get<double>();
    nc.omega = cfg.at("omega").get<double>();
    nc.dts.clear();
    for (const auto& d : cfg.at("dts")) nc.dts.push_back(d.get<double>());
    nc.walkers = cfg.at("walkers").get<std::size_t>();
    nc.samples = cfg.at("samples").get<std::size_t>();
    nc.seed = cfg.at("seed").get<uint64_t>();
    const PhysParams base = params_from(cfg.at("params"), ScalarField{});

    const NoiseScalingReport r = noise_scaling_experiment(nc, base);
    json rows = json::array();
    std::vector<std::pair<double, double>> curve, ref;
    for (const auto& row : r.rows) {
        rows.push_back(json{{"dt", row.dt},
                            {"estimate", row.estimate},
                            {"stderr", row.stderr_},
                            {"quadrature", row.quadrature},
                            {"excess", row.excess},
                            {"expected_C", r.expected_amplitude / row.dt}});
        curve.emplace_back(std::log10(row.dt), std::log10(std::max(row.excess, 1e-300)));
        ref.emplace_back(std::log10(row.dt),
                         std::log10(r.expected_amplitude / row.dt));
    }
    json summary{{"fitted_exponent", r.fitted_exponent},
                 {"fitted_amplitude", r.fitted_amplitude},
                 {"expected_amplitude", r.expected_amplitude},
                 {"rows", rows}};
    write_json_file(sink.file("noise_scaling.json"), summary);
    {
        std::ofstream os(sink.file("noise_scaling.csv"));
        os.precision(17);
        os << "dt,excess,expected_C,stderr\n";
        for (const auto& row : r.rows)
            os << row.dt << ',' << row.excess << ',' << r.expected_amplitude / row.dt << ','
               << row.stderr_ << '\n';
    }
    write_svg_lines(sink.file("noise_scaling.svg"), "log10 excess vs log10 dt",
                    {"measured", "m*nu/dt"}, {curve, ref});

    const double band = cfg.at("tolerances").at("exponent_band").get<double>();
    rep.metrics.push_back(
        metric_le("exponent_deviation", std::abs(r.fitted_exponent + 1.0), band));
    rep.metrics.push_back(metric_le(
        "amplitude_relative_error",
        std::abs(r.fitted_amplitude - r.expected_amplitude) / r.expected_amplitude,
        cfg.at("tolerances").at("amplitude_rel").get<double>()));
    return rep;
}

RunReport run_estimator_bias(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    const double t_begin = now_seconds();
    BiasConfig bc;
    bc.grid_n = cfg.at("grid").at("n").get<int>();
    bc.x_min = cfg.at("grid").at("x_min").get<double>();
    bc.x_max = cfg.at("grid").at("x_max").get<double>();
    bc.sigma0 = cfg.at("sigma0").get<double>();
    bc.t_start = cfg.at("window").at("t_start").get<double>();
    bc.t_end = cfg.at("window").at("t_end").get<double>();
    bc.dt = cfg.at("dt").get<double>();
    bc.walkers = cfg.at("walkers").get<std::size_t>();
    bc.seed = cfg.at("seed").get<uint64_t>();
    bc.alphas.clear();
    for (const auto& a : cfg.at("alphas")) bc.alphas.push_back(a.get<double>());
    const PhysParams base = params_from(cfg.at("params"), ScalarField{});

    const BiasReport r = bias_experiment(bc, base);
    json rows = json::array();
    std::vector<std::pair<double, double>> measured, predicted;
    for (const auto& row : r.rows) {
        rows.push_back(json{{"alpha", row.alpha},
                            {"estimate", row.estimate},
                            {"stderr", row.stderr_},
                            {"predicted", row.predicted},
                            {"C", r.noise_const},
                            {"dt", r.dt},
                            {"N", r.walkers},
                            {"matches_conserved", row.matches_conserved}});
        measured.emplace_back(row.alpha, row.estimate - r.noise_const);
        predicted.emplace_back(row.alpha, row.predicted - r.noise_const);
    }
    json summary{{"rows", rows},
                 {"slope_measured", r.slope_measured},
                 {"slope_predicted", r.slope_predicted},
                 {"slope_ratio", r.slope_ratio},
                 {"slope_ratio_stderr", r.slope_ratio_stderr},
                 {"mean_overlap", r.mean_overlap},
                 {"symmetric_estimate", r.symmetric_estimate},
                 {"symmetric_stderr", r.symmetric_stderr},
                 {"conserved_prediction", r.conserved_prediction},
                 {"symmetric_unique", r.symmetric_unique}};
    write_json_file(sink.file("bias_report.json"), summary);
    {
        std::ofstream os(sink.file("bias_curve.csv"));
        os.precision(17);
        os << "alpha,estimate,stderr,predicted\n";
        for (const auto& row : r.rows)
            os << row.alpha << ',' << row.estimate << ',' << row.stderr_ << ','
               << row.predicted << '\n';
    }
    write_svg_lines(sink.file("bias_fit.svg"), "kinetic estimate vs alpha (C subtracted)",
                    {"measured", "predicted"}, {measured, predicted});

    const double band = cfg.at("tolerances").at("slope_band").get<double>();
    rep.metrics.push_back(metric_le("slope_ratio_deviation", std::abs(r.slope_ratio - 1.0), band));
    rep.metrics.push_back(metric_le(
        "symmetric_energy_match_sigmas",
        std::abs(r.symmetric_estimate - r.conserved_prediction) /
            std::max(r.symmetric_stderr, 1e-300),
        3.0));
    rep.metrics.push_back(metric_zero("symmetric_unique_failed", r.symmetric_unique ? 0.0 : 1.0));
    rep.metrics.push_back(metric_runtime("runtime_seconds", now_seconds() - t_begin,
                                         cfg.at("tolerances").at("runtime_seconds").get<double>()));
    return rep;
}

RunReport run_hidden(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    const json& xg = cfg.at("x_grid");
    const json& yg = cfg.at("y_grid");
    const Grid xgrid = Grid::line(xg.at("n").get<int>(), xg.at("x_min").get<double>(),
                                  xg.at("x_max").get<double>());
    const Grid ygrid = Grid::line(yg.at("n").get<int>(), yg.at("x_min").get<double>(),
                                  yg.at("x_max").get<double>());
    const double omega = cfg.at("omega").get<double>();
    const double target_dt = cfg.at("target_dt").get<double>();
    const double idtol = cfg.at("tolerances").at("identity").get<double>();
    PhysParams params = params_from(cfg.at("params"), ScalarField{});
    params.potential = harmonic_potential(xgrid, params.mass, omega);

    const WaveField psi = eigenstate(xgrid, params, 0);
    const HydroState st = decompose(psi, params);
    const double target_var = 2.0 * params.nu / target_dt;
    json out = json::object();

    // (a) constructed joint system realizing the Nelson process
    {
        const NelsonRealization real =
            build_nelson_realization(st.rho, ygrid, st.b_fwd, params.mass, target_var);
        const DriftDecompositionReport r = drift_decomposition_report(
            real.rho, real.vel, params.potential, params.mass, st.b_fwd, target_var,
            target_dt);
        out["nelson_instance"] = json{{"identity_residual", r.energy.identity_residual},
                                      {"total", r.energy.total},
                                      {"drift_part", r.energy.drift_part},
                                      {"fluctuation_part", r.energy.fluctuation_part},
                                      {"drift_residual_max", r.drift_residual_max},
                                      {"variance_residual_max", r.variance_residual_max},
                                      {"implied_nu", r.implied_nu},
                                      {"target_nu", params.nu}};
        rep.metrics.push_back(
            metric_le("nelson_instance.identity_residual", r.energy.identity_residual, idtol));
        rep.metrics.push_back(metric_le("nelson_instance.drift_residual", r.drift_residual_max, 1e-9));
        rep.metrics.push_back(metric_le("nelson_instance.variance_residual_rel",
                                        r.variance_residual_max / target_var, 1e-9));
        rep.metrics.push_back(metric_le("nelson_instance.implied_nu_error",
                                        std::abs(r.implied_nu - params.nu), 1e-9));
        write_csv(real.rho, sink.file("nelson_instance_density.csv").string());
        write_csv(real.vel, sink.file("nelson_instance_velocity.csv").string());
    }
    // (b) product density, velocity independent of y: classical (nu = 0)
    {
        const NelsonRealization prod =
            build_nelson_realization(st.rho, ygrid, st.b_fwd, params.mass, 0.0);
        const DriftDecompositionReport r = drift_decomposition_report(
            prod.rho, prod.vel, params.potential, params.mass, st.b_fwd, 0.0, target_dt);
        out["product_classical"] = json{{"identity_residual", r.energy.identity_residual},
                                        {"variance_max", r.variance_residual_max},
                                        {"implied_nu", r.implied_nu}};
        rep.metrics.push_back(
            metric_le("product_classical.identity_residual", r.energy.identity_residual, idtol));
        rep.metrics.push_back(
            metric_le("product_classical.conditional_variance", r.variance_residual_max, 1e-12));
    }
    // (c) correlated Gaussian with xdot = y: conditional drift r*(sy/sx)*x.
    // sigma_y is kept small against the y box and the comparison stays in
    // the bulk, so box truncation of the conditional mean is ~1e-15.
    {
        const double corr = cfg.at("correlation").get<double>();
        const double sx = 1.0, sy = 0.5;
        JointDensity rho = make_joint(xgrid, ygrid);
        VelocityMap vel = make_velocity_map(xgrid, ygrid, params.mass);
        for (int ix = 0; ix < xgrid.n; ++ix)
            for (int iy = 0; iy < ygrid.n; ++iy) {
                const double x = xgrid.node(ix) / sx;
                const double y = ygrid.node(iy) / sy;
                rho.at(ix, iy) =
                    std::exp(-0.5 * (x * x - 2.0 * corr * x * y + y * y) / (1.0 - corr * corr));
                vel.at(ix, iy) = ygrid.node(iy);
            }
        rho = normalize(rho);
        const EnergyDecomposition dec =
            decompose_energy(rho, vel, make_scalar(xgrid, 0.0), params.mass);
        const ConditionalDrift cd = conditional_drift(rho, vel);
        double drift_err = 0.0;
        for (int ix = 0; ix < xgrid.n; ++ix) {
            if (cd.floored[ix] || std::abs(xgrid.node(ix)) > 2.5 * sx) continue;
            const double expected = corr * (sy / sx) * xgrid.node(ix);
            drift_err = std::max(drift_err, std::abs(cd.drift.values[ix] - expected));
        }
        out["correlated_gaussian"] = json{{"identity_residual", dec.identity_residual},
                                          {"drift_vs_analytic_max", drift_err}};
        rep.metrics.push_back(
            metric_le("correlated_gaussian.identity_residual", dec.identity_residual, idtol));
        rep.metrics.push_back(metric_le("correlated_gaussian.drift_vs_analytic", drift_err, 1e-6));
    }
    // (d) negative control: variance deliberately wrong by 2x must be flagged
    {
        const NelsonRealization bad =
            build_nelson_realization(st.rho, ygrid, st.b_fwd, params.mass, 2.0 * target_var);
        const DriftDecompositionReport r = drift_decomposition_report(
            bad.rho, bad.vel, params.potential, params.mass, st.b_fwd, target_var, target_dt);
        out["mismatch_control"] = json{{"variance_residual_max", r.variance_residual_max},
                                       {"target_variance", target_var}};
        rep.metrics.push_back(metric_ge("mismatch_control.variance_residual",
                                        r.variance_residual_max, 0.5 * target_var));
    }
    write_json_file(sink.file("hidden_decomposition.json"), out);
    return rep;
}

RunReport run_circle(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    const int wave_n = cfg.at("wave_n").get<int>();
    const Grid g = Grid::circle(wave_n, 2.0 * kPi);
    const PhysParams params = params_from(cfg.at("params"), make_scalar(g, 0.0));
    const double l1_tol = cfg.at("tolerances").at("l1").get<double>();
    json rows = json::array();

    for (const auto& jw : cfg.at("w_values")) {
        const double w = jw.get<double>();
        const auto [st, psi] = wallstrom_state(w, params.mass, params.hbar, g);
        const std::string tag = "w" + std::to_string(w);

        rep.metrics.push_back(metric_zero(
            tag + ".omega_exact", st.omega - params.mass * w * w / 2.0));

        const MomentumEigenReport mec = momentum_eigen_check(psi, w, params.mass, params.hbar);
        rep.metrics.push_back(
            metric_le(tag + ".norm_error", std::abs(mec.l2_norm - 1.0), 1e-10));
        const double interior_tol = 0.02 * (1.0 + mec.mode * mec.mode);
        rep.metrics.push_back(
            metric_le(tag + ".interior_residual", mec.interior_residual_max, interior_tol));
        if (mec.integer_mode) {
            rep.metrics.push_back(metric_le(tag + ".seam_residual_smooth", mec.seam_residual,
                                            std::max(10.0 * mec.interior_residual_max, 1e-9)));
        } else {
            rep.metrics.push_back(
                metric_ge(tag + ".seam_residual_jump", mec.seam_residual,
                          std::max(100.0 * mec.interior_residual_max, 1.0)));
        }

        const CircleDynamicsReport dyn =
            check_circle_dynamics(st, params, cfg.at("dynamics_dt").get<double>());
        rep.metrics.push_back(
            metric_zero(tag + ".continuity_residual", dyn.continuity_residual_max));
        rep.metrics.push_back(metric_le(tag + ".sdot_residual", dyn.sdot_residual_max, 1e-12));
        rep.metrics.push_back(
            metric_ge(tag + ".wrong_omega_detected", dyn.sdot_residual_wrong_omega, 1e-3));
        rep.metrics.push_back(metric_le(tag + ".ripple_evolved_over_static",
                                        dyn.ripple_evolved_residual,
                                        0.2 * dyn.ripple_static_residual));

        rows.push_back(json{{"w", w},
                            {"omega", st.omega},
                            {"mode", mec.mode},
                            {"integer_mode", mec.integer_mode},
                            {"seam_residual", mec.seam_residual},
                            {"interior_residual_max", mec.interior_residual_max},
                            {"l2_norm", mec.l2_norm},
                            {"winding_rate", nullptr},
                            {"winding_rate_se", nullptr}});
    }

    const json& ens = cfg.at("ensemble");
    for (const auto& jw : cfg.at("ensemble_w")) {
        const double w = jw.get<double>();
        const auto [st, psi] = wallstrom_state(w, params.mass, params.hbar, g);
        const CircleEnsembleReport r = circle_ensemble_check(
            st, params, ens.at("walkers").get<std::size_t>(), ens.at("t_final").get<double>(),
            ens.at("dt").get<double>(), ens.at("seed").get<uint64_t>(),
            cfg.at("hist_n").get<int>());
        const std::string tag = "w" + std::to_string(w);
        rep.metrics.push_back(metric_le(tag + ".density_l1_uniform", r.l1_uniform, l1_tol));
        rep.metrics.push_back(metric_le(
            tag + ".winding_rate_error_sigmas",
            std::abs(r.winding_rate - r.expected_rate) / std::max(r.winding_rate_se, 1e-300),
            3.0));
        for (auto& row : rows)
            if (std::abs(row.at("w").get<double>() - w) < 1e-15) {
                row["winding_rate"] = r.winding_rate;
                row["winding_rate_se"] = r.winding_rate_se;
            }
    }
    write_json_file(sink.file("circle_wallstrom.json"), rows);
    return rep;
}

RunReport run_time_reversal(const json& cfg, ArtifactSink& sink) {
    RunReport rep;
    const json& gcfg = cfg.at("grid");
    const Grid g = Grid::line(gcfg.at("n").get<int>(), gcfg.at("x_min").get<double>(),
                              gcfg.at("x_max").get<double>());
    PhysParams params = params_from(cfg.at("params"), ScalarField{});
    params.potential = harmonic_potential(g, params.mass, cfg.at("omega").get<double>());
    json out = json::object();

    // exact involution on a non-trivial decomposed state
    {
        const double width = std::sqrt(params.hbar / (2.0 * params.mass));
        WaveField psi = gaussian_packet(g, params, 1.0, width, 0.3);
        const HydroState st = decompose(psi, params);
        const HydroState back = time_reverse(time_reverse(st));
        std::size_t diffs = 0;
        for (int i = 0; i < g.n; ++i) {
            diffs += (back.S.values[i] != st.S.values[i]);
            diffs += (back.v.values[i] != st.v.values[i]);
            diffs += (back.u.values[i] != st.u.values[i]);
            diffs += (back.b_fwd.values[i] != st.b_fwd.values[i]);
            diffs += (back.b_bwd.values[i] != st.b_bwd.values[i]);
            diffs += (back.rho.values[i] != st.rho.values[i]);
        }
        const HydroState rev = time_reverse(st);
        double swap_err = 0.0;
        for (int i = 0; i < g.n; ++i)
            swap_err = std::max(swap_err,
                                std::abs(rev.b_fwd.values[i] + st.b_bwd.values[i]));
        out["involution_node_diffs"] = diffs;
        out["drift_swap_error"] = swap_err;
        rep.metrics.push_back(metric_zero("involution_node_diffs", static_cast<double>(diffs)));
        rep.metrics.push_back(metric_zero("drift_swap_error", swap_err));
    }

    // symmetric estimator is bit-invariant under path reversal
    {
        const json& bc = cfg.at("bundle");
        const WaveField psi = eigenstate(g, params, 0);
        const HydroState st = decompose(psi, params);
        const PathBundle bundle = run_static_drift_bundle(
            st.b_fwd, st.rho, bc.at("walkers").get<std::size_t>(),
            bc.at("samples").get<std::size_t>(), cfg.at("ensemble").at("dt").get<double>(),
            params.nu, cfg.at("ensemble").at("seed").get<uint64_t>());
        const PathBundle rev = reverse_samples(bundle);
        const double k_sym = kinetic_estimate(bundle, {0.5, 0.5, params.mass});
        const double k_sym_rev = kinetic_estimate(rev, {0.5, 0.5, params.mass});
        const double k_ab = kinetic_estimate(bundle, {0.3, 0.7, params.mass});
        const double k_ba_rev = kinetic_estimate(rev, {0.7, 0.3, params.mass});
        out["symmetric_estimate"] = k_sym;
        out["symmetric_reversal_diff"] = k_sym - k_sym_rev;
        out["alpha_beta_swap_diff"] = k_ab - k_ba_rev;
        rep.metrics.push_back(metric_zero("symmetric_reversal_bit_diff", k_sym - k_sym_rev));
        rep.metrics.push_back(metric_zero("alpha_beta_swap_bit_diff", k_ab - k_ba_rev));
    }

    // forward vs reversed-clock densities, stationary benchmark
    {
        const json& ens = cfg.at("ensemble");
        const auto walkers = ens.at("walkers").get<std::size_t>();
        const double dt = ens.at("dt").get<double>();
        const double t_final = ens.at("t_final").get<double>();
        const auto seed = ens.at("seed").get<uint64_t>();
        const WaveField psi = eigenstate(g, params, 0);
        const HydroState st = decompose(psi, params);
        const auto nsteps = static_cast<std::size_t>(std::llround(t_final / dt));

        Ensemble fwd = init_ensemble_from_density(st.rho, walkers, seed);
        Ensemble rev = init_ensemble_from_density(st.rho, walkers, seed + 1);
        VectorField minus_bstar = make_vector(g);
        for (int i = 0; i < g.n; ++i) minus_bstar.values[i] = -st.b_bwd.values[i];
        const NoiseSpec fspec{params.nu, dt, TimeDirection::Forward};
        const NoiseSpec bspec{params.nu, dt, TimeDirection::Backward};
        for (std::size_t k = 0; k < nsteps; ++k) {
            fwd = sde_step(fwd, st.b_fwd, fspec);
            rev = sde_step(rev, minus_bstar, bspec);
        }
        const ScalarField hf = histogram(fwd, g);
        const ScalarField hr = histogram(rev, g);
        const double l1 = l1_distance(hf, hr);
        const double mc = expected_l1_error(st.rho, walkers) * 1.4142135623730951;
        const double tol = std::max(cfg.at("tolerances").at("l1_floor").get<double>(),
                                    cfg.at("tolerances").at("l1_factor").get<double>() * mc);
        out["ground_state_fwd_vs_reversed_l1"] = l1;
        out["ground_state_l1_tolerance"] = tol;
        rep.metrics.push_back(metric_le("ground_state_fwd_vs_reversed_l1", l1, tol));

        // stationarity of the ground-state diffusion: the evolved ensemble
        // still samples rho_0 (coarse bins keep the statistical floor low)
        const Grid coarse = Grid::line(128, g.origin, g.node(g.n - 1));
        PhysParams pc = params_from(cfg.at("params"), ScalarField{});
        pc.potential = harmonic_potential(coarse, pc.mass, cfg.at("omega").get<double>());
        const HydroState st_coarse = decompose(eigenstate(coarse, pc, 0), pc);
        const double l1_stationary =
            l1_distance(histogram(fwd, coarse), st_coarse.rho);
        out["ground_state_stationarity_l1"] = l1_stationary;
        rep.metrics.push_back(metric_le("ground_state_stationarity_l1", l1_stationary, 0.03));

        std::ofstream os(sink.file("reversal_densities.csv"));
        os.precision(17);
        os << "x,forward,reversed\n";
        for (int i = 0; i < g.n; ++i)
            os << g.node(i) << ',' << hf.values[i] << ',' << hr.values[i] << '\n';
    }

    // detailed relation on a non-stationary window (spreading packet)
    {
        const json& wc = cfg.at("window");
        const Grid wg = Grid::line(wc.at("grid_n").get<int>(), wc.at("x_min").get<double>(),
                                   wc.at("x_max").get<double>());
        PhysParams wp = params_from(cfg.at("params"), make_scalar(wg, 0.0));
        const double dt = cfg.at("ensemble").at("dt").get<double>();
        const auto walkers = cfg.at("ensemble").at("walkers").get<std::size_t>();
        const auto seed = cfg.at("ensemble").at("seed").get<uint64_t>();
        const double t_start = wc.at("t_start").get<double>();
        const double t_end = wc.at("t_end").get<double>();

        WaveField psi0 = gaussian_packet(wg, wp, 0.0, wc.at("sigma0").get<double>(), 0.0);
        WaveField start = psi0;
        if (t_start > 0.0) {
            const auto warm = static_cast<int>(std::llround(t_start / dt));
            start = evolve(psi0, t_start, dt, wp, warm).snapshots.back();
        }
        const WaveTrajectory window = evolve(start, t_end - t_start, dt, wp, 1);
        const std::size_t T = window.size();
        std::vector<HydroState> states;
        states.reserve(T);
        for (std::size_t i = 0; i < T; ++i) states.push_back(decompose(window.at(i), wp));

        const std::size_t mid = (T - 1) / 2;
        Ensemble fwd = init_ensemble_from_density(states[0].rho, walkers, seed + 2);
        ScalarField fwd_mid = make_scalar(wg);
        for (std::size_t k = 0; k + 1 < T; ++k) {
            fwd = sde_step(fwd, states[k].b_fwd, NoiseSpec{wp.nu, dt, TimeDirection::Forward});
            if (k + 1 == mid) fwd_mid = histogram(fwd, wg);
        }
        Ensemble rev = init_ensemble_from_density(states[T - 1].rho, walkers, seed + 3);
        ScalarField rev_mid = make_scalar(wg);
        VectorField drift = make_vector(wg);
        for (std::size_t s = 0; s + 1 < T; ++s) {
            const std::size_t j = T - 1 - s;
            for (int i = 0; i < wg.n; ++i) drift.values[i] = -states[j].b_bwd.values[i];
            rev = sde_step(rev, drift, NoiseSpec{wp.nu, dt, TimeDirection::Backward});
            if (j - 1 == mid) rev_mid = histogram(rev, wg);
        }
        const ScalarField truth = states[mid].rho;
        const double l1_pair = l1_distance(fwd_mid, rev_mid);
        const double l1_fwd = l1_distance(fwd_mid, truth);
        const double l1_rev = l1_distance(rev_mid, truth);
        const double mc = expected_l1_error(truth, walkers) * 1.4142135623730951;
        const double tol = std::max(cfg.at("tolerances").at("l1_floor").get<double>(),
                                    cfg.at("tolerances").at("l1_factor").get<double>() * mc);
        out["window_fwd_vs_reversed_l1"] = l1_pair;
        out["window_fwd_vs_truth_l1"] = l1_fwd;
        out["window_reversed_vs_truth_l1"] = l1_rev;
        rep.metrics.push_back(metric_le("window_fwd_vs_reversed_l1", l1_pair, tol));
        rep.metrics.push_back(metric_le("window_fwd_vs_truth_l1", l1_fwd, tol));
        rep.metrics.push_back(metric_le("window_reversed_vs_truth_l1", l1_rev, tol));
    }

    write_json_file(sink.file("time_reversal.json"), out);
    return rep;
}

}  // namespace

bool RunReport::all_pass() const {
    for (const auto& m : metrics)
        if (!m.pass) return false;
    return true;
}

json RunReport::to_json(bool include_duration) const {
    json j;
    j["experiment"] = experiment;
    j["passed"] = all_pass();
    j["metrics"] = json::array();
    for (const auto& m : metrics) {
        if (m.timing && !include_duration) continue;
        j["metrics"].push_back(json{{"name", m.name},
                                    {"value", m.value},
                                    {"tolerance", m.tolerance},
                                    {"comparator", m.comparator},
                                    {"pass", m.pass}});
    }
    j["config"] = config;
    j["artifacts"] = artifacts;
    if (include_duration) j["duration_seconds"] = duration_seconds;
    return j;
}

std::vector<std::string> list_experiments() {
    return {"triangle",       "energy-conservation",    "hbar-consistency",
            "noise-constant-scaling", "estimator-bias", "hidden-decomposition",
            "circle-wallstrom",       "time-reversal"};
}

json default_config(const std::string& experiment) {
    if (experiment == "triangle") return triangle_defaults();
    if (experiment == "energy-conservation") return energy_defaults();
    if (experiment == "hbar-consistency") return hbar_defaults();
    if (experiment == "noise-constant-scaling") return noise_defaults();
    if (experiment == "estimator-bias") return bias_defaults();
    if (experiment == "hidden-decomposition") return hidden_defaults();
    if (experiment == "circle-wallstrom") return circle_defaults();
    if (experiment == "time-reversal") return reversal_defaults();
    throw std::invalid_argument("unknown experiment: " + experiment);
}

std::vector<std::string> validate(const json& config) {
    std::vector<std::string> out;
    if (!config.is_object()) {
        out.push_back("config must be a JSON object");
        return out;
    }
    if (!config.contains("experiment") || !config.at("experiment").is_string()) {
        out.push_back("config needs an 'experiment' string");
        return out;
    }
    const std::string exp = config.at("experiment").get<std::string>();
    const auto known = list_experiments();
    if (std::find(known.begin(), known.end(), exp) == known.end()) {
        out.push_back("unknown experiment name: " + exp);
        return out;
    }
    const json defaults = default_config(exp);
    collect_unknown_keys(config, defaults, "config", out);
    if (!out.empty()) return out;
    semantic_checks(effective_config(config), out);
    return out;
}

json effective_config(const json& config) {
    json merged = default_config(config.at("experiment").get<std::string>());
    merge_into(merged, config);
    return merged;
}

RunReport run(const json& config, const fs::path& out_dir) {
    const auto violations = validate(config);
    if (!violations.empty()) {
        std::string msg = "invalid config:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw std::invalid_argument(msg);
    }
    const json cfg = effective_config(config);
    const std::string exp = cfg.at("experiment").get<std::string>();

    fs::create_directories(out_dir);
    ArtifactSink sink{out_dir, {}};

    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    if (exp == "triangle") rep = run_triangle(cfg, sink);
    else if (exp == "energy-conservation") rep = run_energy_conservation(cfg, sink);
    else if (exp == "hbar-consistency") rep = run_hbar_consistency(cfg, sink);
    else if (exp == "noise-constant-scaling") rep = run_noise_scaling(cfg, sink);
    else if (exp == "estimator-bias") rep = run_estimator_bias(cfg, sink);
    else if (exp == "hidden-decomposition") rep = run_hidden(cfg, sink);
    else if (exp == "circle-wallstrom") rep = run_circle(cfg, sink);
    else if (exp == "time-reversal") rep = run_time_reversal(cfg, sink);
    rep.experiment = exp;
    rep.config = cfg;
    rep.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.artifacts = sink.names;

    json manifest;
    manifest["experiment"] = exp;
    manifest["files"] = sink.names;
    write_json_file(out_dir / "manifest.json", manifest);
    write_json_file(out_dir / "report.json", rep.to_json(true));
    return rep;
}

}  // namespace nelsonlab::harness
