// lsmlab: numerical laboratory for a 1D Bose gas in a random delta-impurity
// potential. Subcommands dispatch the experiment harnesses; every run writes
// report.csv / report.json plus a manifest with the resolved configuration.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical error
// (insufficient spectrum, domain, fit), 4 resource cap exceeded.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lsm/experiments.hpp"
#include "lsm/ids.hpp"
#include "lsm/partition.hpp"
#include "lsm/report.hpp"
#include "lsm/sampler.hpp"
#include "lsm/spectrum.hpp"
#include "lsm/thermo.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

struct RunConfig {
    // model
    double nu = 1.0;
    double gamma = 5.0;
    double beta = 1.0;
    double rho = 1.0;
    // run shape
    std::vector<std::int64_t> sizes = {1000};
    std::int64_t realizations = 10;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    // theorem constants
    double eta = 0.5;
    double c2 = 4.0;
    double big_m = 1.0;
    double kappa = 3.0;
    double eta_prime = 0.01;
    // bec / thermo
    double rho_c = -1.0;  // < 0: compute from the reference
    std::vector<double> epsilon_factors = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    // ids / lifshitz
    double box_length = 1000.0;
    double grid_min = 0.02;
    double grid_max = 2.0;
    std::int64_t grid_points = 60;
    double window_lo = 0.05;
    double window_hi = 0.5;
    std::string reference = "infinite-gamma";  // or "empirical" / "none"
    double reference_box = 2000.0;
    std::int64_t reference_realizations = 100;
    // spectrum subcommand
    std::int64_t levels = 0;      // first-J request when > 0
    double below_energy = 0.0;    // below-E request when > 0
    // output
    std::string outdir = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

const std::map<std::string, std::string> kConfigKeys = {
    {"nu", "number"},          {"gamma", "number"},
    {"beta", "number"},        {"rho", "number"},
    {"sizes", "array"},        {"realizations", "number"},
    {"R", "number"},
    {"seed", "number"},        {"threads", "number"},
    {"eta", "number"},         {"c2", "number"},
    {"M", "number"},           {"kappa", "number"},
    {"eta_prime", "number"},   {"rho_c", "number"},
    {"epsilon_factors", "array"}, {"box_length", "number"},
    {"grid_min", "number"},    {"grid_max", "number"},
    {"grid_points", "number"}, {"window_lo", "number"},
    {"window_hi", "number"},   {"reference", "string"},
    {"reference_box", "number"}, {"reference_realizations", "number"},
    {"levels", "number"},      {"below_energy", "number"},
    {"outdir", "string"},      {"formats", "array"},
    {"experiment", "string"}};

void apply_config_file(const std::string& path, RunConfig& cfg, std::string& experiment) {
    std::ifstream in(path);
    if (!in) throw lsm::ParameterError("config file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw lsm::ParameterError(std::string("config parse error: ") + e.what());
    }
    for (const auto& item : j.items()) {
        if (kConfigKeys.find(item.key()) == kConfigKeys.end())
            throw lsm::ParameterError("unknown config key: " + item.key());
    }
    auto num = [&](const char* key, auto& target) {
        if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
    };
    num("nu", cfg.nu);
    num("gamma", cfg.gamma);
    num("beta", cfg.beta);
    num("rho", cfg.rho);
    num("realizations", cfg.realizations);
    num("R", cfg.realizations);
    num("seed", cfg.seed);
    num("threads", cfg.threads);
    num("eta", cfg.eta);
    num("c2", cfg.c2);
    num("M", cfg.big_m);
    num("kappa", cfg.kappa);
    num("eta_prime", cfg.eta_prime);
    num("rho_c", cfg.rho_c);
    num("box_length", cfg.box_length);
    num("grid_min", cfg.grid_min);
    num("grid_max", cfg.grid_max);
    num("grid_points", cfg.grid_points);
    num("window_lo", cfg.window_lo);
    num("window_hi", cfg.window_hi);
    num("reference_box", cfg.reference_box);
    num("reference_realizations", cfg.reference_realizations);
    num("levels", cfg.levels);
    num("below_energy", cfg.below_energy);
    if (j.contains("sizes")) cfg.sizes = j.at("sizes").get<std::vector<std::int64_t>>();
    if (j.contains("epsilon_factors"))
        cfg.epsilon_factors = j.at("epsilon_factors").get<std::vector<double>>();
    if (j.contains("reference")) cfg.reference = j.at("reference").get<std::string>();
    if (j.contains("outdir")) cfg.outdir = j.at("outdir").get<std::string>();
    if (j.contains("formats")) cfg.formats = j.at("formats").get<std::vector<std::string>>();
    if (j.contains("experiment")) experiment = j.at("experiment").get<std::string>();
}

nlohmann::json config_json(const RunConfig& cfg, const std::string& experiment) {
    return {{"experiment", experiment},
            {"nu", cfg.nu},
            {"gamma", cfg.gamma},
            {"beta", cfg.beta},
            {"rho", cfg.rho},
            {"sizes", cfg.sizes},
            {"realizations", cfg.realizations},
            {"seed", cfg.seed},
            {"threads", cfg.threads},
            {"eta", cfg.eta},
            {"c2", cfg.c2},
            {"M", cfg.big_m},
            {"kappa", cfg.kappa},
            {"eta_prime", cfg.eta_prime},
            {"rho_c", cfg.rho_c},
            {"epsilon_factors", cfg.epsilon_factors},
            {"box_length", cfg.box_length},
            {"grid_min", cfg.grid_min},
            {"grid_max", cfg.grid_max},
            {"grid_points", cfg.grid_points},
            {"window_lo", cfg.window_lo},
            {"window_hi", cfg.window_hi},
            {"reference", cfg.reference},
            {"reference_box", cfg.reference_box},
            {"reference_realizations", cfg.reference_realizations},
            {"levels", cfg.levels},
            {"below_energy", cfg.below_energy},
            {"outdir", cfg.outdir},
            {"formats", cfg.formats}};
}

lsm::ModelParameters model_of(const RunConfig& cfg) {
    lsm::ModelParameters p;
    p.intensity = cfg.nu;
    p.strength = cfg.gamma;
    p.inverse_temperature = cfg.beta;
    p.density = cfg.rho;
    p.particle_number = 1;
    return p;
}

lsm::TheoremConstants constants_of(const RunConfig& cfg) {
    lsm::TheoremConstants c;
    c.eta = cfg.eta;
    c.c2 = cfg.c2;
    c.big_m = cfg.big_m;
    c.kappa = cfg.kappa;
    c.eta_prime = cfg.eta_prime;
    c.validate();
    return c;
}

lsm::ExperimentOptions options_of(const RunConfig& cfg) {
    lsm::ExperimentOptions opt;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    return opt;
}

std::vector<double> log_grid(double lo, double hi, std::int64_t n) {
    if (!(lo > 0.0 && hi > lo && n >= 2))
        throw lsm::ParameterError("grid: need 0 < grid_min < grid_max and >= 2 points");
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        grid[static_cast<std::size_t>(i)] =
            lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return grid;
}

std::optional<lsm::IdsReference> build_reference(const RunConfig& cfg) {
    if (cfg.reference == "none") return std::nullopt;
    if (cfg.reference == "infinite-gamma")
        return lsm::IdsReference::infinite_gamma(cfg.nu);
    if (cfg.reference == "empirical") {
        lsm::ModelParameters p = model_of(cfg);
        p.density = 1.0;
        p.particle_number = static_cast<std::int64_t>(std::llround(cfg.reference_box));
        const auto grid = log_grid(cfg.grid_min, std::max(cfg.grid_max, 45.0 / cfg.beta),
                                   std::max<std::int64_t>(cfg.grid_points, 160));
        const auto curve = lsm::ensemble_ids(p, grid, cfg.reference_realizations, cfg.seed + 0x9E37,
                                             cfg.threads);
        return lsm::IdsReference::empirical(curve);
    }
    throw lsm::ParameterError("reference must be infinite-gamma, empirical, or none");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw lsm::Error("cannot open output file: " + path.string());
    out << text;
}

void write_curve_csv(const std::filesystem::path& path, const lsm::IdsCurve& curve) {
    std::ostringstream out;
    out << "E,mean,stderr,n_realizations\n";
    for (std::size_t i = 0; i < curve.energies.size(); ++i) {
        out << lsm::format_g17(curve.energies[i]) << ',' << lsm::format_g17(curve.values[i])
            << ',' << lsm::format_g17(curve.stderrs[i]) << ',' << curve.realizations_used
            << "\n";
    }
    write_text(path, out.str());
}

void emit_report(const RunConfig& cfg, const std::string& experiment,
                 const lsm::ExperimentReport& report) {
    const std::filesystem::path dir(cfg.outdir);
    std::filesystem::create_directories(dir);
    const bool csv = std::find(cfg.formats.begin(), cfg.formats.end(), "csv") !=
                     cfg.formats.end();
    const bool json = std::find(cfg.formats.begin(), cfg.formats.end(), "json") !=
                      cfg.formats.end();
    if (csv) {
        std::ostringstream out;
        lsm::write_report_csv(report, out);
        write_text(dir / "report.csv", out.str());
    }
    if (json) write_text(dir / "report.json", lsm::report_to_json(report).dump(2) + "\n");
    (void)experiment;
}

void emit_manifest(const RunConfig& cfg, const std::string& experiment,
                   double wall_seconds) {
    const std::filesystem::path dir(cfg.outdir);
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = {{"config", config_json(cfg, experiment)},
                               {"wall_seconds", wall_seconds},
                               {"versions",
                                {{"lsmlab", kVersion}, {"compiler", __VERSION__}}}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// spectrum subcommand: (realization_id, j, E_j) rows for R realizations
void run_spectrum_command(const RunConfig& cfg) {
    const auto params = model_of(cfg);
    params.validate();
    std::ostringstream out;
    out << "realization_id,j,E_j\n";
    nlohmann::json spectra = nlohmann::json::array();
    for (std::int64_t r = 0; r < cfg.realizations; ++r) {
        for (std::int64_t n : cfg.sizes) {
            const double L = static_cast<double>(n) / cfg.rho;
            const auto config = lsm::sample_configuration(L, cfg.nu, cfg.seed,
                                                          static_cast<std::uint64_t>(r));
            const lsm::LevelRequest request =
                cfg.below_energy > 0.0 ? lsm::LevelRequest::below(cfg.below_energy)
                                       : lsm::LevelRequest::first(
                                             cfg.levels > 0 ? cfg.levels : 32);
            const auto spectrum = lsm::eigenvalues(config, cfg.gamma, request);
            for (std::size_t j = 0; j < spectrum.eigenvalues.size(); ++j)
                out << r << ',' << (j + 1) << ','
                    << lsm::format_g17(spectrum.eigenvalues[j]) << "\n";
            spectra.push_back({{"realization_id", r},
                               {"N", n},
                               {"eigenvalues", spectrum.eigenvalues},
                               {"energy_cutoff", spectrum.energy_cutoff},
                               {"complete_below_cutoff", spectrum.complete_below_cutoff}});
        }
    }
    const std::filesystem::path dir(cfg.outdir);
    std::filesystem::create_directories(dir);
    write_text(dir / "spectrum.csv", out.str());
    write_text(dir / "spectrum.json", spectra.dump(2) + "\n");
}

// thermo subcommand: chemical potential, occupations, condensate profile
void run_thermo_command(const RunConfig& cfg) {
    auto params = model_of(cfg);
    const std::filesystem::path dir(cfg.outdir);
    std::filesystem::create_directories(dir);
    nlohmann::json states = nlohmann::json::array();
    std::ostringstream occ_csv;
    occ_csv << "realization_id,j,E_j,n_j\n";
    for (std::int64_t r = 0; r < cfg.realizations; ++r) {
        for (std::int64_t n : cfg.sizes) {
            params.particle_number = n;
            const auto thermo = lsm::run_thermo_realization(
                params, cfg.seed, static_cast<std::uint64_t>(r), options_of(cfg), 8);
            std::vector<double> eps;
            for (double f : cfg.epsilon_factors) eps.push_back(f * thermo.e1);
            const auto profile = lsm::condensate_profile(
                thermo.head_levels, thermo.head_occupations, n, eps);
            nlohmann::json fractions = nlohmann::json::array();
            for (const auto& [e, frac] : profile.fractions)
                fractions.push_back({{"epsilon", e}, {"fraction", frac}});
            double total = 0.0;
            for (double v : thermo.head_occupations) total += v;
            states.push_back({{"realization_id", r},
                              {"N", n},
                              {"mu", thermo.mu},
                              {"E1", thermo.e1},
                              {"total", total},
                              {"sum_rule_residual", thermo.total_check},
                              {"condensate_fraction_eps", fractions}});
            const std::size_t emit =
                std::min<std::size_t>(thermo.head_levels.size(), 4096);
            for (std::size_t j = 0; j < emit; ++j)
                occ_csv << r << ',' << (j + 1) << ','
                        << lsm::format_g17(thermo.head_levels[j]) << ','
                        << lsm::format_g17(thermo.head_occupations[j]) << "\n";
        }
    }
    write_text(dir / "thermo.json", states.dump(2) + "\n");
    write_text(dir / "occupations.csv", occ_csv.str());
}

// ids subcommand: ensemble curve over the grid
void run_ids_command(const RunConfig& cfg) {
    auto params = model_of(cfg);
    params.density = 1.0;
    params.particle_number = static_cast<std::int64_t>(std::llround(cfg.box_length));
    const auto grid = log_grid(cfg.grid_min, cfg.grid_max, cfg.grid_points);
    const auto curve =
        lsm::ensemble_ids(params, grid, cfg.realizations, cfg.seed, cfg.threads);
    const std::filesystem::path dir(cfg.outdir);
    std::filesystem::create_directories(dir);
    write_curve_csv(dir / "curve.csv", curve);
}

int dispatch(const std::string& experiment, const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (experiment == "spectrum") {
        run_spectrum_command(cfg);
    } else if (experiment == "ids") {
        run_ids_command(cfg);
    } else if (experiment == "thermo") {
        run_thermo_command(cfg);
    } else if (experiment == "gap") {
        emit_report(cfg, experiment,
                    lsm::run_gap_experiment(model_of(cfg), constants_of(cfg), cfg.sizes,
                                            cfg.realizations, options_of(cfg)));
    } else if (experiment == "bec") {
        double rho_c = cfg.rho_c;
        if (rho_c < 0.0) {
            const auto ref = build_reference(cfg);
            if (!ref) throw lsm::ParameterError("bec: need rho_c or a reference");
            rho_c = lsm::critical_density(*ref, cfg.beta).value;
        }
        emit_report(cfg, experiment,
                    lsm::run_bec_experiment(model_of(cfg), constants_of(cfg), cfg.sizes,
                                            cfg.realizations, cfg.epsilon_factors, rho_c,
                                            options_of(cfg)));
    } else if (experiment == "excited") {
        emit_report(cfg, experiment,
                    lsm::run_excited_state_check(model_of(cfg), constants_of(cfg),
                                                 cfg.sizes, cfg.realizations,
                                                 cfg.eta_prime, options_of(cfg)));
    } else if (experiment == "mu") {
        emit_report(cfg, experiment,
                    lsm::run_mu_convergence(model_of(cfg), cfg.sizes, cfg.realizations,
                                            build_reference(cfg), options_of(cfg)));
    } else if (experiment == "lifshitz") {
        const auto grid = log_grid(cfg.grid_min, cfg.grid_max, cfg.grid_points);
        const auto report = lsm::run_lifshitz_experiment(
            model_of(cfg), cfg.box_length, cfg.realizations, grid, cfg.window_lo,
            cfg.window_hi, options_of(cfg));
        emit_report(cfg, experiment, report);
        // plot-ready curve and fit artifacts
        auto params = model_of(cfg);
        params.density = 1.0;
        params.particle_number = static_cast<std::int64_t>(std::llround(cfg.box_length));
        const auto curve =
            lsm::ensemble_ids(params, grid, cfg.realizations, cfg.seed, cfg.threads);
        const std::filesystem::path dir(cfg.outdir);
        write_curve_csv(dir / "curve.csv", curve);
        nlohmann::json fit = {{"slope", report.rows[0].value},
                              {"slope_stderr", report.rows[0].stderr_},
                              {"slope_over_pi_nu", report.rows[1].value},
                              {"intercept", report.rows[2].value},
                              {"r2", report.rows[3].value}};
        write_text(dir / "fit.json", fit.dump(2) + "\n");
    } else {
        throw lsm::ParameterError("unknown experiment: " + experiment);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_manifest(cfg, experiment, wall);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lsmlab: spectra and Bose gas thermodynamics of a 1D random "
                 "delta-impurity model"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::string experiment;

    const std::vector<std::string> subcommands = {"spectrum", "ids", "thermo", "gap",
                                                  "bec",      "excited", "mu", "lifshitz"};
    for (const auto& name : subcommands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file");
        sub->add_option("--nu", cfg.nu, "impurity intensity");
        sub->add_option("--gamma", cfg.gamma, "interaction strength");
        sub->add_option("--beta", cfg.beta, "inverse temperature");
        sub->add_option("--rho", cfg.rho, "particle density");
        sub->add_option("--sizes", cfg.sizes, "particle numbers N")->delimiter(',');
        sub->add_option("--realizations,-R", cfg.realizations, "realizations per size");
        sub->add_option("--seed", cfg.seed, "experiment seed");
        sub->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
        sub->add_option("--eta", cfg.eta, "eta in (0,2)");
        sub->add_option("--c2", cfg.c2, "c2 > 2");
        sub->add_option("--M", cfg.big_m, "theorem constant M");
        sub->add_option("--kappa", cfg.kappa, "kappa > 2");
        sub->add_option("--eta-prime", cfg.eta_prime, "excited-state threshold");
        sub->add_option("--rho-c", cfg.rho_c, "critical density (computed if < 0)");
        sub->add_option("--epsilon-factors", cfg.epsilon_factors,
                        "condensate window factors of E1")->delimiter(',');
        sub->add_option("--box-length,-L", cfg.box_length, "box length (ids/lifshitz)");
        sub->add_option("--grid-min", cfg.grid_min, "lowest grid energy");
        sub->add_option("--grid-max", cfg.grid_max, "highest grid energy");
        sub->add_option("--grid-points", cfg.grid_points, "grid size");
        sub->add_option("--window-lo", cfg.window_lo, "fit window lower edge");
        sub->add_option("--window-hi", cfg.window_hi, "fit window upper edge");
        sub->add_option("--reference", cfg.reference,
                        "ids reference: infinite-gamma | empirical | none");
        sub->add_option("--reference-box", cfg.reference_box, "empirical reference L");
        sub->add_option("--reference-realizations", cfg.reference_realizations,
                        "empirical reference R");
        sub->add_option("--levels", cfg.levels, "first J levels (spectrum)");
        sub->add_option("--below-energy", cfg.below_energy, "levels below E (spectrum)");
        sub->add_option("--outdir,-o", cfg.outdir, "output directory");
        sub->add_option("--formats", cfg.formats, "report formats (csv, json)")->delimiter(',');
    }

    CLI11_PARSE(app, argc, argv);
    experiment = app.get_subcommands().front()->get_name();

    try {
        if (!config_path.empty()) {
            // config file first, then explicit flags win
            RunConfig from_file;
            std::string file_experiment = experiment;
            apply_config_file(config_path, from_file, file_experiment);
            auto* sub = app.get_subcommands().front();
            RunConfig merged = from_file;
            auto keep = [&](const char* flag, auto member) {
                if (sub->count(flag) > 0) merged.*member = cfg.*member;
            };
            keep("--nu", &RunConfig::nu);
            keep("--gamma", &RunConfig::gamma);
            keep("--beta", &RunConfig::beta);
            keep("--rho", &RunConfig::rho);
            keep("--sizes", &RunConfig::sizes);
            keep("--realizations", &RunConfig::realizations);
            keep("--seed", &RunConfig::seed);
            keep("--threads", &RunConfig::threads);
            keep("--eta", &RunConfig::eta);
            keep("--c2", &RunConfig::c2);
            keep("--M", &RunConfig::big_m);
            keep("--kappa", &RunConfig::kappa);
            keep("--eta-prime", &RunConfig::eta_prime);
            keep("--rho-c", &RunConfig::rho_c);
            keep("--epsilon-factors", &RunConfig::epsilon_factors);
            keep("--box-length", &RunConfig::box_length);
            keep("--grid-min", &RunConfig::grid_min);
            keep("--grid-max", &RunConfig::grid_max);
            keep("--grid-points", &RunConfig::grid_points);
            keep("--window-lo", &RunConfig::window_lo);
            keep("--window-hi", &RunConfig::window_hi);
            keep("--reference", &RunConfig::reference);
            keep("--reference-box", &RunConfig::reference_box);
            keep("--reference-realizations", &RunConfig::reference_realizations);
            keep("--levels", &RunConfig::levels);
            keep("--below-energy", &RunConfig::below_energy);
            keep("--outdir", &RunConfig::outdir);
            keep("--formats", &RunConfig::formats);
            cfg = merged;
        }
        model_of(cfg).validate();
        if (cfg.realizations < 1)
            throw lsm::ParameterError("realizations must be >= 1");
        return dispatch(experiment, cfg);
    } catch (const lsm::ParameterError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const lsm::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const lsm::ResourceLimitError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 4;
    } catch (const lsm::Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
