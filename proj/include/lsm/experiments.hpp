#ifndef LSM_EXPERIMENTS_HPP
#define LSM_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/ids.hpp"
#include "lsm/parallel.hpp"
#include "lsm/partition.hpp"
#include "lsm/report.hpp"
#include "lsm/sampler.hpp"
#include "lsm/spectrum.hpp"
#include "lsm/thermo.hpp"

namespace lsm {

// Statistical harnesses: Monte Carlo checks of the energy-gap, condensate,
// excited-state and chemical-potential statements over growing box sizes,
// emitting tabular reports. Probability targets hold only asymptotically in
// N, so reports carry target rows next to the measured frequencies instead
// of hard-failing.

struct TheoremConstants {
    double eta = 0.5;        // in (0, 2)
    double c2 = 4.0;         // > 2
    double big_m = 1.0;      // M > 0; not constructive in the theory
    double kappa = 3.0;      // > 2
    double eta_prime = 0.01;

    void validate() const {
        if (!(eta > 0.0 && eta < 2.0)) throw ParameterError("eta must lie in (0, 2)");
        if (!(c2 > 2.0)) throw ParameterError("c2 must be > 2");
        if (!(big_m > 0.0)) throw ParameterError("M must be > 0");
        if (!(kappa > 2.0)) throw ParameterError("kappa must be > 2");
        if (!(eta_prime > 0.0)) throw ParameterError("eta_prime must be > 0");
    }

    double c1(double intensity) const {
        return -intensity / (4.0 * std::log(0.5 * eta));
    }

    std::int64_t c3(double intensity, double m_factor = 1.0) const {
        const double value = 4.0 * big_m * m_factor * c2 / (eta * c1(intensity));
        return static_cast<std::int64_t>(std::ceil(value)) + 1;
    }

    // ground-state upper threshold (pi nu / ln(c1 L))^2
    double ground_threshold(double intensity, double box_length) const {
        const double log_term = std::log(c1(intensity) * box_length);
        if (!(log_term > 0.0))
            throw DomainError("ground threshold undefined: ln(c1 L) <= 0");
        const double q = kPi * intensity / log_term;
        return q * q;
    }

    // gap energy (pi nu / (ln(c1 L) - ln(c2/2)))^2
    double gap_energy(double intensity, double box_length) const {
        const double log_term =
            std::log(c1(intensity) * box_length) - std::log(0.5 * c2);
        if (!(log_term > 0.0))
            throw DomainError("gap energy undefined: ln(c1 L) <= ln(c2/2)");
        const double q = kPi * intensity / log_term;
        return q * q;
    }

    // ground-state lower threshold (pi nu / (kappa ln L))^2
    double ground_lower_threshold(double intensity, double box_length) const {
        const double log_term = kappa * std::log(box_length);
        if (!(log_term > 0.0))
            throw DomainError("ground lower threshold undefined: ln L <= 0");
        const double q = kPi * intensity / log_term;
        return q * q;
    }
};

struct ExperimentOptions {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::int64_t partition_atom_threshold = 10000;  // switch to block solver
    std::int64_t head_target = 768;
    double block_size = 256.0;
    std::int64_t polish_count = 96;
};

// One realization of the grand-canonical pipeline: spectrum head, chemical
// potential, ground occupation. Shared by the experiment harnesses, the CLI
// thermo subcommand, and the acceptance suite.
struct ThermoRealization {
    double e1 = 0.0;
    double mu = 0.0;
    std::vector<double> head_levels;
    std::vector<double> head_occupations;
    double total_check = 0.0;  // sum rule residual |total - N| / N
};

inline ThermoRealization run_thermo_realization(const ModelParameters& params,
                                                std::uint64_t seed, std::uint64_t index,
                                                const ExperimentOptions& opt,
                                                std::int64_t min_head_levels) {
    const double L = params.box_length();
    const auto config = sample_configuration(L, params.intensity, seed, index);
    const double n = static_cast<double>(params.particle_number);

    double cutoff = suggested_cutoff(L, params.particle_number, params.inverse_temperature);
    const bool partitioned =
        static_cast<std::int64_t>(config.atoms.size()) > opt.partition_atom_threshold;

    ThermoRealization out;
    for (int attempt = 0;; ++attempt) {
        try {
            if (partitioned) {
                PartitionOptions popt;
                popt.block_size = opt.block_size;
                popt.head_target = std::max(opt.head_target, min_head_levels);
                popt.polish_count = opt.polish_count;
                popt.threads = opt.threads;
                // bulk levels only feed Boltzmann-weighted sums; grade their
                // tolerance so the summed deviation stays below ~1e-11 N
                const double j_est = 1.8 * params.intensity * L;
                popt.solve.graded_tol_coeff =
                    6e-12 * n / (params.inverse_temperature * j_est);
                popt.solve.graded_tol_beta = params.inverse_temperature;
                const auto spectrum = partitioned_spectrum(config, params.strength,
                                                           cutoff, popt);
                if (spectrum.head_count() < min_head_levels)
                    throw InsufficientSpectrumError(
                        "thermo realization: head smaller than requested");
                out.mu = solve_chemical_potential(spectrum, params.inverse_temperature,
                                                  params.particle_number);
                out.e1 = spectrum.head_levels.front();
                out.head_levels = spectrum.head_levels;
                out.total_check =
                    std::fabs(total_occupation(spectrum, out.mu,
                                               params.inverse_temperature) - n) / n;
            } else {
                const auto spectrum = eigenvalues(config, params.strength,
                                                  LevelRequest::below(cutoff));
                if (static_cast<std::int64_t>(spectrum.eigenvalues.size()) < min_head_levels)
                    throw InsufficientSpectrumError(
                        "thermo realization: spectrum smaller than requested head");
                out.mu = solve_chemical_potential(spectrum, params.inverse_temperature,
                                                  params.particle_number, L);
                out.e1 = spectrum.eigenvalues.front();
                out.head_levels = spectrum.eigenvalues;
                out.total_check =
                    std::fabs(total_occupation(spectrum, out.mu,
                                               params.inverse_temperature, L) - n) / n;
            }
            break;
        } catch (const InsufficientSpectrumError&) {
            if (attempt >= 3) throw;
            cutoff *= 1.4;  // tail budget not met; extend and retry
        }
    }

    out.head_occupations.reserve(out.head_levels.size());
    for (double e : out.head_levels)
        out.head_occupations.push_back(bose(e - out.mu, params.inverse_temperature));
    return out;
}

namespace detail {

// Runs fn across realizations: parallel over realizations for small boxes,
// sequential with block-parallel solves for large ones. Results always land
// in index-ordered slots.
template <typename Fn>
void for_each_realization(const ModelParameters& params, std::int64_t realizations,
                          const ExperimentOptions& opt, Fn&& fn) {
    const double expected_atoms = params.intensity * params.box_length();
    const bool big = expected_atoms > static_cast<double>(opt.partition_atom_threshold);
    if (big) {
        for (std::int64_t r = 0; r < realizations; ++r) fn(static_cast<std::size_t>(r));
    } else {
        parallel_for(static_cast<std::size_t>(realizations),
                     [&](std::size_t r) { fn(r); }, opt.threads);
    }
}

inline nlohmann::json params_json(const ModelParameters& p) {
    return {{"intensity", p.intensity},
            {"strength", p.strength},
            {"inverse_temperature", p.inverse_temperature},
            {"density", p.density}};
}

inline nlohmann::json constants_json(const TheoremConstants& c) {
    return {{"eta", c.eta},       {"c2", c.c2},
            {"M", c.big_m},       {"kappa", c.kappa},
            {"eta_prime", c.eta_prime}};
}

}  // namespace detail

// Frequencies of the energy-gap events: the ground level below its
// logarithmic threshold, the c3-th level above the gap energy, and their
// conjunction, with an M sensitivity sweep and the ground lower-bound event.
inline ExperimentReport run_gap_experiment(const ModelParameters& params,
                                           const TheoremConstants& constants,
                                           const std::vector<std::int64_t>& sizes,
                                           std::int64_t realizations,
                                           const ExperimentOptions& opt = {}) {
    params.validate();
    constants.validate();
    if (sizes.empty() || realizations < 1)
        throw ParameterError("gap experiment: need sizes and realizations");

    const std::vector<double> m_factors = {0.5, 1.0, 2.0};
    ExperimentReport report;
    report.experiment = "gap";
    report.metadata = {{"params", detail::params_json(params)},
                       {"constants", detail::constants_json(constants)},
                       {"seed", opt.seed},
                       {"R", realizations},
                       {"M_sweep", m_factors}};

    for (std::int64_t n : sizes) {
        ModelParameters p = params;
        p.particle_number = n;
        const double L = p.box_length();
        const double upper = constants.ground_threshold(p.intensity, L);
        const double gap = constants.gap_energy(p.intensity, L);
        const double lower = constants.ground_lower_threshold(p.intensity, L);

        std::int64_t max_c3 = 0;
        for (double mf : m_factors) max_c3 = std::max(max_c3, constants.c3(p.intensity, mf));

        struct Row {
            double e1 = 0.0;
            std::vector<double> ec3;  // per M factor
        };
        std::vector<Row> results(static_cast<std::size_t>(realizations));
        detail::for_each_realization(p, realizations, opt, [&](std::size_t r) {
            const auto config = sample_configuration(L, p.intensity, opt.seed, r);
            const auto spectrum =
                eigenvalues(config, p.strength, LevelRequest::first(max_c3));
            results[r].e1 = spectrum.eigenvalues.front();
            for (double mf : m_factors) {
                const auto c3 = constants.c3(p.intensity, mf);
                results[r].ec3.push_back(
                    spectrum.eigenvalues[static_cast<std::size_t>(c3 - 1)]);
            }
        });

        const double rn = static_cast<double>(realizations);
        double freq_a = 0.0, freq_lower = 0.0;
        std::vector<double> freq_b(m_factors.size(), 0.0), freq_both(m_factors.size(), 0.0);
        std::vector<double> e1s(results.size());
        for (std::size_t r = 0; r < results.size(); ++r) {
            e1s[r] = results[r].e1;
            const bool a = results[r].e1 <= upper;
            freq_a += a ? 1.0 : 0.0;
            freq_lower += (results[r].e1 >= lower) ? 1.0 : 0.0;
            for (std::size_t m = 0; m < m_factors.size(); ++m) {
                const bool b = results[r].ec3[m] >= gap;
                freq_b[m] += b ? 1.0 : 0.0;
                freq_both[m] += (a && b) ? 1.0 : 0.0;
            }
        }
        freq_a /= rn;
        freq_lower /= rn;
        for (auto& f : freq_b) f /= rn;
        for (auto& f : freq_both) f /= rn;

        const auto e1_stats = mean_stderr(e1s);
        report.add(n, L, "threshold[E1_upper]", upper, 0.0, realizations);
        report.add(n, L, "threshold[gap_energy]", gap, 0.0, realizations);
        report.add(n, L, "threshold[E1_lower]", lower, 0.0, realizations);
        report.add(n, L, "mean[E1]", e1_stats.mean, e1_stats.stderr_, realizations);
        report.add(n, L, "P[E1<=upper]", freq_a, binomial_stderr(freq_a, realizations),
                   realizations);
        report.add(n, L, "target[E1<=upper]", 1.0 - 0.5 * constants.eta, 0.0, realizations);
        report.add(n, L, "P[E1>=lower]", freq_lower,
                   binomial_stderr(freq_lower, realizations), realizations);
        for (std::size_t m = 0; m < m_factors.size(); ++m) {
            const std::string tag = "@M=" + format_g17(constants.big_m * m_factors[m]);
            report.add(n, L, "c3" + tag,
                       static_cast<double>(constants.c3(p.intensity, m_factors[m])), 0.0,
                       realizations);
            report.add(n, L, "P[Ec3>=gap]" + tag, freq_b[m],
                       binomial_stderr(freq_b[m], realizations), realizations);
            report.add(n, L, "P[omega2]" + tag, freq_both[m],
                       binomial_stderr(freq_both[m], realizations), realizations);
        }
        report.add(n, L, "target[omega2]", 1.0 - 5.0 * constants.eta / 8.0, 0.0,
                   realizations);
    }
    return report;
}

// Ground-state occupation statistics and condensate window profile over
// growing sizes at fixed (rho, beta). rho_c is the critical-density
// estimate used for the condensate bound and rho0 = rho - rho_c.
inline ExperimentReport run_bec_experiment(const ModelParameters& params,
                                           const TheoremConstants& constants,
                                           const std::vector<std::int64_t>& sizes,
                                           std::int64_t realizations,
                                           const std::vector<double>& epsilon_factors,
                                           double rho_c,
                                           const ExperimentOptions& opt = {}) {
    params.validate();
    constants.validate();
    if (sizes.empty() || realizations < 1)
        throw ParameterError("bec experiment: need sizes and realizations");
    if (epsilon_factors.empty() || !std::is_sorted(epsilon_factors.begin(),
                                                   epsilon_factors.end()))
        throw ParameterError("bec experiment: epsilon factors must be sorted");

    const bool supercritical = params.density > rho_c;
    const double rho0 = supercritical ? params.density - rho_c : 0.0;
    const std::int64_t c3 = constants.c3(params.intensity);

    ExperimentReport report;
    report.experiment = "bec";
    report.metadata = {{"params", detail::params_json(params)},
                       {"constants", detail::constants_json(constants)},
                       {"seed", opt.seed},
                       {"R", realizations},
                       {"rho_c", rho_c},
                       {"epsilon_factors", epsilon_factors},
                       {"supercritical", supercritical}};

    for (std::int64_t n : sizes) {
        ModelParameters p = params;
        p.particle_number = n;
        const double L = p.box_length();

        struct Row {
            double n1_frac = 0.0;
            double consistency = 0.0;
            std::vector<double> window_fracs;
            double sum_rule = 0.0;
        };
        std::vector<Row> results(static_cast<std::size_t>(realizations));
        detail::for_each_realization(p, realizations, opt, [&](std::size_t r) {
            const auto thermo =
                run_thermo_realization(p, opt.seed, r, opt, c3 + 8);
            Row row;
            row.n1_frac = thermo.head_occupations.front() / static_cast<double>(n);
            // internal consistency: recompute n1 from the stored (E1, mu)
            row.consistency = std::fabs(
                bose(thermo.e1 - thermo.mu, p.inverse_temperature) /
                    static_cast<double>(n) - row.n1_frac);
            std::vector<double> eps;
            eps.reserve(epsilon_factors.size());
            for (double f : epsilon_factors) eps.push_back(f * thermo.e1);
            const auto profile = condensate_profile(thermo.head_levels,
                                                    thermo.head_occupations, n, eps);
            for (const auto& [e, frac] : profile.fractions) row.window_fracs.push_back(frac);
            row.sum_rule = thermo.total_check;
            results[r] = std::move(row);
        });

        std::vector<double> n1(results.size());
        for (std::size_t r = 0; r < results.size(); ++r) n1[r] = results[r].n1_frac;
        std::vector<double> sorted_n1 = n1;
        std::sort(sorted_n1.begin(), sorted_n1.end());
        const auto n1_stats = mean_stderr(n1);

        report.add(n, L, "mean[n1/N]", n1_stats.mean, n1_stats.stderr_, realizations);
        report.add(n, L, "median[n1/N]", median_of_sorted(sorted_n1), 0.0, realizations);
        report.add(n, L, "q10[n1/N]", sorted_n1[static_cast<std::size_t>(
                                          0.1 * (sorted_n1.size() - 1))],
                   0.0, realizations);
        report.add(n, L, "q90[n1/N]", sorted_n1[static_cast<std::size_t>(
                                          0.9 * (sorted_n1.size() - 1))],
                   0.0, realizations);

        double max_consistency = 0.0, max_sum_rule = 0.0;
        for (const auto& row : results) {
            max_consistency = std::max(max_consistency, row.consistency);
            max_sum_rule = std::max(max_sum_rule, row.sum_rule);
        }
        report.add(n, L, "max[consistency_error]", max_consistency, 0.0, realizations);
        report.add(n, L, "max[sum_rule_residual]", max_sum_rule, 0.0, realizations);

        std::vector<double> column(results.size());
        std::vector<double> mean_fracs(epsilon_factors.size());
        for (std::size_t e = 0; e < epsilon_factors.size(); ++e) {
            for (std::size_t r = 0; r < results.size(); ++r)
                column[r] = results[r].window_fracs[e];
            const auto stats = mean_stderr(column);
            mean_fracs[e] = stats.mean;
            report.add(n, L, "mean[frac<=eps]@factor=" + format_g17(epsilon_factors[e]),
                       stats.mean, stats.stderr_, realizations);
        }

        // rho0 via the smallest window and Richardson extrapolation over the
        // two smallest epsilon factors
        report.add(n, L, "rho0_window_estimate", mean_fracs.front() * params.density, 0.0,
                   realizations);
        if (epsilon_factors.size() >= 2) {
            const double f1 = mean_fracs[0], f2 = mean_fracs[1];
            const double e1f = epsilon_factors[0], e2f = epsilon_factors[1];
            const double extrap = f1 - e1f * (f2 - f1) / (e2f - e1f);
            report.add(n, L, "rho0_richardson_estimate", extrap * params.density, 0.0,
                       realizations);
        }

        if (supercritical) {
            const double bound = (1.0 / static_cast<double>(c3)) / params.density *
                                 (1.0 - std::sqrt(constants.eta)) * (1.0 - constants.eta) *
                                 rho0;
            double freq = 0.0;
            for (double v : n1) freq += (v >= bound) ? 1.0 : 0.0;
            freq /= static_cast<double>(realizations);
            const double target = 1.0 -
                                  4.0 * (rho0 + params.density + 1.0) / rho0 *
                                      std::sqrt(constants.eta) -
                                  6.0 * constants.eta / 8.0;
            report.add(n, L, "threshold[n1_bound]", bound, 0.0, realizations);
            report.add(n, L, "P[n1/N>=bound]", freq, binomial_stderr(freq, realizations),
                       realizations);
            report.add(n, L, "target[n1/N>=bound]", target, 0.0, realizations);
            report.add(n, L, "rho0_theory", rho0, 0.0, realizations);
        }
    }
    return report;
}

// Occupation fractions of excited states: frequency of n_{c3}/N < eta'
// against the 1 - 5 eta / 8 target, plus the j in {2, c3, 2 c3} fractions.
inline ExperimentReport run_excited_state_check(const ModelParameters& params,
                                                const TheoremConstants& constants,
                                                const std::vector<std::int64_t>& sizes,
                                                std::int64_t realizations,
                                                double eta_prime,
                                                const ExperimentOptions& opt = {}) {
    params.validate();
    constants.validate();
    if (!(eta_prime > 0.0)) throw ParameterError("excited check: eta_prime must be > 0");
    const std::int64_t c3 = constants.c3(params.intensity);

    ExperimentReport report;
    report.experiment = "excited";
    report.metadata = {{"params", detail::params_json(params)},
                       {"constants", detail::constants_json(constants)},
                       {"seed", opt.seed},
                       {"R", realizations},
                       {"eta_prime", eta_prime},
                       {"c3", c3}};

    for (std::int64_t n : sizes) {
        ModelParameters p = params;
        p.particle_number = n;
        const double L = p.box_length();

        struct Row {
            double f2 = 0.0, fc3 = 0.0, f2c3 = 0.0;
            std::int64_t monotonicity_violations = 0;
        };
        std::vector<Row> results(static_cast<std::size_t>(realizations));
        detail::for_each_realization(p, realizations, opt, [&](std::size_t r) {
            const auto thermo =
                run_thermo_realization(p, opt.seed, r, opt, 2 * c3 + 8);
            Row row;
            const double dn = static_cast<double>(n);
            row.f2 = thermo.head_occupations[1] / dn;
            row.fc3 = thermo.head_occupations[static_cast<std::size_t>(c3 - 1)] / dn;
            row.f2c3 = thermo.head_occupations[static_cast<std::size_t>(2 * c3 - 1)] / dn;
            for (std::size_t j = 1; j < thermo.head_occupations.size(); ++j)
                if (thermo.head_occupations[j] > thermo.head_occupations[j - 1])
                    ++row.monotonicity_violations;
            results[r] = row;
        });

        double freq = 0.0;
        std::vector<double> f2(results.size()), fc3(results.size()), f2c3(results.size());
        std::int64_t violations = 0;
        for (std::size_t r = 0; r < results.size(); ++r) {
            f2[r] = results[r].f2;
            fc3[r] = results[r].fc3;
            f2c3[r] = results[r].f2c3;
            freq += (results[r].fc3 < eta_prime) ? 1.0 : 0.0;
            violations += results[r].monotonicity_violations;
        }
        freq /= static_cast<double>(realizations);

        const auto s2 = mean_stderr(f2);
        const auto sc3 = mean_stderr(fc3);
        const auto s2c3 = mean_stderr(f2c3);
        report.add(n, L, "P[nc3/N<eta_prime]", freq, binomial_stderr(freq, realizations),
                   realizations);
        report.add(n, L, "target[nc3/N<eta_prime]", 1.0 - 5.0 * constants.eta / 8.0, 0.0,
                   realizations);
        report.add(n, L, "mean[n2/N]", s2.mean, s2.stderr_, realizations);
        report.add(n, L, "mean[nc3/N]", sc3.mean, sc3.stderr_, realizations);
        report.add(n, L, "mean[n2c3/N]", s2c3.mean, s2c3.stderr_, realizations);
        report.add(n, L, "monotonicity_violations", static_cast<double>(violations), 0.0,
                   realizations);
    }
    return report;
}

// Chemical-potential statistics across sizes; against the subcritical limit
// mu_hat when a reference is supplied.
inline ExperimentReport run_mu_convergence(const ModelParameters& params,
                                           const std::vector<std::int64_t>& sizes,
                                           std::int64_t realizations,
                                           const std::optional<IdsReference>& reference,
                                           const ExperimentOptions& opt = {}) {
    params.validate();
    if (sizes.empty() || realizations < 1)
        throw ParameterError("mu experiment: need sizes and realizations");

    ExperimentReport report;
    report.experiment = "mu";
    report.metadata = {{"params", detail::params_json(params)},
                       {"seed", opt.seed},
                       {"R", realizations}};

    double mu_hat = 0.0;
    bool have_mu_hat = false;
    if (reference) {
        const auto rc = critical_density(*reference, params.inverse_temperature);
        report.metadata["rho_c_reference"] = rc.value;
        if (!rc.divergent && params.density < rc.value) {
            mu_hat = solve_mu_hat(params.density, params.inverse_temperature, *reference);
            have_mu_hat = true;
            report.metadata["mu_hat"] = mu_hat;
        }
    }

    for (std::int64_t n : sizes) {
        ModelParameters p = params;
        p.particle_number = n;
        const double L = p.box_length();

        std::vector<double> mus(static_cast<std::size_t>(realizations));
        std::vector<double> below_e1(static_cast<std::size_t>(realizations));
        detail::for_each_realization(p, realizations, opt, [&](std::size_t r) {
            const auto thermo = run_thermo_realization(p, opt.seed, r, opt, 8);
            mus[r] = thermo.mu;
            below_e1[r] = (thermo.mu < thermo.e1) ? 1.0 : 0.0;
        });

        const auto stats = mean_stderr(mus);
        std::vector<double> abs_mu(mus.size());
        for (std::size_t r = 0; r < mus.size(); ++r) abs_mu[r] = std::fabs(mus[r]);
        const auto abs_stats = mean_stderr(abs_mu);

        report.add(n, L, "mean[mu]", stats.mean, stats.stderr_, realizations);
        report.add(n, L, "mean[abs_mu]", abs_stats.mean, abs_stats.stderr_, realizations);
        report.add(n, L, "sd[mu]",
                   stats.stderr_ * std::sqrt(static_cast<double>(realizations)), 0.0,
                   realizations);
        double frac_below = 0.0;
        for (double b : below_e1) frac_below += b;
        report.add(n, L, "P[mu<E1]", frac_below / static_cast<double>(realizations), 0.0,
                   realizations);
        if (have_mu_hat) {
            report.add(n, L, "mu_hat", mu_hat, 0.0, realizations);
            report.add(n, L, "abs_dev[mean_mu,mu_hat]", std::fabs(stats.mean - mu_hat),
                       stats.stderr_, realizations);
        }
    }
    return report;
}

// Ensemble IDS at one box size, Lifshitz fit over the requested window, and
// the slope against pi nu with a jackknife confidence interval.
inline ExperimentReport run_lifshitz_experiment(const ModelParameters& params,
                                                double box_length,
                                                std::int64_t realizations,
                                                const std::vector<double>& grid,
                                                double window_lo, double window_hi,
                                                const ExperimentOptions& opt = {}) {
    params.validate();
    if (!(box_length > 0.0)) throw ParameterError("lifshitz experiment: box length > 0");
    if (realizations < 2) throw ParameterError("lifshitz experiment: need >= 2 realizations");
    if (!(window_lo < window_hi))
        throw ParameterError("lifshitz experiment: invalid window");

    ModelParameters p = params;
    p.density = 1.0;
    p.particle_number = static_cast<std::int64_t>(std::llround(box_length));
    if (std::fabs(p.box_length() - box_length) > 1e-9 * box_length) {
        // non-integer box: encode through the density instead
        p.particle_number = 1;
        p.density = 1.0 / box_length;
    }

    const auto curve = ensemble_ids(p, grid, realizations, opt.seed, opt.threads);
    const auto fit = lifshitz_fit(curve, window_lo, window_hi);

    // jackknife over realizations for the slope uncertainty
    std::vector<std::vector<double>> per_real(static_cast<std::size_t>(realizations));
    {
        const double L = p.box_length();
        parallel_for(
            static_cast<std::size_t>(realizations),
            [&](std::size_t r) {
                const auto config = sample_configuration(L, p.intensity, opt.seed, r);
                const auto spectrum = eigenvalues(
                    config, p.strength,
                    LevelRequest::below(grid.back() * (1.0 + 1e-12) + 1e-300));
                std::vector<double> vals;
                vals.reserve(grid.size());
                for (double e : grid) {
                    const auto count = std::lower_bound(spectrum.eigenvalues.begin(),
                                                        spectrum.eigenvalues.end(), e) -
                                       spectrum.eigenvalues.begin();
                    vals.push_back(static_cast<double>(count) / L);
                }
                per_real[r] = std::move(vals);
            },
            opt.threads);
    }
    std::vector<double> jack_slopes;
    jack_slopes.reserve(static_cast<std::size_t>(realizations));
    const double rn = static_cast<double>(realizations);
    for (std::int64_t drop = 0; drop < realizations; ++drop) {
        IdsCurve loo;
        loo.energies = grid;
        loo.realizations_used = realizations - 1;
        loo.stderrs.assign(grid.size(), 0.0);
        loo.values.assign(grid.size(), 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double s = 0.0;
            for (std::int64_t r = 0; r < realizations; ++r)
                if (r != drop) s += per_real[static_cast<std::size_t>(r)][i];
            loo.values[i] = s / (rn - 1.0);
        }
        try {
            jack_slopes.push_back(lifshitz_fit(loo, window_lo, window_hi).slope);
        } catch (const FitError&) {
            jack_slopes.push_back(fit.slope);
        }
    }
    double jack_mean = pairwise_sum(jack_slopes) / rn;
    double var = 0.0;
    for (double s : jack_slopes) var += (s - jack_mean) * (s - jack_mean);
    const double slope_stderr = std::sqrt(std::max(0.0, var * (rn - 1.0) / rn));

    ExperimentReport report;
    report.experiment = "lifshitz";
    report.metadata = {{"params", detail::params_json(params)},
                       {"seed", opt.seed},
                       {"R", realizations},
                       {"L", box_length},
                       {"window", {window_lo, window_hi}}};
    const std::int64_t n_tag = p.particle_number;
    report.add(n_tag, box_length, "slope", fit.slope, slope_stderr, realizations);
    report.add(n_tag, box_length, "slope_over_pi_nu",
               fit.slope / (kPi * params.intensity),
               slope_stderr / (kPi * params.intensity), realizations);
    report.add(n_tag, box_length, "intercept", fit.intercept, 0.0, realizations);
    report.add(n_tag, box_length, "r2", fit.r_squared, 0.0, realizations);
    report.add(n_tag, box_length, "points_used", static_cast<double>(fit.points_used), 0.0,
               realizations);
    report.add(n_tag, box_length, "window_lo", window_lo, 0.0, realizations);
    report.add(n_tag, box_length, "window_hi", window_hi, 0.0, realizations);
    return report;
}

}  // namespace lsm

#endif  // LSM_EXPERIMENTS_HPP
