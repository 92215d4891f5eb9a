#ifndef LSM_THERMO_HPP
#define LSM_THERMO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/partition.hpp"
#include "lsm/quadrature.hpp"
#include "lsm/spectrum.hpp"

namespace lsm {

// Grand-canonical thermodynamics of one realization: Bose occupation
// kernel, chemical-potential solve, occupation numbers, condensate
// diagnostics, heat trace.

// B(E) = (e^{beta E} - 1)^{-1} for E > 0, else 0. 1/expm1 is exact in both
// the small-argument regime (1/(beta E) - 1/2 + ...) and under overflow.
inline double bose(double energy, double beta) {
    if (!(beta > 0.0)) throw ParameterError("bose: beta must be > 0");
    if (!(energy > 0.0)) return 0.0;
    return 1.0 / std::expm1(beta * energy);
}

struct ThermoState {
    double mu = 0.0;
    std::vector<double> occupations;
    double total = 0.0;
    std::vector<std::pair<double, double>> condensate_fraction_eps;  // (eps, fraction)
};

namespace detail {

// Occupation tail above the stored spectrum, bounded by the free ladder
// E_j >= (j pi / L)^2 (levels only move up with gamma). Midpoint integral
// enclosure between consecutive index shifts.
struct FreeLadderTail {
    double box_length = 0.0;
    std::int64_t levels_used = 0;
    double beta = 0.0;

    double sum_from(double index_offset, double mu) const {
        const double k_start =
            (static_cast<double>(levels_used) + index_offset) * kPi / box_length;
        const double e_start = k_start * k_start;
        if (beta * (e_start - mu) > 745.0) return 0.0;
        const double k_max = std::sqrt(std::max(e_start, mu) + 50.0 / beta);
        auto integrand = [this, mu](double k) {
            const double x = beta * (k * k - mu);
            return x > 745.0 ? 0.0 : 1.0 / std::expm1(x);
        };
        const auto q = integrate(integrand, k_start, k_max, 1e-16, 1e-12);
        return (box_length / kPi) * q.value;
    }

    double value(double mu) const { return sum_from(0.5, mu); }

    // rigorous two-sided enclosure half-width
    double error_bound(double mu) const {
        const double lower = sum_from(1.0, mu);
        const double upper = sum_from(0.0, mu);
        return 0.5 * (upper - lower);
    }
};

// Uniform access to plain and partitioned spectra for the thermo solves.
struct SpectrumSource {
    const Spectrum* plain = nullptr;
    const PartitionedSpectrum* parted = nullptr;
    double box_length = 0.0;

    double ground() const {
        if (plain) return plain->eigenvalues.front();
        return parted->head_levels.front();
    }
    std::int64_t total_count() const {
        if (plain) return static_cast<std::int64_t>(plain->eigenvalues.size());
        return parted->total_count();
    }
    bool empty() const {
        if (plain) return plain->eigenvalues.empty();
        return parted->head_levels.empty() && parted->bulk_count == 0;
    }
    double cutoff() const { return plain ? plain->energy_cutoff : parted->energy_cutoff; }

    template <typename F>
    double sum(F&& f) const {
        if (plain) {
            double s = 0.0;
            for (double e : plain->eigenvalues) s += f(e);
            return s;
        }
        double s = 0.0;
        for (double e : parted->head_levels) s += f(e);
        return s + parted->bulk_sum(f);
    }
};

inline double solve_mu_impl(const SpectrumSource& src, double beta, std::int64_t n_particles,
                            const char* caller) {
    if (!(beta > 0.0)) throw ParameterError("solve_chemical_potential: beta must be > 0");
    if (n_particles < 1)
        throw ParameterError("solve_chemical_potential: particle number must be >= 1");
    if (src.empty())
        throw InsufficientSpectrumError(std::string(caller) + ": empty spectrum");

    const double e1 = src.ground();
    const double n = static_cast<double>(n_particles);
    const FreeLadderTail tail{src.box_length, src.total_count(), beta};

    // mu_hi pins the ground occupation alone at N; mu_lo caps every stored
    // level's occupation at N / (4 (J + N)).
    const double mu_hi = e1 - std::log1p(1.0 / n) / beta;
    const double mu_lo =
        e1 - std::log1p(4.0 * (static_cast<double>(src.total_count()) + n)) / beta;

    const double tail_budget = 1e-10 * n;
    if (tail.value(mu_hi) + tail.error_bound(mu_hi) > tail_budget)
        throw InsufficientSpectrumError(std::string(caller) +
                                        ": spectrum truncated too low for the tail budget");

    auto excess = [&](double mu) {
        const double s = src.sum([&](double e) {
            const double x = beta * (e - mu);
            return x > 745.0 ? 0.0 : 1.0 / std::expm1(x);
        });
        return s + tail.value(mu) - n;
    };

    double lo = mu_lo, hi = mu_hi;
    double f_lo = excess(lo);
    double f_hi = excess(hi);
    // rounding can leave the analytic brackets a few ulps short
    for (int it = 0; it < 120 && f_hi < 0.0; ++it) {
        hi = e1 - 0.5 * (e1 - hi);
        f_hi = excess(hi);
    }
    for (int it = 0; it < 20 && f_lo > 0.0; ++it) {
        lo -= (10.0 + (e1 - lo)) / beta;
        f_lo = excess(lo);
    }
    if (f_lo > 0.0) throw Error("solve_chemical_potential: bracket failure (low)");
    if (f_hi < 0.0) throw Error("solve_chemical_potential: bracket failure (high)");

    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        // secant proposal, safeguarded by bisection
        double prop = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        const double mid = 0.5 * (lo + hi);
        if (!(prop > lo && prop < hi)) prop = mid;
        if (it % 3 == 2) prop = mid;  // guarantee bracket shrinkage
        const double f_prop = excess(prop);
        if (std::fabs(f_prop) <= 1e-10 * n) return prop;
        if (f_prop < 0.0) {
            lo = prop;
            f_lo = f_prop;
        } else {
            hi = prop;
            f_hi = f_prop;
        }
        mu = 0.5 * (lo + hi);
        if (hi - lo <= 1e-16 * std::max(1.0, std::fabs(mu))) break;
    }
    return mu;
}

}  // namespace detail

// Unique mu < E_1 with sum_j B(E_j - mu) + tail(mu) = N, to relative
// tolerance 1e-10. The tail models all levels above the stored cutoff with
// the free ladder and must stay below 1e-10 N.
inline double solve_chemical_potential(const Spectrum& spectrum, double beta,
                                       std::int64_t n_particles, double box_length) {
    if (!spectrum.complete_below_cutoff)
        throw InsufficientSpectrumError(
            "solve_chemical_potential: spectrum not complete below its cutoff");
    detail::SpectrumSource src;
    src.plain = &spectrum;
    src.box_length = box_length;
    return detail::solve_mu_impl(src, beta, n_particles, "solve_chemical_potential");
}

inline double solve_chemical_potential(const PartitionedSpectrum& spectrum, double beta,
                                       std::int64_t n_particles) {
    detail::SpectrumSource src;
    src.parted = &spectrum;
    src.box_length = spectrum.box_length;
    return detail::solve_mu_impl(src, beta, n_particles, "solve_chemical_potential");
}

// Total stored occupation plus tail at a given mu (sum-rule diagnostics).
inline double total_occupation(const Spectrum& spectrum, double mu, double beta,
                               double box_length) {
    detail::SpectrumSource src;
    src.plain = &spectrum;
    src.box_length = box_length;
    const detail::FreeLadderTail tail{box_length, src.total_count(), beta};
    return src.sum([&](double e) { return bose(e - mu, beta); }) + tail.value(mu);
}

inline double total_occupation(const PartitionedSpectrum& spectrum, double mu, double beta) {
    detail::SpectrumSource src;
    src.parted = &spectrum;
    src.box_length = spectrum.box_length;
    const detail::FreeLadderTail tail{spectrum.box_length, src.total_count(), beta};
    return src.sum([&](double e) { return bose(e - mu, beta); }) + tail.value(mu);
}

// n_j = B(E_j - mu) per stored level.
inline std::vector<double> occupations(const Spectrum& spectrum, double mu, double beta) {
    if (spectrum.eigenvalues.empty()) return {};
    if (!(mu < spectrum.eigenvalues.front()))
        throw DomainError("occupations: mu must lie below the ground level");
    std::vector<double> n;
    n.reserve(spectrum.eigenvalues.size());
    for (double e : spectrum.eigenvalues) n.push_back(bose(e - mu, beta));
    return n;
}

struct CondensateProfile {
    std::vector<std::pair<double, double>> fractions;        // (epsilon, window fraction)
    std::vector<std::pair<std::int64_t, double>> level_fractions;  // (j, n_j / N)
};

// Window fractions (1/N) sum_{E_j - E_1 <= eps} n_j plus per-level
// fractions for the requested indices.
inline CondensateProfile condensate_profile(const std::vector<double>& levels,
                                            const std::vector<double>& occupation,
                                            std::int64_t n_particles,
                                            const std::vector<double>& epsilons,
                                            const std::vector<std::int64_t>& level_indices = {}) {
    if (levels.size() != occupation.size())
        throw ParameterError("condensate_profile: level/occupation size mismatch");
    CondensateProfile profile;
    if (levels.empty()) return profile;
    const double e1 = levels.front();
    const double n = static_cast<double>(n_particles);
    std::vector<double> prefix(levels.size() + 1, 0.0);
    for (std::size_t i = 0; i < levels.size(); ++i) prefix[i + 1] = prefix[i] + occupation[i];
    for (double eps : epsilons) {
        const auto it = std::upper_bound(levels.begin(), levels.end(), e1 + eps);
        const std::size_t idx = static_cast<std::size_t>(it - levels.begin());
        profile.fractions.emplace_back(eps, prefix[idx] / n);
    }
    for (std::int64_t j : level_indices) {
        if (j >= 1 && j <= static_cast<std::int64_t>(levels.size()))
            profile.level_fractions.emplace_back(j, occupation[static_cast<std::size_t>(j - 1)] / n);
    }
    return profile;
}

struct HeatTrace {
    double value = 0.0;       // L^{-1} sum_j exp(-beta E_j) including tail midpoint
    double tail_bound = 0.0;  // enclosure half-width of the tail
};

namespace detail {

inline HeatTrace heat_trace_impl(const SpectrumSource& src, double beta) {
    if (!(beta > 0.0)) throw ParameterError("heat_trace: beta must be > 0");
    const double L = src.box_length;
    const double body = src.sum([&](double e) {
        const double x = beta * e;
        return x > 745.0 ? 0.0 : std::exp(-x);
    });
    // free-ladder tail of exp(-beta E); erfc form of the integral enclosure
    const std::int64_t j_used = src.total_count();
    auto tail_from = [&](double offset) {
        const double k0 = (static_cast<double>(j_used) + offset) * kPi / L;
        return 0.5 * std::sqrt(kPi / beta) * std::erfc(std::sqrt(beta) * k0) * (L / kPi);
    };
    const double t_mid = tail_from(0.5);
    const double t_err = 0.5 * (tail_from(0.0) - tail_from(1.0));
    const double total = body + t_mid;
    if (total > 0.0 && (tail_from(0.0) > 1e-12 * total))
        throw InsufficientSpectrumError("heat_trace: spectrum truncated too low");
    HeatTrace ht;
    ht.value = total / L;
    ht.tail_bound = t_err / L;
    return ht;
}

}  // namespace detail

// phi(beta) = L^{-1} sum_j exp(-beta E_j); bounded by (4 pi beta)^{-1/2} in
// the box-size limit.
inline HeatTrace heat_trace(const Spectrum& spectrum, double beta, double box_length) {
    if (!spectrum.complete_below_cutoff)
        throw InsufficientSpectrumError("heat_trace: spectrum not complete below cutoff");
    detail::SpectrumSource src;
    src.plain = &spectrum;
    src.box_length = box_length;
    return detail::heat_trace_impl(src, beta);
}

inline HeatTrace heat_trace(const PartitionedSpectrum& spectrum, double beta) {
    detail::SpectrumSource src;
    src.parted = &spectrum;
    src.box_length = spectrum.box_length;
    return detail::heat_trace_impl(src, beta);
}

// Initial spectrum cutoff estimate for the mu-solve tail budget; verified
// and enlarged by the callers after the solve.
inline double suggested_cutoff(double box_length, std::int64_t n_particles, double beta) {
    double x = 20.0 / beta;
    for (int it = 0; it < 4; ++it) {
        const double rhs = (box_length / kPi) /
                           (1e-11 * static_cast<double>(n_particles) * 2.0 * beta *
                            std::sqrt(std::max(x, 1.0)));
        x = std::log(std::max(rhs, 10.0)) / beta;
    }
    return std::max(8.0 / beta, x / 0.7);
}

}  // namespace lsm

#endif  // LSM_THERMO_HPP
