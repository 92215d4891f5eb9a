#ifndef LSM_IDS_HPP
#define LSM_IDS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/parallel.hpp"
#include "lsm/quadrature.hpp"
#include "lsm/sampler.hpp"
#include "lsm/spectrum.hpp"
#include "lsm/thermo.hpp"

namespace lsm {

// Integrated density of states: finite-volume counts, ensemble averages,
// the closed-form gamma = infinity reference, Lifshitz-tail fits, the
// critical density rho_c(beta), and the subcritical chemical-potential
// limit mu_hat. All spectral integrals use the integration-by-parts form
// (the artifact has N^I, never a density).

struct IdsCurve {
    std::vector<double> energies;  // increasing grid
    std::vector<double> values;    // states per unit length
    std::vector<double> stderrs;
    std::int64_t realizations_used = 0;
};

// N^I(E) = |{j : E_j < E}| / L on the given grid (strict inequality:
// left-continuity convention).
inline IdsCurve finite_ids(const Spectrum& spectrum, double box_length,
                           const std::vector<double>& grid) {
    if (grid.empty()) throw ParameterError("finite_ids: empty grid");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw ParameterError("finite_ids: grid must be increasing");
    if (!spectrum.complete_below_cutoff || spectrum.energy_cutoff < grid.back())
        throw InsufficientSpectrumError("finite_ids: grid exceeds the spectrum cutoff");
    IdsCurve curve;
    curve.energies = grid;
    curve.values.reserve(grid.size());
    curve.stderrs.assign(grid.size(), 0.0);
    curve.realizations_used = 1;
    for (double e : grid) {
        const auto count = std::lower_bound(spectrum.eigenvalues.begin(),
                                            spectrum.eigenvalues.end(), e) -
                           spectrum.eigenvalues.begin();
        const double v = static_cast<double>(count) / box_length;
        if (e > 0.0 && v > std::sqrt(e) / kPi * (1.0 + 1e-12))
            throw Error("finite_ids: free-operator bound violated");
        curve.values.push_back(v);
    }
    return curve;
}

// Pointwise ensemble mean and standard error over independent realizations.
// Realizations are computed in parallel but reduced in index order, so the
// curve is bit-identical for any thread count. Boxes beyond the atom
// threshold use the partitioned solver for their counting functions.
inline IdsCurve ensemble_ids(const ModelParameters& params, const std::vector<double>& grid,
                             std::int64_t realizations, std::uint64_t seed,
                             unsigned threads = 0,
                             std::int64_t partition_atom_threshold = 12000) {
    params.validate();
    if (realizations < 2) throw ParameterError("ensemble_ids: need at least 2 realizations");
    if (grid.empty() || !std::is_sorted(grid.begin(), grid.end()))
        throw ParameterError("ensemble_ids: grid must be nonempty and increasing");
    const double L = params.box_length();
    const double top = grid.back() * (1.0 + 1e-12) + 1e-300;
    const bool partitioned =
        params.intensity * L > static_cast<double>(partition_atom_threshold);

    std::vector<std::vector<double>> per_real(static_cast<std::size_t>(realizations));
    auto one_realization = [&](std::size_t r, unsigned inner_threads) {
        const auto config = sample_configuration(L, params.intensity, seed, r);
        std::vector<double> vals;
        vals.reserve(grid.size());
        if (partitioned) {
            PartitionOptions popt;
            popt.threads = inner_threads;
            const auto spectrum = partitioned_spectrum(config, params.strength, top, popt);
            for (double e : grid)
                vals.push_back(static_cast<double>(spectrum.count_below(e)) / L);
        } else {
            const auto spectrum =
                eigenvalues(config, params.strength, LevelRequest::below(top));
            for (double e : grid) {
                const auto count = std::lower_bound(spectrum.eigenvalues.begin(),
                                                    spectrum.eigenvalues.end(), e) -
                                   spectrum.eigenvalues.begin();
                vals.push_back(static_cast<double>(count) / L);
            }
        }
        per_real[r] = std::move(vals);
    };
    if (partitioned) {
        for (std::int64_t r = 0; r < realizations; ++r)
            one_realization(static_cast<std::size_t>(r), threads);
    } else {
        parallel_for(
            static_cast<std::size_t>(realizations),
            [&](std::size_t r) { one_realization(r, 1); }, threads);
    }

    IdsCurve curve;
    curve.energies = grid;
    curve.realizations_used = realizations;
    curve.values.reserve(grid.size());
    curve.stderrs.reserve(grid.size());
    std::vector<double> column(static_cast<std::size_t>(realizations));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t r = 0; r < per_real.size(); ++r) column[r] = per_real[r][i];
        const auto ms = mean_stderr(column);
        curve.values.push_back(ms.mean);
        curve.stderrs.push_back(ms.stderr_);
    }
    return curve;
}

// Closed-form IDS of the gamma = infinity model: Poisson gaps cut by
// Dirichlet walls give nu * x / (1 - x) states per length, x = e^{-nu pi/sqrt(E)}.
inline double limiting_ids_infinite_gamma(double energy, double intensity) {
    if (!(intensity > 0.0))
        throw ParameterError("limiting_ids_infinite_gamma: intensity must be > 0");
    if (!(energy > 0.0)) return 0.0;
    const double x = std::exp(-intensity * kPi / std::sqrt(energy));
    return intensity * x / (1.0 - x);
}

struct LifshitzFit {
    double slope = 0.0;      // estimates pi * nu
    double intercept = 0.0;  // ln prefactor
    double r_squared = 0.0;
    std::int64_t points_used = 0;
};

// Least squares of ln(values) against -E^{-1/2} over the window.
inline LifshitzFit lifshitz_fit(const IdsCurve& curve, double window_lo, double window_hi) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.energies.size(); ++i) {
        const double e = curve.energies[i];
        if (e < window_lo || e > window_hi) continue;
        if (!(curve.values[i] > 0.0) || !(e > 0.0)) continue;
        xs.push_back(-1.0 / std::sqrt(e));
        ys.push_back(std::log(curve.values[i]));
    }
    if (xs.size() < 5)
        throw FitError("lifshitz_fit: fewer than 5 positive points in the window");
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw FitError("lifshitz_fit: degenerate abscissa");
    LifshitzFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.points_used = static_cast<std::int64_t>(xs.size());
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
            ss_res += r * r;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    } else {
        fit.r_squared = 0.0;  // constant data carries no tail signal
    }
    return fit;
}

// Limiting-IDS reference for spectral integrals: either the closed-form
// gamma = infinity curve or an empirical ensemble curve with a fitted
// Lifshitz extension below its grid and sqrt growth above.
class IdsReference {
  public:
    static IdsReference infinite_gamma(double intensity) {
        if (!(intensity > 0.0))
            throw ParameterError("IdsReference: intensity must be > 0");
        IdsReference ref;
        ref.intensity_ = intensity;
        return ref;
    }

    static IdsReference empirical(IdsCurve curve) {
        IdsReference ref;
        for (std::size_t i = 0; i < curve.energies.size(); ++i) {
            const double e = curve.energies[i];
            const double v = curve.values[i];
            if (v < 0.0 || (e > 0.0 && v > std::sqrt(e) / kPi * (1.0 + 1e-9)))
                throw ValidationError("IdsReference: curve violates the free bound");
            if (i > 0 && curve.values[i] < curve.values[i - 1])
                curve.values[i] = curve.values[i - 1];  // enforce monotonicity
        }
        // fitted tail below the first decades of positive values
        std::size_t first_pos = 0;
        while (first_pos < curve.values.size() && curve.values[first_pos] <= 0.0)
            ++first_pos;
        if (first_pos == curve.values.size()) {
            // identically zero reference: an empty spectrum measure
            ref.has_tail_fit_ = false;
            ref.curve_ = std::move(curve);
            ref.build_slopes();
            return ref;
        }
        const double v_lo = curve.values[first_pos];
        const double v_hi_target = std::min(0.05, v_lo * 100.0);
        double window_hi = curve.energies.back();
        for (std::size_t i = first_pos; i < curve.values.size(); ++i) {
            if (curve.values[i] > v_hi_target) {
                window_hi = curve.energies[i];
                break;
            }
        }
        try {
            const auto fit =
                lifshitz_fit(curve, curve.energies[first_pos] * (1.0 - 1e-12), window_hi);
            ref.tail_slope_ = fit.slope;
            ref.tail_intercept_ = fit.intercept;
            ref.has_tail_fit_ = true;
        } catch (const FitError&) {
            ref.has_tail_fit_ = false;  // zero below the grid
        }
        ref.curve_ = std::move(curve);
        ref.build_slopes();
        return ref;
    }

    bool is_closed_form() const { return curve_.energies.empty(); }

    double value(double energy) const {
        if (!(energy > 0.0)) return 0.0;
        if (is_closed_form()) return limiting_ids_infinite_gamma(energy, intensity_);
        const auto& es = curve_.energies;
        const auto& vs = curve_.values;
        if (energy <= es.front()) {
            if (!has_tail_fit_) return 0.0;
            const double v =
                std::exp(tail_intercept_ - tail_slope_ / std::sqrt(energy));
            return std::min(v, vs.front());
        }
        if (energy >= es.back()) {
            // sqrt continuation consistent with the free-operator growth
            return vs.back() * std::sqrt(energy / es.back());
        }
        // monotone cubic Hermite: linear chords bias spectral integrals
        // noticeably on log grids
        const auto it = std::upper_bound(es.begin(), es.end(), energy);
        const std::size_t i = static_cast<std::size_t>(it - es.begin()) - 1;
        const double h = es[i + 1] - es[i];
        const double t = (energy - es[i]) / h;
        const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        const double h10 = t * (1.0 - t) * (1.0 - t);
        const double h01 = t * t * (3.0 - 2.0 * t);
        const double h11 = t * t * (t - 1.0);
        return h00 * vs[i] + h10 * h * slopes_[i] + h01 * vs[i + 1] +
               h11 * h * slopes_[i + 1];
    }

  private:
    // Fritsch-Carlson monotone slopes
    void build_slopes() {
        const auto& es = curve_.energies;
        const auto& vs = curve_.values;
        const std::size_t n = es.size();
        slopes_.assign(n, 0.0);
        if (n < 2) return;
        std::vector<double> secant(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            secant[i] = (vs[i + 1] - vs[i]) / (es[i + 1] - es[i]);
        slopes_[0] = secant[0];
        slopes_[n - 1] = secant[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (secant[i - 1] <= 0.0 || secant[i] <= 0.0) {
                slopes_[i] = 0.0;
            } else {
                const double h0 = es[i] - es[i - 1];
                const double h1 = es[i + 1] - es[i];
                const double w1 = 2.0 * h1 + h0;
                const double w2 = h1 + 2.0 * h0;
                slopes_[i] = (w1 + w2) / (w1 / secant[i - 1] + w2 / secant[i]);
            }
        }
    }

    double intensity_ = 0.0;
    IdsCurve curve_;
    std::vector<double> slopes_;
    double tail_slope_ = 0.0, tail_intercept_ = 0.0;
    bool has_tail_fit_ = false;
};

struct CriticalDensityResult {
    double value = 0.0;
    double error = 0.0;
    bool divergent = false;
};

namespace detail {

// d(-B(E - mu))/dE = beta e^{beta(E-mu)} B(E-mu)^2, the Stieltjes weight of
// the integration-by-parts form. The small-argument branch keeps the weight
// finite down to denormal energies.
inline double bose_weight(double energy, double mu, double beta) {
    const double x = beta * (energy - mu);
    if (x <= 0.0) return 0.0;
    if (x > 745.0) return 0.0;
    if (x < 1e-8) {
        const double d = energy - mu;
        return 1.0 / (beta * d * d);
    }
    const double em = std::expm1(x);
    return beta * (em + 1.0) / (em * em);
}

// integral of ref(E) * bose_weight(E - mu) over (0, infinity) with a dyadic
// probe of the E -> 0 end. The probe both integrates the Lifshitz region
// and detects non-integrable references (the 1D free gas).
inline CriticalDensityResult bose_integral(const IdsReference& ref, double beta, double mu) {
    CriticalDensityResult result;
    auto integrand = [&](double e) {
        const double v = ref.value(e);
        if (v == 0.0) return 0.0;  // avoid 0 * inf at denormal energies
        return v * bose_weight(e, mu, beta);
    };

    const double split = std::max(mu, 0.0) + 1.0 / beta;

    // upper part: adaptive out to exponential decay
    double e_max = split + 10.0 / beta;
    while (e_max < split + 800.0 / beta &&
           integrand(e_max) * (e_max - split) > 1e-18 * std::max(result.value, 1e-300))
        e_max *= 1.6;
    {
        const auto q = integrate(integrand, split, e_max, 1e-14, 1e-9);
        result.value += q.value;
        result.error += q.error + integrand(e_max) * e_max;
    }

    // low part: dyadic shrinking intervals with a Cauchy test. Any physical
    // reference has vanished long before E = 1e-30; a divergent one triples
    // its contributions well before that floor.
    double upper = split;
    double prev = -1.0;
    int non_decreasing = 0;
    for (int k = 0; k < 200; ++k) {
        const double lower = 0.5 * upper;
        const auto q = integrate(integrand, lower, upper, 1e-16, 1e-8);
        if (!std::isfinite(q.value)) {
            result.divergent = true;
            return result;
        }
        result.value += q.value;
        result.error += q.error;
        if (prev >= 0.0 && q.value >= 0.98 * prev && q.value > 1e-14 * result.value) {
            if (++non_decreasing >= 4) {
                result.divergent = true;
                return result;
            }
        } else if (q.value < prev) {
            non_decreasing = 0;
        }
        if (q.value <= 1e-16 * result.value || lower < 1e-30) {
            result.error += q.value;  // remainder bound
            break;
        }
        prev = q.value;
        upper = lower;
    }
    return result;
}

}  // namespace detail

// rho_c(beta) = int N^I(E) beta e^{beta E} B(E)^2 dE. Reports divergence
// for references without a Lifshitz-suppressed bottom (e.g. the free IDS).
inline CriticalDensityResult critical_density(const IdsReference& reference, double beta) {
    if (!(beta > 0.0)) throw ParameterError("critical_density: beta must be > 0");
    return detail::bose_integral(reference, beta, 0.0);
}

// Unique mu_hat < 0 with int B(E - mu_hat) dN = rho, for rho below the
// critical density of the reference.
inline double solve_mu_hat(double rho, double beta, const IdsReference& reference) {
    if (!(rho > 0.0)) throw ParameterError("solve_mu_hat: rho must be > 0");
    if (!(beta > 0.0)) throw ParameterError("solve_mu_hat: beta must be > 0");
    const auto rc = critical_density(reference, beta);
    if (rc.divergent)
        throw ValidationError("solve_mu_hat: reference has no finite critical density");
    if (!(rho < rc.value))
        throw DomainError("solve_mu_hat: rho >= rho_c, no subcritical solution");

    auto density_at = [&](double mu) {
        return detail::bose_integral(reference, beta, mu).value;
    };

    double hi = -1e-12 / beta;
    for (int it = 0; it < 60 && density_at(hi) <= rho; ++it) hi *= 0.5;
    double lo = -1.0 / beta;
    for (int it = 0; it < 200 && density_at(lo) >= rho; ++it) lo *= 2.0;
    if (!(density_at(lo) < rho && density_at(hi) > rho))
        throw Error("solve_mu_hat: bracketing failed");

    double f_lo = density_at(lo) - rho;
    double f_hi = density_at(hi) - rho;
    for (int it = 0; it < 200; ++it) {
        double prop = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        const double mid = 0.5 * (lo + hi);
        if (!(prop > lo && prop < hi)) prop = mid;
        if (it % 3 == 2) prop = mid;
        const double f = density_at(prop) - rho;
        if (std::fabs(f) <= 1e-10 * rho) return prop;
        if (f < 0.0) {
            lo = prop;
            f_lo = f;
        } else {
            hi = prop;
            f_hi = f;
        }
        if (hi - lo <= 1e-15 * std::fabs(lo)) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace lsm

#endif  // LSM_IDS_HPP
