#ifndef LSM_SPECTRUM_HPP
#define LSM_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/sampler.hpp"

namespace lsm {

// Exact Dirichlet spectrum of -d^2/dx^2 + gamma * sum_j delta(. - x_j) on
// the box, computed by analytic propagation of the scaled Pruefer phase
//     phi = r sin(theta),   phi' = r k cos(theta),   k = sqrt(E).
// Free intervals rotate theta by exactly k*ell; a delta kick shifts
// cot(theta) by gamma/k inside the same branch. Eigenvalue counting is
// Sturm oscillation: floor(theta_final / pi) after shooting from the left
// wall. Counting is exact, so bisection on it can never skip a level.

struct Spectrum {
    std::vector<double> eigenvalues;  // sorted, strictly positive
    double energy_cutoff = 0.0;
    bool complete_below_cutoff = false;
};

// Pruefer phase split as theta = branch * pi + frac, frac in [0, pi).
// The branch is tracked incrementally from analytic phase increments,
// never by comparing an accumulated float against multiples of pi.
struct PhaseState {
    std::int64_t branch = 0;
    double frac = 0.0;

    double theta() const { return static_cast<double>(branch) * kPi + frac; }
};

namespace detail {

// pi = kPi + kPiTail to double-double accuracy.
inline constexpr double kPiTail = 1.2246467991473531772e-16;
inline constexpr double kHalfPiHi = 1.5707963267948966e+00;
inline constexpr double kHalfPiLo = 6.123233995736766036e-17;

// sin/cos on [-pi/4, pi/4] by minimax polynomials; inlineable so the hot
// propagation loops vectorize.
inline double sin_poly(double x) {
    const double z = x * x;
    double p = 1.58962301576546568060e-10;
    p = p * z - 2.50507477628578072866e-8;
    p = p * z + 2.75573136213857245213e-6;
    p = p * z - 1.98412698295895385996e-4;
    p = p * z + 8.33333333332211858878e-3;
    p = p * z - 1.66666666666666307295e-1;
    return x + x * z * p;
}

inline double cos_poly(double x) {
    const double z = x * x;
    double p = -1.13585365213876817300e-11;
    p = p * z + 2.08757008419747316778e-9;
    p = p * z - 2.75573141792967388112e-7;
    p = p * z + 2.48015872888517179954e-5;
    p = p * z - 1.38888888888730564116e-3;
    p = p * z + 4.16666666666665929218e-2;
    return 1.0 - 0.5 * z + z * z * p;
}

// sin and cos for r in [0, pi). Branchless so the batched loops vectorize.
inline void sincos_in_pi(double r, double& s, double& c) {
    const double q = std::floor(r * (2.0 / kPi) + 0.5);  // 0, 1, or 2
    const double x = (r - q * kHalfPiHi) - q * kHalfPiLo;
    const double sp = sin_poly(x);
    const double cp = cos_poly(x);
    const double is0 = q == 0.0 ? 1.0 : 0.0;
    const double is1 = q == 1.0 ? 1.0 : 0.0;
    const double is2 = 1.0 - is0 - is1;
    s = is0 * sp + is1 * cp - is2 * sp;
    c = is0 * cp - is1 * sp - is2 * cp;
}

// Splits a nonnegative rotation angle into (n, r) with angle = n*pi + r,
// r in [0, pi), using the two-part pi for the reduction.
inline void reduce_angle(double angle, double& n, double& r) {
    n = std::floor(angle * (1.0 / kPi));
    r = std::fma(-n, kPi, angle) - n * kPiTail;
    const double under = r < 0.0 ? 1.0 : 0.0;
    n -= under;
    r += under * kPi;
    const double over = r >= kPi ? 1.0 : 0.0;
    n += over;
    r -= over * kPi;
}

}  // namespace detail

// Free rotation across an atom-free interval of length ell: theta increases
// by exactly k*ell.
inline PhaseState propagate_phase_interval(PhaseState state, double k, double ell) {
    if (!(k > 0.0)) throw ParameterError("propagate_phase_interval: k must be > 0");
    if (!(ell >= 0.0)) throw ParameterError("propagate_phase_interval: ell must be >= 0");
    if (ell == 0.0) return state;
    double n, r;
    detail::reduce_angle(state.frac + k * ell, n, r);
    state.branch += static_cast<std::int64_t>(n);
    state.frac = r;
    return state;
}

// Derivative jump phi'(x+) - phi'(x-) = gamma * phi(x) maps to
// cot(theta_new) = cot(theta_old) + gamma/k within the same branch. A node
// at the atom (frac == 0) annihilates the kick.
inline PhaseState apply_delta_kick(PhaseState state, double k, double gamma) {
    if (!(k > 0.0)) throw ParameterError("apply_delta_kick: k must be > 0");
    if (!(gamma > 0.0)) throw ParameterError("apply_delta_kick: gamma must be > 0");
    if (state.frac == 0.0) return state;
    const double s = std::sin(state.frac);
    const double c = std::cos(state.frac);
    double f = std::atan2(s, c + (gamma / k) * s);
    if (f < 0.0) f += kPi;
    if (f >= kPi) f = std::nextafter(kPi, 0.0);
    state.frac = f;
    return state;
}

namespace detail {

// Batched shooting kernel. Propagates the (v, u) = (phi, phi'/k) direction
// for a batch of energies across the same gap/kick sequence, accumulating
// pi-crossings of theta. The inner loops over the batch are branchless and
// independent per energy, so they vectorize. Crossing counters are doubles
// (exact up to 2^53); the direction vector is renormalized every few gaps.
struct ShootingWorkspace {
    std::vector<double> k, g, v, u, dth, cross;

    void resize(std::size_t n) {
        k.resize(n);
        g.resize(n);
        v.resize(n);
        u.resize(n);
        dth.resize(n);
        cross.resize(n);
    }
};

template <bool WithTheta>
inline void propagate_batch(std::span<const double> gaps, double gamma,
                            std::span<const double> energies, ShootingWorkspace& ws,
                            std::span<std::int64_t> crossings,
                            std::span<double> frac_out = {},
                            std::span<double> dtheta_out = {}) {
    const std::size_t n = energies.size();
    ws.resize(n);
    double* __restrict kk = ws.k.data();
    double* __restrict gg = ws.g.data();
    double* __restrict vv = ws.v.data();
    double* __restrict uu = ws.u.data();
    double* __restrict dd = ws.dth.data();
    double* __restrict xx = ws.cross.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double k = std::sqrt(energies[i]);
        kk[i] = k;
        gg[i] = gamma / k;
        vv[i] = 0.0;
        uu[i] = 1.0;
        dd[i] = 0.0;
        xx[i] = 0.0;
    }

    const std::size_t n_gaps = gaps.size();
    for (std::size_t gi = 0; gi < n_gaps; ++gi) {
        const double ell = gaps[gi];
        const bool kick = gi + 1 < n_gaps;
        if (kick) {
#pragma GCC ivdep
            for (std::size_t i = 0; i < n; ++i) {
                double nfull, r;
                reduce_angle(kk[i] * ell, nfull, r);
                double s, c;
                sincos_in_pi(r, s, c);
                const double v0 = vv[i];
                const double u0 = uu[i];
                const double v1 = v0 * c + u0 * s;
                const double u1 = u0 * c - v0 * s;
                const double pos0 = v0 > 0.0 ? 1.0 : 0.0;
                const double neg0 = v0 < 0.0 ? 1.0 : 0.0;
                const double np1 = v1 <= 0.0 ? 1.0 : 0.0;
                const double nn1 = v1 >= 0.0 ? 1.0 : 0.0;
                xx[i] += nfull + pos0 * np1 + neg0 * nn1;
                const double u2 = u1 + gg[i] * v1;
                if constexpr (WithTheta) {
                    // d theta+/dE = [d theta/dE * m^2 + v^2 gamma/(2k^3)] / m'^2
                    const double m2 = v1 * v1 + u1 * u1;
                    const double m2new = v1 * v1 + u2 * u2;
                    const double k3 = kk[i] * kk[i] * kk[i];
                    dd[i] = ((dd[i] + 0.5 * ell / kk[i]) * m2 +
                             v1 * v1 * (gamma / (2.0 * k3))) /
                            m2new;
                } else {
                    (void)dd;
                }
                vv[i] = v1;
                uu[i] = u2;
            }
        } else {
#pragma GCC ivdep
            for (std::size_t i = 0; i < n; ++i) {
                double nfull, r;
                reduce_angle(kk[i] * ell, nfull, r);
                double s, c;
                sincos_in_pi(r, s, c);
                const double v0 = vv[i];
                const double u0 = uu[i];
                const double v1 = v0 * c + u0 * s;
                const double u1 = u0 * c - v0 * s;
                const double pos0 = v0 > 0.0 ? 1.0 : 0.0;
                const double neg0 = v0 < 0.0 ? 1.0 : 0.0;
                const double np1 = v1 <= 0.0 ? 1.0 : 0.0;
                const double nn1 = v1 >= 0.0 ? 1.0 : 0.0;
                xx[i] += nfull + pos0 * np1 + neg0 * nn1;
                if constexpr (WithTheta) dd[i] += 0.5 * ell / kk[i];
                vv[i] = v1;
                uu[i] = u1;
            }
        }
        if ((gi & 7u) == 7u || gi + 1 == n_gaps) {
#pragma GCC ivdep
            for (std::size_t i = 0; i < n; ++i) {
                const double sc = 1.0 / std::sqrt(vv[i] * vv[i] + uu[i] * uu[i]);
                vv[i] *= sc;
                uu[i] *= sc;
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        crossings[i] = static_cast<std::int64_t>(xx[i]);
    if constexpr (WithTheta) {
        for (std::size_t i = 0; i < n; ++i) {
            double f = std::atan2(vv[i], uu[i]);
            if (f < 0.0) f += kPi;
            if (f >= kPi) f -= kPi;
            if (f < 0.0) f = 0.0;
            frac_out[i] = f;
            dtheta_out[i] = dd[i];
        }
    }
}

inline std::int64_t crossings_to_count(std::int64_t crossings, double v_final) {
    // theta_final landing exactly on a multiple of pi resolves by the strict
    // convention E_j < E.
    std::int64_t c = crossings - (v_final == 0.0 ? 1 : 0);
    return c < 0 ? 0 : c;
}

}  // namespace detail

// |{j : E_j < energy}| by one phase propagation. Returns 0 for energy <= 0
// without propagating (the form is positive).
inline std::int64_t count_eigenvalues_below(std::span<const double> gaps, double gamma,
                                            double energy) {
    if (!(energy > 0.0)) return 0;
    detail::ShootingWorkspace ws;
    const double e[1] = {energy};
    std::int64_t cr[1];
    detail::propagate_batch<false>(gaps, gamma, std::span<const double>(e, 1), ws,
                                   std::span<std::int64_t>(cr, 1));
    return detail::crossings_to_count(cr[0], ws.v[0]);
}

inline std::int64_t count_eigenvalues_below(const ImpurityConfiguration& config,
                                            double gamma, double energy) {
    const std::vector<double> gaps = config.gaps();
    return count_eigenvalues_below(std::span<const double>(gaps), gamma, energy);
}

// Dirichlet Laplacian levels (j*pi/L)^2, j = 1..count.
inline std::vector<double> free_spectrum_oracle(double length, std::int64_t count) {
    if (!(length > 0.0)) throw ParameterError("free_spectrum_oracle: length must be > 0");
    if (count < 0) throw ParameterError("free_spectrum_oracle: count must be >= 0");
    std::vector<double> levels;
    levels.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = 1; j <= count; ++j) {
        const double kj = static_cast<double>(j) * kPi / length;
        levels.push_back(kj * kj);
    }
    return levels;
}

// gamma = infinity limit: the box decouples into Dirichlet subintervals cut
// at the atoms; levels are (k*pi/ell_i)^2 merged across gaps.
inline std::vector<double> dirichlet_union_oracle(std::span<const double> gaps,
                                                  std::int64_t count) {
    if (count < 0) throw ParameterError("dirichlet_union_oracle: count must be >= 0");
    struct Entry {
        double value;
        std::uint32_t gap;
        std::uint32_t index;
        bool operator>(const Entry& o) const { return value > o.value; }
    };
    std::vector<Entry> heap;
    heap.reserve(gaps.size());
    for (std::uint32_t i = 0; i < gaps.size(); ++i) {
        if (gaps[i] <= 0.0) throw ValidationError("dirichlet_union_oracle: empty gap");
        const double k1 = kPi / gaps[i];
        heap.push_back({k1 * k1, i, 1});
    }
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue(
        std::greater<Entry>(), std::move(heap));
    std::vector<double> levels;
    levels.reserve(static_cast<std::size_t>(count));
    while (static_cast<std::int64_t>(levels.size()) < count && !queue.empty()) {
        Entry e = queue.top();
        queue.pop();
        levels.push_back(e.value);
        const double kn = static_cast<double>(e.index + 1) * kPi / gaps[e.gap];
        queue.push({kn * kn, e.gap, e.index + 1});
    }
    return levels;
}

inline std::vector<double> dirichlet_union_oracle(const ImpurityConfiguration& config,
                                                  std::int64_t count) {
    const std::vector<double> gaps = config.gaps();
    return dirichlet_union_oracle(std::span<const double>(gaps), count);
}

// Independent oracle for a single atom at the center of the box: odd levels
// are free, (2n*pi/L)^2; even levels solve tan(k L/2) = -2k/gamma on
// successive branches, found by bracketed bisection.
inline std::vector<double> single_delta_oracle(double length, double gamma,
                                               std::int64_t count) {
    if (!(length > 0.0)) throw ParameterError("single_delta_oracle: length must be > 0");
    if (!(gamma > 0.0)) throw ParameterError("single_delta_oracle: gamma must be > 0");
    if (count < 0) throw ParameterError("single_delta_oracle: count must be >= 0");

    auto even_root = [length, gamma](std::int64_t n) {
        // k in ((2n-1)pi/L, 2n pi/L); h(k) = tan(kL/2) + 2k/gamma goes from
        // -inf to a positive value across the branch.
        double lo = (2.0 * static_cast<double>(n) - 1.0) * kPi / length;
        double hi = 2.0 * static_cast<double>(n) * kPi / length;
        lo = std::nextafter(lo, hi);
        hi = std::nextafter(hi, lo);
        auto h = [length, gamma](double k) {
            return std::tan(0.5 * k * length) + 2.0 * k / gamma;
        };
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (h(mid) < 0.0)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-15 * hi) break;
        }
        const double k = 0.5 * (lo + hi);
        return k * k;
    };

    std::vector<double> levels;
    levels.reserve(static_cast<std::size_t>(count));
    std::int64_t n_even = 1, n_odd = 1;
    double next_even = count > 0 ? even_root(1) : 0.0;
    double next_odd = [&] {
        const double k = 2.0 * kPi / length;
        return k * k;
    }();
    while (static_cast<std::int64_t>(levels.size()) < count) {
        if (next_even <= next_odd) {
            levels.push_back(next_even);
            ++n_even;
            next_even = even_root(n_even);
        } else {
            levels.push_back(next_odd);
            ++n_odd;
            const double k = 2.0 * static_cast<double>(n_odd) * kPi / length;
            next_odd = k * k;
        }
    }
    return levels;
}

struct LevelRequest {
    enum class Mode { FirstJ, BelowEnergy };
    Mode mode = Mode::FirstJ;
    std::int64_t count = 0;
    double cutoff = 0.0;

    static LevelRequest first(std::int64_t j) {
        LevelRequest r;
        r.mode = Mode::FirstJ;
        r.count = j;
        return r;
    }
    static LevelRequest below(double energy) {
        LevelRequest r;
        r.mode = Mode::BelowEnergy;
        r.cutoff = energy;
        return r;
    }
};

struct SolveOptions {
    double abs_tol = 1e-12;   // bracket width <= max(abs_tol, rel_tol * E)
    double rel_tol = 1e-10;
    std::int64_t level_cap = 10'000'000;
    // In the localized regime theta(E) is a staircase (flat plateaus with
    // exponentially narrow jumps at the eigenvalues), so Newton on the phase
    // degenerates to bisection; counting bisection is the default.
    bool use_newton = false;
    // Optional Boltzmann-graded extra tolerance min(coeff * e^{beta E},
    // 1e-3 max(1, E)) for bulk levels whose occupation weight is tiny; used
    // by the partitioned thermodynamics path, off by default.
    double graded_tol_coeff = 0.0;
    double graded_tol_beta = 0.0;
};

namespace detail {

// Lockstep bisection on the counting function with optional Newton polish.
// Every level keeps a rigorous bracket [lo_j, hi_j]; a sweep evaluates all
// pending queries in one batched propagation.
inline std::vector<double> solve_levels(std::span<const double> gaps, double gamma,
                                        std::vector<double> lo, std::vector<double> hi,
                                        const SolveOptions& opt) {
    const std::size_t n = lo.size();
    std::vector<double> query(n), result(n);
    std::vector<std::int64_t> cross(n);
    std::vector<std::uint8_t> done(n, 0);
    std::vector<std::size_t> active(n);
    ShootingWorkspace ws;

    auto tol_of = [&](double e) {
        double tol = std::max(opt.abs_tol, opt.rel_tol * e);
        if (opt.graded_tol_coeff > 0.0) {
            const double x = std::min(opt.graded_tol_beta * e, 500.0);
            const double graded =
                std::min(opt.graded_tol_coeff * std::exp(x), 1e-3 * std::max(1.0, e));
            tol = std::max(tol, graded);
        }
        return tol;
    };

    // One coarse scan, uniform in k, narrows every initial bracket to a grid
    // cell before any per-level bisection.
    if (n >= 16) {
        const double k_lo = std::sqrt(lo.front());
        const double k_hi = std::sqrt(hi.back());
        const std::size_t n_grid =
            std::min<std::size_t>(8192, std::max<std::size_t>(64, 3 * n));
        std::vector<double> grid_e(n_grid);
        std::vector<std::int64_t> grid_c(n_grid);
        for (std::size_t t = 0; t < n_grid; ++t) {
            const double k =
                k_lo + (k_hi - k_lo) * static_cast<double>(t) / static_cast<double>(n_grid - 1);
            grid_e[t] = k * k;
        }
        propagate_batch<false>(gaps, gamma, grid_e, ws, grid_c);
        for (std::size_t t = 0; t < n_grid; ++t)
            grid_c[t] = crossings_to_count(grid_c[t], ws.v[t]);
        for (std::size_t t = 1; t < n_grid; ++t)
            grid_c[t] = std::max(grid_c[t], grid_c[t - 1]);
        // first grid index with count >= j bounds level j from above
        std::size_t t = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t j = static_cast<std::int64_t>(i) + 1;
            while (t < n_grid && grid_c[t] < j) ++t;
            if (t >= n_grid) break;
            hi[i] = std::min(hi[i], grid_e[t]);
            if (t > 0) lo[i] = std::max(lo[i], grid_e[t - 1]);
            if (hi[i] <= lo[i]) hi[i] = std::nextafter(lo[i], 1e308);
        }
    }

    // Bisection until either converged or narrow enough for Newton. The
    // Newton phase is bracket-clamped, so it can start from coarse cells.
    const double newton_gate = opt.use_newton ? 5e-2 : 0.0;
    for (int sweep = 0; sweep < 120; ++sweep) {
        active.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) continue;
            const double width = hi[i] - lo[i];
            const double mid = 0.5 * (lo[i] + hi[i]);
            if (width <= tol_of(mid)) {
                result[i] = mid;
                done[i] = 1;
                continue;
            }
            if (opt.use_newton && width <= newton_gate * std::max(1.0, mid)) continue;
            active.push_back(i);
        }
        if (active.empty()) break;
        std::vector<double> mids(active.size());
        std::vector<std::int64_t> counts(active.size());
        for (std::size_t a = 0; a < active.size(); ++a)
            mids[a] = 0.5 * (lo[active[a]] + hi[active[a]]);
        propagate_batch<false>(gaps, gamma, mids, ws, counts);
        for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t i = active[a];
            const std::int64_t c = crossings_to_count(counts[a], ws.v[a]);
            if (c >= static_cast<std::int64_t>(i) + 1)
                hi[i] = mids[a];
            else
                lo[i] = mids[a];
        }
        bool all_waiting_newton = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) continue;
            const double width = hi[i] - lo[i];
            const double mid = 0.5 * (lo[i] + hi[i]);
            if (width > tol_of(mid) &&
                !(opt.use_newton && width <= newton_gate * std::max(1.0, mid))) {
                all_waiting_newton = false;
                break;
            }
        }
        if (all_waiting_newton) break;
    }

    if (opt.use_newton) {
        // Newton on theta(E) - j*pi = 0, safeguarded by the bracket. The
        // residual sign also tightens the bracket each sweep.
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < n; ++i) {
            if (!done[i]) {
                pending.push_back(i);
                query[i] = 0.5 * (lo[i] + hi[i]);
            }
        }
        std::vector<double> e_batch, frac, dth;
        std::vector<std::int64_t> cr;
        for (int sweep = 0; sweep < 40 && !pending.empty(); ++sweep) {
            e_batch.resize(pending.size());
            frac.resize(pending.size());
            dth.resize(pending.size());
            cr.resize(pending.size());
            for (std::size_t a = 0; a < pending.size(); ++a) e_batch[a] = query[pending[a]];
            propagate_batch<true>(gaps, gamma, e_batch, ws, cr, frac, dth);
            std::vector<std::size_t> still;
            for (std::size_t a = 0; a < pending.size(); ++a) {
                const std::size_t i = pending[a];
                // theta - j*pi with the integer parts cancelled first, so the
                // residual stays accurate at large branch counts.
                const double residual =
                    static_cast<double>(cr[a] - static_cast<std::int64_t>(i) - 1) * kPi +
                    frac[a];
                if (residual > 0.0)
                    hi[i] = std::min(hi[i], e_batch[a]);
                else
                    lo[i] = std::max(lo[i], e_batch[a]);
                const double tol = tol_of(0.5 * (lo[i] + hi[i]));
                if (hi[i] - lo[i] <= tol) {
                    result[i] = 0.5 * (lo[i] + hi[i]);
                    done[i] = 1;
                    continue;
                }
                double next = e_batch[a] - residual / std::max(dth[a], 1e-300);
                if (!(next > lo[i] && next < hi[i])) next = 0.5 * (lo[i] + hi[i]);
                const double step = std::fabs(next - e_batch[a]);
                if (step <= 0.25 * tol) {
                    result[i] = next;
                    done[i] = 1;
                    continue;
                }
                query[i] = next;
                still.push_back(i);
            }
            pending.swap(still);
        }
        for (std::size_t i : pending) {
            result[i] = 0.5 * (lo[i] + hi[i]);  // bracket fallback
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i]) result[i] = 0.5 * (lo[i] + hi[i]);
    }

    // Enforce strict ordering at tolerance scale (nearly degenerate pairs).
    for (std::size_t i = 1; i < n; ++i)
        if (result[i] <= result[i - 1])
            result[i] = std::nextafter(result[i - 1], 1e308);
    return result;
}

}  // namespace detail

// Exact spectrum of one configuration. Levels are bracketed between the
// free and the gamma=infinity oracles, bisected on the counting function,
// and polished with Newton on the phase.
inline Spectrum eigenvalues(const ImpurityConfiguration& config, double gamma,
                            const LevelRequest& request,
                            const SolveOptions& opt = SolveOptions()) {
    if (!(gamma > 0.0)) throw ParameterError("eigenvalues: gamma must be > 0");
    const std::vector<double> gaps_v = config.gaps();
    const std::span<const double> gaps(gaps_v);
    const double length = config.box_length;

    std::int64_t j_count = 0;
    double cutoff = 0.0;
    if (request.mode == LevelRequest::Mode::BelowEnergy) {
        cutoff = request.cutoff;
        if (!(cutoff > 0.0)) throw ParameterError("eigenvalues: cutoff must be > 0");
        j_count = count_eigenvalues_below(gaps, gamma, cutoff);
    } else {
        if (request.count < 1) throw ParameterError("eigenvalues: level count must be >= 1");
        j_count = request.count;
    }
    if (j_count > opt.level_cap)
        throw ResourceLimitError("eigenvalues: requested " + std::to_string(j_count) +
                                 " levels exceeds cap " + std::to_string(opt.level_cap));

    Spectrum spectrum;
    if (j_count == 0) {
        spectrum.energy_cutoff = cutoff;
        spectrum.complete_below_cutoff = true;
        return spectrum;
    }

    std::vector<double> lo = free_spectrum_oracle(length, j_count);
    std::vector<double> hi = dirichlet_union_oracle(gaps, j_count);
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] = lo[i] * (1.0 - 4e-16);
        hi[i] = hi[i] * (1.0 + 4e-16) + 1e-300;
        if (request.mode == LevelRequest::Mode::BelowEnergy) hi[i] = std::min(hi[i], cutoff);
        if (hi[i] <= lo[i]) hi[i] = std::nextafter(lo[i], 1e308);
    }

    spectrum.eigenvalues = detail::solve_levels(gaps, gamma, std::move(lo), std::move(hi), opt);

    if (request.mode == LevelRequest::Mode::BelowEnergy) {
        spectrum.energy_cutoff = cutoff;
        spectrum.complete_below_cutoff = true;
    } else {
        const double top = spectrum.eigenvalues.back();
        spectrum.energy_cutoff = top * (1.0 + 1e-12) + 1e-300;
        spectrum.complete_below_cutoff =
            count_eigenvalues_below(gaps, gamma, spectrum.energy_cutoff) == j_count;
    }
    return spectrum;
}

}  // namespace lsm

#endif  // LSM_SPECTRUM_HPP
