#ifndef LSM_TESTS_SUPPORT_HPP
#define LSM_TESTS_SUPPORT_HPP

// Test-only oracles and helpers. Everything here is independent of the
// library's solution path: the shooting oracle works on raw (phi, phi')
// matrix products, the chi-square machinery is self-contained.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/sampler.hpp"

namespace lsm_test {

// Counts sign changes of the shooting solution phi(x; E) across the box by
// explicit 2x2 transfer-matrix products with fine sampling inside gaps.
// Valid for small configurations (the raw solution grows with gamma).
inline std::int64_t sign_change_count(const lsm::ImpurityConfiguration& config,
                                      double gamma, double energy) {
    if (energy <= 0.0) return 0;
    const double k = std::sqrt(energy);
    std::vector<double> gaps = config.gaps();

    double phi = 0.0, dphi = 1.0;  // left-wall shooting data
    std::int64_t changes = 0;
    double last_sign = 0.0;

    for (std::size_t gi = 0; gi < gaps.size(); ++gi) {
        const double ell = gaps[gi];
        const int samples = std::max(8, static_cast<int>(std::ceil(40.0 * k * ell / lsm::kPi)));
        for (int s = 1; s <= samples; ++s) {
            const double t = ell * static_cast<double>(s) / samples;
            const double val = phi * std::cos(k * t) + (dphi / k) * std::sin(k * t);
            if (val != 0.0) {
                if (last_sign != 0.0 && val * last_sign < 0.0) ++changes;
                last_sign = val;
            }
        }
        const double phi_end = phi * std::cos(k * ell) + (dphi / k) * std::sin(k * ell);
        const double dphi_end = -phi * k * std::sin(k * ell) + dphi * std::cos(k * ell);
        phi = phi_end;
        dphi = dphi_end;
        if (gi + 1 < gaps.size()) dphi += gamma * phi;  // delta kick
        // positive rescale keeps the raw solution bounded, signs unchanged
        const double m = std::max(std::fabs(phi), std::fabs(dphi));
        if (m > 1e100) {
            phi /= m;
            dphi /= m;
        }
    }
    return changes;
}

// Regularized upper incomplete gamma Q(a, x), series + continued fraction.
inline double gammq(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 1.0;
    if (x == 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // series for P(a,x)
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - gln);
        return 1.0 - p;
    }
    // continued fraction for Q(a,x)
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// Chi-square goodness-of-fit p-value of observed counts against Poisson
// expectations; bins with expected < 5 are merged into the tail.
inline double poisson_chi2_pvalue(const std::vector<std::int64_t>& observed_counts,
                                  double lambda) {
    const double n = static_cast<double>(observed_counts.size());
    // histogram of observations
    std::int64_t max_k = 0;
    for (auto k : observed_counts) max_k = std::max(max_k, k);
    std::vector<double> obs(static_cast<std::size_t>(max_k) + 2, 0.0);
    for (auto k : observed_counts) obs[static_cast<std::size_t>(k)] += 1.0;

    std::vector<double> expected(obs.size(), 0.0);
    double p = std::exp(-lambda);
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < expected.size(); ++k) {
        expected[k] = n * p;
        cum += p;
        p *= lambda / static_cast<double>(k + 1);
    }
    expected.back() = n * std::max(0.0, 1.0 - cum);

    // merge sparse bins from the right
    std::vector<double> o_bins, e_bins;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
        o_acc += obs[k];
        e_acc += expected[k];
        if (e_acc >= 5.0) {
            o_bins.push_back(o_acc);
            e_bins.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 && !e_bins.empty()) {
        o_bins.back() += o_acc;
        e_bins.back() += e_acc;
    }
    if (o_bins.size() < 2) return 1.0;

    double chi2 = 0.0;
    for (std::size_t i = 0; i < o_bins.size(); ++i) {
        const double d = o_bins[i] - e_bins[i];
        chi2 += d * d / e_bins[i];
    }
    const double dof = static_cast<double>(o_bins.size()) - 1.0;
    return gammq(0.5 * dof, 0.5 * chi2);
}

}  // namespace lsm_test

#endif  // LSM_TESTS_SUPPORT_HPP
