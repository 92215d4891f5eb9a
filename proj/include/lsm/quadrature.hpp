#ifndef LSM_QUADRATURE_HPP
#define LSM_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "lsm/common.hpp"

namespace lsm {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 15(7) nodes and weights on [-1, 1].
inline constexpr double kGk15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr double kGk15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double kGauss7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

template <typename F>
inline void gk15(F&& f, double a, double b, double& value, double& error) {
    const double mid = 0.5 * (a + b);
    const double len = 0.5 * (b - a);
    double kronrod = 0.0, gauss = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double fx = f(mid + len * kGk15Nodes[i]);
        kronrod += kGk15Weights[i] * fx;
        if (i % 2 == 1) gauss += kGauss7Weights[i / 2] * fx;
    }
    value = kronrod * len;
    error = std::fabs((kronrod - gauss) * len);
}

}  // namespace detail

// Adaptive Gauss-Kronrod on a finite interval.
template <typename F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-12,
                           double rel_tol = 1e-10, int max_depth = 48) {
    struct Segment {
        double a, b, value, error;
        int depth;
    };
    double v0, e0;
    detail::gk15(f, a, b, v0, e0);
    std::vector<Segment> stack{{a, b, v0, e0, 0}};
    QuadratureResult result;
    result.evaluations = 15;
    double total = v0;
    while (!stack.empty()) {
        const Segment seg = stack.back();
        stack.pop_back();
        const double tol =
            std::max(abs_tol, rel_tol * std::fabs(total)) *
            std::max(1e-6, (seg.b - seg.a) / (b - a));
        if (seg.error <= tol || seg.depth >= max_depth) {
            result.value += seg.value;
            result.error += seg.error;
            continue;
        }
        const double mid = 0.5 * (seg.a + seg.b);
        double vl, el, vr, er;
        detail::gk15(f, seg.a, mid, vl, el);
        detail::gk15(f, mid, seg.b, vr, er);
        result.evaluations += 30;
        total += (vl + vr - seg.value);
        stack.push_back({seg.a, mid, vl, el, seg.depth + 1});
        stack.push_back({mid, seg.b, vr, er, seg.depth + 1});
        if (result.evaluations > 20'000'000)
            throw ResourceLimitError("integrate: evaluation budget exhausted");
    }
    return result;
}

}  // namespace lsm

#endif  // LSM_QUADRATURE_HPP
