#ifndef LSM_SAMPLER_HPP
#define LSM_SAMPLER_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsm/common.hpp"
#include "lsm/rng.hpp"

namespace lsm {

// Model parameters (nu, gamma, beta, rho, N). The box length L_N = N / rho
// is derived, never stored.
struct ModelParameters {
    double intensity = 1.0;            // nu: atoms per unit length
    double strength = 1.0;             // gamma: delta mass, energy * length
    double inverse_temperature = 1.0;  // beta
    double density = 1.0;              // rho: particles per unit length
    std::int64_t particle_number = 1;  // N

    double box_length() const {
        return static_cast<double>(particle_number) / density;
    }

    void validate() const {
        if (!(intensity > 0.0)) throw ParameterError("intensity must be > 0");
        if (!(strength > 0.0)) throw ParameterError("strength must be > 0");
        if (!(inverse_temperature > 0.0))
            throw ParameterError("inverse_temperature must be > 0");
        if (!(density > 0.0)) throw ParameterError("density must be > 0");
        if (particle_number < 1) throw ParameterError("particle_number must be >= 1");
    }
};

// One Poisson realization: sorted atom positions strictly inside
// (-box_length/2, box_length/2).
struct ImpurityConfiguration {
    double box_length = 0.0;
    std::vector<double> atoms;
    std::string seed_tag;

    // Gap sequence (l_0, ..., l_m) cut out by the walls and the atoms.
    std::vector<double> gaps() const {
        std::vector<double> g;
        g.reserve(atoms.size() + 1);
        double prev = -0.5 * box_length;
        for (double a : atoms) {
            g.push_back(a - prev);
            prev = a;
        }
        g.push_back(0.5 * box_length - prev);
        return g;
    }
};

// Validates and normalizes an externally supplied point set. Points exactly
// on or outside the walls are rejected; duplicates are rejected rather than
// merged, since merging two atoms would silently double gamma.
inline ImpurityConfiguration configuration_from_points(std::vector<double> points,
                                                       double length) {
    if (!(length > 0.0)) throw ParameterError("box length must be > 0");
    std::sort(points.begin(), points.end());
    const double half = 0.5 * length;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i] > -half && points[i] < half))
            throw ValidationError("atom outside the open box interval");
        if (i > 0 && points[i] == points[i - 1])
            throw ValidationError("duplicate atom positions");
    }
    ImpurityConfiguration config;
    config.box_length = length;
    config.atoms = std::move(points);
    config.seed_tag = "external";
    return config;
}

// Draws one Poisson configuration: m ~ Poisson(intensity * length), then m
// uniforms on the open box, sorted. Identical (seed, realization) pairs
// give bit-identical output.
inline ImpurityConfiguration sample_configuration(double length, double intensity,
                                                  std::uint64_t seed,
                                                  std::uint64_t realization = 0) {
    if (!(length > 0.0)) throw ParameterError("box length must be > 0");
    if (!(intensity > 0.0)) throw ParameterError("intensity must be > 0");

    Rng rng(seed, realization);
    const std::int64_t count = rng.poisson(intensity * length);
    std::vector<double> points;
    points.reserve(static_cast<std::size_t>(count));
    const double half = 0.5 * length;
    for (std::int64_t i = 0; i < count; ++i) points.push_back(rng.uniform(-half, half));
    std::sort(points.begin(), points.end());
    // Exact float duplicates have probability ~ m^2 * 2^-53; redraw to keep
    // atoms strictly increasing.
    for (std::size_t i = 1; i < points.size();) {
        if (points[i] == points[i - 1]) {
            points[i] = rng.uniform(-half, half);
            std::sort(points.begin(), points.end());
            i = 1;
        } else {
            ++i;
        }
    }

    ImpurityConfiguration config;
    config.box_length = length;
    config.atoms = std::move(points);
    config.seed_tag = "seed=" + std::to_string(seed) + ":" + std::to_string(realization);
    return config;
}

inline nlohmann::json configuration_to_json(const ImpurityConfiguration& config) {
    nlohmann::json j;
    j["box_length"] = config.box_length;
    j["atoms"] = config.atoms;
    return j;
}

inline ImpurityConfiguration configuration_from_json(const nlohmann::json& j) {
    return configuration_from_points(j.at("atoms").get<std::vector<double>>(),
                                     j.at("box_length").get<double>());
}

}  // namespace lsm

#endif  // LSM_SAMPLER_HPP
