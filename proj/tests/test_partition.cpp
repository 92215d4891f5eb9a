#include <cmath>
#include <vector>

#include "doctest.h"
#include "lsm/partition.hpp"
#include "lsm/thermo.hpp"

using namespace lsm;

// The partitioned solver must reproduce the exact one to far better than
// any tolerance used downstream; this is the honesty check for the
// large-box acceleration.

TEST_CASE("partitioned spectrum matches the exact solver on a mid-size box") {
    const double gamma = 5.0, cutoff = 20.0;
    const auto config = sample_configuration(1200.0, 1.0, 90210, 0);

    // tight per-level tolerances so the comparison measures healing error,
    // not bisection bracket width
    SolveOptions tight;
    tight.rel_tol = 1e-12;
    const auto exact = eigenvalues(config, gamma, LevelRequest::below(cutoff), tight);

    PartitionOptions popt;
    popt.block_size = 200.0;
    popt.head_target = 300;
    popt.polish_count = 48;
    popt.solve = tight;
    const auto parted = partitioned_spectrum(config, gamma, cutoff, popt);

    REQUIRE(parted.total_count() == static_cast<std::int64_t>(exact.eigenvalues.size()));

    SUBCASE("counting function agrees on a grid") {
        for (int i = 1; i <= 40; ++i) {
            const double e = cutoff * i / 40.5;
            const std::int64_t exact_count = static_cast<std::int64_t>(
                std::lower_bound(exact.eigenvalues.begin(), exact.eigenvalues.end(), e) -
                exact.eigenvalues.begin());
            CHECK(parted.count_below(e) == exact_count);
        }
    }

    SUBCASE("head levels agree to healing accuracy") {
        REQUIRE(parted.head_count() >= 300);
        double worst = 0.0;
        for (std::int64_t i = 0; i < parted.head_count(); ++i) {
            const double d = std::fabs(parted.head_levels[static_cast<std::size_t>(i)] -
                                       exact.eigenvalues[static_cast<std::size_t>(i)]);
            worst = std::max(worst, d);
        }
        CHECK(worst < 1e-8);
        // polished bottom is at exact-solver accuracy
        double worst_polished = 0.0;
        for (int i = 0; i < 48; ++i)
            worst_polished = std::max(worst_polished,
                                      std::fabs(parted.head_levels[i] - exact.eigenvalues[i]));
        CHECK(worst_polished < 1e-10);
    }

    SUBCASE("occupation sums agree") {
        const double e1 = exact.eigenvalues.front();
        for (double mu : {e1 - 1e-3, 0.5 * e1, -0.5}) {
            double exact_sum = 0.0;
            for (double e : exact.eigenvalues) exact_sum += bose(e - mu, 1.0);
            double parted_sum = 0.0;
            for (double e : parted.head_levels) parted_sum += bose(e - mu, 1.0);
            parted_sum += parted.bulk_sum([&](double e) { return bose(e - mu, 1.0); });
            CHECK(std::fabs(parted_sum - exact_sum) <= 3e-9 * std::fabs(exact_sum));
        }
    }

    SUBCASE("chemical potential agrees between the two paths") {
        const std::int64_t n = 1200;
        const auto exact_full = eigenvalues(config, gamma, LevelRequest::below(
            suggested_cutoff(1200.0, n, 1.0)));
        const auto parted_full = partitioned_spectrum(
            config, gamma, suggested_cutoff(1200.0, n, 1.0), popt);
        const double mu_exact = solve_chemical_potential(exact_full, 1.0, n, 1200.0);
        const double mu_parted = solve_chemical_potential(parted_full, 1.0, n);
        CHECK(std::fabs(mu_exact - mu_parted) < 1e-9);
        const double total = total_occupation(parted_full, mu_parted, 1.0);
        CHECK(std::fabs(total - static_cast<double>(n)) <= 1e-8 * static_cast<double>(n));
    }
}

TEST_CASE("partitioned heat trace matches the exact one") {
    const auto config = sample_configuration(900.0, 1.0, 5511, 0);
    const double cutoff = 35.0;
    const auto exact = eigenvalues(config, 5.0, LevelRequest::below(cutoff));
    PartitionOptions popt;
    popt.block_size = 150.0;
    const auto parted = partitioned_spectrum(config, 5.0, cutoff, popt);
    const auto ht_exact = heat_trace(exact, 1.0, 900.0);
    const auto ht_parted = heat_trace(parted, 1.0);
    CHECK(ht_parted.value == doctest::Approx(ht_exact.value).epsilon(1e-9));
}

TEST_CASE("partitioned construction is deterministic") {
    const auto config = sample_configuration(1000.0, 1.0, 777, 0);
    PartitionOptions popt;
    popt.threads = 2;
    const auto a = partitioned_spectrum(config, 5.0, 15.0, popt);
    popt.threads = 1;
    const auto b = partitioned_spectrum(config, 5.0, 15.0, popt);
    REQUIRE(a.head_levels.size() == b.head_levels.size());
    for (std::size_t i = 0; i < a.head_levels.size(); ++i)
        CHECK(a.head_levels[i] == b.head_levels[i]);
    CHECK(a.bulk_count == b.bulk_count);
    CHECK(a.split_energy == b.split_energy);
}

TEST_CASE("small boxes fall back to the exact solver") {
    const auto config = sample_configuration(30.0, 1.0, 31, 0);
    const auto parted = partitioned_spectrum(config, 5.0, 12.0, {});
    const auto exact = eigenvalues(config, 5.0, LevelRequest::below(12.0));
    REQUIRE(parted.head_levels.size() == exact.eigenvalues.size());
    for (std::size_t i = 0; i < exact.eigenvalues.size(); ++i)
        CHECK(parted.head_levels[i] == doctest::Approx(exact.eigenvalues[i]).epsilon(1e-12));
    CHECK(parted.bulk_count == 0);
}
