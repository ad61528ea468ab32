#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "quasicontract/constraint.hpp"

#include "support.hpp"

using namespace quasicontract;

TEST_CASE("ContractionParams: validation and threshold") {
    CHECK_THROWS_AS(ContractionParams(-0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ContractionParams(0.5, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(ContractionParams(std::nan(""), 1.0), std::invalid_argument);
    CHECK(ContractionParams(0.5, 1.0).threshold() == 2.0);
    CHECK(std::isinf(ContractionParams(0.0, 1.0).threshold()));
    CHECK(ContractionParams(0.5, 0.0).threshold() == 0.0);
}

TEST_CASE("classify_regime: decision table") {
    const Regime strict = classify_regime({0.5, 0.0});
    CHECK(strict.tag == RegimeTag::StrictContraction);
    CHECK_FALSE(strict.weakly_contractive_boundary);

    const Regime boundary = classify_regime({1.0, 0.0});
    CHECK(boundary.tag == RegimeTag::StrictContraction);
    CHECK(boundary.weakly_contractive_boundary);

    CHECK(classify_regime({0.0, 0.0}).tag == RegimeTag::NonExpansive);

    const Regime bounded = classify_regime({1.0, 2.5});
    CHECK(bounded.tag == RegimeTag::BoundedImage);
    CHECK(bounded.threshold == 2.5);

    const Regime super = classify_regime({1.5, 1.0});
    CHECK(super.tag == RegimeTag::SuperUnit);
    REQUIRE(super.band.has_value());
    CHECK(super.band->lower == 0.0);
    CHECK(super.band->upper == Catch::Approx(2.0).epsilon(1e-14));

    const Regime mixed = classify_regime({0.5, 1.0});
    CHECK(mixed.tag == RegimeTag::MixedThreshold);
    CHECK(mixed.threshold == 2.0);

    const Regime offset = classify_regime({0.0, 1.0});
    CHECK(offset.tag == RegimeTag::OffsetBounded);
    REQUIRE(offset.threshold.has_value());
    CHECK(std::isinf(*offset.threshold));
}

TEST_CASE("classify_regime: total and mutually exclusive over the parameter grid") {
    // Every (K, M) including the boundary values lands in exactly one tag.
    const double ks[] = {0.0, 1e-9, 0.25, 0.5, 1.0 - 1e-12, 1.0, 1.0 + 1e-12, 1.5, 7.0};
    const double ms[] = {0.0, 1e-12, 0.5, 1.0, 100.0};
    for (double k : ks) {
        for (double m : ms) {
            const Regime r = classify_regime({k, m});
            int expected_count = 0;
            if (m == 0.0 && k == 0.0) expected_count += r.tag == RegimeTag::NonExpansive;
            if (m == 0.0 && k > 0.0 && k <= 1.0)
                expected_count += r.tag == RegimeTag::StrictContraction;
            if (m == 0.0 && k > 1.0) expected_count += r.tag == RegimeTag::SuperUnit;
            if (m > 0.0 && k == 0.0) expected_count += r.tag == RegimeTag::OffsetBounded;
            if (m > 0.0 && k > 0.0 && k < 1.0)
                expected_count += r.tag == RegimeTag::MixedThreshold;
            if (m > 0.0 && k == 1.0) expected_count += r.tag == RegimeTag::BoundedImage;
            if (m > 0.0 && k > 1.0) expected_count += r.tag == RegimeTag::SuperUnit;
            CHECK(expected_count == 1);
        }
    }
}

TEST_CASE("classify_regime: the super-unit band marks where the bound goes negative") {
    // For K > 1 the affine bound (1-K)d + M is nonnegative inside the band
    // [0, M/(K-1)] and negative strictly beyond it, so no image distance can
    // satisfy the constraint for pairs beyond the band edge.
    const double ks[] = {1.2, 1.5, 2.0, 5.0};
    const double ms[] = {0.3, 1.0, 4.0};
    for (double k : ks) {
        for (double m : ms) {
            const Regime r = classify_regime({k, m});
            REQUIRE(r.band.has_value());
            const double edge = r.band->upper;
            CHECK(edge == Catch::Approx(m / (k - 1.0)).epsilon(1e-14));
            for (int i = 1; i <= 20; ++i) {
                const double inside = edge * i / 21.0;
                const double beyond = edge * (1.0 + i / 10.0);
                CHECK((1.0 - k) * inside + m >= 0.0);
                CHECK((1.0 - k) * beyond + m < 0.0);
            }
        }
    }
}

TEST_CASE("verify_pair: worked values") {
    // 0.5*4 + 1 = 3 exactly.
    CHECK(verify_pair({4.0, 3.0}, {0.5, 1.0}, 0.0));
    CHECK_FALSE(verify_pair({4.0, 3.01}, {0.5, 1.0}, 0.0));
    CHECK(verify_pair({0.0, 0.0}, {0.9, 0.0}, 0.0));
    CHECK(verify_pair({0.0, 0.0}, {0.5, 1.0}, 0.0));
    CHECK(verify_pair({4.0, 3.01}, {0.5, 1.0}, 0.02));
}

TEST_CASE("DistanceSample: validation") {
    CHECK_THROWS_AS(DistanceSample(-1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(DistanceSample(0.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(DistanceSample(std::nan(""), 0.0), std::invalid_argument);
}

TEST_CASE("classify_pair: threshold cases") {
    const ContractionParams p(0.5, 1.0);
    CHECK(classify_pair(3.0, p) == PairVerdict::WeaklyContractiveGuaranteed);
    CHECK(classify_pair(2.0, p) == PairVerdict::NonExpansiveGuaranteed);
    CHECK(classify_pair(1.0, p) == PairVerdict::Indeterminate);
    CHECK_THROWS_AS(classify_pair(1.0, {0.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS(classify_pair(-1.0, p), std::invalid_argument);
    // Boundary equality is tolerant to ~1e-12 relative float noise.
    CHECK(classify_pair(2.0 * (1.0 + 1e-13), p) == PairVerdict::NonExpansiveGuaranteed);
    CHECK(classify_pair(2.0 * (1.0 + 1e-11), p) ==
          PairVerdict::WeaklyContractiveGuaranteed);
}

TEST_CASE("classify_pair: verdict is monotone in d_xy") {
    qctest::Rng rng(29);
    const auto rank = [](PairVerdict v) {
        switch (v) {
            case PairVerdict::Indeterminate: return 0;
            case PairVerdict::NonExpansiveGuaranteed: return 1;
            case PairVerdict::WeaklyContractiveGuaranteed: return 2;
        }
        return -1;
    };
    for (int trial = 0; trial < 200; ++trial) {
        const ContractionParams p(rng.range(0.05, 0.95), rng.range(0.0, 5.0));
        double d1 = rng.range(0.0, 10.0);
        double d2 = rng.range(0.0, 10.0);
        if (d1 > d2) std::swap(d1, d2);
        CHECK(rank(classify_pair(d1, p)) <= rank(classify_pair(d2, p)));
    }
}

TEST_CASE("fit_min_M: worked values") {
    // Oracle by hand: max(3-0.5*4, 2-0.5*2, 1.5-0.5*1) = max(1, 1, 1) = 1.
    const std::vector<DistanceSample> s1{{4.0, 3.0}, {2.0, 2.0}, {1.0, 1.5}};
    CHECK(fit_min_M(0.5, s1) == Catch::Approx(1.0).epsilon(1e-14));

    const std::vector<DistanceSample> s2{{4.0, 3.0}};
    CHECK(fit_min_M(0.0, s2) == 0.0);  // 3 - 4 < 0 clamps to 0

    const std::vector<DistanceSample> s3{{10.0, 2.5}};
    CHECK(fit_min_M(1.0, s3) == 2.5);
}

TEST_CASE("fit_min_M: errors") {
    const std::vector<DistanceSample> empty;
    CHECK_THROWS_AS(fit_min_M(0.5, empty), std::invalid_argument);
    const std::vector<DistanceSample> one{{1.0, 1.0}};
    CHECK_THROWS_AS(fit_min_M(-0.1, one), std::invalid_argument);
    CHECK_THROWS_AS(fit_min_M(1.1, one), std::invalid_argument);
}

TEST_CASE("fit_frontier: worked values") {
    const std::vector<DistanceSample> samples{{4.0, 3.0}};
    const std::vector<double> grid{0.0, 0.25, 0.5};
    const auto frontier = fit_frontier(samples, grid);
    REQUIRE(frontier.size() == 3);
    CHECK(frontier[0].M == 0.0);
    CHECK(frontier[1].M == 0.0);
    CHECK(frontier[2].M == Catch::Approx(1.0).epsilon(1e-14));

    // A pure contraction needs no offset at any K below its rate.
    std::vector<DistanceSample> pure;
    for (double d : {0.5, 1.0, 2.0, 7.0}) pure.emplace_back(d, 0.5 * d);
    const std::vector<double> grid2{0.25, 0.5};
    for (const auto& p : fit_frontier(pure, grid2)) CHECK(p.M == 0.0);

    // An offset at zero distance forces M at every K.
    const std::vector<DistanceSample> at_zero{{0.0, 1.0}};
    for (const auto& p : fit_frontier(at_zero, grid)) CHECK(p.M == 1.0);
}

TEST_CASE("fit_frontier: grid validation") {
    const std::vector<DistanceSample> samples{{1.0, 1.0}};
    CHECK_THROWS_AS(fit_frontier(samples, std::vector<double>{0.5, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_frontier(samples, std::vector<double>{0.5, 0.25}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_frontier(samples, std::vector<double>{0.5, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_frontier(samples, std::vector<double>{-0.1, 0.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_frontier(std::vector<DistanceSample>{}, std::vector<double>{0.1}),
                    std::invalid_argument);
}

TEST_CASE("fit properties: monotone in K and round-trips through verify_pair") {
    qctest::Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<DistanceSample> samples;
        const std::size_t n = 1 + rng.integer(20);
        for (std::size_t i = 0; i < n; ++i) {
            samples.emplace_back(rng.range(0.0, 10.0), rng.range(0.0, 10.0));
        }
        double prev = -1.0;
        for (double k : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            const double m = fit_min_M(k, samples);
            CHECK(m >= prev);  // monotone fit
            prev = m;
            for (const auto& s : samples) {
                CHECK(verify_pair(s, {k, m}, 0.0));  // round-trip at tol 0
            }
        }
    }
}

TEST_CASE("default_k_grid: 64 uniform points in [0, 0.984375]") {
    const auto grid = default_k_grid();
    REQUIRE(grid.size() == 64);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 0.984375);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(grid[i] == static_cast<double>(i) / 64.0);
    }
}
