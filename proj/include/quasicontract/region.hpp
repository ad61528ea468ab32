#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "quasicontract/constraint.hpp"

namespace quasicontract {

/// Parameters of the two-sided band constraint
///
///     K1*d(x,y) <= d(Tx,Ty) <= min((1-K)*d(x,y) + M, K2*d(x,y))
///
/// with K in [0,1), M > 0 and slopes K2 >= K1 > 0. The slope condition
/// K1 > 1-K that the interval formulas need is checked per operation, not
/// here, because the band classification is meaningful without it.
struct BandParams {
    double K;
    double M;
    double K1;
    double K2;

    BandParams(double k, double m, double k1, double k2)
        : K(k), M(m), K1(k1), K2(k2) {
        if (!std::isfinite(K) || !std::isfinite(M) || !std::isfinite(K1) ||
            !std::isfinite(K2)) {
            throw std::invalid_argument("BandParams: values must be finite");
        }
        if (K < 0.0 || K >= 1.0) {
            throw std::invalid_argument("BandParams: K must lie in [0, 1)");
        }
        if (!(M > 0.0)) {
            throw std::invalid_argument("BandParams: M must be > 0");
        }
        if (!(K1 > 0.0)) {
            throw std::invalid_argument("BandParams: K1 must be > 0");
        }
        if (K2 < K1) {
            throw std::invalid_argument("BandParams: requires K2 >= K1");
        }
    }
};

namespace detail {

inline double offset_cap_denominator(const BandParams& b, double slope,
                                     const char* where) {
    const double denom = b.K + slope - 1.0;
    if (!(denom > 0.0)) {
        throw std::domain_error(std::string(where) +
                                ": band slopes incompatible with K "
                                "(requires K1 > 1 - K)");
    }
    return denom;
}

}  // namespace detail

/// Distance range where the chain with the affine bound as the binding cap
///
///     K1*d <= dT <= (1-K)*d + M <= K2*d
///
/// is consistent: [M/(K+K2-1), M/(K+K1-1)].
inline Interval offset_capped_interval(const BandParams& b) {
    const double lo_denom = detail::offset_cap_denominator(b, b.K2, "offset_capped_interval");
    const double hi_denom = detail::offset_cap_denominator(b, b.K1, "offset_capped_interval");
    return {b.M / lo_denom, b.M / hi_denom};
}

/// Distance range where the chain with the slope bound as the binding cap
///
///     K1*d <= dT <= K2*d <= (1-K)*d + M
///
/// is consistent: [0, M/(K+K2-1)].
inline Interval slope_capped_interval(const BandParams& b) {
    const double denom = detail::offset_cap_denominator(b, b.K2, "slope_capped_interval");
    return {0.0, b.M / denom};
}

/// Radius (M/(K+K1-1)) * min(1, K1) of the point-centered balls on which the
/// band constraint stays feasible.
inline double inner_ball_radius(const BandParams& b) {
    const double denom = detail::offset_cap_denominator(b, b.K1, "inner_ball_radius");
    return (b.M / denom) * std::min(1.0, b.K1);
}

/// Distance M/K beyond which the base constraint guarantees a non-expansive
/// step for the pair.
inline double nonexpansive_threshold(const BandParams& b) {
    if (!(b.K > 0.0)) {
        throw std::domain_error("nonexpansive_threshold: requires K > 0");
    }
    return b.M / b.K;
}

/// True iff the outer non-expansive region (d >= M/K) and the inner feasible
/// ball (d <= M/(K+K1-1)) cannot overlap, i.e. M/K >= M/(K+K1-1). Holds
/// exactly when K1 >= 1.
inline bool regions_disjoint(const BandParams& b) {
    if (!(b.K > 0.0)) {
        throw std::domain_error("regions_disjoint: requires K > 0");
    }
    const double denom = detail::offset_cap_denominator(b, b.K1, "regions_disjoint");
    return b.M / b.K >= b.M / denom;
}

enum class BandVerdict {
    NonExpansive,
    ContractiveWithFixedPoint,
    MixedLocal,
    NotContractive,
    Infeasible,
};

[[nodiscard]] constexpr const char* to_string(BandVerdict v) noexcept {
    switch (v) {
        case BandVerdict::NonExpansive: return "NonExpansive";
        case BandVerdict::ContractiveWithFixedPoint:
            return "ContractiveWithFixedPoint";
        case BandVerdict::MixedLocal: return "MixedLocal";
        case BandVerdict::NotContractive: return "NotContractive";
        case BandVerdict::Infeasible: return "Infeasible";
    }
    return "unknown";
}

/// Global verdict for a map satisfying the band constraint, by branch table
/// over the slopes (K in (0,1) required):
///
///   max(1-K,0) < K1 <= K2 < 1   -> ContractiveWithFixedPoint
///   max(1-K,0) < K1 <= K2 = 1   -> NonExpansive
///   K1 in (0,1), K2 > 1         -> MixedLocal (neither contractive nor
///                                  expansive on the whole space)
///   K1 = 1 <= K2                -> NotContractive
///   K1 > 1                      -> Infeasible (no self-map can satisfy the
///                                  band everywhere)
///
/// Parameter combinations outside the table (K1 <= max(1-K,0) with K2 <= 1)
/// are reported as an explicit error rather than silently classified.
inline BandVerdict classify_band(const BandParams& b) {
    if (!(b.K > 0.0 && b.K < 1.0)) {
        throw std::domain_error("classify_band: requires K in (0, 1)");
    }
    if (b.K1 > 1.0) return BandVerdict::Infeasible;
    if (b.K1 == 1.0) return BandVerdict::NotContractive;
    if (b.K2 > 1.0) return BandVerdict::MixedLocal;
    const double floor = std::max(1.0 - b.K, 0.0);
    if (b.K1 > floor) {
        return b.K2 < 1.0 ? BandVerdict::ContractiveWithFixedPoint
                          : BandVerdict::NonExpansive;
    }
    throw std::domain_error(
        "classify_band: unclassified band (K1 <= max(1-K, 0) with K2 <= 1)");
}

/// Existence flags from the brute-force scan at one distance d.
struct FeasibilityWitness {
    bool offset_capped;  // some dT satisfies K1*d <= dT <= (1-K)*d+M <= K2*d
    bool slope_capped;   // some dT satisfies K1*d <= dT <= K2*d <= (1-K)*d+M
    bool envelope;       // some dT satisfies K1*d <= dT <= min((1-K)*d+M, K2*d)
};

/// Scans candidate image distances dT over a uniform grid on [0, K2*d + M]
/// and reports whether any grid point satisfies each constraint chain.
/// Definitionally correct up to grid resolution; the independent oracle for
/// the closed-form intervals.
inline FeasibilityWitness feasibility_oracle(double d, const BandParams& b,
                                             std::size_t grid_size) {
    if (!std::isfinite(d) || d < 0.0) {
        throw std::invalid_argument("feasibility_oracle: d must be finite and >= 0");
    }
    if (grid_size < 1000) {
        throw std::invalid_argument("feasibility_oracle: grid_size must be >= 1000");
    }
    const double lo = b.K1 * d;
    const double affine = (1.0 - b.K) * d + b.M;
    const double slope = b.K2 * d;
    const double hi = slope + b.M;

    // The dT-free parts of each chain fix which chains can hold at all.
    const bool offset_cap_ok = affine <= slope;
    const bool slope_cap_ok = slope <= affine;

    FeasibilityWitness w{false, false, false};
    for (std::size_t i = 0; i <= grid_size; ++i) {
        const double dT =
            hi * static_cast<double>(i) / static_cast<double>(grid_size);
        const bool above = dT >= lo;
        if (above && offset_cap_ok && dT <= affine) w.offset_capped = true;
        if (above && slope_cap_ok && dT <= slope) w.slope_capped = true;
        if (above && dT <= std::min(affine, slope)) w.envelope = true;
        if (w.offset_capped && w.slope_capped && w.envelope) break;
    }
    return w;
}

/// Per-distance feasible corridor of image distances:
/// lower K1*d, upper min((1-K)*d + M, max(K2*d, K1*M/(K+K1-1))).
struct BandEnvelope {
    double lower;
    double upper;
};

inline BandEnvelope band_envelope(double d, const BandParams& b) {
    if (!std::isfinite(d) || d < 0.0) {
        throw std::invalid_argument("band_envelope: d must be finite and >= 0");
    }
    const double denom = detail::offset_cap_denominator(b, b.K1, "band_envelope");
    const double cap = std::max(b.K2 * d, b.K1 * b.M / denom);
    return {b.K1 * d, std::min((1.0 - b.K) * d + b.M, cap)};
}

/// Full closed-form report for one band parameter set. Interval fields are
/// absent when the slope condition K1 > 1-K fails (the formulas are then
/// undefined); the verdict path does not need them.
struct RegionReport {
    std::optional<Interval> interval_offset_capped;
    std::optional<Interval> interval_slope_capped;
    std::optional<double> inner_ball_radius;
    std::optional<double> nonexpansive_threshold;
    std::optional<bool> disjoint;
    BandVerdict verdict;
};

inline RegionReport analyze_region(const BandParams& b) {
    RegionReport r{{}, {}, {}, {}, {}, classify_band(b)};
    if (b.K + b.K1 - 1.0 > 0.0) {
        r.interval_offset_capped = offset_capped_interval(b);
        r.interval_slope_capped = slope_capped_interval(b);
        r.inner_ball_radius = inner_ball_radius(b);
        if (b.K > 0.0) r.disjoint = regions_disjoint(b);
    }
    if (b.K > 0.0) r.nonexpansive_threshold = nonexpansive_threshold(b);
    return r;
}

/// Result of sweeping the brute-force oracle against the closed-form
/// intervals over a distance grid.
struct OracleComparison {
    std::size_t checked = 0;     // d samples actually compared
    std::size_t skipped = 0;     // d samples inside an endpoint resolution band
    std::size_t mismatches = 0;  // disagreements outside every resolution band
    std::vector<double> mismatch_d;  // first few offending distances
};

/// Sweeps d over [0, d_max] and checks that oracle feasibility agrees with
/// closed-form interval membership for both chains. The oracle discretizes
/// the image distance with cell width (K2*d + M)/grid_size, so it is blind
/// wherever the admissible corridor is narrower than one cell; those d lie
/// within a one-cell-wide band of an interval endpoint, mapped to distance
/// units through the corridor's shrink slope, and are skipped rather than
/// counted as disagreements. Requires K1 > 1 - K (intervals defined) and
/// K2 > K1 (otherwise the slope-capped corridor has zero width everywhere
/// and the grid oracle cannot see it).
inline OracleComparison compare_oracle_to_intervals(const BandParams& b,
                                                    double d_max,
                                                    std::size_t d_points,
                                                    std::size_t grid_size) {
    if (!(d_max > 0.0) || !std::isfinite(d_max)) {
        throw std::invalid_argument("compare_oracle_to_intervals: d_max must be finite and > 0");
    }
    if (d_points < 10) {
        throw std::invalid_argument("compare_oracle_to_intervals: d_points must be >= 10");
    }
    if (!(b.K2 > b.K1)) {
        throw std::invalid_argument(
            "compare_oracle_to_intervals: requires K2 > K1 (degenerate corridor)");
    }
    const Interval offset_iv = offset_capped_interval(b);
    const Interval slope_iv = slope_capped_interval(b);

    const double d_cell = d_max / static_cast<double>(d_points);
    const auto dT_cell = [&](double d) {
        return (b.K2 * d + b.M) / static_cast<double>(grid_size);
    };
    // Resolution bands in d units around the endpoints the grid cannot decide.
    const double offset_hi_tol =
        dT_cell(offset_iv.upper) / (b.K + b.K1 - 1.0) + d_cell;
    const double slope_lo_tol = dT_cell(0.0) / (b.K2 - b.K1) + d_cell;

    OracleComparison cmp;
    for (std::size_t i = 0; i <= d_points; ++i) {
        const double d =
            d_max * static_cast<double>(i) / static_cast<double>(d_points);
        const FeasibilityWitness w = feasibility_oracle(d, b, grid_size);

        const bool offset_skip = std::abs(d - offset_iv.lower) <= d_cell ||
                                 std::abs(d - offset_iv.upper) <= offset_hi_tol;
        const bool slope_skip =
            d <= slope_lo_tol || std::abs(d - slope_iv.upper) <= d_cell;

        bool counted = false;
        bool mismatch = false;
        if (!offset_skip) {
            counted = true;
            if (w.offset_capped != offset_iv.contains(d)) mismatch = true;
        }
        if (!slope_skip) {
            counted = true;
            if (w.slope_capped != slope_iv.contains(d)) mismatch = true;
        }
        if (!counted) {
            ++cmp.skipped;
            continue;
        }
        ++cmp.checked;
        if (mismatch) {
            ++cmp.mismatches;
            if (cmp.mismatch_d.size() < 16) cmp.mismatch_d.push_back(d);
        }
    }
    return cmp;
}

}  // namespace quasicontract
