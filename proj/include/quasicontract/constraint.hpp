#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace quasicontract {

/// Certificate (K, M) for the distance constraint
///
///     d(Tx, Ty) <= (1 - K) * d(x, y) + M
///
/// with K >= 0, M >= 0. The threshold M/K separates distances where the
/// constraint guarantees non-expansive behavior (d >= M/K) from distances
/// where the map may be expansive (d < M/K).
struct ContractionParams {
    double K;
    double M;

    ContractionParams(double k, double m) : K(k), M(m) {
        if (!std::isfinite(K) || !std::isfinite(M) || K < 0.0 || M < 0.0) {
            throw std::invalid_argument(
                "ContractionParams: K and M must be finite and >= 0");
        }
    }

    /// M/K; +inf when K == 0. Recomputed on every call, never cached.
    [[nodiscard]] double threshold() const noexcept {
        if (K == 0.0) return std::numeric_limits<double>::infinity();
        return M / K;
    }
};

/// Closed interval [lower, upper] of distances.
struct Interval {
    double lower;
    double upper;

    [[nodiscard]] bool contains(double d, double tol = 0.0) const noexcept {
        return d >= lower - tol && d <= upper + tol;
    }
    [[nodiscard]] double width() const noexcept { return upper - lower; }
};

enum class RegimeTag {
    StrictContraction,
    WeaklyContractiveBoundary,
    NonExpansive,
    BoundedImage,
    SuperUnit,
    MixedThreshold,
    OffsetBounded,
};

[[nodiscard]] constexpr const char* to_string(RegimeTag t) noexcept {
    switch (t) {
        case RegimeTag::StrictContraction: return "StrictContraction";
        case RegimeTag::WeaklyContractiveBoundary: return "WeaklyContractiveBoundary";
        case RegimeTag::NonExpansive: return "NonExpansive";
        case RegimeTag::BoundedImage: return "BoundedImage";
        case RegimeTag::SuperUnit: return "SuperUnit";
        case RegimeTag::MixedThreshold: return "MixedThreshold";
        case RegimeTag::OffsetBounded: return "OffsetBounded";
    }
    return "unknown";
}

/// Qualitative regime of a (K, M) certificate, with the payload that makes
/// the tag actionable: the small-distance band for SuperUnit, the threshold
/// for MixedThreshold, the image diameter bound for BoundedImage.
struct Regime {
    RegimeTag tag;
    std::optional<Interval> band;       // SuperUnit only
    std::optional<double> threshold;    // MixedThreshold: M/K; BoundedImage: M;
                                        // OffsetBounded: +inf
    // K = 1, M = 0: strictness of the inequality would make the map weakly
    // contractive, but that is a property of the map, not of (K, M), so it
    // is flagged on StrictContraction rather than classified separately.
    bool weakly_contractive_boundary = false;
};

/// Decision table over (K, M). Total and mutually exclusive on
/// {K >= 0} x {M >= 0}.
inline Regime classify_regime(const ContractionParams& p) {
    if (p.M == 0.0) {
        if (p.K == 0.0) return {RegimeTag::NonExpansive, {}, {}, false};
        if (p.K <= 1.0) {
            return {RegimeTag::StrictContraction, {}, {}, p.K == 1.0};
        }
        // K > 1, M = 0: the bound is negative for every positive distance;
        // degenerate case of the small-distance band, which is empty here.
        return {RegimeTag::SuperUnit, Interval{0.0, 0.0}, {}, false};
    }
    // M > 0
    if (p.K == 0.0) {
        return {RegimeTag::OffsetBounded, {},
                std::numeric_limits<double>::infinity(), false};
    }
    if (p.K < 1.0) {
        return {RegimeTag::MixedThreshold, {}, p.threshold(), false};
    }
    if (p.K == 1.0) {
        return {RegimeTag::BoundedImage, {}, p.M, false};
    }
    return {RegimeTag::SuperUnit, Interval{0.0, p.M / (p.K - 1.0)}, {}, false};
}

/// One observed pair of distances: d(x, y) and d(Tx, Ty).
struct DistanceSample {
    double d_xy;
    double d_TxTy;

    DistanceSample(double before, double after) : d_xy(before), d_TxTy(after) {
        if (!std::isfinite(d_xy) || !std::isfinite(d_TxTy) || d_xy < 0.0 ||
            d_TxTy < 0.0) {
            throw std::invalid_argument(
                "DistanceSample: distances must be finite and >= 0");
        }
    }
};

/// The bound the constraint puts on the image distance at pair distance d_xy.
inline double pair_bound(double d_xy, const ContractionParams& p) {
    return (1.0 - p.K) * d_xy + p.M;
}

/// True iff the sample satisfies d_TxTy <= (1 - K) * d_xy + M + tol.
inline bool verify_pair(const DistanceSample& s, const ContractionParams& p,
                        double tol = 0.0) {
    return s.d_TxTy <= pair_bound(s.d_xy, p) + tol;
}

enum class PairVerdict {
    WeaklyContractiveGuaranteed,
    NonExpansiveGuaranteed,
    Indeterminate,
};

[[nodiscard]] constexpr const char* to_string(PairVerdict v) noexcept {
    switch (v) {
        case PairVerdict::WeaklyContractiveGuaranteed:
            return "WeaklyContractiveGuaranteed";
        case PairVerdict::NonExpansiveGuaranteed:
            return "NonExpansiveGuaranteed";
        case PairVerdict::Indeterminate: return "Indeterminate";
    }
    return "unknown";
}

/// Verdict for one pair from its distance alone, by position against the
/// threshold M/K. Below the threshold nothing is guaranteed: the map may be
/// expansive there, but the constraint does not imply that it is.
inline PairVerdict classify_pair(double d_xy, const ContractionParams& p) {
    if (!(d_xy >= 0.0) || !std::isfinite(d_xy)) {
        throw std::invalid_argument("classify_pair: d_xy must be finite and >= 0");
    }
    if (p.K == 0.0) {
        throw std::domain_error(
            "classify_pair: threshold undefined for K = 0; "
            "use regime OffsetBounded semantics");
    }
    const double t = p.threshold();
    // Exact >=/< is meaningless in floats; boundary equality at relative 1e-12.
    const double eq_tol = 1e-12 * std::max(std::abs(d_xy), std::abs(t));
    if (std::abs(d_xy - t) <= eq_tol) return PairVerdict::NonExpansiveGuaranteed;
    if (d_xy > t) return PairVerdict::WeaklyContractiveGuaranteed;
    return PairVerdict::Indeterminate;
}

/// Tightest M making every sample satisfy the constraint at the given K.
/// Clamped at 0 because the certificate requires M >= 0. The result is the
/// minimal double under float evaluation: each per-sample candidate
/// d_TxTy - (1-K)*d_xy is nudged up by ulps until verify_pair holds at
/// tol = 0, so the round-trip is exact and the fit stays monotone in K.
inline double fit_min_M(double K, std::span<const DistanceSample> samples) {
    if (!std::isfinite(K) || K < 0.0 || K > 1.0) {
        throw std::invalid_argument("fit_min_M: K must lie in [0, 1]");
    }
    if (samples.empty()) {
        throw std::invalid_argument("fit_min_M: samples must be nonempty");
    }
    double m = 0.0;
    for (const DistanceSample& s : samples) {
        const double contracted = (1.0 - K) * s.d_xy;
        double candidate = s.d_TxTy - contracted;
        if (candidate <= 0.0) continue;  // m = 0 already covers this sample
        while (contracted + candidate < s.d_TxTy) {
            candidate = std::nextafter(candidate,
                                       std::numeric_limits<double>::infinity());
        }
        m = std::max(m, candidate);
    }
    return m;
}

/// Sweeps fit_min_M over a K grid: the certificate trade-off curve.
/// The fitted offset is non-decreasing in K.
inline std::vector<ContractionParams> fit_frontier(
    std::span<const DistanceSample> samples, std::span<const double> k_grid) {
    if (samples.empty()) {
        throw std::invalid_argument("fit_frontier: samples must be nonempty");
    }
    if (k_grid.empty()) {
        throw std::invalid_argument("fit_frontier: k_grid must be nonempty");
    }
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        if (!std::isfinite(k_grid[i]) || k_grid[i] < 0.0 || k_grid[i] >= 1.0) {
            throw std::invalid_argument("fit_frontier: grid values must lie in [0, 1)");
        }
        if (i > 0 && !(k_grid[i] > k_grid[i - 1])) {
            throw std::invalid_argument("fit_frontier: grid must be strictly increasing");
        }
    }
    std::vector<ContractionParams> frontier;
    frontier.reserve(k_grid.size());
    for (double k : k_grid) {
        frontier.emplace_back(k, fit_min_M(k, samples));
    }
    return frontier;
}

/// Default frontier grid: 64 uniform points, K = i/64 for i = 0..63.
inline std::vector<double> default_k_grid() {
    std::vector<double> grid(64);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = static_cast<double>(i) / 64.0;
    }
    return grid;
}

}  // namespace quasicontract
