#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quasicontract/bounds.hpp"
#include "quasicontract/constraint.hpp"
#include "quasicontract/metric.hpp"

namespace quasicontract {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Uniform in [-1, 1], deterministic across platforms.
inline double to_signed_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

}  // namespace detail

/// A self-map of the state space. apply may depend on the step index (the
/// sampled-flow maps do); it must be deterministic given (point, index).
struct SelfMap {
    std::function<Point(const Point&, std::size_t)> apply;
    std::string descriptor;
};

/// Paired iterate sequences with their per-step distances.
struct OrbitRecord {
    std::vector<Point> x_orbit;
    std::vector<Point> y_orbit;
    std::vector<double> distances;
    Metric metric;
};

/// Runs both orbits for n steps and records the n+1 distances
/// d(T^j x, T^j y), j = 0..n. The two-map form exists for uncertain maps
/// where each trajectory carries its own disturbance realization.
inline OrbitRecord iterate_pair(const SelfMap& map_x, const SelfMap& map_y,
                                const Point& x0, const Point& y0, std::size_t n,
                                const Metric& metric) {
    if (n < 1) {
        throw std::invalid_argument("iterate_pair: n must be >= 1");
    }
    if (x0.dim() != y0.dim()) {
        throw std::invalid_argument("iterate_pair: x0 and y0 must share one dimension");
    }
    OrbitRecord rec{{}, {}, {}, metric};
    rec.x_orbit.reserve(n + 1);
    rec.y_orbit.reserve(n + 1);
    rec.distances.reserve(n + 1);
    rec.x_orbit.push_back(x0);
    rec.y_orbit.push_back(y0);
    rec.distances.push_back(metric(x0, y0));
    for (std::size_t j = 0; j < n; ++j) {
        try {
            rec.x_orbit.push_back(map_x.apply(rec.x_orbit.back(), j));
            rec.y_orbit.push_back(map_y.apply(rec.y_orbit.back(), j));
        } catch (const std::exception& e) {
            throw std::runtime_error("iterate_pair: map failed at step " +
                                     std::to_string(j + 1) + ": " + e.what());
        }
        rec.distances.push_back(metric(rec.x_orbit.back(), rec.y_orbit.back()));
    }
    return rec;
}

inline OrbitRecord iterate_pair(const SelfMap& map, const Point& x0,
                                const Point& y0, std::size_t n,
                                const Metric& metric) {
    return iterate_pair(map, map, x0, y0, n, metric);
}

struct BoundViolation {
    std::size_t j;
    double observed;
    double bound;
};

/// Checks every recorded distance against the closed-form bound started at
/// the record's initial distance. Empty result means full domination.
inline std::vector<BoundViolation> check_bound_domination(
    const OrbitRecord& rec, const ContractionParams& p, double tol) {
    detail::require_open_unit_K(p, "check_bound_domination");
    if (rec.distances.empty()) {
        throw std::invalid_argument("check_bound_domination: empty record");
    }
    std::vector<BoundViolation> violations;
    const double d0 = rec.distances.front();
    for (std::size_t j = 0; j < rec.distances.size(); ++j) {
        const double bound = bound_closed_form(j, d0, p);
        if (rec.distances[j] > bound + tol) {
            violations.push_back({j, rec.distances[j], bound});
        }
    }
    return violations;
}

/// Smallest j such that the record's distances stay <= threshold from j to
/// the end; nullopt when the tail never settles. Tail semantics: a finite
/// record certifies permanence only up to its horizon.
inline std::optional<std::size_t> empirical_entry_index(const OrbitRecord& rec,
                                                        double threshold) {
    if (rec.distances.empty()) {
        throw std::invalid_argument("empirical_entry_index: empty record");
    }
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw std::invalid_argument("empirical_entry_index: threshold must be finite and > 0");
    }
    std::size_t j = rec.distances.size();
    while (j > 0 && rec.distances[j - 1] <= threshold) {
        --j;
    }
    if (j == rec.distances.size()) return std::nullopt;
    return j;
}

struct FixedPointResult {
    Point point;
    std::size_t iterations;
    double residual;
};

/// Iterates the map from x0 until d(x, Tx) <= tol.
/// Throws on non-convergence, carrying the last residual in the message.
inline FixedPointResult fixed_point_iteration(const SelfMap& map, const Point& x0,
                                              const Metric& metric,
                                              double tol = 1e-10,
                                              std::size_t max_iter = 100000) {
    if (!(tol > 0.0) || !std::isfinite(tol)) {
        throw std::invalid_argument("fixed_point_iteration: tol must be finite and > 0");
    }
    if (max_iter < 1) {
        throw std::invalid_argument("fixed_point_iteration: max_iter must be >= 1");
    }
    Point x = x0;
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < max_iter; ++k) {
        Point next = map.apply(x, k);
        residual = metric(x, next);
        if (residual <= tol) {
            return {x, k, residual};
        }
        x = std::move(next);
    }
    throw std::runtime_error(
        "fixed_point_iteration: no convergence after " + std::to_string(max_iter) +
        " iterations (last residual " + std::to_string(residual) + ")");
}

/// Builds T(x) = (1-K)*x + M*u(x) with u a seeded noise field bounded by
/// ||u||_1 <= 1/2, hence
///
///     d(Tx,Ty) <= (1-K)*d(x,y) + M*(||u(x)|| + ||u(y)||) <= (1-K)*d(x,y) + M
///
/// in every supported p-norm. u is piecewise constant on a coarse lattice
/// (cell width 1/2) and deliberately discontinuous; continuity is never part
/// of the constraint. Two maps with equal seeds are identical.
inline SelfMap make_compliant_test_map(const ContractionParams& params,
                                       std::size_t dim, std::uint64_t seed) {
    detail::require_open_unit_K(params, "make_compliant_test_map");
    if (dim < 1) {
        throw std::invalid_argument("make_compliant_test_map: dim must be >= 1");
    }
    const double K = params.K;
    const double M = params.M;
    auto apply = [K, M, dim, seed](const Point& x, std::size_t) -> Point {
        if (x.dim() != dim) {
            throw std::invalid_argument("compliant test map: wrong point dimension");
        }
        std::uint64_t h = seed ^ 0xA0761D6478BD642Full;
        for (std::size_t i = 0; i < dim; ++i) {
            const auto cell = static_cast<std::int64_t>(std::floor(x[i] / 0.5));
            h ^= static_cast<std::uint64_t>(cell) + 0x9E3779B97F4A7C15ull +
                 (h << 6) + (h >> 2);
        }
        std::vector<double> w(dim);
        double l1 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            w[i] = detail::to_signed_unit(detail::splitmix64(h));
            l1 += std::abs(w[i]);
        }
        const double scale = 0.5 / std::max(1.0, l1);
        std::vector<double> out(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            out[i] = (1.0 - K) * x[i] + M * scale * w[i];
        }
        return Point(std::move(out));
    };
    return {std::move(apply),
            "compliant(K=" + std::to_string(K) + ",M=" + std::to_string(M) +
                ",seed=" + std::to_string(seed) + ")"};
}

}  // namespace quasicontract
