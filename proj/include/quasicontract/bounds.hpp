#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasicontract/constraint.hpp"

namespace quasicontract {

namespace detail {

inline void require_open_unit_K(const ContractionParams& p, const char* where) {
    if (!(p.K > 0.0 && p.K < 1.0)) {
        throw std::domain_error(std::string(where) + ": requires K in (0, 1)");
    }
}

inline void require_nonneg_finite(double v, const char* where, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
        throw std::invalid_argument(std::string(where) + ": " + name +
                                    " must be finite and >= 0");
    }
}

}  // namespace detail

/// Closed-form iterate distance bound
///
///     B_j = (1-K)^j * d0 + (M/K) * (1 - (1-K)^j)
///
/// valid for K in (0, 1). B_j decays geometrically from d0 to M/K.
inline double bound_closed_form(std::size_t j, double d0,
                                const ContractionParams& p) {
    detail::require_open_unit_K(p, "bound_closed_form");
    detail::require_nonneg_finite(d0, "bound_closed_form", "d0");
    // (1-K)^j underflows to 0 for K near 1 and large j; the bound then
    // saturates at M/K, which is the correct limit.
    const double q = std::pow(1.0 - p.K, static_cast<double>(j));
    return q * d0 + (p.M / p.K) * (1.0 - q);
}

/// Same bound by iterating B <- (1-K)*B + M exactly j times from d0.
/// Serves as the independent route against bound_closed_form.
inline double bound_recurrence(std::size_t j, double d0,
                               const ContractionParams& p) {
    detail::require_open_unit_K(p, "bound_recurrence");
    detail::require_nonneg_finite(d0, "bound_recurrence", "d0");
    double b = d0;
    for (std::size_t i = 0; i < j; ++i) {
        b = (1.0 - p.K) * b + p.M;
    }
    return b;
}

/// Bound sequence B_0..B_n built by the recurrence.
struct BoundTrajectory {
    double d0;
    ContractionParams params;
    std::vector<double> values;
};

inline BoundTrajectory make_bound_trajectory(double d0, const ContractionParams& p,
                                             std::size_t n) {
    detail::require_open_unit_K(p, "make_bound_trajectory");
    detail::require_nonneg_finite(d0, "make_bound_trajectory", "d0");
    BoundTrajectory t{d0, p, {}};
    t.values.reserve(n + 1);
    double b = d0;
    t.values.push_back(b);
    for (std::size_t i = 0; i < n; ++i) {
        b = (1.0 - p.K) * b + p.M;
        t.values.push_back(b);
    }
    return t;
}

/// Asymptotic ceiling M/K on iterate pair distances. The transient factor
/// of the closed form vanishes as j grows, leaving the limit value M/K.
inline double ultimate_bound(const ContractionParams& p) {
    if (p.K == 0.0) {
        throw std::domain_error("ultimate_bound: unbounded for K = 0");
    }
    if (!(p.K < 1.0)) {
        throw std::domain_error("ultimate_bound: requires K in (0, 1)");
    }
    return p.M / p.K;  // 0 in the pure-contraction case M = 0
}

/// R + M/K: a single bound valid for every iterate index and every pair
/// with initial distance <= R.
inline double uniform_iterate_bound(double R, const ContractionParams& p) {
    detail::require_open_unit_K(p, "uniform_iterate_bound");
    detail::require_nonneg_finite(R, "uniform_iterate_bound", "R");
    return R + p.M / p.K;
}

/// Query: after how many steps is every pair started within diameter R
/// guaranteed inside the ultimate bound plus slack epsilon?
struct PermanenceQuery {
    double R;
    double epsilon;
    ContractionParams params;
};

/// Minimal j0 >= 0 with B_j <= M/K + epsilon for all j >= j0 (B_j the
/// closed-form bound started at R). Zero when R is already within the
/// target; otherwise ceil(ln(eps/(R - M/K)) / ln(1-K)), then adjusted so
/// minimality holds exactly against bound_closed_form, and cross-checked
/// by a recurrence scan.
inline std::size_t permanence_index(const PermanenceQuery& q) {
    detail::require_open_unit_K(q.params, "permanence_index");
    detail::require_nonneg_finite(q.R, "permanence_index", "R");
    if (!(q.epsilon > 0.0) || !std::isfinite(q.epsilon)) {
        throw std::invalid_argument("permanence_index: epsilon must be finite and > 0");
    }
    constexpr std::size_t scan_cap = 1000000;

    const double limit = q.params.M / q.params.K;
    const double target = limit + q.epsilon;
    if (q.R <= target) {
        return 0;  // B_j is monotone from R toward M/K < target
    }

    // R > target > M/K: B_j decreases strictly, so a minimal index exists.
    const double est =
        std::ceil(std::log(q.epsilon / (q.R - limit)) / std::log(1.0 - q.params.K));
    if (!(est < static_cast<double>(scan_cap))) {
        throw std::runtime_error(
            "permanence_index: index exceeds the 1e6 scan cap (epsilon too small)");
    }
    std::size_t j0 = est > 0.0 ? static_cast<std::size_t>(est) : 0;

    // Make minimality exact under bound_closed_form: float rounding in the
    // log quotient can land one step off.
    while (bound_closed_form(j0, q.R, q.params) > target) {
        if (++j0 > scan_cap) {
            throw std::runtime_error("permanence_index: exceeded the 1e6 scan cap");
        }
    }
    while (j0 > 0 && bound_closed_form(j0 - 1, q.R, q.params) <= target) {
        --j0;
    }

    // Recurrence scan cross-check. The two routes agree to ~1e-12, which
    // allows at most one step of disagreement on razor-thin targets.
    double b = q.R;
    std::size_t j_scan = 0;
    while (b > target) {
        b = (1.0 - q.params.K) * b + q.params.M;
        if (++j_scan > scan_cap) {
            throw std::runtime_error("permanence_index: exceeded the 1e6 scan cap");
        }
    }
    const std::size_t lo = j0 > 0 ? j0 - 1 : 0;
    if (j_scan < lo || j_scan > j0 + 1) {
        throw std::runtime_error(
            "permanence_index: closed form and recurrence scan disagree");
    }
    return j0;
}

}  // namespace quasicontract
