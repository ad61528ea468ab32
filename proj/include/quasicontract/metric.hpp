#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace quasicontract {

/// A point of the state space: a finite-dimensional vector of finite reals.
///
/// Invariants enforced at construction: dimension >= 1 and every
/// coordinate finite (no NaN/inf ever enters the library through a Point).
class Point {
public:
    explicit Point(std::vector<double> coords) : coords_(std::move(coords)) {
        validate();
    }

    Point(std::initializer_list<double> coords) : coords_(coords) { validate(); }

    [[nodiscard]] std::size_t dim() const noexcept { return coords_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return coords_[i]; }
    [[nodiscard]] const std::vector<double>& coords() const noexcept { return coords_; }

    friend bool operator==(const Point& a, const Point& b) noexcept {
        return a.coords_ == b.coords_;
    }

private:
    void validate() const {
        if (coords_.empty()) {
            throw std::invalid_argument("Point: dimension must be >= 1");
        }
        for (double c : coords_) {
            if (!std::isfinite(c)) {
                throw std::invalid_argument("Point: coordinates must be finite");
            }
        }
    }

    std::vector<double> coords_;
};

enum class NormKind { L1, L2, LInf };

[[nodiscard]] constexpr const char* to_string(NormKind k) noexcept {
    switch (k) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        case NormKind::LInf: return "linf";
    }
    return "unknown";
}

/// Distance function on Points: one of the built-in p-norms (p = 1, 2, inf)
/// or a user-supplied function.
///
/// Built-in norms are computed from |p_i - q_i|, so they are symmetric to
/// exact bit equality. User-supplied functions are taken as-is; their
/// metric axioms are a hypothesis that check_metric_axioms can probe.
class Metric {
public:
    using DistanceFn = std::function<double(const Point&, const Point&)>;

    static Metric l1() { return Metric(NormKind::L1); }
    static Metric l2() { return Metric(NormKind::L2); }
    static Metric linf() { return Metric(NormKind::LInf); }

    static Metric custom(DistanceFn fn, std::string name = "custom") {
        if (!fn) {
            throw std::invalid_argument("Metric: custom distance function is empty");
        }
        Metric m;
        m.fn_ = std::move(fn);
        m.name_ = std::move(name);
        return m;
    }

    static Metric from_name(const std::string& name) {
        if (name == "l1") return l1();
        if (name == "l2") return l2();
        if (name == "linf") return linf();
        throw std::invalid_argument("Metric: unknown metric name '" + name + "'");
    }

    [[nodiscard]] bool is_p_norm() const noexcept { return kind_.has_value(); }

    [[nodiscard]] NormKind norm_kind() const {
        if (!kind_) {
            throw std::logic_error("Metric: norm_kind() called on a custom metric");
        }
        return *kind_;
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }

    [[nodiscard]] double operator()(const Point& p, const Point& q) const {
        if (p.dim() != q.dim()) {
            throw std::invalid_argument("distance: points must share one dimension");
        }
        if (!kind_) {
            return fn_(p, q);
        }
        switch (*kind_) {
            case NormKind::L1: {
                double s = 0.0;
                for (std::size_t i = 0; i < p.dim(); ++i) s += std::abs(p[i] - q[i]);
                return s;
            }
            case NormKind::L2: {
                double s = 0.0;
                for (std::size_t i = 0; i < p.dim(); ++i) {
                    const double d = std::abs(p[i] - q[i]);
                    s += d * d;
                }
                return std::sqrt(s);
            }
            case NormKind::LInf: {
                double s = 0.0;
                for (std::size_t i = 0; i < p.dim(); ++i) {
                    s = std::max(s, std::abs(p[i] - q[i]));
                }
                return s;
            }
        }
        throw std::logic_error("Metric: unreachable");
    }

private:
    Metric() = default;
    explicit Metric(NormKind k) : kind_(k), name_(to_string(k)) {}

    std::optional<NormKind> kind_;
    DistanceFn fn_;
    std::string name_;
};

inline double distance(const Point& p, const Point& q, const Metric& m) {
    return m(p, q);
}

/// Outcome of sampling-based metric axiom checks over a point set.
struct AxiomReport {
    struct NonNegativityViolation {
        std::size_t i, j;
        double value;
    };
    struct IdentityViolation {
        std::size_t i;
        double value;  // d(p_i, p_i), expected 0
    };
    struct SymmetryViolation {
        std::size_t i, j;
        double forward, backward;
    };
    struct TriangleViolation {
        std::size_t i, j, k;
        double excess;  // d(i,k) - d(i,j) - d(j,k)
    };

    std::vector<NonNegativityViolation> non_negativity;
    std::vector<IdentityViolation> identity;
    std::vector<SymmetryViolation> symmetry;
    std::vector<TriangleViolation> triangle;

    [[nodiscard]] std::size_t violation_count() const noexcept {
        return non_negativity.size() + identity.size() + symmetry.size() +
               triangle.size();
    }
    [[nodiscard]] bool ok() const noexcept { return violation_count() == 0; }
};

/// Probes the metric axioms on every pair and ordered triple of the given
/// points. Sampling-based: a clean report certifies the axioms on these
/// points only, which is what guards user-supplied distance functions.
inline AxiomReport check_metric_axioms(std::span<const Point> points,
                                       const Metric& m, double tol = 1e-9) {
    if (points.size() < 3) {
        throw std::invalid_argument("check_metric_axioms: need at least 3 points");
    }
    if (!(tol >= 0.0) || !std::isfinite(tol)) {
        throw std::invalid_argument("check_metric_axioms: tol must be finite and >= 0");
    }
    const std::size_t n = points.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (points[i].dim() != points[0].dim()) {
            throw std::invalid_argument("check_metric_axioms: points must share one dimension");
        }
    }

    std::vector<double> d(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            d[i * n + j] = m(points[i], points[j]);
        }
    }
    const auto dist = [&](std::size_t i, std::size_t j) { return d[i * n + j]; };

    AxiomReport report;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(std::abs(dist(i, i)) <= tol)) {
            report.identity.push_back({i, dist(i, i)});
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!(dist(i, j) >= -tol)) {
                report.non_negativity.push_back({i, j, dist(i, j)});
            }
            if (!(std::abs(dist(i, j) - dist(j, i)) <= tol)) {
                report.symmetry.push_back({i, j, dist(i, j), dist(j, i)});
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                const double excess = dist(i, k) - dist(i, j) - dist(j, k);
                if (!(excess <= tol)) {
                    report.triangle.push_back({i, j, k, excess});
                }
            }
        }
    }
    return report;
}

}  // namespace quasicontract
