#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "quasicontract/constraint.hpp"
#include "quasicontract/linalg.hpp"
#include "quasicontract/metric.hpp"
#include "quasicontract/orbit.hpp"

namespace quasicontract {

/// Max real part over the eigenvalues of A. Negative iff A is a stability
/// matrix. Desk scale only (n <= 16).
inline double spectral_abscissa(const Eigen::MatrixXd& A) {
    linalg::require_square_finite(A, "spectral_abscissa");
    if (A.rows() > 16) {
        throw std::invalid_argument("spectral_abscissa: supported up to 16x16");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error(
            "spectral_abscissa: eigenvalue iteration did not converge "
            "(Eigen::EigenSolver reported failure)");
    }
    return solver.eigenvalues().real().maxCoeff();
}

/// Exponential envelope ||e^{At}|| <= K0 * e^{-alpha0 * t}.
struct EnvelopeFit {
    double K0;      // gain, >= 1 for induced norms
    double alpha0;  // decay rate, > 0

    EnvelopeFit(double gain, double rate) : K0(gain), alpha0(rate) {
        if (!std::isfinite(K0) || !std::isfinite(alpha0) || K0 < 1.0 ||
            alpha0 <= 0.0) {
            throw std::invalid_argument(
                "EnvelopeFit: requires K0 >= 1 and alpha0 > 0");
        }
    }
};

namespace detail {

inline NormKind require_p_norm(const Metric& m, const char* where) {
    if (!m.is_p_norm()) {
        throw std::invalid_argument(std::string(where) +
                                    ": requires a p-norm metric (l1, l2, linf)");
    }
    return m.norm_kind();
}

/// Max of f over [lo, hi] refined by golden-section around the grid argmax.
/// The grid locates the bracket; the refinement removes the grid bias so a
/// finer validation grid cannot sit above the fitted gain.
template <typename F>
double grid_max_refined(F&& f, double lo, double hi, std::size_t grid) {
    double best = f(lo);
    std::size_t best_i = 0;
    for (std::size_t i = 1; i <= grid; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(grid);
        const double v = f(t);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    const double step = (hi - lo) / static_cast<double>(grid);
    double a = std::max(lo, lo + step * (static_cast<double>(best_i) - 1.0));
    double b = std::min(hi, lo + step * (static_cast<double>(best_i) + 1.0));
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(b));
         ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return std::max({best, f1, f2});
}

}  // namespace detail

/// Fits (K0, alpha0): the rate is the spectral abscissa shaved by a 1e-3
/// relative margin (so the gain stays finite), the gain is the sup of
/// ||e^{At}|| * e^{alpha0 t} over the horizon, clamped >= 1. The fit is
/// validated on a 10x finer grid before being returned; the horizon must
/// cover the transient of non-normal systems.
inline EnvelopeFit envelope_fit(const Eigen::MatrixXd& A, const Metric& metric,
                                double horizon, std::size_t grid) {
    const NormKind kind = detail::require_p_norm(metric, "envelope_fit");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("envelope_fit: horizon must be finite and > 0");
    }
    if (grid < 100) {
        throw std::invalid_argument("envelope_fit: grid must be >= 100");
    }
    const double abscissa = spectral_abscissa(A);
    if (!(abscissa < 0.0)) {
        throw std::domain_error("envelope_fit: matrix is not a stability matrix");
    }
    const double alpha0 = -abscissa * (1.0 - 1e-3);

    const auto growth = [&](double t) {
        return linalg::induced_norm(linalg::expm(A * t), kind) *
               std::exp(alpha0 * t);
    };
    const double k0 = std::max(1.0, detail::grid_max_refined(growth, 0.0, horizon, grid));
    EnvelopeFit fit(k0, alpha0);

    const std::size_t fine = grid * 10;
    for (std::size_t i = 0; i <= fine; ++i) {
        const double t = horizon * static_cast<double>(i) / static_cast<double>(fine);
        const double norm = linalg::induced_norm(linalg::expm(A * t), kind);
        if (norm > fit.K0 * std::exp(-fit.alpha0 * t) + 1e-9) {
            throw std::runtime_error(
                "envelope_fit: validation failed at t = " + std::to_string(t) +
                "; horizon too short");
        }
    }
    return fit;
}

/// Smallest sampling period h0 giving contraction offset K_target:
/// h0 = ln(K0 / (1 - K_target)) / alpha0, so 1 - K0*e^{-alpha0*h0} = K_target.
inline double min_sampling_period(const EnvelopeFit& env, double K_target) {
    if (!(K_target > 0.0 && K_target < 1.0)) {
        throw std::invalid_argument("min_sampling_period: K_target must lie in (0, 1)");
    }
    return std::log(env.K0 / (1.0 - K_target)) / env.alpha0;
}

/// Certificate induced by sampling at period h:
/// K = 1 - K0*e^{-alpha0*h}, M = 2*K0*M0/alpha0 (the minimal admissible
/// offset; anything larger is also valid but gives looser bounds).
inline ContractionParams contraction_params(const EnvelopeFit& env, double M0,
                                            double h) {
    if (!std::isfinite(M0) || M0 < 0.0) {
        throw std::invalid_argument("contraction_params: M0 must be finite and >= 0");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw std::invalid_argument("contraction_params: h must be finite and > 0");
    }
    const double K = 1.0 - env.K0 * std::exp(-env.alpha0 * h);
    if (!(K > 0.0)) {
        throw std::domain_error(
            "contraction_params: sampling period below h0 for any K > 0");
    }
    return {K, 2.0 * env.K0 * M0 / env.alpha0};
}

/// Bounded disturbance signal eta(t, x) with ||eta|| <= M0 by construction.
/// The bound is enforced in the 1-norm, which dominates every supported
/// p-norm, so the essential-sup hypothesis holds under any of them.
class Perturbation {
public:
    static Perturbation zero() {
        Perturbation p;
        p.kind_ = Kind::Zero;
        return p;
    }

    /// eta(t) = a * cos(2*pi*frequency*t), amplitude clamped into the M0
    /// ball. Cosine phase, so frequency 0 degenerates to the constant
    /// signal a.
    static Perturbation sinusoidal(std::vector<double> amplitude, double frequency,
                                   double M0) {
        if (amplitude.empty()) {
            throw std::invalid_argument("Perturbation: amplitude must be nonempty");
        }
        if (!std::isfinite(frequency)) {
            throw std::invalid_argument("Perturbation: frequency must be finite");
        }
        if (!std::isfinite(M0) || M0 < 0.0) {
            throw std::invalid_argument("Perturbation: M0 must be finite and >= 0");
        }
        double l1 = 0.0;
        for (double a : amplitude) {
            if (!std::isfinite(a)) {
                throw std::invalid_argument("Perturbation: amplitude must be finite");
            }
            l1 += std::abs(a);
        }
        Perturbation p;
        p.kind_ = Kind::Sinusoidal;
        p.amplitude_ = std::move(amplitude);
        if (l1 > M0 && l1 > 0.0) {
            const double s = M0 / l1;
            for (double& a : p.amplitude_) a *= s;
        }
        p.frequency_ = frequency;
        p.bound_ = M0;
        return p;
    }

    /// Piecewise-constant seeded noise: one draw from the M0 ball per time
    /// cell. Deterministic in (seed, t); independent realizations come from
    /// distinct seeds.
    static Perturbation seeded_random(double M0, std::uint64_t seed,
                                      double time_cell = 0.0625) {
        if (!std::isfinite(M0) || M0 < 0.0) {
            throw std::invalid_argument("Perturbation: M0 must be finite and >= 0");
        }
        if (!(time_cell > 0.0)) {
            throw std::invalid_argument("Perturbation: time_cell must be > 0");
        }
        Perturbation p;
        p.kind_ = Kind::SeededRandom;
        p.bound_ = M0;
        p.seed_ = seed;
        p.time_cell_ = time_cell;
        return p;
    }

    [[nodiscard]] double bound() const noexcept { return bound_; }

    [[nodiscard]] const char* name() const noexcept {
        switch (kind_) {
            case Kind::Zero: return "zero";
            case Kind::Sinusoidal: return "sinusoidal";
            case Kind::SeededRandom: return "random";
        }
        return "unknown";
    }

    [[nodiscard]] Eigen::VectorXd operator()(double t,
                                             const Eigen::VectorXd& x) const {
        switch (kind_) {
            case Kind::Zero: return Eigen::VectorXd::Zero(x.size());
            case Kind::Sinusoidal: {
                if (static_cast<std::size_t>(x.size()) != amplitude_.size()) {
                    throw std::invalid_argument(
                        "Perturbation: amplitude dimension mismatch");
                }
                Eigen::VectorXd v(x.size());
                const double s = std::cos(2.0 * std::numbers::pi * frequency_ * t);
                for (Eigen::Index i = 0; i < x.size(); ++i) {
                    v(i) = amplitude_[static_cast<std::size_t>(i)] * s;
                }
                return v;
            }
            case Kind::SeededRandom: {
                const auto cell =
                    static_cast<std::int64_t>(std::floor(t / time_cell_));
                std::uint64_t h = seed_ ^ 0xE7037ED1A0B428DBull;
                h ^= static_cast<std::uint64_t>(cell) + 0x9E3779B97F4A7C15ull +
                     (h << 6) + (h >> 2);
                Eigen::VectorXd w(x.size());
                double l1 = 0.0;
                for (Eigen::Index i = 0; i < x.size(); ++i) {
                    w(i) = detail::to_signed_unit(detail::splitmix64(h));
                    l1 += std::abs(w(i));
                }
                const double s = l1 > 0.0 ? bound_ * std::min(1.0, 1.0 / l1) : 0.0;
                return s * w;
            }
        }
        throw std::logic_error("Perturbation: unreachable");
    }

private:
    enum class Kind { Zero, Sinusoidal, SeededRandom };

    Perturbation() = default;

    Kind kind_ = Kind::Zero;
    std::vector<double> amplitude_;
    double frequency_ = 0.0;
    double bound_ = 0.0;
    std::uint64_t seed_ = 0;
    double time_cell_ = 0.0625;
};

/// Stable linear system dx/dt = A x + eta(t, x) with bounded disturbance,
/// observed through a norm-induced distance, sampled at period h.
class LtiSystem {
public:
    LtiSystem(Eigen::MatrixXd A, double M0, Metric metric, double h)
        : A_(std::move(A)), M0_(M0), metric_(std::move(metric)), h_(h) {
        detail::require_p_norm(metric_, "LtiSystem");
        linalg::require_square_finite(A_, "LtiSystem");
        if (!std::isfinite(M0_) || M0_ < 0.0) {
            throw std::invalid_argument("LtiSystem: M0 must be finite and >= 0");
        }
        if (!(h_ > 0.0) || !std::isfinite(h_)) {
            throw std::invalid_argument("LtiSystem: h must be finite and > 0");
        }
        if (!(spectral_abscissa(A_) < 0.0)) {
            throw std::domain_error("LtiSystem: A must be a stability matrix");
        }
    }

    [[nodiscard]] const Eigen::MatrixXd& A() const noexcept { return A_; }
    [[nodiscard]] double M0() const noexcept { return M0_; }
    [[nodiscard]] const Metric& metric() const noexcept { return metric_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] std::size_t dim() const noexcept {
        return static_cast<std::size_t>(A_.rows());
    }

private:
    Eigen::MatrixXd A_;
    double M0_;
    Metric metric_;
    double h_;
};

/// Advances the state by one sampling period with classic fixed-step
/// fourth-order Runge-Kutta, h/substeps per internal step; the disturbance
/// is evaluated at the substep stage times. Deterministic.
inline Point integrate_step(const LtiSystem& sys, const Point& x, double t0,
                            const Perturbation& pert, std::size_t substeps) {
    if (substeps < 1) {
        throw std::invalid_argument("integrate_step: substeps must be >= 1");
    }
    if (x.dim() != sys.dim()) {
        throw std::invalid_argument("integrate_step: state dimension mismatch");
    }
    const double dt = sys.h() / static_cast<double>(substeps);
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.dim()));
    for (std::size_t i = 0; i < x.dim(); ++i) {
        v(static_cast<Eigen::Index>(i)) = x[i];
    }
    const Eigen::MatrixXd& A = sys.A();
    const auto f = [&](double t, const Eigen::VectorXd& state) {
        return (A * state + pert(t, state)).eval();
    };
    for (std::size_t s = 0; s < substeps; ++s) {
        const double t = t0 + dt * static_cast<double>(s);
        const Eigen::VectorXd k1 = f(t, v);
        const Eigen::VectorXd k2 = f(t + dt / 2.0, v + (dt / 2.0) * k1);
        const Eigen::VectorXd k3 = f(t + dt / 2.0, v + (dt / 2.0) * k2);
        const Eigen::VectorXd k4 = f(t + dt, v + dt * k3);
        v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!v.allFinite()) {
        throw std::runtime_error(
            "integrate_step: non-finite state produced; increase substeps");
    }
    std::vector<double> out(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i) {
        out[i] = v(static_cast<Eigen::Index>(i));
    }
    return Point(std::move(out));
}

/// The sampled self-map T_h: state at time k*h to state at (k+1)*h.
inline SelfMap sampled_map(const LtiSystem& sys, const Perturbation& pert,
                           std::size_t substeps) {
    if (substeps < 1) {
        throw std::invalid_argument("sampled_map: substeps must be >= 1");
    }
    auto apply = [sys, pert, substeps](const Point& p, std::size_t k) {
        return integrate_step(sys, p, sys.h() * static_cast<double>(k), pert,
                              substeps);
    };
    return {std::move(apply), std::string("sampled(h=") + std::to_string(sys.h()) +
                                  ",pert=" + pert.name() + ")"};
}

}  // namespace quasicontract
