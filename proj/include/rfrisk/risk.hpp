#pragma once

// Asymptotic bias / variance / risk of random-features ridge regression in the
// normalized variables (rho, zeta^2, psi1, psi2, lambda_bar), plus the
// ridgeless, wide and large-sample closed forms and the wide-limit phase
// quantities.

#include "rfrisk/errors.hpp"
#include "rfrisk/polynomial.hpp"
#include "rfrisk/stieltjes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace rfrisk {

inline constexpr double inf = std::numeric_limits<double>::infinity();

struct RiskDecomposition {
    double bias_B = 0.0;
    double var_V = 0.0;
    double risk_R = 0.0;
    bool threshold_singular = false;  // denominator vanished; components are +inf
};

/// (rho / (1 + rho), 1 / (1 + rho)), with rho = +inf allowed.
[[nodiscard]] inline std::pair<double, double> snr_weights(double rho) {
    detail::require(rho >= 0.0 && !std::isnan(rho), ErrorCode::invalid_argument, "rho must be >= 0");
    if (std::isinf(rho)) return {1.0, 0.0};
    return {rho / (1.0 + rho), 1.0 / (1.0 + rho)};
}

namespace detail {

inline double weighted(double w, double x) { return w == 0.0 ? 0.0 : w * x; }

inline RiskDecomposition assemble(double rho, double B, double V) {
    const auto [wb, wv] = snr_weights(rho);
    return {B, V, weighted(wb, B) + weighted(wv, V), false};
}

inline RiskDecomposition singular_risk() { return {inf, inf, inf, true}; }

}  // namespace detail

struct TargetSpec {
    double F1_sq = 1.0;
    double Fstar_sq = 0.0;
    double tau_sq = 0.0;
    double rho = inf;

    [[nodiscard]] static TargetSpec make(double F1_sq, double Fstar_sq, double tau_sq) {
        detail::require(F1_sq >= 0.0 && Fstar_sq >= 0.0 && tau_sq >= 0.0 && std::isfinite(F1_sq) &&
                            std::isfinite(Fstar_sq) && std::isfinite(tau_sq),
                        ErrorCode::invalid_argument, "target powers must be finite and non-negative");
        const double rest = Fstar_sq + tau_sq;
        detail::require(F1_sq > 0.0 || rest > 0.0, ErrorCode::invalid_argument, "target has zero total power");
        return {F1_sq, Fstar_sq, tau_sq, rest > 0.0 ? F1_sq / rest : inf};
    }

    [[nodiscard]] double total_power() const { return F1_sq + Fstar_sq + tau_sq; }
};

/// E0, E1, E2 as polynomials in chi.
struct RiskPolynomials {
    double E0 = 0.0;
    double E1 = 0.0;
    double E2 = 0.0;
};

[[nodiscard]] inline RiskPolynomials risk_polynomials(double chi, double zeta_sq, double psi1, double psi2) {
    const double z2 = zeta_sq;
    const double z4 = z2 * z2;
    const double z6 = z4 * z2;
    const double pp = psi1 * psi2;
    const std::array<double, 6> e0{-z6,
                                   3.0 * z4,
                                   (pp - psi2 - psi1 + 1.0) * z6 - 2.0 * z4 - 3.0 * z2,
                                   (psi1 + psi2 - 3.0 * pp + 1.0) * z4 + 2.0 * z2 + 1.0,
                                   3.0 * pp * z2,
                                   -pp};
    const std::array<double, 4> e1{psi2 * z4, -psi2 * z2, pp * z2, -pp};
    const std::array<double, 6> e2{z6,
                                   -3.0 * z4,
                                   (psi1 - 1.0) * z6 + 2.0 * z4 + 3.0 * z2,
                                   (-psi1 - 1.0) * z4 - 2.0 * z2 - 1.0,
                                   0.0,
                                   0.0};
    return {horner<double, double>(e0, chi), horner<double, double>(e1, chi), horner<double, double>(e2, chi)};
}

namespace detail {

inline RiskDecomposition risk_from_chi(double rho, double chi, double zeta_sq, double psi1, double psi2) {
    const auto e = risk_polynomials(chi, zeta_sq, psi1, psi2);
    if (std::abs(e.E0) < 1e-12 * (1.0 + std::abs(e.E1) + std::abs(e.E2))) return singular_risk();
    return assemble(rho, e.E1 / e.E0, e.E2 / e.E0);
}

}  // namespace detail

/// B, V, R at lambda_bar > 0 from chi = nu1 nu2 at xi = i sqrt(psi1 psi2 lambda_bar).
[[nodiscard]] inline RiskDecomposition risk_general(double rho, double zeta_sq, double psi1, double psi2,
                                                    double lambda_bar, const SolverConfig& config = {}) {
    (void)snr_weights(rho);
    const SpectralParams params{zeta_sq, psi1, psi2};
    const SpectralPoint pt = solve_on_axis(params, lambda_bar, config);
    return detail::risk_from_chi(rho, pt.chi.real(), zeta_sq, psi1, psi2);
}

/// F1^2 B + (tau^2 + F*^2) V + F*^2.
[[nodiscard]] inline double test_error(const TargetSpec& target, const RiskDecomposition& r) {
    if (r.threshold_singular) return inf;
    return detail::weighted(target.F1_sq, r.bias_B) + detail::weighted(target.tau_sq + target.Fstar_sq, r.var_V) +
           target.Fstar_sq;
}

[[nodiscard]] inline double test_error(const TargetSpec& target, double zeta_sq, double psi1, double psi2,
                                       double lambda_bar, const SolverConfig& config = {}) {
    return test_error(target, risk_general(target.rho, zeta_sq, psi1, psi2, lambda_bar, config));
}

/// chi in the lambda -> 0+ limit, with psi = min(psi1, psi2).
[[nodiscard]] inline double chi_ridgeless(double zeta_sq, double psi1, double psi2) {
    SpectralParams{zeta_sq, psi1, psi2}.validate();
    const double psi = std::min(psi1, psi2);
    const double s = psi * zeta_sq - zeta_sq - 1.0;
    return -(std::sqrt(s * s + 4.0 * zeta_sq * psi) + s) / (2.0 * zeta_sq);
}

[[nodiscard]] inline RiskDecomposition risk_ridgeless(double rho, double zeta_sq, double psi1, double psi2) {
    (void)snr_weights(rho);
    if (psi1 == psi2) return detail::singular_risk();
    return detail::risk_from_chi(rho, chi_ridgeless(zeta_sq, psi1, psi2), zeta_sq, psi1, psi2);
}

/// omega(lambda_bar, zeta^2, psi): the non-positive root of
/// (lambda_bar psi + 1) w^2 + (psi zeta^2 - zeta^2 - lambda_bar psi - 1) w - psi zeta^2 = 0.
[[nodiscard]] inline double omega(double lambda_bar, double zeta_sq, double psi) {
    detail::require(lambda_bar >= 0.0 && zeta_sq > 0.0 && psi > 0.0, ErrorCode::invalid_argument,
                    "omega requires lambda_bar >= 0 and positive zeta^2, psi");
    const double a = lambda_bar * psi + 1.0;
    const double s = psi * zeta_sq - zeta_sq - lambda_bar * psi - 1.0;
    return -(std::sqrt(s * s + 4.0 * psi * zeta_sq * a) + s) / (2.0 * a);
}

namespace detail {

inline double omega_denominator(double w, double psi) {
    return (psi - 1.0) * w * w * w + (1.0 - 3.0 * psi) * w * w + 3.0 * psi * w - psi;
}

inline bool vanishes(double den, double scale) { return std::abs(den) < 1e-14 * scale; }

}  // namespace detail

/// Wide limit psi1 -> infinity.
[[nodiscard]] inline RiskDecomposition risk_wide(double rho, double zeta_sq, double psi2, double lambda_bar) {
    (void)snr_weights(rho);
    const double w = omega(lambda_bar, zeta_sq, psi2);
    const double den = detail::omega_denominator(w, psi2);
    if (detail::vanishes(den, 1.0 + psi2 * (1.0 + std::abs(w) * std::abs(w) * std::abs(w)))) {
        return detail::singular_risk();
    }
    return detail::assemble(rho, (psi2 * w - psi2) / den, (w * w * w - w * w) / den);
}

/// Large-sample limit psi2 -> infinity; the variance term vanishes.
[[nodiscard]] inline RiskDecomposition risk_large_sample(double rho, double zeta_sq, double psi1,
                                                         double lambda_bar) {
    (void)snr_weights(rho);
    const double w = omega(lambda_bar, zeta_sq, psi1);
    const double den = detail::omega_denominator(w, psi1);
    if (detail::vanishes(den, 1.0 + psi1 * (1.0 + std::abs(w) * std::abs(w) * std::abs(w)))) {
        return detail::singular_risk();
    }
    const double B = ((w * w * w - w * w) / zeta_sq + psi1 * w - psi1) / den;
    return detail::assemble(rho, B, 0.0);
}

/// R_wide as a function of u = omega.
[[nodiscard]] inline double r_bar_wide(double u, double rho, double psi2) {
    return (psi2 * rho + u * u) / ((1.0 + rho) * (psi2 - 2.0 * u * psi2 + u * u * psi2 - u * u));
}

struct PhaseQuantities {
    double omega0 = 0.0;
    double omega1 = 0.0;
    double rho_star = 0.0;
    double zeta_star_sq = 0.0;
    double lambda_star = 0.0;

    /// Optimal lambda_bar for R_wide: lambda_star when positive, else the boundary 0.
    [[nodiscard]] bool interior_optimum() const { return lambda_star > 0.0; }
};

[[nodiscard]] inline PhaseQuantities wide_phase(double zeta_sq, double psi2, double rho) {
    detail::require(zeta_sq > 0.0 && psi2 > 0.0 && rho > 0.0 && std::isfinite(zeta_sq) && std::isfinite(psi2) &&
                        std::isfinite(rho),
                    ErrorCode::invalid_argument, "wide_phase requires positive finite arguments");
    PhaseQuantities q;
    q.omega0 = omega(0.0, zeta_sq, psi2);
    const double s1 = psi2 * rho - rho - 1.0;
    q.omega1 = -(s1 + std::sqrt(s1 * s1 + 4.0 * psi2 * rho)) / 2.0;
    const double w0 = q.omega0;
    const double w1 = q.omega1;
    q.rho_star = (w0 * w0 - w0) / ((1.0 - psi2) * w0 + psi2);
    q.zeta_star_sq = (w1 * w1 - w1) / (w1 - psi2 * w1 + psi2);
    q.lambda_star = (zeta_sq * psi2 - zeta_sq * w1 * psi2 + zeta_sq * w1 + w1 - w1 * w1) / ((w1 * w1 - w1) * psi2);
    return q;
}

struct OptimalLambda {
    double lambda_bar = 0.0;
    double risk = 0.0;
    bool non_unimodal = false;  // pre-scan saw more than one local minimum
};

/// Minimize f over [0, lambda_max]: 64-point pre-scan (0 plus a log grid),
/// then golden-section refinement of the best bracket to absolute tolerance tol.
[[nodiscard]] inline OptimalLambda minimize_lambda(const std::function<double(double)>& f, double lambda_max,
                                                   double tol = 1e-6) {
    detail::require(lambda_max > 0.0 && std::isfinite(lambda_max), ErrorCode::invalid_argument,
                    "lambda_max must be positive and finite");
    constexpr int scan_points = 64;
    std::vector<double> grid(scan_points);
    grid[0] = 0.0;
    const double lo = lambda_max * 1e-8;
    for (int k = 1; k < scan_points; ++k) {
        grid[k] = lo * std::pow(lambda_max / lo, static_cast<double>(k - 1) / (scan_points - 2));
    }
    std::vector<double> val(scan_points);
    for (int k = 0; k < scan_points; ++k) {
        const double v = f(grid[k]);
        val[k] = std::isnan(v) ? inf : v;
    }

    int local_minima = 0;
    for (int k = 0; k < scan_points; ++k) {
        const bool left = k == 0 || val[k] < val[k - 1];
        const bool right = k == scan_points - 1 || val[k] < val[k + 1];
        if (left && right) ++local_minima;
    }
    const auto best = static_cast<int>(std::min_element(val.begin(), val.end()) - val.begin());

    double a = grid[std::max(best - 1, 0)];
    double b = grid[std::min(best + 1, scan_points - 1)];
    OptimalLambda out{grid[best], val[best], local_minima > 1};

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    const double fx = f(x);
    if (fx <= out.risk) {
        out.lambda_bar = x;
        out.risk = fx;
    }
    return out;
}

/// argmin over lambda_bar in [0, lambda_max] of risk_general, with the ridgeless
/// formula at lambda_bar = 0.
[[nodiscard]] inline OptimalLambda optimal_lambda(double rho, double zeta_sq, double psi1, double psi2,
                                                  double lambda_max) {
    const auto f = [&](double lb) {
        const RiskDecomposition r =
            lb <= 0.0 ? risk_ridgeless(rho, zeta_sq, psi1, psi2) : risk_general(rho, zeta_sq, psi1, psi2, lb);
        return r.risk_R;
    };
    return minimize_lambda(f, lambda_max);
}

}  // namespace rfrisk
