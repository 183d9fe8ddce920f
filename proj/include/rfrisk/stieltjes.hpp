#pragma once

// Self-consistent equations for the partial Stieltjes transforms (nu1, nu2)
// of the random-features kernel, solved by damped fixed-point iteration with
// continuation in xi, and an independent scalar route for chi = nu1 * nu2 on
// the imaginary axis.

#include "rfrisk/errors.hpp"
#include "rfrisk/polynomial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rfrisk {

using cplx = std::complex<double>;

struct SpectralParams {
    double zeta_sq = 1.0;
    double psi1 = 1.0;  // N / d
    double psi2 = 1.0;  // n / d

    void validate() const {
        const bool ok = std::isfinite(zeta_sq) && std::isfinite(psi1) && std::isfinite(psi2) &&
                        zeta_sq > 0.0 && psi1 > 0.0 && psi2 > 0.0;
        detail::require(ok, ErrorCode::invalid_argument,
                        "spectral parameters must be finite and strictly positive");
    }

    [[nodiscard]] SpectralParams swapped() const { return {zeta_sq, psi2, psi1}; }
};

struct SolverConfig {
    double tol = 1e-12;              // fixed-point residual target
    double damping = 0.5;            // gamma in nu <- (1 - gamma) nu + gamma F(nu)
    int max_iter = 2000;             // damped iterations per path step
    double path_start_height = 0.0;  // 0 selects default_start_height()
    int path_steps = 64;
    bool newton_fallback = true;
};

struct SpectralPoint {
    cplx xi;
    cplx nu1;
    cplx nu2;
    cplx chi;
    double residual = 0.0;
    int path_steps = 0;  // steps actually used (after any adaptive doubling)
};

/// max(100, 10 (psi1 + psi2) max(1, zeta)).
[[nodiscard]] inline double default_start_height(const SpectralParams& p) {
    return std::max(100.0, 10.0 * (p.psi1 + p.psi2) * std::max(1.0, std::sqrt(p.zeta_sq)));
}

/// One application of the map whose fixed point defines (nu1, nu2).
[[nodiscard]] inline std::pair<cplx, cplx> fixed_point_map(cplx nu1, cplx nu2, cplx xi,
                                                           const SpectralParams& p) {
    const cplx den = 1.0 - p.zeta_sq * nu1 * nu2;
    detail::require(std::abs(den) >= 1e-14, ErrorCode::singular_denominator,
                    "|1 - zeta^2 nu1 nu2| below 1e-14");
    const cplx f1 = p.psi1 / (-xi - nu2 - p.zeta_sq * nu2 / den);
    const cplx f2 = p.psi2 / (-xi - nu1 - p.zeta_sq * nu1 / den);
    return {f1, f2};
}

/// max_i |nu_i - F_i(nu)|.
[[nodiscard]] inline double fixed_point_residual(cplx nu1, cplx nu2, cplx xi, const SpectralParams& p) {
    const auto [f1, f2] = fixed_point_map(nu1, nu2, xi, p);
    return std::max(std::abs(nu1 - f1), std::abs(nu2 - f2));
}

namespace detail {

struct NuState {
    cplx nu1;
    cplx nu2;
};

inline std::string format_xi(cplx xi) {
    std::ostringstream os;
    os.precision(6);
    os << xi.real() << (xi.imag() >= 0 ? "+" : "") << xi.imag() << "i";
    return os.str();
}

// One Newton step on R(nu) = nu - F(nu) with the analytic 2x2 Jacobian.
inline NuState newton_step(const NuState& s, cplx xi, const SpectralParams& p) {
    const double z2 = p.zeta_sq;
    const cplx den = 1.0 - z2 * s.nu1 * s.nu2;
    const cplx a1 = -xi - s.nu2 - z2 * s.nu2 / den;
    const cplx a2 = -xi - s.nu1 - z2 * s.nu1 / den;
    const cplx f1 = p.psi1 / a1;
    const cplx f2 = p.psi2 / a2;
    const cplx den2 = den * den;
    const cplx da1_d1 = -z2 * z2 * s.nu2 * s.nu2 / den2;
    const cplx da1_d2 = -1.0 - z2 / den2;
    const cplx da2_d1 = -1.0 - z2 / den2;
    const cplx da2_d2 = -z2 * z2 * s.nu1 * s.nu1 / den2;
    const cplx g1 = -p.psi1 / (a1 * a1);
    const cplx g2 = -p.psi2 / (a2 * a2);
    // J = I - dF
    const cplx j11 = 1.0 - g1 * da1_d1;
    const cplx j12 = -g1 * da1_d2;
    const cplx j21 = -g2 * da2_d1;
    const cplx j22 = 1.0 - g2 * da2_d2;
    const cplx r1 = s.nu1 - f1;
    const cplx r2 = s.nu2 - f2;
    const cplx det = j11 * j22 - j12 * j21;
    const cplx d1 = (j22 * r1 - j12 * r2) / det;
    const cplx d2 = (j11 * r2 - j21 * r1) / det;
    return {s.nu1 - d1, s.nu2 - d2};
}

inline bool in_upper_half_plane(const NuState& s) { return s.nu1.imag() > 0.0 && s.nu2.imag() > 0.0; }

// Newton iteration with step halving to stay in the upper half plane and
// decrease the residual. Returns true on reaching tol.
inline bool newton_solve(NuState& s, cplx xi, const SpectralParams& p, double tol, int max_steps) {
    double res = fixed_point_residual(s.nu1, s.nu2, xi, p);
    for (int it = 0; it < max_steps && res > tol; ++it) {
        const NuState full = newton_step(s, xi, p);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h, t *= 0.5) {
            NuState trial{s.nu1 + t * (full.nu1 - s.nu1), s.nu2 + t * (full.nu2 - s.nu2)};
            if (!in_upper_half_plane(trial)) continue;
            double trial_res = 0.0;
            try {
                trial_res = fixed_point_residual(trial.nu1, trial.nu2, xi, p);
            } catch (const Error&) {
                continue;
            }
            if (trial_res < res) {
                s = trial;
                res = trial_res;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return res <= tol;
}

// Damped fixed-point iteration at xi, falling back to Newton. Returns the
// number of damped iterations used; throws NoConvergence.
inline int converge_at(NuState& s, cplx xi, const SpectralParams& p, const SolverConfig& cfg,
                       int iteration_cap) {
    for (int it = 0; it < iteration_cap; ++it) {
        const auto [f1, f2] = fixed_point_map(s.nu1, s.nu2, xi, p);
        const double res = std::max(std::abs(s.nu1 - f1), std::abs(s.nu2 - f2));
        if (res <= cfg.tol) return it;
        s.nu1 = (1.0 - cfg.damping) * s.nu1 + cfg.damping * f1;
        s.nu2 = (1.0 - cfg.damping) * s.nu2 + cfg.damping * f2;
    }
    if (fixed_point_residual(s.nu1, s.nu2, xi, p) <= cfg.tol) return iteration_cap;
    if (cfg.newton_fallback && newton_solve(s, xi, p, cfg.tol, 60)) return iteration_cap;
    throw Error(ErrorCode::no_convergence,
                "fixed point not reached within " + std::to_string(iteration_cap) +
                    " iterations at xi = " + format_xi(xi));
}

inline SpectralPoint track_path(cplx xi_target, const SpectralParams& p, const SolverConfig& cfg,
                                double start_height, int steps) {
    const bool direct = xi_target.imag() >= start_height;
    const cplx xi0 = direct ? xi_target : cplx(0.0, start_height);
    NuState s{-p.psi1 / xi0, -p.psi2 / xi0};

    // Contraction at the start height is required to hold quickly.
    converge_at(s, xi0, p, cfg, std::min(cfg.max_iter, 200));
    if (!in_upper_half_plane(s)) {
        throw Error(ErrorCode::invariant_violation, "Im(nu) <= 0 at start xi = " + format_xi(xi0));
    }

    if (!direct) {
        const double h0 = xi0.imag();
        const double h1 = xi_target.imag();
        for (int k = 1; k <= steps; ++k) {
            const double frac = static_cast<double>(k) / steps;
            const double h = (k == steps) ? h1 : h0 * std::pow(h1 / h0, frac);
            const double t = (k == steps) ? 0.0 : (h - h1) / (h0 - h1);
            const cplx xi = xi_target + t * (xi0 - xi_target);
            converge_at(s, xi, p, cfg, cfg.max_iter);
            if (!in_upper_half_plane(s)) {
                throw Error(ErrorCode::invariant_violation, "Im(nu) <= 0 at xi = " + format_xi(xi));
            }
        }
    }

    if (cfg.newton_fallback) {
        // Polish below tol where rounding allows; never accept a worse point.
        newton_solve(s, xi_target, p, 0.0, 3);
    }

    SpectralPoint pt;
    pt.xi = xi_target;
    pt.nu1 = s.nu1;
    pt.nu2 = s.nu2;
    pt.chi = s.nu1 * s.nu2;
    pt.residual = fixed_point_residual(s.nu1, s.nu2, xi_target, p);
    pt.path_steps = direct ? 0 : steps;
    return pt;
}

}  // namespace detail

/// Solve for (nu1, nu2) at xi_target in the upper half plane. The path starts
/// at i * start_height from the large-|xi| asymptote nu_i = -psi_i / xi and
/// walks to xi_target with geometrically shrinking imaginary part; the step
/// count is doubled (up to 3 times) when a step leaves the upper half plane.
[[nodiscard]] inline SpectralPoint solve_at(cplx xi_target, const SpectralParams& params,
                                            const SolverConfig& config = {}) {
    params.validate();
    detail::require(xi_target.imag() > 0.0, ErrorCode::invalid_argument, "Im(xi) must be positive");
    detail::require(config.tol > 0.0 && config.damping > 0.0 && config.damping <= 1.0 &&
                        config.max_iter > 0 && config.path_steps > 0,
                    ErrorCode::invalid_argument, "invalid solver configuration");
    double start = config.path_start_height;
    if (start <= 0.0) {
        start = default_start_height(params);
    } else {
        detail::require(start >= 10.0 * std::max({params.psi1, params.psi2, 1.0}),
                        ErrorCode::invalid_argument, "path_start_height below 10 max(psi1, psi2, 1)");
    }

    int steps = config.path_steps;
    for (int attempt = 0;; ++attempt) {
        try {
            SpectralPoint pt = detail::track_path(xi_target, params, config, start, steps);
            const double h = xi_target.imag();
            const double slack = 1.0 + 1e-9;
            if (std::abs(pt.nu1) > slack * params.psi1 / h || std::abs(pt.nu2) > slack * params.psi2 / h) {
                throw Error(ErrorCode::invariant_violation,
                            "|nu_i| exceeds psi_i / Im(xi) at xi = " + detail::format_xi(xi_target));
            }
            if (pt.residual > config.tol) {
                throw Error(ErrorCode::no_convergence,
                            "final residual " + std::to_string(pt.residual) + " above tol at xi = " +
                                detail::format_xi(xi_target));
            }
            return pt;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::invariant_violation || attempt >= 3) throw;
            steps *= 2;
        }
    }
}

namespace detail {

// P1 P2 + u^2 chi (1 - z2 chi)^2 with P_i = z2 chi^2 + (z2 psi_i - z2 - 1) chi - psi_i,
// i.e. the scalar equation for chi with denominators cleared.
inline std::array<double, 5> chi_quartic(const SpectralParams& p, double u) {
    const double a = p.zeta_sq;
    const std::array<double, 3> p1{a, a * p.psi1 - a - 1.0, -p.psi1};
    const std::array<double, 3> p2{a, a * p.psi2 - a - 1.0, -p.psi2};
    std::array<double, 5> c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c[i + j] += p1[i] * p2[j];
    const double u2 = u * u;
    c[1] += u2 * a * a;
    c[2] += -2.0 * u2 * a;
    c[3] += u2;
    return c;
}

inline std::vector<double> real_nonpositive_roots(const SpectralParams& p, double u) {
    const auto coeffs = chi_quartic(p, u);
    std::vector<double> out;
    for (const auto& r : polynomial_roots(coeffs)) {
        const double scale = std::max(1.0, std::abs(r));
        if (std::abs(r.imag()) < 1e-9 * scale && r.real() <= 1e-12 * scale) out.push_back(std::min(r.real(), 0.0));
    }
    return out;
}

// Nearest candidate to `prev`; nullopt-like flag when the choice is not clear-cut.
inline bool pick_nearest(const std::vector<double>& cands, double prev, double& chosen) {
    if (cands.empty()) return false;
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
        if (std::abs(cands[i] - prev) < std::abs(cands[best] - prev)) best = i;
    const double d1 = std::abs(cands[best] - prev);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (i == best) continue;
        if (std::abs(cands[i] - prev) <= 2.0 * d1 + 1e-14) return false;
    }
    chosen = cands[best];
    return true;
}

inline double chi_g(double chi, double z2) { return -z2 * chi / (1.0 - z2 * chi) - chi; }

// Track the physical root from u_from down to u_to, bisecting steps (in log u)
// whenever the nearest-root choice is not clear-cut.
inline double track_chi(const SpectralParams& p, double u_from, double u_to, double chi, int depth) {
    std::vector<double> cands = real_nonpositive_roots(p, u_to);
    double next = 0.0;
    if (pick_nearest(cands, chi, next)) return next;
    if (depth >= 12) {
        throw Error(ErrorCode::root_selection_ambiguous,
                    "chi root not separable near u = " + std::to_string(u_to));
    }
    const double u_mid = std::sqrt(u_from * u_to);
    const double mid = track_chi(p, u_from, u_mid, chi, depth + 1);
    return track_chi(p, u_mid, u_to, mid, depth + 1);
}

}  // namespace detail

/// chi = nu1 nu2 at xi = i sqrt(psi1 psi2 lambda_bar) from the scalar quartic,
/// via companion-matrix roots and continuity tracking from large u.
[[nodiscard]] inline double chi_scalar_oracle(const SpectralParams& params, double lambda_bar) {
    params.validate();
    detail::require(lambda_bar > 0.0 && std::isfinite(lambda_bar), ErrorCode::invalid_argument,
                    "lambda_bar must be positive and finite");
    const double u_target = std::sqrt(params.psi1 * params.psi2 * lambda_bar);
    const double u_start =
        std::max(u_target, 1e3 * (1.0 + params.psi1 + params.psi2) * (1.0 + params.zeta_sq));

    // At large u the physical root is ~ -psi1 psi2 / u^2, the spurious one ~ -u^2.
    double chi = 0.0;
    if (!detail::pick_nearest(detail::real_nonpositive_roots(params, u_start), 0.0, chi)) {
        throw Error(ErrorCode::root_selection_ambiguous, "no isolated root near 0 at large u");
    }
    if (u_start > u_target) {
        constexpr int track_steps = 48;
        double u_prev = u_start;
        for (int k = 1; k <= track_steps; ++k) {
            const double u = (k == track_steps) ? u_target
                                                : u_start * std::pow(u_target / u_start,
                                                                     static_cast<double>(k) / track_steps);
            chi = detail::track_chi(params, u_prev, u, chi, 0);
            u_prev = u;
        }
    }
    const double g = detail::chi_g(chi, params.zeta_sq);
    if (!(g < std::min(params.psi1, params.psi2))) {
        throw Error(ErrorCode::root_selection_ambiguous,
                    "tracked root does not map to the upper half plane (chi = " + std::to_string(chi) + ")");
    }
    return chi;
}

/// (nu1, nu2) on the imaginary axis reconstructed from chi:
/// nu_i = (g(chi) - psi_i) / (i u), g(chi) = -zeta^2 chi / (1 - zeta^2 chi) - chi.
[[nodiscard]] inline std::pair<cplx, cplx> nu_from_chi(double chi, const SpectralParams& params,
                                                       double lambda_bar) {
    params.validate();
    detail::require(chi <= 0.0 && 1.0 - params.zeta_sq * chi > 0.0 && lambda_bar > 0.0,
                    ErrorCode::invalid_argument, "nu_from_chi requires chi <= 0 and lambda_bar > 0");
    const double u = std::sqrt(params.psi1 * params.psi2 * lambda_bar);
    const double g = detail::chi_g(chi, params.zeta_sq);
    const cplx nu1(0.0, (params.psi1 - g) / u);
    const cplx nu2(0.0, (params.psi2 - g) / u);
    const cplx prod = nu1 * nu2;
    if (std::abs(prod - chi) > 1e-8 * std::max(1.0, std::abs(chi))) {
        throw Error(ErrorCode::inconsistent_chi, "nu1 nu2 = " + std::to_string(prod.real()) +
                                                     " differs from chi = " + std::to_string(chi));
    }
    return {nu1, nu2};
}

/// Solve at xi = i sqrt(psi1 psi2 lambda_bar) and cross-check chi against the
/// scalar oracle. The residual target is scaled by max(1, max(psi) / u), the
/// a-priori size of |nu| on the imaginary axis.
[[nodiscard]] inline SpectralPoint solve_on_axis(const SpectralParams& params, double lambda_bar,
                                                 SolverConfig config = {}) {
    params.validate();
    detail::require(lambda_bar > 0.0 && std::isfinite(lambda_bar), ErrorCode::invalid_argument,
                    "lambda_bar must be positive and finite");
    const double u = std::sqrt(params.psi1 * params.psi2 * lambda_bar);
    config.tol *= std::max(1.0, std::max(params.psi1, params.psi2) / u);
    SpectralPoint pt = solve_at(cplx(0.0, u), params, config);
    const double chi_ref = chi_scalar_oracle(params, lambda_bar);
    if (std::abs(pt.chi - chi_ref) > 1e-8 * std::max(1.0, std::abs(chi_ref))) {
        throw Error(ErrorCode::inconsistent_chi, "homotopy chi " + std::to_string(pt.chi.real()) +
                                                     " disagrees with scalar oracle " + std::to_string(chi_ref));
    }
    return pt;
}

}  // namespace rfrisk
