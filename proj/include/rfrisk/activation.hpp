#pragma once

// Gaussian moments (mu0, mu1, mu_star^2, zeta) of activation functions.

#include "rfrisk/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rfrisk {

/// Hermite statistics of sigma under G ~ N(0, 1). Construct through make() so
/// the non-degeneracy conditions the theory needs are always enforced.
struct HermiteStats {
    double mu0 = 0.0;
    double mu1 = 0.0;
    double mu_star_sq = 0.0;
    double zeta = 0.0;     // mu1 / mu_star
    double zeta_sq = 0.0;  // mu1^2 / mu_star^2

    static constexpr double degeneracy_threshold = 1e-10;

    [[nodiscard]] static HermiteStats make(double mu0, double mu1, double mu_star_sq) {
        detail::require(std::isfinite(mu0) && std::isfinite(mu1) && std::isfinite(mu_star_sq),
                        ErrorCode::quadrature_failure, "non-finite Hermite statistics");
        detail::require(std::abs(mu1) >= degeneracy_threshold, ErrorCode::degenerate_activation,
                        "mu1 = " + std::to_string(mu1) + " vanishes; the linear component is required");
        detail::require(mu_star_sq >= degeneracy_threshold, ErrorCode::degenerate_activation,
                        "mu_star^2 = " + std::to_string(mu_star_sq) +
                            " vanishes; the activation is (affine-)linear");
        HermiteStats s;
        s.mu0 = mu0;
        s.mu1 = mu1;
        s.mu_star_sq = mu_star_sq;
        s.zeta = mu1 / std::sqrt(mu_star_sq);
        s.zeta_sq = mu1 * mu1 / mu_star_sq;
        return s;
    }

    [[nodiscard]] double mu_star() const { return std::sqrt(mu_star_sq); }
};

enum class ActivationKind { relu, identity, shifted_relu, custom };

/// Pointwise activation. Built-in kinds have closed-form statistics; custom
/// activations are integrated numerically unless an override is supplied.
/// `breakpoints` lists points where sigma is not smooth (kinks); the quadrature
/// splits the integral there.
struct Activation {
    ActivationKind kind = ActivationKind::relu;
    double shift = 0.0;
    std::function<double(double)> custom_fn;
    std::vector<double> breakpoints;
    std::optional<HermiteStats> stats_override;
    std::string label = "relu";

    [[nodiscard]] static Activation relu() {
        Activation a;
        a.breakpoints = {0.0};
        return a;
    }

    [[nodiscard]] static Activation identity() {
        Activation a;
        a.kind = ActivationKind::identity;
        a.label = "identity";
        return a;
    }

    /// sigma(u) = max(u - c, 0).
    [[nodiscard]] static Activation shifted_relu(double c) {
        Activation a;
        a.kind = ActivationKind::shifted_relu;
        a.shift = c;
        a.breakpoints = {c};
        a.label = "shifted_relu(" + std::to_string(c) + ")";
        return a;
    }

    [[nodiscard]] static Activation custom(std::function<double(double)> fn,
                                           std::vector<double> breakpoints = {},
                                           std::string label = "custom") {
        Activation a;
        a.kind = ActivationKind::custom;
        a.custom_fn = std::move(fn);
        std::sort(breakpoints.begin(), breakpoints.end());
        breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
        a.breakpoints = std::move(breakpoints);
        a.label = std::move(label);
        return a;
    }

    [[nodiscard]] double operator()(double u) const {
        switch (kind) {
            case ActivationKind::relu: return u > 0.0 ? u : 0.0;
            case ActivationKind::identity: return u;
            case ActivationKind::shifted_relu: return u > shift ? u - shift : 0.0;
            case ActivationKind::custom: return custom_fn(u);
        }
        return 0.0;
    }

    [[nodiscard]] bool is_builtin() const { return kind != ActivationKind::custom; }
};

/// Nodes and weights of a quadrature rule.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix with zero
// diagonal and the given off-diagonal; weights are mass * v0^2.
inline QuadratureRule golub_welsch(int order, const std::function<double(int)>& offdiag,
                                   double mass) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = offdiag(k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = mass * v0 * v0;
    }
    return rule;
}

}  // namespace detail

/// Gauss-Hermite rule for the standard normal density (weights sum to 1).
[[nodiscard]] inline QuadratureRule gauss_hermite_normal(int order) {
    return detail::golub_welsch(order, [](int k) { return std::sqrt(static_cast<double>(k)); }, 1.0);
}

/// Gauss-Legendre rule on [-1, 1].
[[nodiscard]] inline QuadratureRule gauss_legendre(int order) {
    return detail::golub_welsch(
        order,
        [](int k) {
            const double kk = static_cast<double>(k);
            return kk / std::sqrt(4.0 * kk * kk - 1.0);
        },
        2.0);
}

/// Raw Gaussian moments E[sigma(G)], E[G sigma(G)], E[sigma(G)^2].
struct GaussianMoments {
    double m0 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
};

namespace detail {

constexpr double tail_cutoff = 16.0;

inline GaussianMoments moments_gauss_hermite(const std::function<double(double)>& f, int order) {
    const auto rule = gauss_hermite_normal(order);
    GaussianMoments m;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        const double fx = f(x);
        detail::require(std::isfinite(fx), ErrorCode::quadrature_failure,
                        "activation not finite at node " + std::to_string(x));
        m.m0 += rule.weights[i] * fx;
        m.m1 += rule.weights[i] * x * fx;
        m.m2 += rule.weights[i] * fx * fx;
    }
    return m;
}

inline GaussianMoments moments_piecewise(const std::function<double(double)>& f,
                                         std::span<const double> breakpoints, int order) {
    double reach = 0.0;
    for (double b : breakpoints) reach = std::max(reach, std::abs(b));
    const double limit = reach + tail_cutoff;
    std::vector<double> edges;
    edges.push_back(-limit);
    for (double b : breakpoints) edges.push_back(b);
    edges.push_back(limit);

    const auto rule = gauss_legendre(order);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    GaussianMoments m;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const double lo = edges[s];
        const double hi = edges[s + 1];
        if (hi <= lo) continue;
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double x = mid + half * rule.nodes[i];
            const double fx = f(x);
            detail::require(std::isfinite(fx), ErrorCode::quadrature_failure,
                            "activation not finite at node " + std::to_string(x));
            const double w = half * rule.weights[i] * inv_sqrt_2pi * std::exp(-0.5 * x * x);
            m.m0 += w * fx;
            m.m1 += w * x * fx;
            m.m2 += w * fx * fx;
        }
    }
    return m;
}

}  // namespace detail

/// Gaussian moments by quadrature at the given order (no closed forms).
[[nodiscard]] inline GaussianMoments quadrature_moments(const Activation& act, int order) {
    auto f = [&act](double u) { return act(u); };
    if (act.breakpoints.empty()) return detail::moments_gauss_hermite(f, order);
    return detail::moments_piecewise(f, act.breakpoints, order);
}

/// Heuristic check of |sigma(u)| <= c0 exp(c1 |u|) on a grid: c0 is taken from
/// |u| <= 1 and c1 = 10. Not a proof; catches super-exponential growth.
[[nodiscard]] inline bool satisfies_growth_bound(const std::function<double(double)>& f) {
    double c0 = 1.0;
    for (int i = -100; i <= 100; ++i) {
        const double v = f(i / 100.0);
        if (!std::isfinite(v)) return false;
        c0 = std::max(c0, 2.0 * std::abs(v));
    }
    constexpr double c1 = 10.0;
    for (int i = -3000; i <= 3000; ++i) {
        const double u = i / 100.0;
        const double v = f(u);
        if (!std::isfinite(v)) return false;
        if (std::log(std::abs(v) + 1e-300) > std::log(c0) + c1 * std::abs(u)) return false;
    }
    return true;
}

/// Closed-form statistics for the built-in kinds. Identity is degenerate and throws.
[[nodiscard]] inline HermiteStats closed_form_stats(const Activation& act) {
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    switch (act.kind) {
        case ActivationKind::relu:
            return HermiteStats::make(inv_sqrt_2pi, 0.5,
                                      (std::numbers::pi - 2.0) / (4.0 * std::numbers::pi));
        case ActivationKind::identity: return HermiteStats::make(0.0, 1.0, 0.0);
        case ActivationKind::shifted_relu: {
            // E[(G-c)_+], E[G (G-c)_+] = P(G > c), E[(G-c)_+^2]
            const double c = act.shift;
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * c * c);
            const double tail = 0.5 * std::erfc(c / std::numbers::sqrt2);
            const double mu0 = pdf - c * tail;
            const double mu1 = tail;
            const double second = (1.0 + c * c) * tail - c * pdf;
            return HermiteStats::make(mu0, mu1, second - mu0 * mu0 - mu1 * mu1);
        }
        case ActivationKind::custom: break;
    }
    throw Error(ErrorCode::invalid_argument, "no closed form for custom activation '" + act.label + "'");
}

/// Outcome of a certified quadrature evaluation.
struct QuadratureReport {
    HermiteStats stats;
    int order = 0;
    double max_discrepancy = 0.0;  // |moments(order) - moments(2 order)|, componentwise max
    bool converged = false;
};

/// Quadrature statistics at `order`, certified against 2*order.
[[nodiscard]] inline QuadratureReport quadrature_stats(const Activation& act, int order,
                                                       double certify_tol = 1e-8) {
    detail::require(order >= 2, ErrorCode::invalid_argument, "quadrature order must be >= 2");
    const auto lo = quadrature_moments(act, order);
    const auto hi = quadrature_moments(act, 2 * order);
    QuadratureReport rep;
    rep.order = order;
    rep.max_discrepancy = std::max({std::abs(lo.m0 - hi.m0), std::abs(lo.m1 - hi.m1),
                                    std::abs(lo.m2 - hi.m2)});
    rep.converged = rep.max_discrepancy <= certify_tol;
    detail::require(rep.converged, ErrorCode::quadrature_failure,
                    "orders " + std::to_string(order) + " and " + std::to_string(2 * order) +
                        " disagree by " + std::to_string(rep.max_discrepancy));
    rep.stats = HermiteStats::make(lo.m0, lo.m1, lo.m2 - lo.m0 * lo.m0 - lo.m1 * lo.m1);
    return rep;
}

/// (mu0, mu1, mu_star^2, zeta) of an activation. Built-ins use closed forms
/// and ignore `quadrature_order`; custom activations use an override when
/// present, otherwise certified quadrature.
[[nodiscard]] inline HermiteStats hermite_stats(const Activation& act, int quadrature_order = 64) {
    if (act.is_builtin()) return closed_form_stats(act);
    if (act.stats_override) {
        const auto& o = *act.stats_override;
        return HermiteStats::make(o.mu0, o.mu1, o.mu_star_sq);
    }
    detail::require(quadrature_order >= 32, ErrorCode::invalid_argument,
                    "quadrature order must be >= 32");
    detail::require(static_cast<bool>(act.custom_fn), ErrorCode::invalid_argument,
                    "custom activation without an evaluator");
    detail::require(satisfies_growth_bound(act.custom_fn), ErrorCode::invalid_argument,
                    "activation '" + act.label + "' fails the exponential growth check");
    return quadrature_stats(act, quadrature_order).stats;
}

}  // namespace rfrisk
