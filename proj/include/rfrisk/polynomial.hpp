#pragma once

#include "rfrisk/errors.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace rfrisk {

/// Horner evaluation; coefficients ordered from the highest degree down.
template <typename T, typename C>
[[nodiscard]] T horner(std::span<const C> coeffs, T x) {
    T acc{};
    for (const C& c : coeffs) acc = acc * x + T(c);
    return acc;
}

namespace detail {

// Parlett-Reinsch diagonal similarity scaling by powers of two; keeps the
// eigenvalues of companion matrices with widely spread roots accurate.
inline void balance(Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    constexpr double radix = 2.0;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

}  // namespace detail

/// All complex roots of a real polynomial (highest degree first) as the
/// eigenvalues of its companion matrix, each polished by a few Newton steps
/// in extended precision.
[[nodiscard]] inline std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
    std::size_t lead = 0;
    while (lead < coeffs.size() && coeffs[lead] == 0.0) ++lead;
    detail::require(coeffs.size() - lead >= 2, ErrorCode::invalid_argument,
                    "polynomial must have degree >= 1");
    const auto poly = coeffs.subspan(lead);
    const int degree = static_cast<int>(poly.size()) - 1;

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    for (int j = 0; j < degree; ++j) companion(0, j) = -poly[j + 1] / poly[0];
    for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    detail::balance(companion);
    Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, /*computeEigenvectors=*/false);

    std::vector<long double> ext(poly.begin(), poly.end());
    std::vector<long double> dext(ext.size() - 1);
    for (int k = 0; k < degree; ++k) dext[k] = ext[k] * static_cast<long double>(degree - k);

    std::vector<std::complex<double>> roots;
    roots.reserve(degree);
    for (int i = 0; i < degree; ++i) {
        std::complex<long double> z(eig.eigenvalues()(i).real(), eig.eigenvalues()(i).imag());
        auto p = horner<std::complex<long double>, long double>(ext, z);
        for (int it = 0; it < 8; ++it) {
            const auto dp = horner<std::complex<long double>, long double>(dext, z);
            if (std::abs(dp) == 0.0L) break;
            // Newton near a multiple root can wander; keep only steps that reduce |p|.
            const auto cand = z - p / dp;
            const auto pc = horner<std::complex<long double>, long double>(ext, cand);
            if (!(std::abs(pc) < std::abs(p))) break;
            z = cand;
            p = pc;
        }
        roots.emplace_back(static_cast<double>(z.real()), static_cast<double>(z.imag()));
    }
    return roots;
}

}  // namespace rfrisk
