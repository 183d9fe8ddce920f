#pragma once

// Asymptotic regularized training error and coefficient norm, normalized per
// unit of total target power F1^2 + F*^2 + tau^2.

#include "rfrisk/errors.hpp"
#include "rfrisk/risk.hpp"
#include "rfrisk/stieltjes.hpp"

#include <cmath>
#include <complex>

namespace rfrisk {

struct TrainingAsymptotics {
    double L = 0.0;  // regularized training error
    double A = 0.0;  // mu*^2 ||a||^2
    bool threshold_singular = false;
};

[[nodiscard]] inline TrainingAsymptotics training_theory(double rho, double zeta_sq, double psi1, double psi2,
                                                         double lambda_bar, const SolverConfig& config = {}) {
    const auto [wb, wv] = snr_weights(rho);
    const SpectralParams params{zeta_sq, psi1, psi2};
    const SpectralPoint pt = solve_on_axis(params, lambda_bar, config);

    const double scale = std::abs(pt.nu1) + std::abs(pt.nu2);
    if (std::abs(pt.nu1.real()) > 1e-12 * scale || std::abs(pt.nu2.real()) > 1e-12 * scale) {
        throw Error(ErrorCode::invariant_violation, "nu not purely imaginary on the imaginary axis");
    }

    const cplx chi = pt.chi;
    const double z2 = zeta_sq;
    const double z4 = z2 * z2;
    const cplx L = cplx(0.0, -1.0) * pt.nu2 * std::sqrt(lambda_bar * psi1 / psi2) *
                   (wb / (1.0 - chi * z2) + wv);
    const cplx a1_bias = -chi * chi * (chi * z4 - chi * z2 + psi2 * z2 + z2 - chi * psi2 * z4 + 1.0);
    const cplx a1_var = chi * chi * (chi * z2 - 1.0) * (chi * chi * z4 - 2.0 * chi * z2 + z2 + 1.0);
    const cplx A1 = wb * a1_bias + wv * a1_var;
    const auto e = risk_polynomials(chi.real(), zeta_sq, psi1, psi2);
    const double A0 = e.E0;

    if (std::abs(L.imag()) > 1e-10 * std::max(1.0, std::abs(L)) ||
        std::abs(A1.imag()) > 1e-10 * std::max(1.0, std::abs(A1))) {
        throw Error(ErrorCode::invariant_violation, "training functionals have a non-negligible imaginary part");
    }
    if (std::abs(A0) < 1e-12 * (1.0 + std::abs(A1))) return {L.real(), inf, true};
    return {L.real(), A1.real() / A0, false};
}

}  // namespace rfrisk
