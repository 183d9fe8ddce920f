#include "catch_amalgamated.hpp"

#include <rfrisk/risk.hpp>
#include <rfrisk/stieltjes.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace rfrisk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double relu_zeta_sq = std::numbers::pi / (std::numbers::pi - 2.0);

double log_uniform(std::mt19937_64& g, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(g));
}

}  // namespace

TEST_CASE("fixed point map at nu = 0", "[stieltjes]") {
    const SpectralParams p{1.3, 2.0, 5.0};
    const double K = 40.0;
    const auto [f1, f2] = fixed_point_map(0.0, 0.0, cplx(0.0, K), p);
    CHECK_THAT(std::abs(f1 - cplx(0.0, p.psi1 / K)), WithinAbs(0.0, 1e-16));
    CHECK_THAT(std::abs(f2 - cplx(0.0, p.psi2 / K)), WithinAbs(0.0, 1e-16));
}

TEST_CASE("fixed point map against extended precision", "[stieltjes]") {
    const auto [f1, f2] = fixed_point_map(cplx(0.0, 0.1), cplx(0.0, 0.2), cplx(0.0, 10.0), {2.7519, 2.0, 3.0});
    CHECK(f1.real() == 0.0);
    CHECK(f2.real() == 0.0);
    CHECK_THAT(f1.imag(), WithinRel(0.18653813220137232, 1e-14));
    CHECK_THAT(f2.imag(), WithinRel(0.28955197429917636, 1e-14));
}

TEST_CASE("singular denominator", "[stieltjes]") {
    try {
        (void)fixed_point_map(1.0, 1.0, cplx(0.0, 1.0), {1.0, 1.0, 1.0});
        FAIL("expected SingularDenominator");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::singular_denominator);
    }
}

TEST_CASE("large height asymptote", "[stieltjes]") {
    const double K = 1e6;
    for (const SpectralParams p : {SpectralParams{relu_zeta_sq, 2.0, 3.0}, SpectralParams{0.1, 10.0, 0.1},
                                   SpectralParams{10.0, 0.1, 10.0}}) {
        const SpectralPoint pt = solve_at(cplx(0.0, K), p);
        CHECK(std::abs(cplx(0.0, K) * pt.nu1 + p.psi1) <= 1e-3);
        CHECK(std::abs(cplx(0.0, K) * pt.nu2 + p.psi2) <= 1e-3);
    }
}

TEST_CASE("relu chi at lambda_bar = 0.01", "[stieltjes]") {
    const SpectralParams p{relu_zeta_sq, 2.0, 3.0};
    const double u = std::sqrt(p.psi1 * p.psi2 * 0.01);
    const SpectralPoint pt = solve_at(cplx(0.0, u), p);
    const double ref = -1.1709256419984364952;
    CHECK_THAT(pt.chi.real(), WithinAbs(ref, 1e-9));
    CHECK_THAT(chi_scalar_oracle(p, 0.01), WithinAbs(ref, 1e-12));
    CHECK(pt.residual <= 1e-12);

    const auto [nu1, nu2] = nu_from_chi(chi_scalar_oracle(p, 0.01), p, 0.01);
    CHECK_THAT(nu1.imag(), WithinAbs(0.26908153563390683, 1e-12));
    CHECK_THAT(nu2.imag(), WithinAbs(4.3515644402725369943, 1e-12));
    CHECK(std::abs(nu1 - pt.nu1) <= 1e-8);
    CHECK(std::abs(nu2 - pt.nu2) <= 1e-8);
}

TEST_CASE("scalar oracle value and residual", "[stieltjes]") {
    const SpectralParams p{1.0, 2.0, 3.0};
    const double chi = chi_scalar_oracle(p, 0.1);
    CHECK_THAT(chi, WithinAbs(-1.0498213656638346148, 1e-13));
    // -u^2 chi = (g - psi1)(g - psi2) with g = -zeta^2 chi / (1 - zeta^2 chi) - chi
    const double u2 = p.psi1 * p.psi2 * 0.1;
    const double g = -p.zeta_sq * chi / (1.0 - p.zeta_sq * chi) - chi;
    CHECK(std::abs(-u2 * chi - (g - p.psi1) * (g - p.psi2)) <= 1e-10);
}

TEST_CASE("scalar oracle limits", "[stieltjes]") {
    const SpectralParams p{relu_zeta_sq, 1.0, 3.0};
    const double big = chi_scalar_oracle(p, 1e8);
    CHECK(big < 0.0);
    CHECK(big > -1e-7);
    const double tiny = chi_scalar_oracle(p, 1e-12);
    CHECK_THAT(tiny, WithinRel(chi_ridgeless(p.zeta_sq, p.psi1, p.psi2), 1e-4));
    CHECK_THROWS_AS(chi_scalar_oracle(p, 0.0), Error);
}

TEST_CASE("nu from chi", "[stieltjes]") {
    const SpectralParams sym{2.0, 1.5, 1.5};
    const double chi = chi_scalar_oracle(sym, 0.3);
    const auto [a, b] = nu_from_chi(chi, sym, 0.3);
    CHECK_THAT(a.imag(), WithinRel(std::sqrt(-chi), 1e-12));
    CHECK_THAT(b.imag(), WithinRel(std::sqrt(-chi), 1e-12));

    std::mt19937_64 g(11);
    for (int i = 0; i < 50; ++i) {
        const SpectralParams p{log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10)};
        const double lb = log_uniform(g, 1e-3, 10);
        const double c = chi_scalar_oracle(p, lb);
        const auto [n1, n2] = nu_from_chi(c, p, lb);
        CHECK(n1.imag() > 0.0);
        CHECK(n2.imag() > 0.0);
        CHECK(std::abs(n1 * n2 - c) <= 1e-10 * std::max(1.0, std::abs(c)));
    }
    try {
        (void)nu_from_chi(-0.5, {1.0, 2.0, 3.0}, 0.1);
        FAIL("expected InconsistentChi");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::inconsistent_chi);
    }
}

TEST_CASE("branch consistency over random tuples", "[stieltjes]") {
    std::mt19937_64 g(20240601);
    for (int i = 0; i < 200; ++i) {
        const SpectralParams p{log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10)};
        const double lb = log_uniform(g, 1e-4, 10);
        const SpectralPoint pt = solve_at(cplx(0.0, std::sqrt(p.psi1 * p.psi2 * lb)), p);
        INFO("zeta^2=" << p.zeta_sq << " psi1=" << p.psi1 << " psi2=" << p.psi2 << " lambda_bar=" << lb);
        CHECK(std::abs(pt.chi.real() - chi_scalar_oracle(p, lb)) <= 1e-8);
        CHECK(pt.residual <= 1e-12);
    }
}

TEST_CASE("symmetric and swapped parameters", "[stieltjes]") {
    const SpectralParams sym{relu_zeta_sq, 2.5, 2.5};
    for (double u : {0.05, 0.7, 4.0, 50.0}) {
        const SpectralPoint pt = solve_at(cplx(0.0, u), sym);
        CHECK(std::abs(pt.nu1 - pt.nu2) <= 1e-12 * std::abs(pt.nu1));
    }
    std::mt19937_64 g(5);
    for (int i = 0; i < 20; ++i) {
        const SpectralParams p{log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10)};
        const cplx xi(0.0, log_uniform(g, 0.05, 20));
        const SpectralPoint a = solve_at(xi, p);
        const SpectralPoint b = solve_at(xi, p.swapped());
        CHECK(std::abs(a.nu1 - b.nu2) <= 1e-12 * std::max(1.0, std::abs(a.nu1)));
        CHECK(std::abs(a.nu2 - b.nu1) <= 1e-12 * std::max(1.0, std::abs(a.nu2)));
        CHECK(std::abs(a.chi - b.chi) <= 1e-12 * std::max(1.0, std::abs(a.chi)));
    }
}

// u Im nu_i(iu) = int u^2 / (x^2 + u^2) dmu_i(x) increases towards psi_i.
TEST_CASE("imaginary parts along the imaginary axis", "[stieltjes]") {
    std::mt19937_64 g(99);
    for (int t = 0; t < 5; ++t) {
        const SpectralParams p{log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10)};
        double prev1 = 0.0;
        double prev2 = 0.0;
        for (int k = 0; k < 50; ++k) {
            const double u = 0.01 * std::pow(1e4, k / 49.0);
            const SpectralPoint pt = solve_at(cplx(0.0, u), p);
            CHECK(pt.nu1.real() == 0.0);
            CHECK(pt.nu2.real() == 0.0);
            CHECK(pt.chi.real() <= 0.0);
            CHECK(u * pt.nu1.imag() > prev1);
            CHECK(u * pt.nu2.imag() > prev2);
            CHECK(u * pt.nu1.imag() < p.psi1);
            CHECK(u * pt.nu2.imag() < p.psi2);
            prev1 = u * pt.nu1.imag();
            prev2 = u * pt.nu2.imag();
        }
    }
}

TEST_CASE("off-axis points stay in the upper half plane", "[stieltjes]") {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> re(-3.0, 3.0);
    for (int i = 0; i < 40; ++i) {
        const SpectralParams p{log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10), log_uniform(g, 0.1, 10)};
        const cplx xi(re(g), log_uniform(g, 0.2, 5.0));
        const SpectralPoint pt = solve_at(xi, p);
        CHECK(pt.nu1.imag() > 0.0);
        CHECK(pt.nu2.imag() > 0.0);
        CHECK(std::abs(pt.nu1) <= p.psi1 / xi.imag());
        CHECK(std::abs(pt.nu2) <= p.psi2 / xi.imag());
        CHECK(pt.residual <= 1e-12);
    }
}

TEST_CASE("solver failure modes", "[stieltjes]") {
    const SpectralParams p{relu_zeta_sq, 2.0, 3.0};
    SolverConfig starved;
    starved.max_iter = 2;
    starved.newton_fallback = false;
    try {
        (void)solve_at(cplx(0.0, 0.1), p, starved);
        FAIL("expected NoConvergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::no_convergence);
    }
    SolverConfig low;
    low.path_start_height = 5.0;
    CHECK_THROWS_AS(solve_at(cplx(0.0, 0.1), p, low), Error);
    CHECK_THROWS_AS(solve_at(cplx(1.0, 0.0), p), Error);
    CHECK_THROWS_AS(solve_at(cplx(0.0, 1.0), SpectralParams{0.0, 1.0, 1.0}), Error);
}
