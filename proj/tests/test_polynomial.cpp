#include "catch_amalgamated.hpp"

#include <rfrisk/polynomial.hpp>

#include <algorithm>
#include <array>
#include <complex>
#include <vector>

using namespace rfrisk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> sorted_real(const std::vector<std::complex<double>>& roots) {
    std::vector<double> r;
    for (const auto& z : roots) r.push_back(z.real());
    std::sort(r.begin(), r.end());
    return r;
}

}  // namespace

TEST_CASE("horner", "[polynomial]") {
    const std::array<double, 3> p{2.0, -3.0, 1.0};
    CHECK(horner<double, double>(p, 2.0) == 3.0);
    CHECK(horner<std::complex<double>, double>(p, {0.0, 1.0}) == std::complex<double>(-1.0, -3.0));
}

TEST_CASE("companion roots of a cubic", "[polynomial]") {
    // (x - 1)(x + 2)(x - 3) = x^3 - 2x^2 - 5x + 6
    const std::array<double, 4> p{1.0, -2.0, -5.0, 6.0};
    const auto r = sorted_real(polynomial_roots(p));
    REQUIRE(r.size() == 3);
    CHECK_THAT(r[0], WithinAbs(-2.0, 1e-14));
    CHECK_THAT(r[1], WithinAbs(1.0, 1e-14));
    CHECK_THAT(r[2], WithinAbs(3.0, 1e-14));
}

TEST_CASE("complex pair and leading zeros", "[polynomial]") {
    const std::array<double, 4> p{0.0, 1.0, 0.0, 4.0};  // x^2 + 4
    const auto r = polynomial_roots(p);
    REQUIRE(r.size() == 2);
    for (const auto& z : r) {
        CHECK_THAT(z.real(), WithinAbs(0.0, 1e-14));
        CHECK_THAT(std::abs(z.imag()), WithinAbs(2.0, 1e-14));
    }
    const std::array<double, 2> constant{0.0, 5.0};
    CHECK_THROWS_AS(polynomial_roots(constant), Error);
}

TEST_CASE("widely spread roots keep relative accuracy", "[polynomial]") {
    // roots -1e-8, -1, -1e8
    const double a = 1e-8, b = 1.0, c = 1e8;
    const std::array<double, 4> p{1.0, a + b + c, a * b + a * c + b * c, a * b * c};
    const auto r = sorted_real(polynomial_roots(p));
    CHECK_THAT(r[0], WithinRel(-c, 1e-12));
    CHECK_THAT(r[1], WithinRel(-b, 1e-12));
    CHECK_THAT(r[2], WithinRel(-a, 1e-10));
}
