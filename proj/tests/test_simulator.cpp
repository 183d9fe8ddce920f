#include "catch_amalgamated.hpp"

#include <rfrisk/simulator.hpp>

#include <cmath>
#include <vector>

using namespace rfrisk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    PhiloxStream s(seed, 0, StreamPurpose::x);
    return sample_gaussian(rows, cols, s);
}

Eigen::VectorXd random_vector(int n, std::uint64_t seed) { return random_matrix(n, 1, seed).col(0); }

SimConfig small_config() {
    SimConfig cfg;
    cfg.d = 20;
    cfg.n = 60;
    cfg.N = 40;
    cfg.lambda = 1e-2;
    cfg.tau_sq = 0.25;
    cfg.n_test = 500;
    cfg.trials = 6;
    cfg.seed = 2024;
    return cfg;
}

}  // namespace

TEST_CASE("sphere samples", "[simulator]") {
    PhiloxStream s(1, 0, StreamPurpose::theta);
    const int d = 50, count = 20000;
    const Eigen::MatrixXd X = sample_sphere(d, count, s);
    for (int i = 0; i < count; ++i) REQUIRE(std::abs(X.row(i).norm() - std::sqrt(double(d))) <= 1e-12 * d);
    const double m11 = X.col(0).array().square().mean();
    const double m12 = (X.col(0).array() * X.col(1).array()).mean();
    // Var(x1^2) = 2d/(d+2) on the sphere of radius sqrt d
    CHECK(std::abs(m11 - 1.0) <= 4.0 * std::sqrt(2.0 * d / (d + 2.0) / count));
    CHECK(std::abs(m12) <= 4.0 / std::sqrt(double(count)));
    CHECK(std::abs(X.col(3).mean()) <= 4.0 / std::sqrt(double(count)));
}

TEST_CASE("design matrix entries", "[simulator]") {
    // orthogonal rows scaled to the sphere: X X^T = d I
    const int d = 4;
    Eigen::MatrixXd X = 2.0 * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd Z = build_design(X, X, Activation::identity());
    CHECK((Z - X * X.transpose() / d).norm() <= 1e-15);
    CHECK((Z - Eigen::MatrixXd::Identity(d, d)).norm() <= 1e-15);

    Eigen::MatrixXd A(2, 2), T(2, 2);
    A << 1.0, 1.0, 1.0, -1.0;
    T << 1.0, 1.0, -1.0, 1.0;
    // <theta, x>/sqrt 2 = {sqrt2, 0; 0, -sqrt2}, relu, divide by sqrt 2
    const Eigen::MatrixXd R = build_design(A, T, Activation::relu());
    CHECK_THAT(R(0, 0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(R(0, 1), WithinAbs(0.0, 1e-15));
    CHECK_THAT(R(1, 0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(R(1, 1), WithinAbs(0.0, 1e-15));
    const Eigen::MatrixXd S = build_design(A, T, Activation::shifted_relu(0.5));
    CHECK_THAT(S(0, 0), WithinAbs((std::sqrt(2.0) - 0.5) / std::sqrt(2.0), 1e-15));
    CHECK_THAT(S(1, 1), WithinAbs(0.0, 1e-15));
    CHECK_THROWS_AS(build_design(A, Eigen::MatrixXd::Ones(2, 3), Activation::relu()), Error);
}

TEST_CASE("ridge fit basics", "[simulator]") {
    const int d = 10, n = 30, N = 20;
    const Eigen::MatrixXd Z = random_matrix(n, N, 3) / std::sqrt(double(d));
    const Eigen::VectorXd y = random_vector(n, 4);

    CHECK(ridge_fit(Z, Eigen::VectorXd::Zero(n), 0.1, 2.0, 3.0, d).coeffs.norm() == 0.0);

    const double lam = 1e6;
    const FitResult big = ridge_fit(Z, y, lam, 2.0, 3.0, d);
    const double c = lam * 2.0 * 3.0;
    CHECK(big.coeffs.norm() <= (Z.transpose() * y).norm() / (c * std::sqrt(double(d))) * (1.0 + 1e-12));

    // 2x2 by hand: Z = diag(1, 2), c = 1, d = 1 -> a_k = z_k y_k / (z_k^2 + 1)
    Eigen::MatrixXd Z2(2, 2);
    Z2 << 1.0, 0.0, 0.0, 2.0;
    Eigen::VectorXd y2(2);
    y2 << 3.0, 5.0;
    for (auto path : {SolvePath::primal, SolvePath::dual, SolvePath::svd}) {
        const FitResult f = ridge_fit(Z2, y2, 1.0, 1.0, 1.0, 1, path);
        CHECK_THAT(f.coeffs(0), WithinRel(1.5, 1e-14));
        CHECK_THAT(f.coeffs(1), WithinRel(2.0, 1e-14));
    }
    CHECK_THROWS_AS(ridge_fit(Z2, y2, 0.0, 1.0, 1.0, 1, SolvePath::primal), Error);
    CHECK_THROWS_AS(ridge_fit(Z2, y2, -1.0, 1.0, 1.0, 1), Error);
}

TEST_CASE("primal and dual paths agree", "[simulator]") {
    const int d = 20, n = 37;
    for (int N : {11, 80}) {
        const Eigen::MatrixXd Z = random_matrix(n, N, 10 + N) / std::sqrt(double(d));
        const Eigen::VectorXd y = random_vector(n, 99);
        const double p1 = double(N) / d, p2 = double(n) / d;
        const FitResult a = ridge_fit(Z, y, 0.05, p1, p2, d, SolvePath::primal);
        const FitResult b = ridge_fit(Z, y, 0.05, p1, p2, d, SolvePath::dual);
        const FitResult s = ridge_fit(Z, y, 0.05, p1, p2, d, SolvePath::svd);
        CHECK((a.coeffs - b.coeffs).norm() <= 1e-8 * a.coeffs.norm());
        CHECK((a.coeffs - s.coeffs).norm() <= 1e-8 * a.coeffs.norm());
        CHECK(ridge_fit(Z, y, 0.05, p1, p2, d).path == (N <= n ? SolvePath::primal : SolvePath::dual));
    }
}

TEST_CASE("minimum norm interpolation at lambda = 0", "[simulator]") {
    const int d = 9, n = 15, N = 40;
    const Eigen::MatrixXd Z = random_matrix(n, N, 5) / std::sqrt(double(d));
    const Eigen::VectorXd y = random_vector(n, 6);
    const FitResult f = ridge_fit(Z, y, 0.0, double(N) / d, double(n) / d, d);
    CHECK(f.path == SolvePath::svd);
    CHECK((std::sqrt(double(d)) * Z * f.coeffs - y).norm() <= 1e-10 * y.norm());
    const Eigen::VectorXd pinv = Z.completeOrthogonalDecomposition().solve(y) / std::sqrt(double(d));
    CHECK((f.coeffs - pinv).norm() <= 1e-10 * pinv.norm());
}

TEST_CASE("fit minimizes the objective", "[simulator]") {
    const int d = 12, n = 40, N = 25;
    const double lam = 0.03;
    const Eigen::MatrixXd Z = random_matrix(n, N, 7) / std::sqrt(double(d));
    const Eigen::VectorXd y = random_vector(n, 8);
    const FitResult f = ridge_fit(Z, y, lam, double(N) / d, double(n) / d, d);
    const double best = ridge_objective(Z, y, f.coeffs, lam, d);
    for (std::uint64_t k = 0; k < 20; ++k) {
        const Eigen::VectorXd delta = 1e-4 * random_vector(N, 100 + k);
        CHECK(ridge_objective(Z, y, f.coeffs + delta, lam, d) >= best);
    }
}

TEST_CASE("trials are deterministic and thread independent", "[simulator]") {
    const SimConfig cfg = small_config();
    const TrialResult a = run_trial(cfg, 3);
    const TrialResult b = run_trial(cfg, 3);
    CHECK(a.test_error == b.test_error);
    CHECK(a.train_error == b.train_error);
    CHECK(a.norm_sq == b.norm_sq);
    CHECK(run_trial(cfg, 4).test_error != a.test_error);

    const auto one = run_trials(cfg, 1);
    const auto many = run_trials(cfg, 8);
    REQUIRE(one.size() == many.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].test_error == many[i].test_error);
        CHECK(one[i].train_error == many[i].train_error);
        CHECK(one[i].norm_sq == many[i].norm_sq);
    }
}

TEST_CASE("heavy ridge predicts zero", "[simulator]") {
    SimConfig cfg = small_config();
    cfg.lambda = 1e9;
    cfg.target = Target::linear_plus_quad();
    cfg.n_test = 20000;
    const TrialResult r = run_trial(cfg, 0);
    const double power = 1.0 + nonlinear_power(cfg.target, cfg.d);
    CHECK(std::abs(r.test_error - power) <= 3.0 * r.test_error_sem + 1e-6);
    CHECK(r.norm_sq < 1e-12);
}

TEST_CASE("train error is nonincreasing in nested width", "[simulator]") {
    SimConfig cfg = small_config();
    cfg.lambda = 1e-8;
    double prev = std::numeric_limits<double>::infinity();
    for (int N : {10, 20, 40, 60, 80, 120}) {
        cfg.N = N;
        const TrialResult r = run_trial(cfg, 0);
        CHECK(r.train_error <= prev + 1e-10);
        prev = r.train_error;
    }
    // interpolating widths leave only the tiny penalty
    CHECK(prev <= 1e-5);
}

TEST_CASE("rotation invariance", "[simulator]") {
    const SimConfig cfg = small_config();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(cfg.d, cfg.d, 17));
    const Eigen::MatrixXd R = qr.householderQ();
    for (std::uint64_t t = 0; t < 3; ++t) {
        const TrialResult a = run_trial(cfg, t);
        const TrialResult b = run_trial(cfg, t, &R);
        CHECK_THAT(b.test_error, WithinRel(a.test_error, 1e-8));
        CHECK_THAT(b.train_error, WithinRel(a.train_error, 1e-8));
        CHECK_THAT(b.norm_sq, WithinRel(a.norm_sq, 1e-8));
    }
}

TEST_CASE("test-set standard error halves its variance with twice the points", "[simulator]") {
    SimConfig cfg = small_config();
    cfg.n_test = 20000;
    double v1 = 0, v2 = 0;
    for (std::uint64_t t = 0; t < 4; ++t) {
        v1 += std::pow(run_trial(cfg, t).test_error_sem, 2);
    }
    cfg.n_test = 40000;
    for (std::uint64_t t = 0; t < 4; ++t) {
        v2 += std::pow(run_trial(cfg, t).test_error_sem, 2);
    }
    CHECK(std::abs(v2 / v1 - 0.5) <= 0.1);
}

TEST_CASE("aggregation", "[simulator]") {
    std::vector<TrialResult> same(5);
    for (auto& t : same) t.test_error = 2.5;
    const AggregateResult s = aggregate(same);
    CHECK(s.test_error.mean == 2.5);
    CHECK(s.test_error.sem == 0.0);
    CHECK(s.trials == 5);

    std::vector<TrialResult> two(2);
    two[0].test_error = 1.0;
    two[1].test_error = 3.0;
    CHECK(aggregate(two).test_error.mean == 2.0);
    CHECK_THAT(aggregate(two).test_error.sem, WithinRel(1.0, 1e-15));

    std::vector<TrialResult> many(400);
    PhiloxStream s2(5, 0, StreamPurpose::noise);
    for (auto& t : many) t.train_error = s2.normal();
    CHECK_THAT(aggregate(many).train_error.sem, WithinRel(1.0 / 20.0, 0.15));

    try {
        (void)aggregate(std::span<const TrialResult>(same.data(), 1));
        FAIL("expected InsufficientTrials");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::insufficient_trials);
    }
}

TEST_CASE("nonlinear target power", "[simulator]") {
    CHECK(nonlinear_power(Target::linear(), 10) == 0.0);
    CHECK_THAT(nonlinear_power(Target::linear_plus_quad(), 100), WithinRel(99.0 / 204.0, 1e-15));
    CHECK_THAT(nonlinear_power(Target::linear_plus_cross(), 100), WithinRel(100.0 / 204.0, 1e-15));

    PhiloxStream s(11, 0, StreamPurpose::test);
    const int d = 100, count = 200000;
    const Eigen::MatrixXd X = sample_sphere(d, count, s);
    const Eigen::ArrayXd q = 0.5 * (X.col(0).array().square() - 1.0);
    const Eigen::ArrayXd c = X.col(0).array() * X.col(1).array() / std::sqrt(2.0);
    auto check_mc = [count](const Eigen::ArrayXd& v, double expected) {
        const Eigen::ArrayXd sq = v.square();
        const double m = sq.mean();
        const double sem = std::sqrt((sq - m).square().sum() / (count - 1.0) / count);
        CHECK(std::abs(m - expected) <= 3.0 * sem);
    };
    check_mc(q, nonlinear_power(Target::linear_plus_quad(), d));
    check_mc(c, nonlinear_power(Target::linear_plus_cross(), d));
}

TEST_CASE("gaussian covariates model", "[simulator]") {
    SimConfig cfg = small_config();
    cfg.model = ModelKind::gaussian_covariates;
    const TrialResult a = run_model_trial(cfg, 1);
    const TrialResult b = run_model_trial(cfg, 1);
    CHECK(a.test_error == b.test_error);
    CHECK(std::isfinite(a.test_error));

    cfg.activation = Activation::identity();
    try {
        (void)run_model_trial(cfg, 1);
        FAIL("expected DegenerateActivation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate_activation);
    }

    SimConfig quad = small_config();
    quad.model = ModelKind::gaussian_covariates;
    quad.target = Target::linear_plus_quad();
    CHECK_THROWS_AS(run_trials(quad, 1), Error);
}
