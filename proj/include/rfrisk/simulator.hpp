#pragma once

// Finite-dimensional Monte Carlo of random-features ridge regression on the
// sphere S^{d-1}(sqrt d), and of the Gaussian covariates surrogate.

#include "rfrisk/activation.hpp"
#include "rfrisk/errors.hpp"
#include "rfrisk/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace rfrisk {

enum class TargetKind { linear, linear_plus_quad, linear_plus_cross };

/// Target f(x) with the linear part along e1.
struct Target {
    TargetKind kind = TargetKind::linear;
    double beta_norm = 1.0;  // linear only

    [[nodiscard]] static Target linear(double beta_norm = 1.0) { return {TargetKind::linear, beta_norm}; }
    [[nodiscard]] static Target linear_plus_quad() { return {TargetKind::linear_plus_quad, 1.0}; }
    [[nodiscard]] static Target linear_plus_cross() { return {TargetKind::linear_plus_cross, 1.0}; }

    [[nodiscard]] double F1_sq() const { return kind == TargetKind::linear ? beta_norm * beta_norm : 1.0; }

    template <typename Row>
    [[nodiscard]] double operator()(const Row& x) const {
        switch (kind) {
            case TargetKind::linear: return beta_norm * x(0);
            case TargetKind::linear_plus_quad: return x(0) + 0.5 * (x(0) * x(0) - 1.0);
            case TargetKind::linear_plus_cross: return x(0) + x(0) * x(1) / std::numbers::sqrt2;
        }
        return 0.0;
    }

    [[nodiscard]] std::string_view name() const {
        switch (kind) {
            case TargetKind::linear: return "linear";
            case TargetKind::linear_plus_quad: return "quad";
            case TargetKind::linear_plus_cross: return "cross";
        }
        return "?";
    }
};

/// Exact finite-d power of the nonlinear part of the target on the sphere.
[[nodiscard]] inline double nonlinear_power(const Target& target, int d) {
    detail::require(d >= 2, ErrorCode::invalid_argument, "nonlinear_power requires d >= 2");
    const double dd = d;
    switch (target.kind) {
        case TargetKind::linear: return 0.0;
        case TargetKind::linear_plus_quad: return (dd - 1.0) / (2.0 * (dd + 2.0));
        case TargetKind::linear_plus_cross: return dd / (2.0 * (dd + 2.0));
    }
    return 0.0;
}

enum class ModelKind { random_features, gaussian_covariates };

struct SimConfig {
    int d = 100;
    int n = 300;
    int N = 300;
    double lambda = 1e-3;
    Activation activation = Activation::relu();
    Target target = Target::linear();
    double tau_sq = 0.0;
    int n_test = 3000;
    int trials = 20;
    std::uint64_t seed = 0;
    ModelKind model = ModelKind::random_features;

    [[nodiscard]] double psi1_d() const { return static_cast<double>(N) / d; }
    [[nodiscard]] double psi2_d() const { return static_cast<double>(n) / d; }

    void validate() const {
        detail::require(d >= 2 && n >= 1 && N >= 1 && n_test >= 1 && trials >= 1, ErrorCode::invalid_argument,
                        "simulation sizes must be positive (d >= 2)");
        detail::require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::invalid_argument,
                        "lambda must be finite and >= 0");
        detail::require(tau_sq >= 0.0 && std::isfinite(tau_sq), ErrorCode::invalid_argument, "tau_sq must be >= 0");
        detail::require(model == ModelKind::random_features || target.kind == TargetKind::linear,
                        ErrorCode::invalid_argument, "gaussian covariates model requires a linear target");
    }
};

struct TrialResult {
    double test_error = 0.0;
    double train_error = 0.0;  // realized regularized objective
    double penalty = 0.0;      // (N lambda / d) ||a||^2
    double norm_sq = 0.0;      // ||a||^2
    double test_error_sem = 0.0;  // within-trial standard error of the test estimate
    bool ill_conditioned = false;
};

struct MetricSummary {
    double mean = 0.0;
    double sem = 0.0;
};

struct AggregateResult {
    MetricSummary test_error;
    MetricSummary train_error;
    MetricSummary penalty;
    MetricSummary norm_sq;
    int trials = 0;
};

/// count rows drawn uniformly on the sphere of radius sqrt(d), row by row.
[[nodiscard]] inline Eigen::MatrixXd sample_sphere(int d, int count, PhiloxStream& stream) {
    detail::require(d >= 2 && count >= 0, ErrorCode::invalid_argument, "sample_sphere requires d >= 2");
    Eigen::MatrixXd X(count, d);
    const double radius = std::sqrt(static_cast<double>(d));
    for (int i = 0; i < count; ++i) {
        double norm = 0.0;
        do {
            for (int j = 0; j < d; ++j) X(i, j) = stream.normal();
            norm = X.row(i).norm();
        } while (norm == 0.0);
        X.row(i) *= radius / norm;
    }
    return X;
}

[[nodiscard]] inline Eigen::MatrixXd sample_gaussian(int rows, int cols, PhiloxStream& stream) {
    Eigen::MatrixXd G(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) G(i, j) = stream.normal();
    return G;
}

/// Z_{ia} = sigma(<theta_a, x_i> / sqrt d) / sqrt d.
[[nodiscard]] inline Eigen::MatrixXd build_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Theta,
                                                  const Activation& act) {
    detail::require(X.cols() == Theta.cols(), ErrorCode::invalid_argument, "X and Theta must share dimension d");
    const double sd = std::sqrt(static_cast<double>(X.cols()));
    Eigen::MatrixXd Z = X * Theta.transpose() / sd;
    if (act.kind == ActivationKind::relu) {
        Z = Z.cwiseMax(0.0);
    } else {
        Z = Z.unaryExpr([&act](double t) { return act(t); });
    }
    return Z / sd;
}

enum class SolvePath { primal, dual, svd };

struct FitResult {
    Eigen::VectorXd coeffs;
    bool ill_conditioned = false;
    SolvePath path = SolvePath::primal;
};

/// a = (Z^T Z + lambda psi1 psi2 I)^{-1} Z^T y / sqrt d, or the minimum-norm
/// least-squares solution at lambda = 0. `force` pins the solve path.
[[nodiscard]] inline FitResult ridge_fit(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double lambda,
                                         double psi1_d, double psi2_d, int d,
                                         std::optional<SolvePath> force = std::nullopt) {
    detail::require(Z.rows() == y.size(), ErrorCode::invalid_argument, "Z rows must match y");
    detail::require(lambda >= 0.0, ErrorCode::invalid_argument, "lambda must be >= 0");
    const double c = lambda * psi1_d * psi2_d;
    const double sd = std::sqrt(static_cast<double>(d));
    const Eigen::Index n = Z.rows();
    const Eigen::Index N = Z.cols();

    SolvePath path = Z.cols() <= Z.rows() ? SolvePath::primal : SolvePath::dual;
    if (lambda <= 1e-6) path = SolvePath::svd;
    if (force) path = *force;
    detail::require(path == SolvePath::svd || c > 0.0, ErrorCode::invalid_argument,
                    "lambda = 0 requires the singular-value path");

    FitResult fit;
    fit.path = path;
    auto cond_from_llt = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
        const auto diag = llt.matrixLLT().diagonal();
        const double r = diag.maxCoeff() / diag.minCoeff();
        return r * r;
    };
    if (path == SolvePath::primal) {
        Eigen::MatrixXd G = Z.transpose() * Z;
        G.diagonal().array() += c;
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        detail::require(llt.info() == Eigen::Success, ErrorCode::no_convergence, "Cholesky failed in ridge_fit");
        fit.coeffs = llt.solve(Z.transpose() * y) / sd;
        fit.ill_conditioned = cond_from_llt(llt) > 1e12;
    } else if (path == SolvePath::dual) {
        Eigen::MatrixXd K = Z * Z.transpose();
        K.diagonal().array() += c;
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        detail::require(llt.info() == Eigen::Success, ErrorCode::no_convergence, "Cholesky failed in ridge_fit");
        fit.coeffs = Z.transpose() * llt.solve(y) / sd;
        fit.ill_conditioned = cond_from_llt(llt) > 1e12;
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        const double smax = s.size() > 0 ? s(0) : 0.0;
        const double cutoff = 1e-10 * smax;
        Eigen::VectorXd filt(s.size());
        double smin_kept = smax;
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            if (c > 0.0) {
                filt(k) = s(k) / (s(k) * s(k) + c);
                smin_kept = std::min(smin_kept, s(k));
            } else if (s(k) > cutoff) {
                filt(k) = 1.0 / s(k);
                smin_kept = std::min(smin_kept, s(k));
            } else {
                filt(k) = 0.0;
            }
        }
        fit.coeffs = svd.matrixV() * (filt.asDiagonal() * (svd.matrixU().transpose() * y)) / sd;
        const double full_rank_min = std::min(n, N) == s.size() && s.size() > 0 ? s(s.size() - 1) : 0.0;
        const double cond = (c > 0.0 ? (smax * smax + c) / (full_rank_min * full_rank_min + c) : smax / smin_kept);
        fit.ill_conditioned = !(cond <= 1e12);
    }
    return fit;
}

/// Realized objective (1/n)||y - sqrt(d) Z a||^2 + (N lambda / d)||a||^2.
[[nodiscard]] inline double ridge_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& a, double lambda, int d) {
    const double sd = std::sqrt(static_cast<double>(d));
    const double n = static_cast<double>(Z.rows());
    const double N = static_cast<double>(Z.cols());
    return (y - sd * (Z * a)).squaredNorm() / n + N * lambda / d * a.squaredNorm();
}

namespace detail {

constexpr int test_chunk_rows = 2048;

struct TestAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    long count = 0;

    void add(double e) {
        sum += e;
        sum_sq += e * e;
        ++count;
    }
    [[nodiscard]] double mean() const { return sum / static_cast<double>(count); }
    [[nodiscard]] double sem() const {
        if (count < 2) return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum_sq - count * m * m) / static_cast<double>(count - 1));
        return std::sqrt(var / static_cast<double>(count));
    }
};

inline TrialResult finish_trial(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, const FitResult& fit,
                                const SimConfig& cfg, const TestAccumulator& test) {
    TrialResult r;
    r.norm_sq = fit.coeffs.squaredNorm();
    r.penalty = static_cast<double>(cfg.N) * cfg.lambda / cfg.d * r.norm_sq;
    r.train_error = ridge_objective(Z, y, fit.coeffs, cfg.lambda, cfg.d);
    r.test_error = test.mean();
    r.test_error_sem = test.sem();
    r.ill_conditioned = fit.ill_conditioned;
    return r;
}

inline Eigen::VectorXd noise_vector(int n, double tau_sq, PhiloxStream& stream) {
    Eigen::VectorXd eps(n);
    const double tau = std::sqrt(tau_sq);
    for (int i = 0; i < n; ++i) eps(i) = tau * stream.normal();
    return eps;
}

}  // namespace detail

/// One random-features trial. Randomness is a function of (seed, trial_index)
/// only. With `rotation` R, every sphere sample x is replaced by R x and the
/// target by x -> f(R^T x); the result then differs only by rounding.
[[nodiscard]] inline TrialResult run_trial(const SimConfig& cfg, std::uint64_t trial_index,
                                           const Eigen::MatrixXd* rotation = nullptr) {
    cfg.validate();
    PhiloxStream theta_stream(cfg.seed, trial_index, StreamPurpose::theta);
    PhiloxStream x_stream(cfg.seed, trial_index, StreamPurpose::x);
    PhiloxStream noise_stream(cfg.seed, trial_index, StreamPurpose::noise);
    PhiloxStream test_stream(cfg.seed, trial_index, StreamPurpose::test);

    Eigen::MatrixXd Theta = sample_sphere(cfg.d, cfg.N, theta_stream);
    Eigen::MatrixXd X = sample_sphere(cfg.d, cfg.n, x_stream);
    if (rotation) {
        detail::require(rotation->rows() == cfg.d && rotation->cols() == cfg.d, ErrorCode::invalid_argument,
                        "rotation must be d x d");
        Theta = Theta * rotation->transpose();
        X = X * rotation->transpose();
    }
    auto target_rows = [&](const Eigen::MatrixXd& rows) -> Eigen::MatrixXd {
        return rotation ? Eigen::MatrixXd(rows * (*rotation)) : rows;
    };

    const Eigen::MatrixXd Xf = target_rows(X);
    Eigen::VectorXd y = detail::noise_vector(cfg.n, cfg.tau_sq, noise_stream);
    for (int i = 0; i < cfg.n; ++i) y(i) += cfg.target(Xf.row(i));

    const Eigen::MatrixXd Z = build_design(X, Theta, cfg.activation);
    const FitResult fit = ridge_fit(Z, y, cfg.lambda, cfg.psi1_d(), cfg.psi2_d(), cfg.d);

    detail::TestAccumulator acc;
    const double sd = std::sqrt(static_cast<double>(cfg.d));
    for (int start = 0; start < cfg.n_test; start += detail::test_chunk_rows) {
        const int rows = std::min(detail::test_chunk_rows, cfg.n_test - start);
        Eigen::MatrixXd Xt = sample_sphere(cfg.d, rows, test_stream);
        if (rotation) Xt = Xt * rotation->transpose();
        const Eigen::MatrixXd Xtf = target_rows(Xt);
        const Eigen::VectorXd pred = sd * (build_design(Xt, Theta, cfg.activation) * fit.coeffs);
        for (int i = 0; i < rows; ++i) {
            const double e = cfg.target(Xtf.row(i)) - pred(i);
            acc.add(e * e);
        }
    }
    return detail::finish_trial(Z, y, fit, cfg, acc);
}

/// Gaussian covariates surrogate: x ~ N(0, I_d), u_j = mu0 + mu1 <theta_j, x>/sqrt d + mu* w_j.
[[nodiscard]] inline TrialResult run_gaussian_covariates_trial(const SimConfig& cfg, std::uint64_t trial_index) {
    cfg.validate();
    detail::require(cfg.target.kind == TargetKind::linear, ErrorCode::invalid_argument,
                    "gaussian covariates model requires a linear target");
    const HermiteStats st = hermite_stats(cfg.activation);
    const double mu_star = std::sqrt(st.mu_star_sq);

    PhiloxStream theta_stream(cfg.seed, trial_index, StreamPurpose::theta);
    PhiloxStream x_stream(cfg.seed, trial_index, StreamPurpose::x);
    PhiloxStream noise_stream(cfg.seed, trial_index, StreamPurpose::noise);
    PhiloxStream test_stream(cfg.seed, trial_index, StreamPurpose::test);
    PhiloxStream w_stream(cfg.seed, trial_index, StreamPurpose::w);

    const double sd = std::sqrt(static_cast<double>(cfg.d));
    const Eigen::MatrixXd Theta = sample_sphere(cfg.d, cfg.N, theta_stream);
    auto covariates = [&](const Eigen::MatrixXd& X, PhiloxStream& w) {
        Eigen::MatrixXd U = st.mu1 * (X * Theta.transpose()) / sd;
        U.array() += st.mu0;
        U += mu_star * sample_gaussian(static_cast<int>(X.rows()), cfg.N, w);
        return U;
    };

    const Eigen::MatrixXd X = sample_gaussian(cfg.n, cfg.d, x_stream);
    Eigen::VectorXd y = detail::noise_vector(cfg.n, cfg.tau_sq, noise_stream);
    for (int i = 0; i < cfg.n; ++i) y(i) += cfg.target(X.row(i));

    const Eigen::MatrixXd Z = covariates(X, w_stream) / sd;
    const FitResult fit = ridge_fit(Z, y, cfg.lambda, cfg.psi1_d(), cfg.psi2_d(), cfg.d);

    detail::TestAccumulator acc;
    for (int start = 0; start < cfg.n_test; start += detail::test_chunk_rows) {
        const int rows = std::min(detail::test_chunk_rows, cfg.n_test - start);
        const Eigen::MatrixXd Xt = sample_gaussian(rows, cfg.d, test_stream);
        const Eigen::VectorXd pred = covariates(Xt, test_stream) * fit.coeffs;
        for (int i = 0; i < rows; ++i) {
            const double e = cfg.target(Xt.row(i)) - pred(i);
            acc.add(e * e);
        }
    }
    return detail::finish_trial(Z, y, fit, cfg, acc);
}

[[nodiscard]] inline TrialResult run_model_trial(const SimConfig& cfg, std::uint64_t trial_index) {
    return cfg.model == ModelKind::random_features ? run_trial(cfg, trial_index)
                                                   : run_gaussian_covariates_trial(cfg, trial_index);
}

/// All cfg.trials trials, in trial order, on up to `threads` worker threads.
[[nodiscard]] inline std::vector<TrialResult> run_trials(const SimConfig& cfg, int threads = 1) {
    cfg.validate();
    std::vector<TrialResult> out(static_cast<std::size_t>(cfg.trials));
    const int workers = std::clamp(threads, 1, cfg.trials);
    if (workers == 1) {
        for (int t = 0; t < cfg.trials; ++t) out[t] = run_model_trial(cfg, static_cast<std::uint64_t>(t));
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int t = next++; t < cfg.trials; t = next++) {
                try {
                    out[t] = run_model_trial(cfg, static_cast<std::uint64_t>(t));
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return out;
}

namespace detail {

inline MetricSummary summarize(std::span<const TrialResult> trials, double TrialResult::*field) {
    const double n = static_cast<double>(trials.size());
    double mean = 0.0;
    for (const auto& t : trials) mean += t.*field;
    mean /= n;
    double ss = 0.0;
    for (const auto& t : trials) ss += (t.*field - mean) * (t.*field - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace detail

[[nodiscard]] inline AggregateResult aggregate(std::span<const TrialResult> trials) {
    detail::require(trials.size() >= 2, ErrorCode::insufficient_trials, "standard errors need at least 2 trials");
    AggregateResult a;
    a.test_error = detail::summarize(trials, &TrialResult::test_error);
    a.train_error = detail::summarize(trials, &TrialResult::train_error);
    a.penalty = detail::summarize(trials, &TrialResult::penalty);
    a.norm_sq = detail::summarize(trials, &TrialResult::norm_sq);
    a.trials = static_cast<int>(trials.size());
    return a;
}

}  // namespace rfrisk
