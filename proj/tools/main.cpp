// rfrisk: activation statistics, asymptotic risk curves, Monte Carlo runs and
// theory-vs-simulation tables for random-features ridge regression.

#include "expr.hpp"

#include <rfrisk/rfrisk.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace rfrisk;

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();
constexpr const char* version = RFRISK_VERSION;

// ---------------------------------------------------------------- options

struct ActivationOpts {
    std::string kind = "relu";
    double shift = 0.0;
    std::string expr_file;
    std::vector<double> breakpoints;
    std::vector<double> stats;  // mu0, mu1, mu_star^2
    int order = 64;
};

struct ModelOpts {
    int d = 0, n = 0, N = 0;
    double lambda = 0.0;
    double psi1 = 0.0, psi2 = 0.0, lambda_bar = 0.0;
    double zeta_sq = 0.0;
    CLI::Option *d_opt{}, *n_opt{}, *N_opt{}, *lambda_opt{};
    CLI::Option *psi1_opt{}, *psi2_opt{}, *lambda_bar_opt{}, *zeta_opt{};
};

struct TargetOpts {
    std::string kind = "linear";
    double beta_norm = 1.0;
    double tau_sq = 0.0;
    double rho = 0.0;
    CLI::Option* rho_opt{};
};

struct SweepOpts {
    std::string param;
    std::vector<double> grid;
    std::string range;
};

struct OutputOpts {
    std::string format = "csv";
    std::string out;
};

struct SimOpts {
    std::string model = "rf";
    int n_test = 0;
    int trials = 20;
    std::uint64_t seed = 0;
    int threads = 1;
};

int default_threads() {
    if (const char* env = std::getenv("RFRISK_THREADS")) {
        try {
            const int t = std::stoi(env);
            if (t > 0) return t;
        } catch (const std::exception&) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void add_activation_flags(CLI::App* cmd, ActivationOpts& a) {
    cmd->add_option("--activation", a.kind, "relu | identity | shifted_relu | custom")
        ->check(CLI::IsMember({"relu", "identity", "shifted_relu", "custom"}));
    cmd->add_option("--shift", a.shift, "kink location c of shifted_relu, sigma(u) = max(u - c, 0)");
    cmd->add_option("--expr-file", a.expr_file, "file holding sigma(u) for --activation custom")
        ->check(CLI::ExistingFile);
    cmd->add_option("--breakpoints", a.breakpoints, "kinks of a custom activation")->delimiter(',');
    cmd->add_option("--stats", a.stats, "mu0,mu1,mu_star_sq override for a custom activation")
        ->delimiter(',')
        ->expected(3);
    cmd->add_option("--order", a.order, "quadrature order for custom activations (>= 32)");
}

void add_model_flags(CLI::App* cmd, ModelOpts& m, bool asymptotic_allowed) {
    m.d_opt = cmd->add_option("--d", m.d, "input dimension");
    m.n_opt = cmd->add_option("--n", m.n, "training samples");
    m.N_opt = cmd->add_option("--N", m.N, "random features");
    m.lambda_opt = cmd->add_option("--lambda", m.lambda, "ridge penalty lambda");
    if (asymptotic_allowed) {
        m.psi1_opt = cmd->add_option("--psi1", m.psi1, "N / d");
        m.psi2_opt = cmd->add_option("--psi2", m.psi2, "n / d");
        m.lambda_bar_opt = cmd->add_option("--lambda-bar", m.lambda_bar, "lambda / mu_star^2");
        m.zeta_opt = cmd->add_option("--zeta-sq", m.zeta_sq, "zeta^2 directly (asymptotic flags only)");
    }
}

void add_target_flags(CLI::App* cmd, TargetOpts& t, bool rho_allowed) {
    cmd->add_option("--target", t.kind, "linear | quad | cross")->check(CLI::IsMember({"linear", "quad", "cross"}));
    cmd->add_option("--beta-norm", t.beta_norm, "||beta_1|| of the linear target");
    cmd->add_option("--tau2", t.tau_sq, "noise variance tau^2");
    if (rho_allowed) {
        t.rho_opt = cmd->add_option("--rho", t.rho, "signal-to-noise ratio; replaces the target flags");
    }
}

void add_sweep_flags(CLI::App* cmd, SweepOpts& s, std::vector<std::string> names) {
    cmd->add_option("--sweep", s.param, "swept parameter")->check(CLI::IsMember(names));
    cmd->add_option("--grid", s.grid, "explicit grid values")->delimiter(',');
    cmd->add_option("--range", s.range, "min:max:points[:linear|log]");
}

void add_output_flags(CLI::App* cmd, OutputOpts& o) {
    cmd->add_option("--format", o.format, "csv | jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    cmd->add_option("--out", o.out, "output path (default stdout)");
}

void add_sim_flags(CLI::App* cmd, SimOpts& s) {
    cmd->add_option("--model", s.model, "rf | gc (gaussian covariates)")->check(CLI::IsMember({"rf", "gc"}));
    cmd->add_option("--n-test", s.n_test, "fresh test samples per trial (default 10 n)");
    cmd->add_option("--trials", s.trials, "independent trials");
    cmd->add_option("--seed", s.seed, "64-bit seed");
    s.threads = default_threads();
    cmd->add_option("--threads", s.threads, "worker threads (default $RFRISK_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------- resolution

Error arg_error(const std::string& what) { return Error(ErrorCode::invalid_argument, what); }

Activation make_activation(const ActivationOpts& a) {
    Activation act;
    if (a.kind == "relu") {
        act = Activation::relu();
    } else if (a.kind == "identity") {
        act = Activation::identity();
    } else if (a.kind == "shifted_relu") {
        act = Activation::shifted_relu(a.shift);
    } else {
        if (a.expr_file.empty()) throw arg_error("--activation custom needs --expr-file");
        std::ifstream in(a.expr_file);
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            act = Activation::custom(cli::compile_expression(ss.str()), a.breakpoints, a.expr_file);
        } catch (const std::invalid_argument& e) {
            throw arg_error(e.what());
        }
    }
    if (!a.stats.empty()) {
        if (act.is_builtin()) throw arg_error("--stats applies to custom activations only");
        act.stats_override = HermiteStats::make(a.stats[0], a.stats[1], a.stats[2]);
    }
    return act;
}

std::vector<double> resolve_grid(const SweepOpts& s) {
    if (s.param.empty()) {
        if (!s.grid.empty() || !s.range.empty()) throw arg_error("--grid/--range need --sweep");
        return {};
    }
    if (s.grid.empty() == s.range.empty()) throw arg_error("--sweep needs exactly one of --grid or --range");
    std::vector<double> g = s.grid;
    if (!s.range.empty()) {
        std::vector<std::string> parts;
        std::stringstream ss(s.range);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() < 3 || parts.size() > 4) throw arg_error("--range expects min:max:points[:linear|log]");
        double lo, hi;
        int points;
        try {
            lo = std::stod(parts[0]);
            hi = std::stod(parts[1]);
            points = std::stoi(parts[2]);
        } catch (const std::exception&) {
            throw arg_error("--range: malformed number");
        }
        const std::string spacing = parts.size() == 4 ? parts[3] : "linear";
        if (spacing != "linear" && spacing != "log") throw arg_error("--range spacing must be linear or log");
        if (points < 1) throw arg_error("--range needs points >= 1");
        if (points > 1 && !(hi > lo)) throw arg_error("--range needs max > min");
        if (spacing == "log" && !(lo > 0.0)) throw arg_error("log spacing needs min > 0");
        for (int k = 0; k < points; ++k) {
            const double t = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
            g.push_back(spacing == "log" ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo));
        }
    }
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw arg_error("sweep grid must be strictly increasing");
    return g;
}

enum class Mode { finite, asymptotic };

bool given(const CLI::Option* o) { return o && o->count() > 0; }

Mode resolve_mode(const ModelOpts& m) {
    const bool finite = given(m.d_opt) || given(m.n_opt) || given(m.N_opt) || given(m.lambda_opt);
    const bool asym = given(m.psi1_opt) || given(m.psi2_opt) || given(m.lambda_bar_opt);
    if (finite && asym) throw arg_error("finite-model flags (d, n, N, lambda) and asymptotic flags (psi1, psi2, lambda-bar) cannot be mixed");
    if (given(m.zeta_opt) && finite) throw arg_error("--zeta-sq only combines with asymptotic flags");
    return finite ? Mode::finite : Mode::asymptotic;
}

/// One resolved grid point.
struct Point {
    int d = 0, n = 0, N = 0;
    double lambda = nan_v;
    double psi1 = nan_v, psi2 = nan_v, lambda_bar = nan_v;
    double rho = nan_v;
};

struct Spectrum {
    double zeta_sq;
    double mu_star_sq;  // nan when zeta^2 was supplied directly
};

Spectrum resolve_spectrum(const ModelOpts& m, const ActivationOpts& a) {
    if (given(m.zeta_opt)) {
        if (!(m.zeta_sq > 0.0)) throw arg_error("--zeta-sq must be positive");
        return {m.zeta_sq, nan_v};
    }
    const HermiteStats st = hermite_stats(make_activation(a), a.order);
    return {st.zeta_sq, st.mu_star_sq};
}

void require_flag(const CLI::Option* o, const std::string& swept, const std::string& name, const std::string& as) {
    if (swept != as && !given(o)) throw arg_error("missing --" + name);
}

std::vector<Point> resolve_points(Mode mode, const ModelOpts& m, const SweepOpts& s, const TargetOpts& t,
                                  double mu_star_sq) {
    std::vector<double> grid = resolve_grid(s);
    const bool swept = !grid.empty();
    if (!swept) grid.push_back(nan_v);
    std::vector<Point> pts;
    for (double v : grid) {
        Point p;
        if (given(t.rho_opt)) p.rho = t.rho;
        if (s.param == "rho") p.rho = v;
        if (mode == Mode::finite) {
            require_flag(m.d_opt, "", "d", "d");
            require_flag(m.n_opt, s.param, "n", "psi2");
            require_flag(m.N_opt, s.param, "N", "psi1");
            require_flag(m.lambda_opt, s.param, "lambda", "lambda");
            p.d = m.d;
            p.n = s.param == "psi2" ? static_cast<int>(std::lround(v * m.d)) : m.n;
            p.N = s.param == "psi1" ? static_cast<int>(std::lround(v * m.d)) : m.N;
            p.lambda = s.param == "lambda" ? v : m.lambda;
            if (p.d < 2 || p.n < 1 || p.N < 1) throw arg_error("need d >= 2 and n, N >= 1");
            if (!(p.lambda >= 0.0)) throw arg_error("lambda must be >= 0");
            p.psi1 = static_cast<double>(p.N) / p.d;
            p.psi2 = static_cast<double>(p.n) / p.d;
            p.lambda_bar = p.lambda / mu_star_sq;
        } else {
            p.psi1 = s.param == "psi1" ? v : m.psi1;
            p.psi2 = s.param == "psi2" ? v : m.psi2;
            p.lambda_bar = s.param == "lambda" ? v : m.lambda_bar;
            p.lambda = p.lambda_bar * mu_star_sq;
        }
        pts.push_back(p);
    }
    return pts;
}

// Target powers: --rho fixes F1^2 = rho/(1+rho), tau^2 = 1/(1+rho), F*^2 = 0
// (unit total power, so R_test = R); otherwise they follow the target flags.
TargetSpec resolve_target(const TargetOpts& t, const Point& p, Mode mode) {
    if (!std::isnan(p.rho)) {
        if (!(p.rho >= 0.0)) throw arg_error("rho must be >= 0");
        if (std::isinf(p.rho)) return TargetSpec::make(1.0, 0.0, 0.0);
        return TargetSpec::make(p.rho / (1.0 + p.rho), 0.0, 1.0 / (1.0 + p.rho));
    }
    const Target tg = t.kind == "quad" ? Target::linear_plus_quad()
                      : t.kind == "cross" ? Target::linear_plus_cross()
                                          : Target::linear(t.beta_norm);
    const double fstar = tg.kind == TargetKind::linear ? 0.0 : (mode == Mode::finite ? nonlinear_power(tg, p.d) : 0.5);
    return TargetSpec::make(tg.F1_sq(), fstar, t.tau_sq);
}

Target make_target(const TargetOpts& t) {
    if (t.kind == "quad") return Target::linear_plus_quad();
    if (t.kind == "cross") return Target::linear_plus_cross();
    return Target::linear(t.beta_norm);
}

// ---------------------------------------------------------------- output

void emit(const Table& table, const OutputOpts& o) {
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw arg_error("cannot open " + o.out);
    }
    std::ostream& os = o.out.empty() ? std::cout : file;
    if (o.format == "csv") {
        write_csv(os, table);
        return;
    }
    for (const auto& row : table.rows) {
        nlohmann::ordered_json j;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (const auto* d = std::get_if<double>(&row[i])) {
                if (std::isfinite(*d)) {
                    j[table.columns[i]] = *d;
                } else {
                    j[table.columns[i]] = format_number(*d);
                }
            } else {
                j[table.columns[i]] = std::get<std::string>(row[i]);
            }
        }
        os << j.dump() << '\n';
    }
}

Field num(double v) { return v; }
Field num(int v) { return static_cast<double>(v); }
Field str(std::string s) { return s; }
// exact as a number up to 2^53, otherwise kept as text
Field seed_field(std::uint64_t seed) {
    if (seed <= (std::uint64_t{1} << 53)) return static_cast<double>(seed);
    return std::to_string(seed);
}

// ---------------------------------------------------------------- commands

int cmd_stats(const ActivationOpts& a, const OutputOpts& o) {
    const Activation act = make_activation(a);
    Table t;
    t.columns = {"activation", "method", "order", "mu0", "mu1", "mu_star_sq", "zeta", "zeta_sq", "max_discrepancy",
                 "converged"};
    HermiteStats st;
    std::string method;
    double order = nan_v, disc = nan_v, conv = 1.0;
    if (act.is_builtin()) {
        st = hermite_stats(act);
        method = "closed_form";
    } else if (act.stats_override) {
        st = hermite_stats(act);
        method = "override";
    } else {
        st = hermite_stats(act, a.order);  // certification and growth checks
        const QuadratureReport rep = quadrature_stats(act, a.order);
        method = "quadrature";
        order = a.order;
        disc = rep.max_discrepancy;
        conv = rep.converged ? 1.0 : 0.0;
    }
    t.add_row({str(act.label), str(method), num(order), num(st.mu0), num(st.mu1), num(st.mu_star_sq), num(st.zeta),
               num(st.zeta_sq), num(disc), num(conv)});
    emit(t, o);
    return 0;
}

int cmd_theory(const std::string& variant, const ModelOpts& m, const ActivationOpts& a, const TargetOpts& tg,
               const SweepOpts& s, const OutputOpts& o) {
    const Mode mode = resolve_mode(m);
    const Spectrum sp = resolve_spectrum(m, a);
    const auto pts = resolve_points(mode, m, s, tg, sp.mu_star_sq);
    Table t;
    t.columns = {"variant", "psi1", "psi2", "lambda_bar", "zeta_sq", "rho", "F1_sq", "Fstar_sq", "tau_sq",
                 "B", "V", "R", "R_test", "L_train", "A_norm", "version"};
    for (const Point& p0 : pts) {
        Point p = p0;
        const TargetSpec target = resolve_target(tg, p, mode);
        if (variant == "general" || variant == "ridgeless") {
            if (!(p.psi1 > 0.0 && p.psi2 > 0.0)) throw arg_error("theory needs psi1 and psi2 (or d, n, N)");
        }
        RiskDecomposition r;
        double L = nan_v, A = nan_v;
        if (variant == "general") {
            if (!(p.lambda_bar > 0.0)) throw arg_error("variant general needs lambda > 0; use --variant ridgeless");
            r = risk_general(target.rho, sp.zeta_sq, p.psi1, p.psi2, p.lambda_bar);
            const TrainingAsymptotics tr = training_theory(target.rho, sp.zeta_sq, p.psi1, p.psi2, p.lambda_bar);
            L = target.total_power() * tr.L;
            A = tr.threshold_singular ? inf : target.total_power() * tr.A;
        } else if (variant == "ridgeless") {
            p.lambda_bar = 0.0;
            r = risk_ridgeless(target.rho, sp.zeta_sq, p.psi1, p.psi2);
        } else if (variant == "wide") {
            if (!(p.psi2 > 0.0 && p.lambda_bar >= 0.0)) throw arg_error("variant wide needs psi2 and lambda-bar");
            p.psi1 = inf;
            r = risk_wide(target.rho, sp.zeta_sq, p.psi2, p.lambda_bar);
        } else {
            if (!(p.psi1 > 0.0 && p.lambda_bar >= 0.0)) throw arg_error("variant lsamp needs psi1 and lambda-bar");
            p.psi2 = inf;
            r = risk_large_sample(target.rho, sp.zeta_sq, p.psi1, p.lambda_bar);
        }
        t.add_row({str(variant), num(p.psi1), num(p.psi2), num(p.lambda_bar), num(sp.zeta_sq), num(target.rho),
                   num(target.F1_sq), num(target.Fstar_sq), num(target.tau_sq), num(r.bias_B), num(r.var_V),
                   num(r.risk_R), num(test_error(target, r)), num(L), num(A), str(version)});
    }
    emit(t, o);
    return 0;
}

SimConfig make_sim_config(const Point& p, const Activation& act, const TargetOpts& tg, const SimOpts& so) {
    SimConfig c;
    c.d = p.d;
    c.n = p.n;
    c.N = p.N;
    c.lambda = p.lambda;
    c.activation = act;
    c.target = make_target(tg);
    c.tau_sq = tg.tau_sq;
    c.n_test = so.n_test > 0 ? so.n_test : 10 * p.n;
    c.trials = so.trials;
    c.seed = so.seed;
    c.model = so.model == "gc" ? ModelKind::gaussian_covariates : ModelKind::random_features;
    if (c.n_test < 1000) std::cerr << "warning: n_test = " << c.n_test << " < 1000, test error will be noisy\n";
    return c;
}

std::vector<std::string> sim_echo_columns() {
    return {"model", "target", "activation", "d", "n", "N", "lambda", "psi1", "psi2", "tau_sq", "F1_sq", "Fstar_sq",
            "n_test"};
}

std::vector<Field> sim_echo(const SimConfig& c) {
    return {str(c.model == ModelKind::random_features ? "rf" : "gc"), str(std::string(c.target.name())),
            str(c.activation.label), num(c.d), num(c.n), num(c.N), num(c.lambda), num(c.psi1_d()), num(c.psi2_d()),
            num(c.tau_sq), num(c.target.F1_sq()), num(nonlinear_power(c.target, c.d)), num(c.n_test)};
}

int cmd_simulate(const ModelOpts& m, const ActivationOpts& a, const TargetOpts& tg, const SweepOpts& s,
                 const SimOpts& so, const OutputOpts& o) {
    if (resolve_mode(m) != Mode::finite) throw arg_error("simulate needs finite-model flags (d, n, N, lambda)");
    if (s.param == "rho") throw arg_error("simulate cannot sweep rho");
    const Activation act = make_activation(a);
    const HermiteStats st = hermite_stats(act, a.order);
    Table t;
    t.columns = sim_echo_columns();
    for (const char* c : {"metric", "mean", "sem", "trials", "seed", "version"}) t.columns.emplace_back(c);
    for (const Point& p : resolve_points(Mode::finite, m, s, tg, st.mu_star_sq)) {
        const SimConfig cfg = make_sim_config(p, act, tg, so);
        const AggregateResult agg = aggregate(run_trials(cfg, so.threads));
        const std::pair<const char*, MetricSummary> metrics[] = {{"test_error", agg.test_error},
                                                                 {"train_error", agg.train_error},
                                                                 {"penalty", agg.penalty},
                                                                 {"norm_sq", agg.norm_sq}};
        for (const auto& [name, ms] : metrics) {
            auto row = sim_echo(cfg);
            row.insert(row.end(), {str(name), num(ms.mean), num(ms.sem), num(agg.trials),
                                   seed_field(cfg.seed), str(version)});
            t.add_row(std::move(row));
        }
    }
    emit(t, o);
    return 0;
}

double z_score(double mean, double sem, double theory) {
    const double diff = mean - theory;
    if (sem > 0.0) return diff / sem;
    return diff == 0.0 ? 0.0 : std::copysign(inf, diff);
}

int cmd_compare(const ModelOpts& m, const ActivationOpts& a, const TargetOpts& tg, const SweepOpts& s,
                const SimOpts& so, const OutputOpts& o) {
    if (resolve_mode(m) != Mode::finite) throw arg_error("compare needs finite-model flags (d, n, N, lambda)");
    if (s.param == "rho") throw arg_error("compare cannot sweep rho");
    const Activation act = make_activation(a);
    const HermiteStats st = hermite_stats(act, a.order);
    Table t;
    t.columns = sim_echo_columns();
    for (const char* c : {"lambda_bar", "zeta_sq", "mu_star_sq", "rho", "metric", "theory", "mean", "sem", "z_score",
                          "rel_err", "trials", "seed", "version"}) {
        t.columns.emplace_back(c);
    }
    for (const Point& p : resolve_points(Mode::finite, m, s, tg, st.mu_star_sq)) {
        const SimConfig cfg = make_sim_config(p, act, tg, so);
        const TargetSpec target = resolve_target(tg, p, Mode::finite);
        double th_test, th_train = nan_v, th_norm = nan_v;
        if (p.lambda_bar > 0.0) {
            th_test = test_error(target, st.zeta_sq, p.psi1, p.psi2, p.lambda_bar);
            const TrainingAsymptotics tr = training_theory(target.rho, st.zeta_sq, p.psi1, p.psi2, p.lambda_bar);
            th_train = target.total_power() * tr.L;
            th_norm = tr.threshold_singular ? inf : target.total_power() * tr.A;
        } else {
            th_test = test_error(target, risk_ridgeless(target.rho, st.zeta_sq, p.psi1, p.psi2));
        }
        const AggregateResult agg = aggregate(run_trials(cfg, so.threads));
        const MetricSummary norm_scaled{st.mu_star_sq * agg.norm_sq.mean, st.mu_star_sq * agg.norm_sq.sem};
        const std::tuple<const char*, double, MetricSummary> metrics[] = {
            {"test_error", th_test, agg.test_error},
            {"train_error", th_train, agg.train_error},
            {"norm_sq_scaled", th_norm, norm_scaled}};
        for (const auto& [name, th, ms] : metrics) {
            auto row = sim_echo(cfg);
            row.insert(row.end(), {num(p.lambda_bar), num(st.zeta_sq), num(st.mu_star_sq), num(target.rho), str(name),
                                   num(th), num(ms.mean), num(ms.sem), num(z_score(ms.mean, ms.sem, th)),
                                   num((ms.mean - th) / th), num(agg.trials), seed_field(cfg.seed),
                                   str(version)});
            t.add_row(std::move(row));
        }
    }
    emit(t, o);
    return 0;
}

int cmd_phase(const ModelOpts& m, const ActivationOpts& a, const TargetOpts& tg, const SweepOpts& s,
              const OutputOpts& o) {
    if (!given(m.psi2_opt) && s.param != "psi2") throw arg_error("phase needs --psi2");
    if (!given(tg.rho_opt) && s.param != "rho") throw arg_error("phase needs --rho");
    const Spectrum sp = resolve_spectrum(m, a);
    std::vector<double> grid = resolve_grid(s);
    if (grid.empty()) grid.push_back(nan_v);
    Table t;
    t.columns = {"zeta_sq", "psi2", "rho", "omega0", "omega1", "rho_star", "zeta_star_sq", "lambda_star",
                 "lambda_opt", "regime", "version"};
    for (double v : grid) {
        const double psi2 = s.param == "psi2" ? v : m.psi2;
        const double rho = s.param == "rho" ? v : tg.rho;
        const PhaseQuantities q = wide_phase(sp.zeta_sq, psi2, rho);
        const bool interior = q.interior_optimum();
        t.add_row({num(sp.zeta_sq), num(psi2), num(rho), num(q.omega0), num(q.omega1), num(q.rho_star),
                   num(q.zeta_star_sq), num(q.lambda_star), num(interior ? q.lambda_star : 0.0),
                   str(interior ? "interior lambda_star" : "optimal lambda = 0"), str(version)});
    }
    emit(t, o);
    return 0;
}

int exit_code(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return 2;
        case ErrorCode::invariant_violation: return 4;
        default: return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotic risk and Monte Carlo validation for random-features ridge regression"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    ActivationOpts act;
    // option handles are per subcommand; values of the active one are read back
    ModelOpts theory_model, sim_model, cmp_model, phase_model;
    TargetOpts theory_target, sim_target, cmp_target, phase_target;
    SweepOpts sweep;
    OutputOpts out;
    SimOpts sim;
    std::string variant = "general";

    auto* stats = app.add_subcommand("stats", "Gaussian statistics of an activation");
    add_activation_flags(stats, act);
    add_output_flags(stats, out);

    auto* theory = app.add_subcommand("theory", "asymptotic B, V, R, test/train error and norm");
    theory->add_option("--variant", variant, "general | ridgeless | wide | lsamp")
        ->check(CLI::IsMember({"general", "ridgeless", "wide", "lsamp"}));
    add_activation_flags(theory, act);
    add_model_flags(theory, theory_model, true);
    add_target_flags(theory, theory_target, true);
    add_sweep_flags(theory, sweep, {"psi1", "psi2", "lambda", "rho"});
    add_output_flags(theory, out);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo trials of the finite model");
    add_activation_flags(simulate, act);
    add_model_flags(simulate, sim_model, false);
    add_target_flags(simulate, sim_target, false);
    add_sweep_flags(simulate, sweep, {"psi1", "psi2", "lambda"});
    add_sim_flags(simulate, sim);
    add_output_flags(simulate, out);

    auto* compare = app.add_subcommand("compare", "theory and simulation side by side with z-scores");
    add_activation_flags(compare, act);
    add_model_flags(compare, cmp_model, false);
    add_target_flags(compare, cmp_target, false);
    add_sweep_flags(compare, sweep, {"psi1", "psi2", "lambda"});
    add_sim_flags(compare, sim);
    add_output_flags(compare, out);

    auto* phase = app.add_subcommand("phase", "wide-limit optimal regularization diagnostics");
    add_activation_flags(phase, act);
    phase_model.psi2_opt = phase->add_option("--psi2", phase_model.psi2, "n / d");
    phase_model.zeta_opt = phase->add_option("--zeta-sq", phase_model.zeta_sq, "zeta^2 directly");
    phase_target.rho_opt = phase->add_option("--rho", phase_target.rho, "signal-to-noise ratio");
    add_sweep_flags(phase, sweep, {"psi2", "rho"});
    add_output_flags(phase, out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*stats) return cmd_stats(act, out);
        if (*theory) return cmd_theory(variant, theory_model, act, theory_target, sweep, out);
        if (*simulate) return cmd_simulate(sim_model, act, sim_target, sweep, sim, out);
        if (*compare) return cmd_compare(cmp_model, act, cmp_target, sweep, sim, out);
        if (*phase) return cmd_phase(phase_model, act, phase_target, sweep, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    }
    return 2;
}
