// Prints the asymptotic test error of ReLU random features against psi1 at
// psi2 = 3, next to a small Monte Carlo estimate, showing the peak at N = n.

#include <rfrisk/rfrisk.hpp>

#include <cstdio>

int main() {
    using namespace rfrisk;
    const HermiteStats relu = hermite_stats(Activation::relu());
    const double lambda = 1e-3;
    const TargetSpec target = TargetSpec::make(1.0, 0.0, 0.5);

    SimConfig cfg;
    cfg.d = 60;
    cfg.n = 180;
    cfg.lambda = lambda;
    cfg.tau_sq = target.tau_sq;
    cfg.n_test = 2000;
    cfg.trials = 8;
    cfg.seed = 2024;

    std::printf("%8s %12s %12s %10s\n", "psi1", "theory", "simulated", "sem");
    for (double psi1 : {0.5, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 6.0, 10.0}) {
        const double theory = test_error(target, relu.zeta_sq, psi1, 3.0, lambda / relu.mu_star_sq);
        cfg.N = static_cast<int>(psi1 * cfg.d);
        const AggregateResult sim = aggregate(run_trials(cfg, 4));
        std::printf("%8.2f %12.5f %12.5f %10.5f\n", psi1, theory, sim.test_error.mean, sim.test_error.sem);
    }
}
