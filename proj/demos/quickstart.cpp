// Solve one economy for the rational consumer, then sample the Gibbs
// consumer on the same disorder at a few values of beta.

#include <cstdio>

#include <rle/equilibrium.hpp>
#include <rle/sampler.hpp>

int main()
{
    rle::EconomyConfig cfg;
    cfg.goods = 16;
    cfg.firms = 32; // n = 2
    cfg.epsilon = 0.05;
    cfg.seed = 42;
    const rle::Economy economy = rle::make_economy(cfg);

    const auto eq = rle::solve_rational(economy);
    std::printf("rational: converged=%d  iterations=%d  kkt=%.2e  active=%d/%d  u=%.4f\n", eq.converged,
                eq.iterations, eq.kkt_residual, eq.n_active(1e-8), economy.firms(), eq.utility_star / cfg.goods);

    for (double beta : {1.0, 10.0, 100.0, 1e6}) {
        rle::ChainOptions opts;
        opts.beta = beta;
        rle::Engine rng = rle::make_engine({cfg.seed, rle::stream::chain});
        const auto row = rle::gibbs_observables(economy, opts, rng);
        std::printf("beta=%-8g phi=%.3f  u=%.4f  Lambda=%.3f  feasible=%.2f\n", beta, row.phi, row.u_per_good,
                    row.lambda_traded, row.price_feasible_frac);
    }
}
