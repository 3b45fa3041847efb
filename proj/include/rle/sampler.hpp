#pragma once

// Metropolis sampling of P(s) ~ exp(beta U(x0 + Xi^T s)) on {s >= 0, x > 0}.
//
// One sweep visits every coordinate once in random order with a Gaussian
// random-walk proposal. Proposals outside the support are rejected. The
// per-coordinate proposal widths are adapted toward a target acceptance
// during burn-in only and frozen afterward, so the retained chain is a
// plain Metropolis chain with the Gibbs distribution as its stationary law.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "disorder.hpp"
#include "model.hpp"
#include "observables.hpp"
#include "rng.hpp"

namespace rle {

struct ChainOptions {
    double beta = 1.0;
    std::optional<long> burn_in; // sweeps; unset means 200 * N
    long n_samples = 1000;
    long thin = 10;               // sweeps between retained samples
    double step_sigma = 0.1;      // initial proposal std per coordinate
    double adapt_target = 0.35;
    double active_threshold = 1e-4;

    long burn_in_sweeps(int N) const { return burn_in ? *burn_in : 200L * std::max(N, 1); }

    void validate() const
    {
        if (!(beta >= 0.0))
            throw std::invalid_argument("ChainOptions: beta must be >= 0");
        if (burn_in && *burn_in < 1)
            throw std::invalid_argument("ChainOptions: burn_in must be positive");
        if (n_samples < 1 || thin < 1)
            throw std::invalid_argument("ChainOptions: n_samples and thin must be positive");
        if (!(step_sigma > 0.0))
            throw std::invalid_argument("ChainOptions: step_sigma must be positive");
        if (!(adapt_target > 0.0 && adapt_target < 1.0))
            throw std::invalid_argument("ChainOptions: adapt_target must lie in (0,1)");
        if (!(active_threshold > 0.0))
            throw std::invalid_argument("ChainOptions: active_threshold must be positive");
    }
};

/// Split-chain potential scale reduction per scalar series.
struct ChainDiagnostics {
    double rhat_utility = 1.0;
    double rhat_phi = 1.0;
    double rhat_lambda = 1.0;
};

struct ChainResult {
    std::vector<Eigen::VectorXd> samples;
    std::vector<double> utility_series;
    std::vector<double> phi_series;
    std::vector<double> lambda_series;
    double acceptance_rate = 0.0;       // retained phase, all proposals
    double in_support_acceptance = 0.0; // retained phase, proposals inside the support
    double mean_utility = 0.0;
    double mean_phi = 0.0;
    double mean_lambda_traded = 0.0;
    ChainDiagnostics diagnostics;
    bool degenerate = false; // frozen chain: acceptance below 1e-4 after adaptation
    std::vector<double> proposal_sigma; // widths after adaptation
};

struct TraceRecord {
    long sweep = 0;
    double utility = 0.0;
    double phi = 0.0;
    double lambda_traded = 0.0;
};
using TraceSink = std::function<void(const TraceRecord&)>;

inline double split_rhat(const std::vector<double>& y)
{
    const std::size_t h = y.size() / 2;
    if (h < 2)
        return 1.0;
    auto moments = [&](std::size_t begin) {
        double m = 0.0;
        for (std::size_t k = 0; k < h; ++k)
            m += y[begin + k];
        m /= static_cast<double>(h);
        double v = 0.0;
        for (std::size_t k = 0; k < h; ++k)
            v += (y[begin + k] - m) * (y[begin + k] - m);
        return std::pair{m, v / static_cast<double>(h - 1)};
    };
    const auto [m1, v1] = moments(0);
    const auto [m2, v2] = moments(y.size() - h);
    const double W = 0.5 * (v1 + v2);
    const double mean = 0.5 * (m1 + m2);
    const double B = static_cast<double>(h) * ((m1 - mean) * (m1 - mean) + (m2 - mean) * (m2 - mean));
    if (W <= 0.0)
        return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double nh = static_cast<double>(h);
    return std::sqrt(((nh - 1.0) / nh * W + B / nh) / W);
}

inline ChainResult metropolis_chain(const Economy& economy, const ChainOptions& opts, Engine& rng,
                                    const TraceSink& trace = {})
{
    opts.validate();
    const int N = economy.firms();
    const int M = economy.goods();
    const Eigen::MatrixXd xiT = economy.xi.transpose(); // column i is technology i
    const Eigen::VectorXd& x0 = economy.x0;
    if ((x0.array() <= 0.0).any())
        throw DegenerateEconomy("metropolis_chain: endowment has a nonpositive entry");

    Eigen::VectorXd s = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd x = x0;
    double U = utility(x);

    std::vector<double> log_sigma(N, std::log(opts.step_sigma));
    std::vector<long> visits(N, 0);
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const long burn = opts.burn_in_sweeps(N);
    const long total = burn + opts.n_samples * opts.thin;
    const double log_sigma_min = std::log(1e-12), log_sigma_max = std::log(1e3);

    ChainResult res;
    res.samples.reserve(static_cast<std::size_t>(opts.n_samples));
    long proposals = 0, in_support = 0, accepted = 0;

    auto resync = [&] {
        x = x0;
        if (N > 0)
            x.noalias() += xiT * s;
        U = utility(x);
    };

    for (long sweep = 0; sweep < total; ++sweep) {
        const bool adapting = sweep < burn;
        std::shuffle(order.begin(), order.end(), rng);
        for (int i : order) {
            const double sigma = std::exp(log_sigma[i]);
            const double delta = sigma * normal(rng);
            const double s_new = s(i) + delta;
            bool accept = false;
            bool inside = s_new >= 0.0;
            double dU = 0.0;
            if (inside) {
                const double* col = xiT.col(i).data();
                double prod = 1.0;
                for (int mu = 0; mu < M; ++mu) {
                    const double t = 1.0 + delta * col[mu] / x(mu);
                    if (!(t > 0.0)) {
                        inside = false;
                        break;
                    }
                    prod *= t;
                    if (prod > 1e100 || prod < 1e-100) {
                        dU += std::log(prod);
                        prod = 1.0;
                    }
                }
                if (inside) {
                    dU += std::log(prod);
                    const double a = opts.beta * dU;
                    accept = a >= 0.0 || uniform(rng) < std::exp(a);
                }
            }
            if (accept) {
                s(i) = s_new;
                x.noalias() += delta * xiT.col(i);
                U += dU;
            }
            if (adapting) {
                const double gain = 1.0 / std::pow(static_cast<double>(++visits[i]), 0.6);
                log_sigma[i] = std::clamp(log_sigma[i] + gain * ((accept ? 1.0 : 0.0) - opts.adapt_target),
                                          log_sigma_min, log_sigma_max);
            } else {
                ++proposals;
                in_support += inside ? 1 : 0;
                accepted += accept ? 1 : 0;
            }
        }
        if (sweep % 64 == 63)
            resync();

        if (!adapting && (sweep - burn + 1) % opts.thin == 0) {
            resync();
            const double phi = N > 0 ? active_fraction(s, opts.active_threshold).phi : 0.0;
            const double lam = traded_volume(x, x0);
            res.samples.push_back(s);
            res.utility_series.push_back(U);
            res.phi_series.push_back(phi);
            res.lambda_series.push_back(lam);
            if (trace)
                trace({sweep, U, phi, lam});
        }
    }

    auto mean = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    res.mean_utility = mean(res.utility_series);
    res.mean_phi = mean(res.phi_series);
    res.mean_lambda_traded = mean(res.lambda_series);
    res.diagnostics = {split_rhat(res.utility_series), split_rhat(res.phi_series),
                       split_rhat(res.lambda_series)};
    if (proposals > 0) {
        res.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposals);
        res.in_support_acceptance =
            in_support > 0 ? static_cast<double>(accepted) / static_cast<double>(in_support) : 0.0;
        res.degenerate = res.acceptance_rate < 1e-4;
    }
    res.proposal_sigma.resize(N);
    std::transform(log_sigma.begin(), log_sigma.end(), res.proposal_sigma.begin(),
                   [](double l) { return std::exp(l); });
    return res;
}

struct PriceOptions {
    double tol = 1e-9;
    bool require_nonnegative = false;
};

/// Gibbs averages for one economy: phi, u, Lambda, Y where a positive global
/// price vector exists, and the fraction of samples admitting global prices.
inline ObservableRow gibbs_observables(const Economy& economy, const ChainOptions& opts, Engine& rng,
                                       const PriceOptions& prices = {}, const TraceSink& trace = {})
{
    const ChainResult chain = metropolis_chain(economy, opts, rng, trace);
    const int M = economy.goods();

    ObservableRow row;
    row.n = economy.config.multiplicity();
    row.param_kind = ParamKind::beta;
    row.param_value = opts.beta;
    row.phi = chain.mean_phi;
    row.u_per_good = utility_per_good(chain.mean_utility, M);
    row.lambda_traded = chain.mean_lambda_traded;
    row.dropped = chain.degenerate;

    double feasible = 0.0, active = 0.0, y_sum = 0.0;
    long y_count = 0;
    for (const auto& s : chain.samples) {
        const Eigen::VectorXd x = goods_from_scales(economy.x0, economy.xi, s);
        const Eigen::MatrixXd rows = active_rows(economy.xi, s, opts.active_threshold);
        active += static_cast<double>(rows.rows());
        const auto pf = price_feasibility(rows, prices.tol, marginal_prices(x), prices.require_nonnegative);
        if (!pf.feasible)
            continue;
        feasible += 1.0;
        if (pf.p && (pf.p->array() > 0.0).all()) {
            y_sum += gdp(x, economy.x0, *pf.p);
            ++y_count;
        }
    }
    const auto count = static_cast<double>(chain.samples.size());
    row.n_active = active / count;
    row.price_feasible_frac = feasible / count;
    row.price_feasible = row.price_feasible_frac >= 0.5;
    if (y_count > 0 && row.price_feasible)
        row.gdp = y_sum / static_cast<double>(y_count);
    return row;
}

} // namespace rle
