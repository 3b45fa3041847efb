#pragma once

// Rational consumer equilibrium:
//
//   maximize  U(x0 + Xi^T s)   subject to  s >= 0,
//
// solved by projected ascent on s with Armijo backtracking. The ascent
// direction is the gradient (component i is the profit rate p.xi_i) scaled
// by the inverse Hessian on the free variables (two-metric projection), and
// plain projected gradient is kept as a fallback direction. Trial points
// that leave the open set {x > 0} are rejected inside the line search.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "disorder.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace rle {

struct SolverOptions {
    int max_iters = 50000;
    double grad_tol = 1e-8;        // on the KKT residual (projected-gradient inf-norm)
    double step_init = 1.0;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double active_threshold = 1e-8; // s_i above this counts as active
    double divergence_bound = 1e6;  // ||s||_inf guard for epsilon = 0 economies
    bool record_trace = false;

    void validate() const
    {
        if (max_iters < 1)
            throw std::invalid_argument("SolverOptions: max_iters must be positive");
        if (!(grad_tol > 0))
            throw std::invalid_argument("SolverOptions: grad_tol must be positive");
        if (!(step_init > 0))
            throw std::invalid_argument("SolverOptions: step_init must be positive");
        if (!(armijo_c > 0 && armijo_c < 1))
            throw std::invalid_argument("SolverOptions: armijo_c must lie in (0,1)");
        if (!(backtrack > 0 && backtrack < 1))
            throw std::invalid_argument("SolverOptions: backtrack must lie in (0,1)");
        if (!(active_threshold > 0))
            throw std::invalid_argument("SolverOptions: active_threshold must be positive");
    }
};

struct EquilibriumResult {
    Eigen::VectorXd s_star;
    Eigen::VectorXd x_star;
    Eigen::VectorXd prices;
    double utility_star = minus_infinity;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    std::vector<double> utility_trace; // filled when SolverOptions::record_trace

    int n_active(double threshold) const
    {
        return static_cast<int>((s_star.array() > threshold).count());
    }

    /// p.(x* - x0); vanishes at equilibrium.
    double zero_profit_gap(const Eigen::VectorXd& x0) const { return prices.dot(x_star - x0); }
};

namespace detail {

inline double kkt_residual_from_gradient(const Eigen::VectorXd& s, const Eigen::VectorXd& g,
                                         double threshold)
{
    double r = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double ri = s(i) > threshold ? std::abs(g(i)) : std::max(g(i), 0.0);
        r = std::max(r, ri);
    }
    return r;
}

/// U(x + dx) - U(x), accurate when dx is small relative to x.
/// Returns -inf when x + dx leaves the positive orthant.
inline double utility_increment(const Eigen::VectorXd& x, const Eigen::VectorXd& dx,
                                const UtilitySpec& spec)
{
    double du = 0.0;
    for (Eigen::Index mu = 0; mu < x.size(); ++mu) {
        const double ratio = dx(mu) / x(mu);
        if (!(ratio > -1.0))
            return minus_infinity;
        du += std::log1p(ratio);
    }
    if (spec.noise)
        du += spec.noise->dot(dx);
    return du;
}

} // namespace detail

/// max_i of max(p.xi_i, 0) for inactive firms and |p.xi_i| for active ones.
inline double kkt_residual(const Economy& economy, const UtilitySpec& spec, const Eigen::VectorXd& s,
                           double threshold)
{
    if (s.size() != economy.firms())
        throw std::invalid_argument("kkt_residual: s has wrong length");
    if ((s.array() < 0.0).any())
        throw DomainError("kkt_residual: negative production scale");
    const Eigen::VectorXd x = goods_from_scales(economy.x0, economy.xi, s);
    const Eigen::VectorXd p = marginal_prices(x, spec); // throws on x <= 0
    if (s.size() == 0)
        return 0.0;
    return detail::kkt_residual_from_gradient(s, economy.xi * p, threshold);
}

inline EquilibriumResult solve_rational(const Economy& economy, const UtilitySpec& spec = {},
                                        const SolverOptions& opts = {})
{
    opts.validate();
    const auto& xi = economy.xi;
    const auto& x0 = economy.x0;
    const int N = economy.firms();
    const int M = economy.goods();
    if (spec.noise && spec.noise->size() != M)
        throw std::invalid_argument("solve_rational: noise field has wrong length");
    if ((x0.array() <= 0.0).any())
        throw DegenerateEconomy("solve_rational: endowment has a nonpositive entry");

    EquilibriumResult res;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd x = x0;
    double f = utility(x, spec);
    if (opts.record_trace)
        res.utility_trace.push_back(f);

    // Stop a little below the reported tolerance so that the zero-profit
    // identity also holds with margin.
    const double target = 1e-2 * opts.grad_tol;
    const int max_backtracks = 80;

    Eigen::VectorXd p, g, d(N), s_new(N), ds(N), dx(M);
    int it = 0;
    for (; it < opts.max_iters && N > 0; ++it) {
        p = marginal_prices(x, spec);
        g = xi * p;
        const double r = detail::kkt_residual_from_gradient(s, g, opts.active_threshold);
        if (r <= target)
            break;

        // epsilon-active set: variables at (or near) the bound whose gradient
        // points out of the feasible set are held by a diagonal step.
        const double w = (s - (s + g).cwiseMax(0.0)).lpNorm<Eigen::Infinity>();
        const double delta = std::min(1e-3, w);
        std::vector<int> free_idx;
        free_idx.reserve(N);
        const Eigen::VectorXd inv_x = x.cwiseInverse();
        for (int i = 0; i < N; ++i) {
            if (s(i) <= delta && g(i) <= 0.0) {
                const double hii = (xi.row(i).transpose().cwiseProduct(inv_x)).squaredNorm();
                d(i) = g(i) / std::max(hii, 1e-300);
            } else {
                free_idx.push_back(i);
            }
        }
        const int nf = static_cast<int>(free_idx.size());
        if (nf > 0) {
            Eigen::MatrixXd B(nf, M);
            Eigen::VectorXd gf(nf);
            for (int k = 0; k < nf; ++k) {
                B.row(k) = xi.row(free_idx[k]).cwiseProduct(inv_x.transpose());
                gf(k) = g(free_idx[k]);
            }
            Eigen::MatrixXd H = B * B.transpose();
            const double reg = 1e-10 * H.diagonal().maxCoeff() + 1e-300;
            H.diagonal().array() += reg;
            const Eigen::VectorXd df = H.ldlt().solve(gf);
            for (int k = 0; k < nf; ++k)
                d(free_idx[k]) = df(k);
        }

        auto try_direction = [&](const Eigen::VectorXd& dir, bool newton) -> bool {
            double alpha = opts.step_init;
            for (int k = 0; k < max_backtracks; ++k, alpha *= opts.backtrack) {
                s_new = (s + alpha * dir).cwiseMax(0.0);
                ds = s_new - s;
                double pred = 0.0;
                if (newton) {
                    for (int i : free_idx)
                        pred += alpha * g(i) * dir(i);
                    for (int i = 0; i < N; ++i)
                        if (s(i) <= delta && g(i) <= 0.0)
                            pred += g(i) * ds(i);
                } else {
                    pred = g.dot(ds);
                }
                if (!(pred > 0.0))
                    continue;
                dx.noalias() = xi.transpose() * ds;
                const double df = detail::utility_increment(x, dx, spec);
                if (df >= opts.armijo_c * pred) {
                    s = s_new;
                    x = x0 + xi.transpose() * s;
                    f += df;
                    return true;
                }
            }
            return false;
        };

        bool stepped = try_direction(d, true);
        if (!stepped)
            stepped = try_direction(g, false);
        if (!stepped) {
            if (it == 0)
                throw DegenerateEconomy("solve_rational: no admissible ascent step from s = 0");
            break; // no further progress at working precision
        }
        if (opts.record_trace)
            res.utility_trace.push_back(f);
        if (s.lpNorm<Eigen::Infinity>() > opts.divergence_bound) {
            res.diverged = true;
            ++it;
            break;
        }
    }

    res.s_star = s;
    res.x_star = x;
    res.prices = marginal_prices(x, spec);
    res.utility_star = utility(x, spec);
    res.kkt_residual =
        N > 0 ? detail::kkt_residual_from_gradient(s, xi * res.prices, opts.active_threshold) : 0.0;
    res.iterations = it;
    res.converged = !res.diverged && res.kkt_residual <= opts.grad_tol;
    return res;
}

struct NoisyResult {
    EquilibriumResult equilibrium; // utility_star is U_T(x*)
    double observed_utility = minus_infinity; // U(x*) without the noise term
    Eigen::VectorXd noise;
};

/// Solves under U_T = U + h.x for a given field h.
inline NoisyResult solve_noisy(const Economy& economy, const Eigen::VectorXd& h,
                               const SolverOptions& opts = {})
{
    NoisyResult out;
    out.noise = h;
    out.equilibrium = solve_rational(economy, UtilitySpec::noisy(h), opts);
    out.observed_utility = utility(out.equilibrium.x_star);
    return out;
}

/// Draws h with mean lambda from `rng`, then solves under U_T.
inline NoisyResult solve_noisy(const Economy& economy, double lambda, Engine& rng,
                               const SolverOptions& opts = {})
{
    return solve_noisy(economy, gen_noise_field(economy.goods(), lambda, rng), opts);
}

} // namespace rle
