#pragma once

// Disorder-averaged sweeps over (n, beta or lambda) grids.
//
// Work items are (cell, realization) pairs. Each item derives every seed it
// needs from (base_seed, indices), so the outcome does not depend on which
// worker runs it; aggregation walks items in (cell, realization) order.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "disorder.hpp"
#include "equilibrium.hpp"
#include "observables.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace rle {

inline constexpr std::string_view version = "1.0.0";

enum class ModelKind { rational, gibbs, noisy };

inline std::string_view to_string(ModelKind m)
{
    switch (m) {
    case ModelKind::gibbs: return "gibbs";
    case ModelKind::noisy: return "noisy";
    default: return "rational";
    }
}

inline std::optional<ModelKind> model_from_string(std::string_view s)
{
    if (s == "rational") return ModelKind::rational;
    if (s == "gibbs") return ModelKind::gibbs;
    if (s == "noisy") return ModelKind::noisy;
    return std::nullopt;
}

struct SweepConfig {
    int goods = 64;
    double epsilon = 0.05;
    double endowment_scale = 1.0;
    std::vector<double> n_grid;
    ModelKind model = ModelKind::rational;
    std::vector<double> param_grid; // beta (gibbs) or lambda (noisy); unused for rational
    int realizations = 400;
    std::uint64_t base_seed = 0;
    bool paired = false; // share disorder across n and parameter values
    SolverOptions solver;
    ChainOptions chain;
    PriceOptions prices;

    int firms_for(double n) const { return static_cast<int>(std::lround(n * goods)); }

    /// Parameter values actually swept: one placeholder for rational sweeps.
    std::vector<double> effective_params() const
    {
        return model == ModelKind::rational ? std::vector<double>{0.0} : param_grid;
    }

    void validate() const
    {
        if (goods < 1)
            throw std::invalid_argument("M must be >= 1");
        if (!(epsilon >= 0.0))
            throw std::invalid_argument("epsilon must be >= 0");
        if (!(endowment_scale > 0.0))
            throw std::invalid_argument("endowment_scale must be > 0");
        if (n_grid.empty())
            throw std::invalid_argument("n_grid must be nonempty");
        for (std::size_t k = 0; k < n_grid.size(); ++k) {
            if (!(n_grid[k] > 0.0))
                throw std::invalid_argument("n_grid entries must be positive");
            if (k > 0 && !(n_grid[k] > n_grid[k - 1]))
                throw std::invalid_argument("n_grid must be strictly increasing");
        }
        if (model != ModelKind::rational && param_grid.empty())
            throw std::invalid_argument("param_grid must be nonempty for gibbs and noisy sweeps");
        for (double v : param_grid)
            if (!(v >= 0.0))
                throw std::invalid_argument("param_grid entries must be >= 0");
        if (realizations < 1)
            throw std::invalid_argument("realizations must be positive");
        solver.validate();
        chain.validate();
    }
};

/// Marks a sweep so that every parameter value and every n at realization r
/// reuses the same disorder (row prefixes of one technology stream).
inline SweepConfig shared_disorder_pairing(SweepConfig config)
{
    config.paired = true;
    return config;
}

struct Estimate {
    std::optional<double> mean;
    std::optional<double> se; // sample std / sqrt(count); needs count >= 2
    int count = 0;
};

struct CellSummary {
    double n = 0.0;
    ModelKind model = ModelKind::rational;
    std::optional<double> param;
    Estimate phi, u, lambda_traded, gdp;
    std::optional<double> feasible_frac;
    std::optional<double> n_active_mean;
    int dropped = 0;
    int included = 0;
};

struct SweepResult {
    std::vector<CellSummary> rows; // n-major, then parameter
    SweepConfig config;
    std::string version{rle::version};
};

// Seed derivation. Documented so that any single realization can be rebuilt.
inline std::uint64_t economy_seed(const SweepConfig& c, std::size_t n_idx, std::size_t p_idx, int r)
{
    const auto rr = static_cast<std::uint64_t>(r);
    if (c.paired)
        return derive_seed({c.base_seed, stream::economy, rr});
    return derive_seed({c.base_seed, stream::economy, n_idx, p_idx, rr});
}

inline std::uint64_t noise_seed(const SweepConfig& c, std::size_t n_idx, std::size_t p_idx, int r)
{
    const auto rr = static_cast<std::uint64_t>(r);
    if (c.paired)
        return derive_seed({c.base_seed, stream::noise, rr});
    return derive_seed({c.base_seed, stream::noise, n_idx, p_idx, rr});
}

inline std::uint64_t chain_seed(const SweepConfig& c, std::size_t n_idx, std::size_t p_idx, int r)
{
    return derive_seed({c.base_seed, stream::chain, n_idx, p_idx, static_cast<std::uint64_t>(r)});
}

inline Economy realization_economy(const SweepConfig& c, std::size_t n_idx, std::size_t p_idx, int r)
{
    EconomyConfig ec;
    ec.goods = c.goods;
    ec.firms = c.firms_for(c.n_grid.at(n_idx));
    ec.epsilon = c.epsilon;
    ec.endowment_scale = c.endowment_scale;
    ec.seed = economy_seed(c, n_idx, p_idx, r);
    return make_economy(ec);
}

/// Observables of a solved (rational or noisy) equilibrium.
/// `observed_utility` is U(x*) without any noise term.
inline ObservableRow equilibrium_row(const Economy& e, const EquilibriumResult& eq, double observed_utility,
                                     const SolverOptions& solver, const PriceOptions& prices)
{
    ObservableRow row;
    row.n = e.config.multiplicity();
    row.dropped = !eq.converged;
    const int N = e.firms();
    const int active = eq.n_active(solver.active_threshold);
    row.n_active = active;
    row.phi = N > 0 ? active_fraction(eq.s_star, solver.active_threshold).phi : 0.0;
    row.u_per_good = utility_per_good(observed_utility, e.goods());
    row.lambda_traded = traded_volume(eq.x_star, e.x0);
    const auto pf = price_feasibility(active_rows(e.xi, eq.s_star, solver.active_threshold), prices.tol,
                                      eq.prices, prices.require_nonnegative);
    row.price_feasible = pf.feasible;
    row.price_feasible_frac = pf.feasible ? 1.0 : 0.0;
    if (pf.feasible)
        row.gdp = gdp(eq.x_star, e.x0, eq.prices);
    return row;
}

/// One (cell, realization) work item. Failures become dropped rows.
inline ObservableRow run_realization(const SweepConfig& c, std::size_t n_idx, std::size_t p_idx, int r)
{
    const double param = c.effective_params().at(p_idx);
    ObservableRow row;
    try {
        const Economy e = realization_economy(c, n_idx, p_idx, r);
        switch (c.model) {
        case ModelKind::rational: {
            const auto eq = solve_rational(e, {}, c.solver);
            row = equilibrium_row(e, eq, eq.utility_star, c.solver, c.prices);
            break;
        }
        case ModelKind::noisy: {
            Engine eng{noise_seed(c, n_idx, p_idx, r)};
            const auto nr = solve_noisy(e, param, eng, c.solver);
            row = equilibrium_row(e, nr.equilibrium, nr.observed_utility, c.solver, c.prices);
            break;
        }
        case ModelKind::gibbs: {
            ChainOptions opts = c.chain;
            opts.beta = param;
            Engine eng{chain_seed(c, n_idx, p_idx, r)};
            row = gibbs_observables(e, opts, eng, c.prices);
            break;
        }
        }
    } catch (const std::exception&) {
        row = ObservableRow{};
        row.dropped = true;
    }
    row.n = c.n_grid[n_idx];
    row.param_value = param;
    row.param_kind = c.model == ModelKind::gibbs   ? ParamKind::beta
                     : c.model == ModelKind::noisy ? ParamKind::lambda
                                                   : ParamKind::rational;
    return row;
}

namespace detail {

/// Two-pass mean and standard error in a fixed order.
inline Estimate estimate(const std::vector<double>& v)
{
    Estimate e;
    e.count = static_cast<int>(v.size());
    if (v.empty())
        return e;
    double m = 0.0;
    for (double x : v)
        m += x;
    m /= static_cast<double>(v.size());
    e.mean = m;
    if (v.size() >= 2) {
        double ss = 0.0;
        for (double x : v)
            ss += (x - m) * (x - m);
        const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        e.se = sd / std::sqrt(static_cast<double>(v.size()));
    }
    return e;
}

} // namespace detail

inline CellSummary summarize_cell(const SweepConfig& c, double n, std::optional<double> param,
                                  const std::vector<ObservableRow>& rows)
{
    CellSummary cell;
    cell.n = n;
    cell.model = c.model;
    cell.param = param;
    std::vector<double> phi, u, lam, y, active, feasible;
    for (const auto& r : rows) {
        if (r.dropped) {
            ++cell.dropped;
            continue;
        }
        ++cell.included;
        phi.push_back(r.phi);
        u.push_back(r.u_per_good);
        lam.push_back(r.lambda_traded);
        active.push_back(r.n_active);
        feasible.push_back(r.price_feasible ? 1.0 : 0.0);
        if (r.gdp)
            y.push_back(*r.gdp);
    }
    cell.phi = detail::estimate(phi);
    cell.u = detail::estimate(u);
    cell.lambda_traded = detail::estimate(lam);
    cell.gdp = detail::estimate(y);
    cell.feasible_frac = detail::estimate(feasible).mean;
    cell.n_active_mean = detail::estimate(active).mean;
    return cell;
}

struct SweepProgress {
    std::size_t cell = 0;
    std::size_t cells = 0;
    int done = 0;
    int realizations = 0;
};
using ProgressSink = std::function<void(const SweepProgress&)>;

/// Per-realization rows in (cell, realization) order.
inline std::vector<ObservableRow> run_realizations(const SweepConfig& c, int workers = 1,
                                                   const ProgressSink& progress = {})
{
    c.validate();
    const auto params = c.effective_params();
    const std::size_t n_cells = c.n_grid.size() * params.size();
    const std::size_t R = static_cast<std::size_t>(c.realizations);
    const std::size_t n_items = n_cells * R;

    std::vector<ObservableRow> rows(n_items);
    std::vector<int> done(n_cells, 0);
    std::mutex progress_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t item; (item = next.fetch_add(1)) < n_items;) {
            const std::size_t cell = item / R;
            const int r = static_cast<int>(item % R);
            rows[item] = run_realization(c, cell / params.size(), cell % params.size(), r);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress({cell, n_cells, ++done[cell], c.realizations});
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(n_items)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
    }
    return rows;
}

inline SweepResult run_sweep(const SweepConfig& c, int workers = 1, const ProgressSink& progress = {})
{
    const auto rows = run_realizations(c, workers, progress);
    const auto params = c.effective_params();
    const std::size_t R = static_cast<std::size_t>(c.realizations);

    SweepResult result;
    result.config = c;
    for (std::size_t ni = 0; ni < c.n_grid.size(); ++ni) {
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            const std::size_t cell = ni * params.size() + pi;
            std::vector<ObservableRow> cell_rows(rows.begin() + static_cast<std::ptrdiff_t>(cell * R),
                                                 rows.begin() + static_cast<std::ptrdiff_t>((cell + 1) * R));
            std::optional<double> param;
            if (c.model != ModelKind::rational)
                param = params[pi];
            result.rows.push_back(summarize_cell(c, c.n_grid[ni], param, cell_rows));
        }
    }
    return result;
}

} // namespace rle
