#include <cmath>

#include <gtest/gtest.h>

#include <rle/ensemble.hpp>
#include <rle/results_io.hpp>

using namespace rle;

namespace {

SweepConfig rational_config()
{
    SweepConfig c;
    c.goods = 8;
    c.n_grid = {0.5, 1.0, 2.0};
    c.model = ModelKind::rational;
    c.realizations = 6;
    c.base_seed = 3;
    return c;
}

SweepConfig gibbs_config()
{
    SweepConfig c;
    c.goods = 4;
    c.n_grid = {0.5, 1.0};
    c.model = ModelKind::gibbs;
    c.param_grid = {1.0, 1e6};
    c.realizations = 3;
    c.chain.n_samples = 50;
    c.chain.burn_in = 100;
    return c;
}

} // namespace

TEST(Sweep, WorkerCountDoesNotChangeOutput)
{
    for (const auto& c : {rational_config(), gibbs_config()}) {
        const auto one = format_sweep_csv(run_sweep(c, 1));
        const auto three = format_sweep_csv(run_sweep(c, 3));
        EXPECT_EQ(one, three);
    }
}

TEST(Sweep, RerunIsBitwiseIdentical)
{
    auto c = rational_config();
    c.realizations = 1;
    const auto a = run_realizations(c);
    const auto b = run_realizations(c);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].phi, b[k].phi);
        EXPECT_EQ(a[k].u_per_good, b[k].u_per_good);
        EXPECT_EQ(a[k].lambda_traded, b[k].lambda_traded);
        EXPECT_EQ(a[k].gdp, b[k].gdp);
    }
}

TEST(Sweep, CellLayout)
{
    const auto c = gibbs_config();
    const auto res = run_sweep(c);
    ASSERT_EQ(res.rows.size(), 4u);
    EXPECT_EQ(res.rows[0].n, 0.5);
    EXPECT_EQ(res.rows[0].param, 1.0);
    EXPECT_EQ(res.rows[1].param, 1e6);
    EXPECT_EQ(res.rows[2].n, 1.0);
    for (const auto& row : res.rows)
        EXPECT_EQ(row.dropped + row.included, c.realizations);
    const auto rat = run_sweep(rational_config());
    for (const auto& row : rat.rows)
        EXPECT_FALSE(row.param);
}

TEST(Pairing, SharedDisorderAcrossParameters)
{
    const auto c = shared_disorder_pairing(gibbs_config());
    EXPECT_TRUE(c.paired);
    for (int r = 0; r < c.realizations; ++r)
        for (std::size_t ni = 0; ni < c.n_grid.size(); ++ni)
            EXPECT_EQ(realization_economy(c, ni, 0, r).checksum(), realization_economy(c, ni, 1, r).checksum());
    // Unpaired sweeps draw fresh disorder per cell.
    const auto u = gibbs_config();
    EXPECT_NE(realization_economy(u, 0, 0, 0).checksum(), realization_economy(u, 0, 1, 0).checksum());
}

TEST(Pairing, RowPrefixesReusedAcrossN)
{
    const auto c = shared_disorder_pairing(rational_config());
    for (int r = 0; r < c.realizations; ++r) {
        const auto small = realization_economy(c, 0, 0, r);
        const auto large = realization_economy(c, 2, 0, r);
        ASSERT_LT(small.firms(), large.firms());
        EXPECT_TRUE(small.xi == large.xi.topRows(small.firms()));
        EXPECT_TRUE(small.x0 == large.x0);
    }
}

TEST(Pairing, RationalUtilityNondecreasingInN)
{
    // With shared prefixes, a larger n only adds technologies, so the
    // optimum cannot get worse on any realization.
    auto c = shared_disorder_pairing(rational_config());
    c.n_grid = {0.5, 1.0, 2.0, 4.0};
    const auto rows = run_realizations(c);
    const std::size_t R = static_cast<std::size_t>(c.realizations);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t ni = 1; ni < c.n_grid.size(); ++ni)
            EXPECT_GE(rows[ni * R + r].u_per_good, rows[(ni - 1) * R + r].u_per_good - 1e-10);
}

TEST(Pairing, NoisyAtZeroLambdaEqualsRational)
{
    auto rat = shared_disorder_pairing(rational_config());
    auto noisy = rat;
    noisy.model = ModelKind::noisy;
    noisy.param_grid = {0.0, 0.5};
    const auto a = run_sweep(rat);
    const auto b = run_sweep(noisy);
    for (std::size_t ni = 0; ni < rat.n_grid.size(); ++ni) {
        const auto& r = a.rows[ni];
        const auto& z = b.rows[2 * ni];
        EXPECT_EQ(r.phi.mean, z.phi.mean);
        EXPECT_EQ(r.phi.se, z.phi.se);
        EXPECT_EQ(r.u.mean, z.u.mean);
        EXPECT_EQ(r.lambda_traded.mean, z.lambda_traded.mean);
        EXPECT_EQ(r.gdp.mean, z.gdp.mean);
        EXPECT_EQ(r.feasible_frac, z.feasible_frac);
    }
}

TEST(Sweep, NonConvergedRunsAreDropped)
{
    auto c = rational_config();
    c.solver.max_iters = 1;
    const auto res = run_sweep(c);
    for (const auto& row : res.rows) {
        EXPECT_EQ(row.dropped, c.realizations);
        EXPECT_EQ(row.included, 0);
        EXPECT_FALSE(row.phi.mean);
        EXPECT_FALSE(row.u.mean);
    }
}

TEST(Summary, MeanAndStandardError)
{
    const auto c = rational_config();
    std::vector<ObservableRow> rows(4);
    const double phis[] = {0.2, 0.4, 0.6, 0.8};
    for (int k = 0; k < 4; ++k) {
        rows[k].phi = phis[k];
        rows[k].price_feasible = k < 3;
    }
    rows[3].dropped = true;
    const auto cell = summarize_cell(c, 1.0, std::nullopt, rows);
    EXPECT_EQ(cell.included, 3);
    EXPECT_EQ(cell.dropped, 1);
    ASSERT_TRUE(cell.phi.mean);
    EXPECT_NEAR(*cell.phi.mean, 0.4, 1e-15);
    // sample sd of {0.2, 0.4, 0.6} is 0.2
    EXPECT_NEAR(*cell.phi.se, 0.2 / std::sqrt(3.0), 1e-15);
    EXPECT_EQ(cell.feasible_frac, 1.0);
    EXPECT_FALSE(cell.gdp.mean);
}

TEST(Summary, SingleRealizationHasNoStandardError)
{
    auto c = rational_config();
    c.realizations = 1;
    const auto res = run_sweep(c);
    for (const auto& row : res.rows) {
        EXPECT_TRUE(row.phi.mean);
        EXPECT_FALSE(row.phi.se);
    }
}

TEST(SweepConfig, Validation)
{
    auto c = gibbs_config();
    c.param_grid.clear();
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = rational_config();
    c.n_grid = {1.0, 0.5};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.n_grid = {};
    EXPECT_THROW(run_sweep(c), std::invalid_argument);
}

TEST(Sweep, ProgressReportsEveryItem)
{
    const auto c = rational_config();
    int calls = 0;
    run_sweep(c, 2, [&](const SweepProgress& p) {
        ++calls;
        EXPECT_LE(p.done, p.realizations);
        EXPECT_EQ(p.cells, c.n_grid.size());
    });
    EXPECT_EQ(calls, static_cast<int>(c.n_grid.size()) * c.realizations);
}
