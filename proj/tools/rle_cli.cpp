// Command-line front end: generate, solve, sample, sweep, plotdata.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <rle/rle.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::vector<std::string> overrides;
};

struct InstanceArgs {
    std::string economy_path;
    std::optional<double> n;
    std::optional<double> param;
    std::string trace_path;
};

rle::SweepConfig load_config(const CommonArgs& a)
{
    std::string text = a.config_path.empty() ? std::string("model = rational\n") : rle::read_text_file(a.config_path);
    auto overrides = a.overrides;
    if (a.seed)
        overrides.push_back("base_seed=" + std::to_string(*a.seed));
    return rle::parse_config(text, overrides);
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void emit(const std::string& out, const std::string& content)
{
    if (out.empty() || out == "-") {
        std::cout << content;
        return;
    }
    const fs::path p(out);
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    rle::write_text_file(p, content);
}

/// Economy from --economy, or generated from the config at --n (default: first n_grid entry).
rle::Economy instance_economy(const rle::SweepConfig& cfg, const InstanceArgs& ia)
{
    if (!ia.economy_path.empty())
        return rle::economy_from_json(json::parse(rle::read_text_file(ia.economy_path)));
    rle::EconomyConfig ec;
    ec.goods = cfg.goods;
    ec.firms = cfg.firms_for(ia.n.value_or(cfg.n_grid.front()));
    ec.epsilon = cfg.epsilon;
    ec.endowment_scale = cfg.endowment_scale;
    ec.seed = cfg.base_seed;
    return rle::make_economy(ec);
}

int cmd_generate(const CommonArgs& a, const InstanceArgs& ia)
{
    const auto cfg = load_config(a);
    const auto e = instance_economy(cfg, ia);
    emit(a.out, rle::economy_to_json(e).dump(2) + "\n");
    return 0;
}

int cmd_solve(const CommonArgs& a, const InstanceArgs& ia)
{
    const auto cfg = load_config(a);
    const auto e = instance_economy(cfg, ia);
    const bool noisy = cfg.model == rle::ModelKind::noisy;
    const double lambda = ia.param.value_or(noisy ? cfg.param_grid.front() : 0.0);

    rle::EquilibriumResult eq;
    double observed = 0.0;
    json report;
    if (noisy || ia.param) {
        rle::Engine eng = rle::make_engine({cfg.base_seed, rle::stream::noise});
        const auto nr = rle::solve_noisy(e, lambda, eng, cfg.solver);
        eq = nr.equilibrium;
        observed = nr.observed_utility;
        report["model"] = "noisy";
        report["lambda"] = lambda;
        report["noise"] = to_vec(nr.noise);
    } else {
        eq = rle::solve_rational(e, {}, cfg.solver);
        observed = eq.utility_star;
        report["model"] = "rational";
    }
    const auto row = rle::equilibrium_row(e, eq, observed, cfg.solver, cfg.prices);
    report["M"] = e.goods();
    report["N"] = e.firms();
    report["converged"] = eq.converged;
    report["diverged"] = eq.diverged;
    report["iterations"] = eq.iterations;
    report["kkt_residual"] = eq.kkt_residual;
    report["zero_profit_gap"] = eq.zero_profit_gap(e.x0);
    report["utility_star"] = eq.utility_star;
    report["observed_utility"] = observed;
    report["n_active"] = eq.n_active(cfg.solver.active_threshold);
    report["phi"] = row.phi;
    report["u_per_good"] = row.u_per_good;
    report["lambda_traded"] = row.lambda_traded;
    report["gdp"] = row.gdp ? json(*row.gdp) : json(nullptr);
    report["s_star"] = to_vec(eq.s_star);
    report["x_star"] = to_vec(eq.x_star);
    report["prices"] = to_vec(eq.prices);
    emit(a.out, report.dump(2) + "\n");
    return eq.converged ? 0 : exit_runtime;
}

int cmd_sample(const CommonArgs& a, const InstanceArgs& ia)
{
    const auto cfg = load_config(a);
    const auto e = instance_economy(cfg, ia);
    rle::ChainOptions opts = cfg.chain;
    opts.beta = ia.param.value_or(cfg.model == rle::ModelKind::gibbs ? cfg.param_grid.front() : 1.0);

    std::string trace;
    rle::TraceSink sink;
    if (!ia.trace_path.empty()) {
        trace = "sweep,utility,phi,lambda\n";
        sink = [&trace](const rle::TraceRecord& t) {
            trace += std::to_string(t.sweep) + ',' + rle::format_double(t.utility) + ',' +
                     rle::format_double(t.phi) + ',' + rle::format_double(t.lambda_traded) + '\n';
        };
    }
    rle::Engine eng = rle::make_engine({cfg.base_seed, rle::stream::chain});
    const auto row = rle::gibbs_observables(e, opts, eng, cfg.prices, sink);
    if (!ia.trace_path.empty())
        emit(ia.trace_path, trace);

    json report = {
        {"M", e.goods()},
        {"N", e.firms()},
        {"beta", opts.beta},
        {"phi", row.phi},
        {"u_per_good", row.u_per_good},
        {"lambda_traded", row.lambda_traded},
        {"gdp", row.gdp ? json(*row.gdp) : json(nullptr)},
        {"n_active_mean", row.n_active},
        {"price_feasible_frac", row.price_feasible_frac},
        {"degenerate", row.dropped},
    };
    emit(a.out, report.dump(2) + "\n");
    return 0;
}

int cmd_sweep(const CommonArgs& a)
{
    const auto cfg = load_config(a);
    if (a.out.empty())
        throw CLI::ValidationError("--out", "sweep requires an output directory");
    const auto params = cfg.effective_params();
    auto progress = [&](const rle::SweepProgress& p) {
        if (p.done == p.realizations) {
            const auto ni = p.cell / params.size();
            std::fprintf(stderr, "[%zu/%zu] n=%g %s %s: %d realizations\n", p.cell + 1, p.cells, cfg.n_grid[ni],
                         std::string(rle::to_string(cfg.model)).c_str(),
                         cfg.model == rle::ModelKind::rational
                             ? ""
                             : rle::format_double(params[p.cell % params.size()]).c_str(),
                         p.done);
        }
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = rle::run_sweep(cfg, a.workers, progress);
    rle::RunInfo info;
    info.config_path = a.config_path;
    info.workers = a.workers;
    info.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& p : rle::write_results(result, a.out, info))
        std::fprintf(stderr, "wrote %s\n", p.string().c_str());
    return 0;
}

/// Filtered long-form series for one figure, read back from sweep.csv only.
int cmd_plotdata(const std::string& figure, const std::string& csv_path, const std::vector<double>& params,
                 const std::string& out)
{
    static const std::set<std::string> figures = {"active_firms", "gibbs_panels", "noisy_panels"};
    if (!figures.count(figure))
        throw CLI::ValidationError("--figure", "expected active_firms, gibbs_panels or noisy_panels");
    const auto rows = rle::parse_sweep_csv(rle::read_text_file(csv_path));
    auto f = [](const std::optional<double>& v) { return v ? rle::format_double(*v) : std::string(); };
    auto keep = [&](const rle::SweepCsvRow& r) {
        if (params.empty())
            return true;
        for (double p : params)
            if (r.param && *r.param == p)
                return true;
        return false;
    };

    std::string text;
    std::size_t selected = 0;
    if (figure == "active_firms") {
        text = "n,model,param,phi_mean,phi_se,boundary,feasible_frac\n";
        for (const auto& r : rows) {
            if (!keep(r))
                continue;
            ++selected;
            text += f(r.n) + ',' + r.model + ',' + f(r.param) + ',' + f(r.phi_mean) + ',' + f(r.phi_se) + ',' +
                    rle::format_double(1.0 / r.n) + ',' + f(r.feasible_frac) + '\n';
        }
    } else {
        const bool noisy = figure == "noisy_panels";
        const std::string want = noisy ? "noisy" : "gibbs";
        text = "n,param,u_mean,u_se,activity_mean,activity_se,activity_column\n";
        for (const auto& r : rows) {
            if (r.model != want || !keep(r))
                continue;
            ++selected;
            // GDP where defined, traded volume otherwise.
            const bool use_gdp = noisy && r.gdp_mean.has_value();
            text += f(r.n) + ',' + f(r.param) + ',' + f(r.u_mean) + ',' + f(r.u_se) + ',' +
                    f(use_gdp ? r.gdp_mean : r.lambda_mean) + ',' + f(use_gdp ? r.gdp_se : r.lambda_se) + ',' +
                    (use_gdp ? "gdp" : "lambda") + '\n';
        }
    }
    if (selected == 0)
        throw std::runtime_error("sweep.csv: no rows selected for " + figure + " (check the model and param columns)");
    emit(out, text);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random linear economy simulator with bounded-rationality consumers"};
    app.require_subcommand(1);

    CommonArgs common;
    InstanceArgs inst;
    std::string figure, csv_path;
    std::vector<double> plot_params;

    auto add_common = [&](CLI::App* sub, bool out_required) {
        sub->add_option("--config", common.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
        auto* o = sub->add_option("--out", common.out, "Output file or directory");
        if (out_required)
            o->required();
        sub->add_option("--seed", common.seed, "Overrides base_seed");
        sub->add_option("--set", common.overrides, "key=value override (repeatable)");
    };
    auto add_instance = [&](CLI::App* sub) {
        sub->add_option("--economy", inst.economy_path, "Economy JSON from `generate`")->check(CLI::ExistingFile);
        sub->add_option("--n", inst.n, "Technology multiplicity N/M (default: first n_grid entry)");
    };

    auto* gen = app.add_subcommand("generate", "Dump one economy as JSON");
    add_common(gen, false);
    gen->add_option("--n", inst.n, "Technology multiplicity N/M (default: first n_grid entry)");

    auto* solve = app.add_subcommand("solve", "Solve one rational or noisy instance and report KKT diagnostics");
    add_common(solve, false);
    add_instance(solve);
    solve->add_option("--lambda", inst.param, "Noise scale (selects the noisy consumer)");

    auto* sample = app.add_subcommand("sample", "Run one Metropolis chain");
    add_common(sample, false);
    add_instance(sample);
    sample->add_option("--beta", inst.param, "Rationality parameter");
    sample->add_option("--trace", inst.trace_path, "Write a per-sample trace CSV");

    auto* sweep = app.add_subcommand("sweep", "Ensemble sweep; writes sweep.csv and manifest.json");
    add_common(sweep, true);
    sweep->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plotdata", "Filter a sweep.csv into the series of one figure");
    plot->add_option("--figure", figure, "active_firms | gibbs_panels | noisy_panels")->required();
    plot->add_option("--csv", csv_path, "Input sweep.csv")->required()->check(CLI::ExistingFile);
    plot->add_option("--params", plot_params, "Parameter values to keep")->delimiter(',');
    plot->add_option("--out", common.out, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        if (*gen)
            return cmd_generate(common, inst);
        if (*solve)
            return cmd_solve(common, inst);
        if (*sample)
            return cmd_sample(common, inst);
        if (*sweep)
            return cmd_sweep(common);
        return cmd_plotdata(figure, csv_path, plot_params, common.out);
    } catch (const rle::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}
