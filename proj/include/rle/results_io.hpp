#pragma once

// sweep.csv, manifest.json and economy JSON.
//
// sweep.csv has one row per (n, model, param) cell under a fixed header.
// Numbers use the shortest decimal form that reads back to the same double;
// absent values (param of a rational sweep, gdp without global prices,
// standard errors from fewer than two realizations) are empty fields.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "ensemble.hpp"

namespace rle {

inline constexpr std::string_view sweep_csv_header =
    "n,model,param,phi_mean,phi_se,u_mean,u_se,lambda_mean,lambda_se,gdp_mean,gdp_se,"
    "feasible_frac,n_active_mean,dropped,included";

namespace detail {

inline std::string field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

inline std::optional<double> parse_optional_double(std::string_view s)
{
    if (s.empty())
        return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("sweep.csv: malformed number '" + std::string(s) + "'");
    return v;
}

} // namespace detail

inline std::string format_sweep_csv(const SweepResult& result)
{
    using detail::field;
    std::string out(sweep_csv_header);
    out += '\n';
    for (const auto& row : result.rows) {
        out += format_double(row.n);
        out += ',';
        out += to_string(row.model);
        out += ',' + field(row.param);
        out += ',' + field(row.phi.mean) + ',' + field(row.phi.se);
        out += ',' + field(row.u.mean) + ',' + field(row.u.se);
        out += ',' + field(row.lambda_traded.mean) + ',' + field(row.lambda_traded.se);
        out += ',' + field(row.gdp.mean) + ',' + field(row.gdp.se);
        out += ',' + field(row.feasible_frac) + ',' + field(row.n_active_mean);
        out += ',' + std::to_string(row.dropped) + ',' + std::to_string(row.included);
        out += '\n';
    }
    return out;
}

/// One parsed sweep.csv row.
struct SweepCsvRow {
    double n = 0.0;
    std::string model;
    std::optional<double> param;
    std::optional<double> phi_mean, phi_se, u_mean, u_se, lambda_mean, lambda_se, gdp_mean, gdp_se;
    std::optional<double> feasible_frac, n_active_mean;
    int dropped = 0;
    int included = 0;
};

inline std::vector<SweepCsvRow> parse_sweep_csv(std::string_view text)
{
    using detail::parse_optional_double;
    std::vector<SweepCsvRow> rows;
    std::size_t pos = 0;
    bool header = true;
    int lineno = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (header) {
            if (line != sweep_csv_header)
                throw std::runtime_error("sweep.csv: unexpected header '" + std::string(line) + "'");
            header = false;
            continue;
        }
        if (line.empty())
            continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 15)
            throw std::runtime_error("sweep.csv line " + std::to_string(lineno) + ": expected 15 fields, got " +
                                     std::to_string(f.size()));
        SweepCsvRow r;
        r.n = parse_optional_double(f[0]).value_or(0.0);
        r.model = std::string(f[1]);
        r.param = parse_optional_double(f[2]);
        r.phi_mean = parse_optional_double(f[3]);
        r.phi_se = parse_optional_double(f[4]);
        r.u_mean = parse_optional_double(f[5]);
        r.u_se = parse_optional_double(f[6]);
        r.lambda_mean = parse_optional_double(f[7]);
        r.lambda_se = parse_optional_double(f[8]);
        r.gdp_mean = parse_optional_double(f[9]);
        r.gdp_se = parse_optional_double(f[10]);
        r.feasible_frac = parse_optional_double(f[11]);
        r.n_active_mean = parse_optional_double(f[12]);
        r.dropped = static_cast<int>(parse_optional_double(f[13]).value_or(0));
        r.included = static_cast<int>(parse_optional_double(f[14]).value_or(0));
        rows.push_back(std::move(r));
    }
    if (header)
        throw std::runtime_error("sweep.csv: missing header");
    return rows;
}

/// Provenance fields that are not part of SweepConfig.
struct RunInfo {
    std::string command = "sweep";
    std::string config_path;
    int workers = 1;
    double wall_time_seconds = 0.0;
};

inline nlohmann::json manifest_json(const SweepResult& result, const RunInfo& info)
{
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_entries(result.config))
        cfg[k] = v;
    return {
        {"schema", "rle-manifest/1"},
        {"version", result.version},
        {"command", info.command},
        {"config_path", info.config_path},
        {"base_seed", result.config.base_seed},
        {"workers", info.workers},
        {"wall_time_seconds", info.wall_time_seconds},
        {"cells", result.rows.size()},
        {"config", cfg},
        {"config_text", echo_config(result.config)},
        {"outputs", {"sweep.csv"}},
    };
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes sweep.csv and manifest.json into `dir` (created if missing).
inline std::vector<std::filesystem::path> write_results(const SweepResult& result, const std::filesystem::path& dir,
                                                        const RunInfo& info = {})
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    const auto csv = dir / "sweep.csv";
    const auto manifest = dir / "manifest.json";
    write_text_file(csv, format_sweep_csv(result));
    write_text_file(manifest, manifest_json(result, info).dump(2) + "\n");
    return {csv, manifest};
}

// Economy <-> JSON: {"M", "N", "epsilon", "endowment_scale", "seed", "x0": [..], "xi": [[..], ..]}

inline nlohmann::json economy_to_json(const Economy& e)
{
    nlohmann::json xi = nlohmann::json::array();
    for (Eigen::Index i = 0; i < e.xi.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(e.xi.cols()));
        for (Eigen::Index mu = 0; mu < e.xi.cols(); ++mu)
            row[static_cast<std::size_t>(mu)] = e.xi(i, mu);
        xi.push_back(row);
    }
    return {
        {"M", e.goods()},
        {"N", e.firms()},
        {"epsilon", e.config.epsilon},
        {"endowment_scale", e.config.endowment_scale},
        {"seed", e.config.seed},
        {"x0", std::vector<double>(e.x0.data(), e.x0.data() + e.x0.size())},
        {"xi", xi},
    };
}

inline Economy economy_from_json(const nlohmann::json& j)
{
    const auto x0v = j.at("x0").get<std::vector<double>>();
    const auto rows = j.at("xi").get<std::vector<std::vector<double>>>();
    const auto M = static_cast<Eigen::Index>(x0v.size());
    Eigen::MatrixXd xi(static_cast<Eigen::Index>(rows.size()), M);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != M)
            throw std::runtime_error("economy JSON: row " + std::to_string(i) + " has wrong length");
        for (Eigen::Index mu = 0; mu < M; ++mu)
            xi(static_cast<Eigen::Index>(i), mu) = rows[i][static_cast<std::size_t>(mu)];
    }
    Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(x0v.data(), M);
    Economy e = make_economy(std::move(xi), std::move(x0), j.value("epsilon", 0.0));
    e.config.endowment_scale = j.value("endowment_scale", 1.0);
    e.config.seed = j.value("seed", std::uint64_t{0});
    return e;
}

} // namespace rle
