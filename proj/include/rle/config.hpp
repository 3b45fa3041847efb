#pragma once

// Flat key-value sweep configuration.
//
// Grammar, one entry per line:
//
//     key = value          # comment
//
// Keys may be dotted (`solver.grad_tol`), lists are comma separated
// (`n_grid = 0.5, 1, 1.5`), booleans are true/false, and `#` starts a comment
// anywhere on a line. Every key has a default except `model`.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ensemble.hpp"

namespace rle {

class ConfigError : public std::runtime_error {
public:
    enum class Kind { syntax, unknown_key, duplicate_key, missing_key, type_mismatch, range_violation };

    ConfigError(Kind kind, std::string key, int line, const std::string& detail)
        : std::runtime_error(format(kind, key, line, detail)), kind_(kind), key_(std::move(key)), line_(line)
    {
    }

    Kind kind() const noexcept { return kind_; }
    const std::string& key() const noexcept { return key_; }
    /// 1-based line in the config text; 0 for --set overrides and whole-config checks.
    int line() const noexcept { return line_; }

private:
    static std::string format(Kind kind, const std::string& key, int line, const std::string& detail)
    {
        static constexpr const char* names[] = {"syntax error",  "unknown key",   "duplicate key",
                                                "missing key",   "type mismatch", "range violation"};
        std::string where = line > 0 ? "line " + std::to_string(line) : std::string("override");
        return where + ": " + names[static_cast<int>(kind)] + " for '" + key + "': " + detail;
    }

    Kind kind_;
    std::string key_;
    int line_;
};

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct RawValue {
    std::string text;
    int line = 0;
};

class ValueReader {
public:
    ValueReader(std::string key, const RawValue& raw) : key_(std::move(key)), raw_(raw) {}

    double real() const { return parse_real(raw_.text); }

    long integer() const
    {
        long v = 0;
        const auto t = trim(raw_.text);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size())
            fail(ConfigError::Kind::type_mismatch, "expected an integer, got '" + raw_.text + "'");
        return v;
    }

    std::uint64_t unsigned64() const
    {
        std::uint64_t v = 0;
        const auto t = trim(raw_.text);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size())
            fail(ConfigError::Kind::type_mismatch, "expected an unsigned 64-bit integer, got '" + raw_.text + "'");
        return v;
    }

    bool boolean() const
    {
        const auto t = trim(raw_.text);
        if (t == "true")
            return true;
        if (t == "false")
            return false;
        fail(ConfigError::Kind::type_mismatch, "expected true or false, got '" + raw_.text + "'");
    }

    std::vector<double> real_list() const
    {
        std::vector<double> out;
        std::string_view rest = trim(raw_.text);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            if (item.empty())
                fail(ConfigError::Kind::type_mismatch, "empty list element");
            out.push_back(parse_real(item));
            if (comma == std::string_view::npos)
                break;
            rest = rest.substr(comma + 1);
            if (trim(rest).empty())
                fail(ConfigError::Kind::type_mismatch, "trailing comma");
        }
        return out;
    }

    std::string_view word() const { return trim(raw_.text); }

    [[noreturn]] void fail(ConfigError::Kind kind, const std::string& detail) const
    {
        throw ConfigError(kind, key_, raw_.line, detail);
    }

private:
    double parse_real(std::string_view t) const
    {
        t = trim(t);
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(v))
            fail(ConfigError::Kind::type_mismatch, "expected a real number, got '" + std::string(t) + "'");
        return v;
    }

    std::string key_;
    const RawValue& raw_;
};

inline std::string join(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k)
            out += ", ";
        out += format_double(v[k]);
    }
    return out;
}

} // namespace detail

inline std::vector<double> default_n_grid()
{
    std::vector<double> g;
    for (int k = 1; k <= 24; ++k)
        g.push_back(0.25 * k);
    return g;
}

inline std::vector<double> default_param_grid(ModelKind m)
{
    switch (m) {
    case ModelKind::gibbs: return {1.0, 10.0, 100.0, 1e6};
    case ModelKind::noisy: return {0.0, 0.1, 0.5, 1.0};
    default: return {};
    }
}

/// Every key with its current value, in canonical order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const SweepConfig& c)
{
    using detail::join;
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    return {
        {"M", std::to_string(c.goods)},
        {"epsilon", format_double(c.epsilon)},
        {"endowment_scale", format_double(c.endowment_scale)},
        {"model", std::string(to_string(c.model))},
        {"n_grid", join(c.n_grid)},
        {"param_grid", join(c.param_grid)},
        {"realizations", std::to_string(c.realizations)},
        {"base_seed", std::to_string(c.base_seed)},
        {"paired", b(c.paired)},
        {"solver.max_iters", std::to_string(c.solver.max_iters)},
        {"solver.grad_tol", format_double(c.solver.grad_tol)},
        {"solver.step_init", format_double(c.solver.step_init)},
        {"solver.armijo_c", format_double(c.solver.armijo_c)},
        {"solver.backtrack", format_double(c.solver.backtrack)},
        {"solver.active_threshold", format_double(c.solver.active_threshold)},
        {"solver.divergence_bound", format_double(c.solver.divergence_bound)},
        {"chain.burn_in", c.chain.burn_in ? std::to_string(*c.chain.burn_in) : std::string("auto")},
        {"chain.n_samples", std::to_string(c.chain.n_samples)},
        {"chain.thin", std::to_string(c.chain.thin)},
        {"chain.step_sigma", format_double(c.chain.step_sigma)},
        {"chain.adapt_target", format_double(c.chain.adapt_target)},
        {"chain.active_threshold", format_double(c.chain.active_threshold)},
        {"prices.tol", format_double(c.prices.tol)},
        {"prices.nonnegative", b(c.prices.require_nonnegative)},
    };
}

/// The config in the input grammar, every default explicit. Parsing the echo
/// yields the same SweepConfig.
inline std::string echo_config(const SweepConfig& c)
{
    std::string out;
    for (const auto& [k, v] : config_entries(c))
        out += k + " = " + v + "\n";
    return out;
}

/// Parses and validates a sweep config. `overrides` are `key=value` strings
/// applied on top of the text (they must name known keys).
inline SweepConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {})
{
    using detail::RawValue;
    using detail::trim;
    using Kind = ConfigError::Kind;

    std::map<std::string, RawValue> raw;
    auto split = [](std::string_view line, int lineno) {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(Kind::syntax, std::string(trim(line)), lineno, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError(Kind::syntax, "", lineno, "missing key before '='");
        for (char ch : key)
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.'))
                throw ConfigError(Kind::syntax, std::string(key), lineno, "invalid character in key");
        return std::pair{std::string(key), std::string(trim(line.substr(eq + 1)))};
    };

    int lineno = 0;
    std::string_view rest = text;
    while (!rest.empty()) {
        ++lineno;
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        if (trim(line).empty())
            continue;
        auto [key, value] = split(line, lineno);
        if (raw.count(key))
            throw ConfigError(Kind::duplicate_key, key, lineno,
                              "already set on line " + std::to_string(raw[key].line));
        raw[key] = {value, lineno};
    }
    for (const auto& o : overrides) {
        auto [key, value] = split(o, 0);
        raw[key] = {value, 0};
    }

    SweepConfig c;
    c.n_grid = default_n_grid();
    bool param_grid_given = false;

    using Setter = std::function<void(const detail::ValueReader&)>;
    auto range = [](const detail::ValueReader& r, bool ok, const std::string& what) {
        if (!ok)
            r.fail(Kind::range_violation, "must be " + what);
    };
    const std::map<std::string, Setter> setters = {
        {"M", [&](auto& r) { auto v = r.integer(); range(r, v >= 1 && v <= 1 << 20, ">= 1"); c.goods = static_cast<int>(v); }},
        {"epsilon", [&](auto& r) { auto v = r.real(); range(r, v >= 0, ">= 0"); c.epsilon = v; }},
        {"endowment_scale", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.endowment_scale = v; }},
        {"model", [&](auto& r) {
             auto m = model_from_string(r.word());
             if (!m)
                 r.fail(Kind::type_mismatch, "expected rational, gibbs or noisy");
             c.model = *m;
         }},
        {"n_grid", [&](auto& r) {
             auto v = r.real_list();
             range(r, !v.empty(), "a nonempty list");
             for (std::size_t k = 0; k < v.size(); ++k) {
                 range(r, v[k] > 0, "a list of positive values");
                 range(r, k == 0 || v[k] > v[k - 1], "strictly increasing");
             }
             c.n_grid = std::move(v);
         }},
        {"param_grid", [&](auto& r) {
             auto v = r.real_list();
             for (double x : v)
                 range(r, x >= 0, "a list of values >= 0");
             c.param_grid = std::move(v);
             param_grid_given = true;
         }},
        {"realizations", [&](auto& r) { auto v = r.integer(); range(r, v >= 1 && v <= 1L << 30, ">= 1"); c.realizations = static_cast<int>(v); }},
        {"base_seed", [&](auto& r) { c.base_seed = r.unsigned64(); }},
        {"paired", [&](auto& r) { c.paired = r.boolean(); }},
        {"solver.max_iters", [&](auto& r) { auto v = r.integer(); range(r, v >= 1 && v <= 1L << 30, ">= 1"); c.solver.max_iters = static_cast<int>(v); }},
        {"solver.grad_tol", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.solver.grad_tol = v; }},
        {"solver.step_init", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.solver.step_init = v; }},
        {"solver.armijo_c", [&](auto& r) { auto v = r.real(); range(r, v > 0 && v < 1, "in (0, 1)"); c.solver.armijo_c = v; }},
        {"solver.backtrack", [&](auto& r) { auto v = r.real(); range(r, v > 0 && v < 1, "in (0, 1)"); c.solver.backtrack = v; }},
        {"solver.active_threshold", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.solver.active_threshold = v; }},
        {"solver.divergence_bound", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.solver.divergence_bound = v; }},
        {"chain.burn_in", [&](auto& r) {
             if (r.word() == "auto") {
                 c.chain.burn_in.reset();
                 return;
             }
             auto v = r.integer();
             range(r, v >= 1, ">= 1 or auto");
             c.chain.burn_in = v;
         }},
        {"chain.n_samples", [&](auto& r) { auto v = r.integer(); range(r, v >= 1, ">= 1"); c.chain.n_samples = v; }},
        {"chain.thin", [&](auto& r) { auto v = r.integer(); range(r, v >= 1, ">= 1"); c.chain.thin = v; }},
        {"chain.step_sigma", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.chain.step_sigma = v; }},
        {"chain.adapt_target", [&](auto& r) { auto v = r.real(); range(r, v > 0 && v < 1, "in (0, 1)"); c.chain.adapt_target = v; }},
        {"chain.active_threshold", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.chain.active_threshold = v; }},
        {"prices.tol", [&](auto& r) { auto v = r.real(); range(r, v > 0, "> 0"); c.prices.tol = v; }},
        {"prices.nonnegative", [&](auto& r) { c.prices.require_nonnegative = r.boolean(); }},
    };

    for (const auto& [key, value] : raw)
        if (!setters.count(key))
            throw ConfigError(Kind::unknown_key, key, value.line, "not a recognized setting");
    if (!raw.count("model"))
        throw ConfigError(Kind::missing_key, "model", 0, "required (rational, gibbs or noisy)");

    // model first: param_grid checks depend on it.
    setters.at("model")(detail::ValueReader("model", raw.at("model")));
    for (const auto& [key, value] : raw)
        if (key != "model")
            setters.at(key)(detail::ValueReader(key, value));

    if (!param_grid_given) {
        c.param_grid = default_param_grid(c.model);
    } else {
        const auto& pg = raw.at("param_grid");
        if (c.model == ModelKind::rational && !c.param_grid.empty())
            throw ConfigError(Kind::range_violation, "param_grid", pg.line, "must be empty for model = rational");
        if (c.model != ModelKind::rational && c.param_grid.empty())
            throw ConfigError(Kind::range_violation, "param_grid", pg.line,
                              "must be nonempty for model = " + std::string(to_string(c.model)));
    }
    c.validate();
    return c;
}

} // namespace rle
