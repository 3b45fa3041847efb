#pragma once

// Random economy instances: technology matrices whose rows sum to -epsilon,
// exponential endowments and exponential utility noise.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "rng.hpp"

namespace rle {

struct EconomyConfig {
    int goods = 1;               // M
    int firms = 0;               // N
    double epsilon = 0.05;       // every technology row sums to -epsilon
    double endowment_scale = 1.0;
    std::uint64_t seed = 0;

    /// n = N / M
    double multiplicity() const { return static_cast<double>(firms) / goods; }

    void validate() const
    {
        if (goods < 1)
            throw std::invalid_argument("EconomyConfig: M must be >= 1");
        if (firms < 0)
            throw std::invalid_argument("EconomyConfig: N must be >= 0");
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
            throw std::invalid_argument("EconomyConfig: epsilon must be >= 0");
        if (!(endowment_scale > 0.0) || !std::isfinite(endowment_scale))
            throw std::invalid_argument("EconomyConfig: endowment_scale must be > 0");
    }
};

/// One disorder realization. Rows of `xi` are technologies.
struct Economy {
    EconomyConfig config;
    Eigen::MatrixXd xi; // N x M
    Eigen::VectorXd x0; // M

    int goods() const { return static_cast<int>(x0.size()); }
    int firms() const { return static_cast<int>(xi.rows()); }

    /// FNV-1a over the raw bytes of (xi, x0). Equal checksums identify
    /// bitwise-identical disorder.
    std::uint64_t checksum() const
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto feed = [&h](double v) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof v);
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 0x100000001b3ULL;
            }
        };
        for (Eigen::Index i = 0; i < xi.rows(); ++i)
            for (Eigen::Index j = 0; j < xi.cols(); ++j)
                feed(xi(i, j));
        for (Eigen::Index j = 0; j < x0.size(); ++j)
            feed(x0(j));
        return h;
    }
};

/// Draws M Gaussians of variance 1/M per row and shifts the row so it sums
/// to exactly -epsilon. Row i uses its own substream keyed by (seed, i), so
/// the first rows do not depend on N.
inline Eigen::MatrixXd gen_technology_matrix(int M, int N, double epsilon, std::uint64_t seed)
{
    Eigen::MatrixXd xi(N, M);
    const double sd = 1.0 / std::sqrt(static_cast<double>(M));
    for (int i = 0; i < N; ++i) {
        Engine eng = make_engine({seed, stream::technology, static_cast<std::uint64_t>(i)});
        std::normal_distribution<double> normal(0.0, sd);
        double sum = 0.0;
        for (int mu = 0; mu < M; ++mu) {
            xi(i, mu) = normal(eng);
            sum += xi(i, mu);
        }
        const double shift = (sum + epsilon) / M;
        for (int mu = 0; mu < M; ++mu)
            xi(i, mu) -= shift;
        // Compensated correction of the residual left by rounding.
        double s2 = 0.0;
        for (int mu = 0; mu < M; ++mu)
            s2 += xi(i, mu);
        xi(i, M - 1) -= s2 + epsilon;
    }
    return xi;
}

inline Eigen::VectorXd gen_endowment(int M, double scale, Engine& rng)
{
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd x0(M);
    for (int mu = 0; mu < M; ++mu)
        x0(mu) = scale * expo(rng);
    return x0;
}

/// Exponential entries with mean lambda. Draws are made even when
/// lambda == 0, so fields for different lambda on one stream are rescalings
/// of each other.
inline Eigen::VectorXd gen_noise_field(int M, double lambda, Engine& rng)
{
    if (!(lambda >= 0.0))
        throw std::invalid_argument("gen_noise_field: lambda must be >= 0");
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd h(M);
    for (int mu = 0; mu < M; ++mu)
        h(mu) = lambda * expo(rng);
    return h;
}

inline Economy make_economy(const EconomyConfig& cfg)
{
    cfg.validate();
    Economy e;
    e.config = cfg;
    e.xi = gen_technology_matrix(cfg.goods, cfg.firms, cfg.epsilon, cfg.seed);
    Engine eng = make_engine({cfg.seed, stream::endowment});
    e.x0 = gen_endowment(cfg.goods, cfg.endowment_scale, eng);
    return e;
}

/// Economy from explicit data (tests, files). Checks shapes only.
inline Economy make_economy(Eigen::MatrixXd xi, Eigen::VectorXd x0, double epsilon)
{
    if (x0.size() < 1 || (xi.rows() > 0 && xi.cols() != x0.size()))
        throw std::invalid_argument("make_economy: xi must be N x M with M = x0.size()");
    Economy e;
    e.config.goods = static_cast<int>(x0.size());
    e.config.firms = static_cast<int>(xi.rows());
    e.config.epsilon = epsilon;
    if (xi.rows() == 0)
        xi.resize(0, x0.size());
    e.xi = std::move(xi);
    e.x0 = std::move(x0);
    return e;
}

} // namespace rle
