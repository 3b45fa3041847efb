#pragma once

// State map and log utility.

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "errors.hpp"

namespace rle {

/// Separable log utility, optionally with a linear noise term h.x that the
/// consumer optimizes but the observer does not see.
struct UtilitySpec {
    std::optional<Eigen::VectorXd> noise;

    static UtilitySpec log() { return {}; }
    static UtilitySpec noisy(Eigen::VectorXd h) { return {std::move(h)}; }
};

inline constexpr double minus_infinity = -std::numeric_limits<double>::infinity();

/// x = x0 + sum_i s_i xi_i
inline Eigen::VectorXd goods_from_scales(const Eigen::VectorXd& x0, const Eigen::MatrixXd& xi,
                                         const Eigen::VectorXd& s)
{
    if (xi.rows() != s.size() || (xi.rows() > 0 && xi.cols() != x0.size()))
        throw std::invalid_argument("goods_from_scales: dimension mismatch");
    if (s.size() == 0)
        return x0;
    return x0 + xi.transpose() * s;
}

/// sum log x_mu (+ h.x). Any x_mu <= 0 gives -inf.
inline double utility(const Eigen::VectorXd& x, const UtilitySpec& spec = {})
{
    double u = 0.0;
    for (Eigen::Index mu = 0; mu < x.size(); ++mu) {
        if (!(x(mu) > 0.0))
            return minus_infinity;
        u += std::log(x(mu));
    }
    if (spec.noise)
        u += spec.noise->dot(x);
    return u;
}

/// p_mu = 1/x_mu (+ h_mu)
inline Eigen::VectorXd marginal_prices(const Eigen::VectorXd& x, const UtilitySpec& spec = {})
{
    if ((x.array() <= 0.0).any() || x.hasNaN())
        throw DomainError("marginal_prices: bundle must be strictly positive");
    Eigen::VectorXd p = x.cwiseInverse();
    if (spec.noise)
        p += *spec.noise;
    return p;
}

} // namespace rle
