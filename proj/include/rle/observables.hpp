#pragma once

// Macro observables of one allocation: active fraction, traded volume,
// the price-weighted activity measure Y and global price feasibility.

#include <cmath>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace rle {

enum class ParamKind { rational, beta, lambda };

inline std::string_view to_string(ParamKind k)
{
    switch (k) {
    case ParamKind::beta: return "beta";
    case ParamKind::lambda: return "lambda";
    default: return "rational";
    }
}

/// Per-realization observables. For the Gibbs consumer these are averages
/// over the retained chain, so n_active and price_feasible_frac may be
/// fractional.
struct ObservableRow {
    double n = 0.0;
    ParamKind param_kind = ParamKind::rational;
    double param_value = 0.0;
    double phi = 0.0;
    double u_per_good = 0.0;
    double lambda_traded = 0.0;
    std::optional<double> gdp; // only when a positive global price vector exists
    double n_active = 0.0;
    bool price_feasible = false;
    double price_feasible_frac = 0.0;
    bool dropped = false;
};

struct ActiveFraction {
    double phi = 0.0;
    int n_active = 0;
};

/// Counts s_i > threshold. N = 0 is a domain error.
inline ActiveFraction active_fraction(const Eigen::VectorXd& s, double threshold)
{
    if (s.size() == 0)
        throw DomainError("active_fraction: no firms");
    const int count = static_cast<int>((s.array() > threshold).count());
    return {static_cast<double>(count) / static_cast<double>(s.size()), count};
}

/// (1/M) sum |x_mu - x0_mu|
inline double traded_volume(const Eigen::VectorXd& x, const Eigen::VectorXd& x0)
{
    if (x.size() != x0.size())
        throw std::invalid_argument("traded_volume: length mismatch");
    if (x.size() == 0)
        return 0.0;
    return (x - x0).cwiseAbs().sum() / static_cast<double>(x.size());
}

/// Y = sum |x_mu - x0_mu| p_mu / (2 sum p_mu), sum over goods 1..M.
inline double gdp(const Eigen::VectorXd& x, const Eigen::VectorXd& x0, const Eigen::VectorXd& p)
{
    if (x.size() != x0.size() || p.size() != x.size())
        throw std::invalid_argument("gdp: length mismatch");
    if ((p.array() <= 0.0).any() || p.hasNaN())
        throw DomainError("gdp: prices must be strictly positive");
    return (x - x0).cwiseAbs().dot(p) / (2.0 * p.sum());
}

inline double utility_per_good(double utility, int M)
{
    if (M < 1)
        throw std::invalid_argument("utility_per_good: M must be >= 1");
    return utility / static_cast<double>(M);
}

struct PriceFeasibility {
    bool feasible = false;    // a nonzero p with xi_active p = 0 exists (and p >= 0 if required)
    bool nonnegative = false; // the returned p has no negative entry
    std::optional<Eigen::VectorXd> p; // gauge: sum p = M
    double residual = 0.0;            // ||xi_active p||_inf
};

/// Global prices orthogonal to every active technology.
///
/// The reference vector (marginal prices at the bundle, or all ones) is
/// projected by least squares onto the null space of `xi_active` and
/// normalized to sum p = M. More than M active rows, or a trivial null space,
/// leaves no solution. With `require_nonnegative` the projected vector must
/// also be nonnegative (within tol).
inline PriceFeasibility price_feasibility(const Eigen::MatrixXd& xi_active, double tol,
                                          const std::optional<Eigen::VectorXd>& reference = std::nullopt,
                                          bool require_nonnegative = false)
{
    const Eigen::Index M = reference ? reference->size() : xi_active.cols();
    const Eigen::Index K = xi_active.rows();
    if (K > 0 && xi_active.cols() != M)
        throw std::invalid_argument("price_feasibility: dimension mismatch");
    if (M < 1)
        throw std::invalid_argument("price_feasibility: no goods");

    PriceFeasibility out;
    const Eigen::VectorXd ref = reference ? *reference : Eigen::VectorXd::Ones(M);
    auto gauge = [M](Eigen::VectorXd p) {
        const double total = p.sum();
        if (std::abs(total) > 1e-12 * p.cwiseAbs().sum())
            p *= static_cast<double>(M) / total;
        else
            p *= std::sqrt(static_cast<double>(M)) / p.norm();
        return p;
    };

    if (K == 0) {
        out.p = gauge(ref);
        out.nonnegative = (out.p->array() >= 0.0).all();
        out.feasible = out.nonnegative || !require_nonnegative;
        return out;
    }
    if (K > M)
        return out;

    // Null space of xi_active = orthogonal complement of range(xi_active^T).
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xi_active.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    if (rank >= M)
        return out;
    const Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd Z = Q.rightCols(M - rank);

    Eigen::VectorXd p = Z * (Z.transpose() * ref);
    if (p.norm() <= 1e-12 * ref.norm())
        p = Z.col(0); // reference orthogonal to the null space; any null vector will do
    p = gauge(std::move(p));
    if (p.sum() < 0.0)
        p = -p;

    out.residual = (xi_active * p).lpNorm<Eigen::Infinity>();
    out.nonnegative = (p.array() >= -tol).all();
    out.feasible = out.residual <= tol * std::max(1.0, p.lpNorm<Eigen::Infinity>()) &&
                   (out.nonnegative || !require_nonnegative);
    out.p = std::move(p);
    return out;
}

/// Rows of xi whose scale exceeds threshold.
inline Eigen::MatrixXd active_rows(const Eigen::MatrixXd& xi, const Eigen::VectorXd& s, double threshold)
{
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > threshold)
            idx.push_back(i);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), xi.cols());
    for (std::size_t k = 0; k < idx.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = xi.row(idx[k]);
    return out;
}

} // namespace rle
