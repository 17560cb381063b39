#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ledgerad/kmeans.hpp"
#include "ledgerad/ranking.hpp"

namespace ledgerad {

/// Maximum-likelihood Gaussian with a ridge on the covariance.
template <typename Scalar>
struct GaussianModel {
    DenseVector<Scalar> mean;
    DenseMatrix<Scalar> covariance;  // includes ridge·I
    Scalar ridge = 0;
    Scalar log_det = 0;
    DenseMatrix<Scalar> precision;

    Eigen::Index dim() const { return mean.size(); }
};

/// ridge defaults to 1e-6·trace(Σ_raw)/n, or 1e-6 when the data has no spread.
template <typename Derived>
GaussianModel<typename Derived::Scalar> fit_gaussian(const Eigen::MatrixBase<Derived>& X,
                                                     std::optional<typename Derived::Scalar> ridge = std::nullopt) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index m = X.rows();
    const Eigen::Index n = X.cols();
    if (m < 2) throw std::invalid_argument("fit_gaussian requires at least 2 rows");

    GaussianModel<Scalar> model;
    model.mean = X.colwise().mean().transpose();
    const DenseMatrix<Scalar> centered = X.rowwise() - model.mean.transpose();
    DenseMatrix<Scalar> cov = (centered.transpose() * centered) / static_cast<Scalar>(m);
    cov = Scalar(0.5) * (cov + cov.transpose());

    if (ridge) {
        if (*ridge < Scalar(0)) throw std::invalid_argument("ridge must be non-negative");
        model.ridge = *ridge;
    } else {
        const Scalar scale = cov.trace() / static_cast<Scalar>(n);
        model.ridge = Scalar(1e-6) * (scale > Scalar(0) ? scale : Scalar(1));
    }
    cov.diagonal().array() += model.ridge;
    model.covariance = cov;

    const Eigen::LLT<DenseMatrix<Scalar>> llt(model.covariance);
    if (llt.info() != Eigen::Success) throw std::domain_error("covariance is not positive definite; use a positive ridge");
    model.log_det = Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
    model.precision = llt.solve(DenseMatrix<Scalar>::Identity(n, n));
    model.precision = Scalar(0.5) * (model.precision + model.precision.transpose()).eval();
    return model;
}

template <typename Scalar, typename Derived>
Scalar squared_mahalanobis(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
    const DenseVector<Scalar> d = x.derived().template cast<Scalar>().reshaped() - model.mean;
    return std::max(Scalar(0), d.dot(model.precision * d));
}

template <typename Scalar, typename Derived>
Scalar mahalanobis_distance(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
    return std::sqrt(squared_mahalanobis(model, x));
}

/// ln p(x) = -(n/2)·ln(2π) - ½·ln|Σ| - ½·d²(x).
template <typename Scalar, typename Derived>
Scalar log_density(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
    const auto n = static_cast<Scalar>(model.dim());
    return -Scalar(0.5) * n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) - Scalar(0.5) * model.log_det -
           Scalar(0.5) * squared_mahalanobis(model, x);
}

struct EpsilonThreshold {
    double epsilon;  // flag when p(x) < epsilon
};
struct QuantileThreshold {
    double q;  // flag the lowest-density fraction q, q in (0, 1]
};
using ThresholdSpec = std::variant<EpsilonThreshold, QuantileThreshold>;

/// Count flagged by a quantile threshold: ceil(q·m) with a guard against
/// representation error in q·m.
inline std::size_t quantile_count(double q, std::size_t m) {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in (0, 1]");
    const double raw = q * static_cast<double>(m);
    return std::min(m, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

/// Ranks rows by descending Mahalanobis distance (score = distance).
template <typename Scalar, typename Derived>
AnomalyRanking flag_anomalies(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& X,
                              const std::vector<std::string>& ids, const ThresholdSpec& threshold = QuantileThreshold{0.01}) {
    if (static_cast<Eigen::Index>(ids.size()) != X.rows()) throw std::invalid_argument("one id per row required");
    std::vector<double> scores(ids.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        scores[static_cast<std::size_t>(i)] = static_cast<double>(mahalanobis_distance(model, X.row(i)));
    auto ranking = make_ranking(ids, scores);

    if (const auto* q = std::get_if<QuantileThreshold>(&threshold)) {
        ranking.flagged_count = quantile_count(q->q, ranking.size());
    } else {
        const double eps = std::get<EpsilonThreshold>(threshold).epsilon;
        if (eps < 0.0) throw std::invalid_argument("epsilon must be non-negative");
        const double log_eps = eps > 0.0 ? std::log(eps) : -std::numeric_limits<double>::infinity();
        for (const auto& entry : ranking.entries) {
            if (!(static_cast<double>(log_density(model, X.row(static_cast<Eigen::Index>(entry.row)))) < log_eps)) break;
            ++ranking.flagged_count;
        }
    }
    return ranking;
}

}  // namespace ledgerad
