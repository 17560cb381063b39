#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ledgerad/kernel_cache.hpp"
#include "ledgerad/ranking.hpp"

namespace ledgerad {

/// Snapshot passed to SmoConfig::observer after every pair update.
struct SmoStep {
    std::size_t iteration;
    std::span<const double> alpha;
    double objective;
    double violation;
};

struct SmoConfig {
    // Stop when the maximal KKT violation, measured in the conventional
    // scaling 0 <= α_i <= 1 with Σα = νm, drops below tol.
    double tol = 1e-3;
    std::size_t max_passes = 10'000'000;  // pair updates
    std::uint64_t seed = 0;  // permutes the scan order used to break selection ties
    Eigen::Index full_kernel_limit = 20'000;
    std::size_t cache_bytes = std::size_t{512} << 20;
    std::function<void(const SmoStep&)> observer;
};

template <typename Scalar>
struct OcSvmModel {
    DenseMatrix<Scalar> support_vectors;  // one row per retained point
    DenseVector<Scalar> alpha;
    std::vector<Eigen::Index> support_indices;  // training rows
    Scalar rho = 0;
    Scalar gamma = 1;
    Scalar nu = 1;
    Eigen::Index m = 0;
    Scalar dual_objective = 0;
    bool converged = false;
    bool kernel_materialized = false;  // full Gram matrix held during training
    bool rho_fallback = false;
    Scalar rho_spread = 0;  // max |recovery_j − rho| over interior j
    Scalar max_violation = 0;  // final KKT gap in the Σα = 1 scaling
    std::size_t iterations = 0;

    Scalar upper_bound() const { return Scalar(1) / (nu * static_cast<Scalar>(m)); }
};

template <typename Scalar>
struct RhoEstimate {
    Scalar rho = 0;
    Scalar spread = 0;
    bool fallback = false;
};

/// ρ from the coefficients and gradient G = Qα: the mean of G_j over
/// interior points 0 < α_j < upper; without any interior point, the median
/// of G_j over α_j > 0 with `fallback` set.
template <typename Scalar>
RhoEstimate<Scalar> recover_rho(std::span<const Scalar> alpha, std::span<const Scalar> gradient, Scalar upper,
                                Scalar margin = Scalar(1e-12)) {
    RhoEstimate<Scalar> est;
    std::vector<Scalar> interior;
    std::vector<Scalar> positive;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (alpha[j] > margin) positive.push_back(gradient[j]);
        if (alpha[j] > margin && alpha[j] < upper - margin) interior.push_back(gradient[j]);
    }
    if (!interior.empty()) {
        for (const auto g : interior) est.rho += g;
        est.rho /= static_cast<Scalar>(interior.size());
        for (const auto g : interior) est.spread = std::max(est.spread, std::abs(g - est.rho));
        return est;
    }
    if (positive.empty()) throw std::logic_error("no positive coefficients to recover rho from");
    est.fallback = true;
    std::sort(positive.begin(), positive.end());
    const auto mid = positive.size() / 2;
    est.rho = positive.size() % 2 ? positive[mid] : Scalar(0.5) * (positive[mid - 1] + positive[mid]);
    return est;
}

inline double default_gamma(Eigen::Index n_features) { return 1.0 / static_cast<double>(std::max<Eigen::Index>(1, n_features)); }

/// One-class ν-SVM dual
///   min ½ αᵀQα  s.t.  0 ≤ α_i ≤ 1/(νm),  Σα_i = 1,  Q_ij = exp(−γ‖x_i − x_j‖²)
/// solved by SMO on maximal-violating pairs.
template <typename Derived>
OcSvmModel<typename Derived::Scalar> fit_ocsvm(const Eigen::MatrixBase<Derived>& X_in, typename Derived::Scalar nu,
                                               typename Derived::Scalar gamma, const SmoConfig& config = {}) {
    using Scalar = typename Derived::Scalar;
    const DenseMatrix<Scalar> X = X_in;
    const Eigen::Index m = X.rows();
    if (!(nu > 0 && nu <= 1)) throw std::invalid_argument("nu must lie in (0, 1]");
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
    if (!(config.tol > 0)) throw std::invalid_argument("SMO tolerance must be positive");
    const Scalar nu_m = nu * static_cast<Scalar>(m);
    if (m == 0 || nu_m < Scalar(1) - Scalar(1e-12)) throw std::invalid_argument("infeasible: nu·m must be at least 1");

    const Scalar upper = Scalar(1) / nu_m;
    const auto um = static_cast<std::size_t>(m);
    std::vector<Scalar> alpha(um, Scalar(0));
    const auto at_bound = std::min<std::size_t>(um, static_cast<std::size_t>(std::floor(nu_m + Scalar(1e-9))));
    for (std::size_t i = 0; i < at_bound; ++i) alpha[i] = upper;
    if (at_bound < um) alpha[at_bound] = std::max(Scalar(0), Scalar(1) - static_cast<Scalar>(at_bound) * upper);

    KernelRows<Scalar> kernel(X, gamma, config.full_kernel_limit, config.cache_bytes);
    std::vector<Scalar> grad(um, Scalar(0));
    for (std::size_t s = 0; s < um; ++s) {
        if (alpha[s] == Scalar(0)) continue;
        const auto q = kernel.row(static_cast<Eigen::Index>(s));
        for (std::size_t t = 0; t < um; ++t) grad[t] += alpha[s] * q[t];
    }

    std::vector<std::size_t> order(um);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto objective = [&] {
        Scalar f = 0;
        for (std::size_t t = 0; t < um; ++t) f += alpha[t] * grad[t];
        return Scalar(0.5) * f;
    };

    OcSvmModel<Scalar> model;
    model.gamma = gamma;
    model.nu = nu;
    model.m = m;
    model.kernel_materialized = kernel.materialized();
    std::vector<double> alpha_view;
    Scalar violation = 0;
    std::size_t iter = 0;
    for (;; ++iter) {
        // i: most negative gradient among coefficients that can grow;
        // j: largest gradient among coefficients that can shrink.
        std::size_t i = um;
        std::size_t j = um;
        for (const auto t : order) {
            if (alpha[t] < upper && (i == um || grad[t] < grad[i])) i = t;
            if (alpha[t] > Scalar(0) && (j == um || grad[t] > grad[j])) j = t;
        }
        violation = (i == um || j == um) ? Scalar(0) : grad[j] - grad[i];
        if (nu_m * violation < static_cast<Scalar>(config.tol)) {
            model.converged = true;
            break;
        }
        if (iter >= config.max_passes) break;

        const auto qi = kernel.row(static_cast<Eigen::Index>(i));
        const auto qj = kernel.row(static_cast<Eigen::Index>(j));
        Scalar curvature = qi[i] + qj[j] - Scalar(2) * qi[j];
        if (curvature <= Scalar(0)) curvature = Scalar(1e-12);
        Scalar delta = violation / curvature;
        bool i_hits_upper = false;
        bool j_hits_zero = false;
        if (delta >= upper - alpha[i]) {
            delta = upper - alpha[i];
            i_hits_upper = true;
        }
        if (delta >= alpha[j]) {
            delta = alpha[j];
            j_hits_zero = true;
            i_hits_upper = i_hits_upper && delta == upper - alpha[i];
        }
        alpha[i] = i_hits_upper ? upper : alpha[i] + delta;
        alpha[j] = j_hits_zero ? Scalar(0) : alpha[j] - delta;
        for (std::size_t t = 0; t < um; ++t) grad[t] += delta * (qi[t] - qj[t]);

        if (config.observer) {
            alpha_view.assign(alpha.begin(), alpha.end());
            config.observer({iter + 1, alpha_view, static_cast<double>(objective()), static_cast<double>(violation)});
        }
    }

    model.iterations = iter;
    model.max_violation = violation;
    model.dual_objective = objective();
    const auto est = recover_rho<Scalar>(alpha, grad, upper);
    model.rho = est.rho;
    model.rho_spread = est.spread;
    model.rho_fallback = est.fallback;

    for (std::size_t t = 0; t < um; ++t)
        if (alpha[t] > Scalar(1e-12)) model.support_indices.push_back(static_cast<Eigen::Index>(t));
    const auto s = static_cast<Eigen::Index>(model.support_indices.size());
    model.support_vectors.resize(s, X.cols());
    model.alpha.resize(s);
    for (Eigen::Index r = 0; r < s; ++r) {
        const auto t = model.support_indices[static_cast<std::size_t>(r)];
        model.support_vectors.row(r) = X.row(t);
        model.alpha(r) = alpha[static_cast<std::size_t>(t)];
    }
    return model;
}

/// Σ α_i K(x_i, x) − ρ; negative means anomalous.
template <typename Scalar, typename Derived>
Scalar decision_value(const OcSvmModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
    const DenseVector<Scalar> q = x.derived().template cast<Scalar>().reshaped();
    const DenseVector<Scalar> k =
        (-model.gamma * (model.support_vectors.rowwise() - q.transpose()).rowwise().squaredNorm()).array().exp();
    return model.alpha.dot(k) - model.rho;
}

/// Ranks rows by ascending decision value (score = −decision value).
/// flagged_count counts values below −max_violation: at the solver's final
/// KKT gap δ every training point with decision < −δ sits at the upper
/// bound, so the count is at most νm, whereas points on the margin only
/// know their sign to within ±δ.
template <typename Scalar, typename Derived>
AnomalyRanking flag_anomalies(const OcSvmModel<Scalar>& model, const Eigen::MatrixBase<Derived>& X,
                              const std::vector<std::string>& ids) {
    if (static_cast<Eigen::Index>(ids.size()) != X.rows()) throw std::invalid_argument("one id per row required");
    std::vector<double> scores(ids.size());
    std::size_t negative = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto value = static_cast<double>(decision_value(model, X.row(i)));
        negative += value < -static_cast<double>(model.max_violation);
        scores[static_cast<std::size_t>(i)] = -value;
    }
    auto ranking = make_ranking(ids, scores);
    ranking.flagged_count = negative;
    return ranking;
}

/// Versioned text dump: gamma, nu, rho, the final KKT gap, m and one
/// `alpha x_1 ... x_n` line per support vector.
void write_ocsvm_model(std::ostream& out, const OcSvmModel<double>& model);
OcSvmModel<double> read_ocsvm_model(std::istream& in);

}  // namespace ledgerad
