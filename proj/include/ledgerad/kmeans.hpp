#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ledgerad {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct KMeansOptions {
    std::uint64_t seed = 0;
    int max_iter = 300;
    double tol = 1e-6;  // relative objective improvement
};

template <typename Scalar>
struct KMeansModel {
    Eigen::Index k = 0;
    DenseMatrix<Scalar> centroids;  // k x n
    std::vector<Eigen::Index> assignments;
    Scalar objective = 0;
    // Objective after each Lloyd update step.
    std::vector<Scalar> objective_history;
    int iterations = 0;
    // True when the last iteration left every assignment unchanged.
    bool converged = false;

    std::vector<Eigen::Index> cluster_sizes() const {
        std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
        for (const auto a : assignments) ++sizes[static_cast<std::size_t>(a)];
        return sizes;
    }
};

namespace detail {

template <typename Derived, typename CDerived>
Eigen::Index nearest_centroid(const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<CDerived>& centroids,
                              typename Derived::Scalar* sq_dist = nullptr) {
    Eigen::Index best = 0;
    (centroids.rowwise() - x).rowwise().squaredNorm().minCoeff(&best);  // first minimum wins ties
    if (sq_dist) *sq_dist = (centroids.row(best) - x).squaredNorm();
    return best;
}

template <typename Derived>
DenseMatrix<typename Derived::Scalar> kmeans_plus_plus(const Eigen::MatrixBase<Derived>& X, Eigen::Index k,
                                                       std::mt19937_64& rng) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index m = X.rows();
    DenseMatrix<Scalar> centroids(k, X.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
    centroids.row(0) = X.row(pick(rng));
    DenseVector<Scalar> d2 = (X.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (Eigen::Index c = 1; c < k; ++c) {
        const Scalar total = d2.sum();
        Eigen::Index chosen = 0;
        if (total > Scalar(0)) {
            std::uniform_real_distribution<double> u(0.0, static_cast<double>(total));
            const double target = u(rng);
            double running = 0.0;
            chosen = m - 1;
            for (Eigen::Index i = 0; i < m; ++i) {
                running += static_cast<double>(d2(i));
                if (running > target && d2(i) > Scalar(0)) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centroids.row(c) = X.row(chosen);
        d2 = d2.cwiseMin((X.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

}  // namespace detail

/// Within-cluster sum of squared distances for a given assignment.
template <typename Derived, typename CDerived>
typename Derived::Scalar kmeans_objective(const Eigen::MatrixBase<Derived>& X, const Eigen::MatrixBase<CDerived>& centroids,
                                          const std::vector<Eigen::Index>& assignments) {
    typename Derived::Scalar total = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        total += (X.row(i) - centroids.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

/// Lloyd's algorithm with k-means++ seeding. Rows of X are points.
/// Stops when assignments are stable, the relative objective improvement
/// drops below tol, or after max_iter update steps. An emptied cluster is
/// reseeded with the point farthest from its centroid.
template <typename Derived>
KMeansModel<typename Derived::Scalar> fit_kmeans(const Eigen::MatrixBase<Derived>& X, Eigen::Index k,
                                                 const KMeansOptions& options = {}) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index m = X.rows();
    if (k < 1 || k > m) throw std::invalid_argument("k-means requires 1 <= k <= number of points");

    std::mt19937_64 rng(options.seed);
    KMeansModel<Scalar> model;
    model.k = k;
    model.centroids = detail::kmeans_plus_plus(X, k, rng);
    model.assignments.assign(static_cast<std::size_t>(m), -1);

    Scalar previous = std::numeric_limits<Scalar>::infinity();
    std::vector<Scalar> d2(static_cast<std::size_t>(m));
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        bool changed = false;
        std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto a = detail::nearest_centroid(X.row(i), model.centroids, &d2[static_cast<std::size_t>(i)]);
            auto& slot = model.assignments[static_cast<std::size_t>(i)];
            changed |= slot != a;
            slot = a;
            ++sizes[static_cast<std::size_t>(a)];
        }

        for (Eigen::Index c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] != 0) continue;
            Eigen::Index far = -1;
            for (Eigen::Index i = 0; i < m; ++i) {
                const auto owner = model.assignments[static_cast<std::size_t>(i)];
                if (sizes[static_cast<std::size_t>(owner)] < 2) continue;
                if (far < 0 || d2[static_cast<std::size_t>(i)] > d2[static_cast<std::size_t>(far)]) far = i;
            }
            --sizes[static_cast<std::size_t>(model.assignments[static_cast<std::size_t>(far)])];
            model.assignments[static_cast<std::size_t>(far)] = c;
            d2[static_cast<std::size_t>(far)] = Scalar(0);
            sizes[static_cast<std::size_t>(c)] = 1;
            changed = true;
        }

        model.centroids.setZero();
        for (Eigen::Index i = 0; i < m; ++i) model.centroids.row(model.assignments[static_cast<std::size_t>(i)]) += X.row(i);
        for (Eigen::Index c = 0; c < k; ++c) model.centroids.row(c) /= static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);

        model.objective = kmeans_objective(X, model.centroids, model.assignments);
        model.objective_history.push_back(model.objective);
        model.iterations = iter;
        if (!changed) {
            model.converged = true;
            break;
        }
        if (std::isfinite(previous) && previous - model.objective <= static_cast<Scalar>(options.tol) * previous) break;
        previous = model.objective;
    }
    return model;
}

/// Size-weighted Gaussian differential entropy of the clusters:
/// Σ_i (m_i/m)·[(n/2)·ln(2πe) + ½·ln det(Σ_i + εI)], Σ_i the population
/// covariance of cluster i.
template <typename Derived>
typename Derived::Scalar cluster_entropy(const KMeansModel<typename Derived::Scalar>& model,
                                         const Eigen::MatrixBase<Derived>& X, double ridge = 1e-6) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = X.cols();
    const auto m = static_cast<Scalar>(X.rows());
    const auto sizes = model.cluster_sizes();
    const Scalar base = Scalar(0.5) * static_cast<Scalar>(n) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * std::numbers::e_v<Scalar>);

    std::vector<DenseMatrix<Scalar>> scatter(static_cast<std::size_t>(model.k), DenseMatrix<Scalar>::Zero(n, n));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto a = model.assignments[static_cast<std::size_t>(i)];
        const auto d = (X.row(i) - model.centroids.row(a)).transpose().eval();
        scatter[static_cast<std::size_t>(a)].noalias() += d * d.transpose();
    }
    Scalar entropy = 0;
    for (Eigen::Index c = 0; c < model.k; ++c) {
        const auto size = sizes[static_cast<std::size_t>(c)];
        if (size == 0) continue;
        DenseMatrix<Scalar> cov = scatter[static_cast<std::size_t>(c)] / static_cast<Scalar>(size);
        cov.diagonal().array() += static_cast<Scalar>(ridge);
        const Eigen::LLT<DenseMatrix<Scalar>> llt(cov);
        const Scalar log_det = Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
        entropy += (static_cast<Scalar>(size) / m) * (base + Scalar(0.5) * log_det);
    }
    return entropy;
}

template <typename Scalar>
struct EntropyPoint {
    Eigen::Index k;
    Scalar entropy;    // cluster_entropy
    Scalar criterion;  // value minimized by select_k
};

template <typename Scalar>
struct KSelection {
    Eigen::Index best_k = 0;
    std::vector<EntropyPoint<Scalar>> curve;
    KMeansModel<Scalar> best_model;
};

/// Picks k in [k_min, k_max] minimizing the entropy of the hard-assignment
/// Gaussian mixture (cluster_entropy plus the entropy of the cluster
/// proportions) with a BIC-style complexity charge of
/// k·(n + n(n+1)/2 + 1)·ln(m)/(2m). Ties go to the smaller k.
template <typename Derived>
KSelection<typename Derived::Scalar> select_k(const Eigen::MatrixBase<Derived>& X, Eigen::Index k_min, Eigen::Index k_max,
                                              const KMeansOptions& options = {}) {
    using Scalar = typename Derived::Scalar;
    if (k_min < 1 || k_min > k_max || k_max > X.rows()) throw std::invalid_argument("select_k requires 1 <= k_min <= k_max <= m");
    const auto m = static_cast<Scalar>(X.rows());
    const auto n = static_cast<Scalar>(X.cols());
    const Scalar params_per_cluster = n + n * (n + 1) / 2 + 1;

    KSelection<Scalar> selection;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index k = k_min; k <= k_max; ++k) {
        auto model = fit_kmeans(X, k, options);
        const Scalar entropy = cluster_entropy(model, X);
        Scalar proportions = 0;
        for (const auto size : model.cluster_sizes()) {
            if (size == 0) continue;
            const Scalar w = static_cast<Scalar>(size) / m;
            proportions -= w * std::log(w);
        }
        const Scalar criterion =
            entropy + proportions + static_cast<Scalar>(k) * params_per_cluster * std::log(m) / (Scalar(2) * m);
        selection.curve.push_back({k, entropy, criterion});
        if (criterion < best) {
            best = criterion;
            selection.best_k = k;
            selection.best_model = std::move(model);
        }
    }
    return selection;
}

}  // namespace ledgerad
