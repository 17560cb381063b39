#pragma once

#include <iosfwd>
#include <stdexcept>

#include <Eigen/Dense>

#include "ledgerad/features.hpp"
#include "ledgerad/kmeans.hpp"
#include "ledgerad/ranking.hpp"

namespace ledgerad {

class DegenerateProjectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct Projection2D {
    DenseMatrix<Scalar> components;  // n x 2
    Scalar eigenvalues[2];
    DenseMatrix<Scalar> points;  // m x 2
};

/// Top two principal components by power iteration with deflation,
/// a fixed number of iterations from a fixed start vector.
template <typename Derived>
Projection2D<typename Derived::Scalar> principal_projection(const Eigen::MatrixBase<Derived>& X, int iterations = 100) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = X.cols();
    Eigen::Index varying = 0;
    for (Eigen::Index c = 0; c < n; ++c) varying += X.col(c).maxCoeff() != X.col(c).minCoeff();
    if (X.rows() < 2 || varying < 2) throw DegenerateProjectionError("need at least 2 non-constant columns to project");

    const DenseMatrix<Scalar> centered = X.rowwise() - X.colwise().mean();
    DenseMatrix<Scalar> cov = centered.transpose() * centered / static_cast<Scalar>(X.rows());

    Projection2D<Scalar> out;
    out.components.resize(n, 2);
    for (int pc = 0; pc < 2; ++pc) {
        DenseVector<Scalar> v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = std::sqrt(static_cast<Scalar>(i + 1)) * (pc == 0 || i % 2 == 0 ? 1 : -1);
        if (pc == 1) {
            // Deflate the matrix rather than the iterates: projecting c0 out of
            // a vector nearly parallel to it leaves rounding noise of the same
            // size as the true residual.
            cov -= out.eigenvalues[0] * out.components.col(0) * out.components.col(0).transpose();
            v -= out.components.col(0).dot(v) * out.components.col(0);
        }
        v.normalize();
        for (int it = 0; it < iterations; ++it) {
            DenseVector<Scalar> w = cov * v;
            if (pc == 1) w -= out.components.col(0).dot(w) * out.components.col(0);
            const Scalar norm = w.norm();
            if (norm == Scalar(0)) break;
            v = w / norm;
        }
        out.eigenvalues[pc] = v.dot(cov * v);
        out.components.col(pc) = v;
    }
    if (!(out.eigenvalues[1] > Scalar(1e-10) * out.eigenvalues[0]))
        throw DegenerateProjectionError("data has rank below 2; second component vanishes");
    out.points = centered * out.components;
    return out;
}

/// SVG scatter of the first two principal components; the ranking's
/// flagged entries are drawn as `class="anomaly"` circles, the rest as
/// `class="normal"`.
void render_scatter(std::ostream& out, const FeatureMatrix& matrix, const AnomalyRanking& ranking,
                    const std::string& title);

}  // namespace ledgerad
