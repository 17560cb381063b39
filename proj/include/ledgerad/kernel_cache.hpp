#pragma once

#include <cmath>
#include <cstddef>
#include <list>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ledgerad/kmeans.hpp"

namespace ledgerad {

/// K(x, z) = exp(-γ·‖x − z‖²).
template <typename DerivedX, typename DerivedZ>
typename DerivedX::Scalar rbf_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedZ>& z,
                                     typename DerivedX::Scalar gamma) {
    if (!(gamma > 0)) throw std::invalid_argument("rbf gamma must be positive");
    if (x.size() != z.size()) throw std::invalid_argument("rbf operands differ in dimension");
    return std::exp(-gamma * (x.derived().reshaped() - z.derived().reshaped()).squaredNorm());
}

/// Rows of the RBF Gram matrix of X. Materializes the full matrix when
/// m <= full_limit, otherwise keeps an LRU cache of rows bounded by
/// cache_bytes (never fewer than two rows).
template <typename Scalar>
class KernelRows {
public:
    KernelRows(const DenseMatrix<Scalar>& X, Scalar gamma, Eigen::Index full_limit, std::size_t cache_bytes)
        : X_(X), gamma_(gamma), full_(X.rows() <= full_limit) {
        const auto m = X_.rows();
        if (full_) {
            gram_.resize(m, m);
            for (Eigen::Index i = 0; i < m; ++i) compute(i, gram_.col(i).data());
        } else {
            const std::size_t row_bytes = static_cast<std::size_t>(m) * sizeof(Scalar);
            capacity_ = std::max<std::size_t>(2, cache_bytes / row_bytes);
        }
    }

    Eigen::Index size() const { return X_.rows(); }
    bool materialized() const { return full_; }
    std::size_t cached_rows() const { return full_ ? static_cast<std::size_t>(X_.rows()) : lru_.size(); }
    std::size_t row_capacity() const { return full_ ? static_cast<std::size_t>(X_.rows()) : capacity_; }
    std::size_t misses() const { return misses_; }

    /// Valid until two further distinct rows have been requested.
    std::span<const Scalar> row(Eigen::Index i) {
        const auto m = static_cast<std::size_t>(X_.rows());
        if (full_) return {gram_.col(i).data(), m};  // symmetric: column i == row i
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return {it->second->values.data(), m};
        }
        ++misses_;
        if (lru_.size() >= capacity_) {
            index_.erase(lru_.back().index);
            lru_.splice(lru_.begin(), lru_, std::prev(lru_.end()));
            lru_.front().index = i;
        } else {
            lru_.push_front({i, std::vector<Scalar>(m)});
        }
        compute(i, lru_.front().values.data());
        index_[i] = lru_.begin();
        return {lru_.front().values.data(), m};
    }

private:
    struct Entry {
        Eigen::Index index;
        std::vector<Scalar> values;
    };

    void compute(Eigen::Index i, Scalar* out) const {
        Eigen::Map<DenseVector<Scalar>> dst(out, X_.rows());
        dst = (-gamma_ * (X_.rowwise() - X_.row(i)).rowwise().squaredNorm()).array().exp();
    }

    const DenseMatrix<Scalar>& X_;
    Scalar gamma_;
    bool full_;
    DenseMatrix<Scalar> gram_;
    std::size_t capacity_ = 0;
    std::size_t misses_ = 0;
    std::list<Entry> lru_;
    std::unordered_map<Eigen::Index, typename std::list<Entry>::iterator> index_;
};

}  // namespace ledgerad
