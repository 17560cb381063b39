#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ledgerad/features.hpp"
#include "ledgerad/kmeans.hpp"
#include "ledgerad/ledger.hpp"
#include "ledgerad/ranking.hpp"

namespace ledgerad {

/// Users and the transactions they take part in (as sender or receiver).
/// Ids are the entity ids used in rankings: decimal user ids and tx ids.
class OwnershipIndex {
public:
    /// Pairs for one transaction must be added consecutively.
    void add(const std::string& user, const std::string& tx);

    const std::vector<std::string>& transactions_of(const std::string& user) const;
    const std::vector<std::string>& users_of(const std::string& tx) const;

    const std::unordered_map<std::string, std::vector<std::string>>& user_to_tx() const { return user_to_tx_; }
    const std::unordered_map<std::string, std::vector<std::string>>& tx_to_users() const { return tx_to_user_; }

private:
    std::unordered_map<std::string, std::vector<std::string>> user_to_tx_;
    std::unordered_map<std::string, std::vector<std::string>> tx_to_user_;
};

OwnershipIndex build_ownership(const Ledger& records, const UserMap& users);

struct DualEvalResult {
    double A1 = 0;
    double A2 = 0;
    double m_DE = 0;
    std::size_t N = 0;
    std::size_t M = 0;
    std::size_t x_n_size = 0;  // |X_N|
    std::size_t y_m_size = 0;  // |Y_M|
    std::vector<std::string> warnings;
};

/// m_DE = (A1 + A2) / 2.
inline double dual_evaluation_metric(double a1, double a2) { return (a1 + a2) / 2.0; }

/// X_N: transactions of the top-N users; A1 is the fraction of X_N found
/// in the top-|X_N| transactions. A2 is the mirror image via Y_M.
DualEvalResult dual_evaluation(const AnomalyRanking& user_ranking, const AnomalyRanking& tx_ranking,
                               const OwnershipIndex& ownership, std::size_t N, std::size_t M);

/// Mean over the top_n ranked rows of ‖x − μ_a(x)‖ / max_{y in cluster a(x)} ‖y − μ_a(x)‖.
/// A cluster whose points all sit on the centroid contributes 0.
template <typename Derived>
double centroid_distance_ratios(const KMeansModel<typename Derived::Scalar>& model, const Eigen::MatrixBase<Derived>& X,
                                const AnomalyRanking& ranking, std::size_t top_n) {
    if (top_n == 0) throw std::invalid_argument("top_n must be positive");
    if (top_n > ranking.size()) throw std::invalid_argument("top_n exceeds ranking length");
    std::vector<double> dist(static_cast<std::size_t>(X.rows()));
    std::vector<double> farthest(static_cast<std::size_t>(model.k), 0.0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto a = model.assignments[static_cast<std::size_t>(i)];
        const double d = static_cast<double>((X.row(i) - model.centroids.row(a)).norm());
        dist[static_cast<std::size_t>(i)] = d;
        farthest[static_cast<std::size_t>(a)] = std::max(farthest[static_cast<std::size_t>(a)], d);
    }
    double total = 0.0;
    for (std::size_t r = 0; r < top_n; ++r) {
        const auto row = ranking.entries[r].row;
        const double far = farthest[static_cast<std::size_t>(model.assignments[row])];
        total += far > 0.0 ? dist[row] / far : 0.0;
    }
    return total / static_cast<double>(top_n);
}

struct TruthEntry {
    GraphKind kind;
    std::string id;
    std::string label;
};

struct GroundTruth {
    std::vector<TruthEntry> entries;

    std::vector<TruthEntry> of_kind(GraphKind kind) const;
};

/// CSV `kind(user|tx),id,label`; '#' comments allowed.
GroundTruth read_ground_truth(std::istream& in);
void write_ground_truth(std::ostream& out, const GroundTruth& truth);

struct Hit {
    std::string id;
    std::string label;
    std::size_t rank;  // 1-based
};

struct HitReport {
    std::size_t top_n = 0;
    std::size_t truth_size = 0;
    std::size_t hit_count = 0;
    std::vector<Hit> hits;  // ordered by rank
};

HitReport ground_truth_hits(const AnomalyRanking& ranking, const std::vector<TruthEntry>& truth, std::size_t top_n);

}  // namespace ledgerad
