#pragma once

#include <algorithm>
#include <iosfwd>
#include <numeric>
#include <string>
#include <vector>

namespace ledgerad {

struct RankedEntity {
    std::size_t row;  // row in the scored matrix
    std::string entity_id;
    double score;  // higher = more anomalous
};

/// Entities ordered by non-increasing score.
struct AnomalyRanking {
    std::vector<RankedEntity> entries;
    std::size_t flagged_count = 0;

    std::size_t size() const { return entries.size(); }
};

/// Sorts by descending score; equal scores keep row order.
inline AnomalyRanking make_ranking(const std::vector<std::string>& ids, const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    AnomalyRanking ranking;
    ranking.entries.reserve(order.size());
    for (const auto i : order) ranking.entries.push_back({i, ids[i], scores[i]});
    return ranking;
}

/// CSV `rank,entity_id,score,flagged`; rank is 1-based and the first
/// flagged_count entries are flagged.
void write_ranking_csv(std::ostream& out, const AnomalyRanking& ranking);
AnomalyRanking read_ranking_csv(std::istream& in);

}  // namespace ledgerad
