#include "ledgerad/eval.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace ledgerad {

namespace {

const std::vector<std::string>& lookup(const std::unordered_map<std::string, std::vector<std::string>>& map,
                                       const std::string& key) {
    static const std::vector<std::string> empty;
    const auto it = map.find(key);
    return it == map.end() ? empty : it->second;
}

void add_unique(std::vector<std::string>& list, const std::string& value) {
    if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(value);
}

// |X ∩ top-|X| prefix of `ranking`| / |X|
double overlap_fraction(const std::unordered_set<std::string>& set, const AnomalyRanking& ranking) {
    const auto prefix = std::min(set.size(), ranking.size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < prefix; ++r) hits += set.count(ranking.entries[r].entity_id);
    return static_cast<double>(hits) / static_cast<double>(set.size());
}

}  // namespace

void OwnershipIndex::add(const std::string& user, const std::string& tx) {
    // Transactions arrive one at a time, so a repeat can only be the last entry.
    auto& txs = user_to_tx_[user];
    if (txs.empty() || txs.back() != tx) txs.push_back(tx);
    add_unique(tx_to_user_[tx], user);
}

const std::vector<std::string>& OwnershipIndex::transactions_of(const std::string& user) const {
    return lookup(user_to_tx_, user);
}

const std::vector<std::string>& OwnershipIndex::users_of(const std::string& tx) const { return lookup(tx_to_user_, tx); }

OwnershipIndex build_ownership(const Ledger& records, const UserMap& users) {
    OwnershipIndex index;
    for (const auto& rec : records) {
        for (const auto* side : {&rec.inputs, &rec.outputs})
            for (const auto& e : *side) index.add(std::to_string(users.at(e.address)), rec.tx_id);
    }
    return index;
}

DualEvalResult dual_evaluation(const AnomalyRanking& user_ranking, const AnomalyRanking& tx_ranking,
                               const OwnershipIndex& ownership, std::size_t N, std::size_t M) {
    if (N > user_ranking.size()) throw std::invalid_argument("N exceeds the user ranking length");
    if (M > tx_ranking.size()) throw std::invalid_argument("M exceeds the transaction ranking length");
    DualEvalResult result;
    result.N = N;
    result.M = M;

    std::unordered_set<std::string> x_n;
    for (std::size_t r = 0; r < N; ++r)
        for (const auto& tx : ownership.transactions_of(user_ranking.entries[r].entity_id)) x_n.insert(tx);
    std::unordered_set<std::string> y_m;
    for (std::size_t r = 0; r < M; ++r)
        for (const auto& user : ownership.users_of(tx_ranking.entries[r].entity_id)) y_m.insert(user);

    result.x_n_size = x_n.size();
    result.y_m_size = y_m.size();
    if (x_n.empty()) result.warnings.emplace_back("X_N is empty; A1 set to 0");
    else result.A1 = overlap_fraction(x_n, tx_ranking);
    if (y_m.empty()) result.warnings.emplace_back("Y_M is empty; A2 set to 0");
    else result.A2 = overlap_fraction(y_m, user_ranking);
    result.m_DE = dual_evaluation_metric(result.A1, result.A2);
    return result;
}

std::vector<TruthEntry> GroundTruth::of_kind(GraphKind kind) const {
    std::vector<TruthEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out), [&](const auto& e) { return e.kind == kind; });
    return out;
}

GroundTruth read_ground_truth(std::istream& in) {
    GroundTruth truth;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto first = line.find(',');
        if (first == std::string::npos) throw ParseError(line_no, "expected kind,id,label");
        const auto second = line.find(',', first + 1);
        TruthEntry entry;
        try {
            entry.kind = parse_graph_kind(line.substr(0, first));
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
        entry.id = line.substr(first + 1, second == std::string::npos ? std::string::npos : second - first - 1);
        if (second != std::string::npos) entry.label = line.substr(second + 1);
        if (entry.id.empty()) throw ParseError(line_no, "empty ground-truth id");
        truth.entries.push_back(std::move(entry));
    }
    return truth;
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
    for (const auto& e : truth.entries) out << to_string(e.kind) << ',' << e.id << ',' << e.label << '\n';
}

HitReport ground_truth_hits(const AnomalyRanking& ranking, const std::vector<TruthEntry>& truth, std::size_t top_n) {
    if (top_n > ranking.size()) throw std::invalid_argument("top_n exceeds ranking length");
    HitReport report;
    report.top_n = top_n;
    report.truth_size = truth.size();
    std::unordered_map<std::string, const TruthEntry*> wanted;
    for (const auto& e : truth) wanted.emplace(e.id, &e);
    for (std::size_t r = 0; r < top_n; ++r) {
        const auto it = wanted.find(ranking.entries[r].entity_id);
        if (it != wanted.end()) report.hits.push_back({it->first, it->second->label, r + 1});
    }
    report.hit_count = report.hits.size();
    return report;
}

}  // namespace ledgerad
