#include "ledgerad/graphs.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <ostream>
#include <unordered_map>

namespace ledgerad {

namespace {

// Distinct users in first-appearance order with their summed amounts.
std::vector<std::pair<UserId, Satoshi>> group_by_user(const std::vector<TxEndpoint>& endpoints, const UserMap& users) {
    std::vector<std::pair<UserId, Satoshi>> grouped;
    for (const auto& e : endpoints) {
        const UserId user = users.at(e.address);
        const auto it = std::find_if(grouped.begin(), grouped.end(), [&](const auto& g) { return g.first == user; });
        if (it == grouped.end()) grouped.emplace_back(user, e.amount);
        else it->second += e.amount;
    }
    return grouped;
}

}  // namespace

std::size_t UserGraph::index_of(UserId user) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), user);
    if (it == nodes.end() || *it != user) throw std::out_of_range("user " + std::to_string(user) + " not in graph");
    return static_cast<std::size_t>(it - nodes.begin());
}

UserGraph build_user_graph(const Ledger& records, const UserMap& users, const UserGraphOptions& options) {
    UserGraph graph;
    std::map<UserId, std::pair<Satoshi, Satoshi>> totals;  // received, sent
    for (const auto& rec : records) {
        const auto senders = group_by_user(rec.inputs, users);
        const auto receivers = group_by_user(rec.outputs, users);
        Satoshi total_in = 0;
        for (const auto& [user, amount] : senders) {
            totals[user].second += amount;
            total_in += amount;
        }
        for (const auto& [user, amount] : receivers) totals[user].first += amount;

        for (const auto& [sender, sender_amount] : senders) {
            for (const auto& [receiver, received] : receivers) {
                if (sender == receiver) continue;
                Satoshi amount = received;
                if (options.pro_rata && total_in > 0)
                    amount = static_cast<Satoshi>(static_cast<__int128>(received) * sender_amount / total_in);
                graph.edges.push_back({sender, receiver, amount, rec.timestamp, rec.tx_id});
            }
        }
    }
    graph.nodes.reserve(totals.size());
    for (const auto& [user, rs] : totals) {
        graph.nodes.push_back(user);
        graph.received.push_back(rs.first);
        graph.sent.push_back(rs.second);
    }
    return graph;
}

TransactionGraph build_transaction_graph(const Ledger& records) {
    struct Unspent {
        std::size_t tx;
        Satoshi remaining;
    };
    TransactionGraph graph;
    graph.nodes.reserve(records.size());
    graph.timestamps.reserve(records.size());
    std::unordered_map<std::string, std::deque<Unspent>> unspent;

    for (std::size_t t = 0; t < records.size(); ++t) {
        const auto& rec = records[t];
        graph.nodes.push_back(rec.tx_id);
        graph.timestamps.push_back(rec.timestamp);

        // funding tx -> amount, in first-consumption order
        std::vector<std::pair<std::size_t, Satoshi>> funding;
        for (const auto& input : rec.inputs) {
            Satoshi need = input.amount;
            auto it = unspent.find(input.address);
            while (need > 0 && it != unspent.end() && !it->second.empty()) {
                auto& front = it->second.front();
                const Satoshi used = std::min(front.remaining, need);
                const auto f = std::find_if(funding.begin(), funding.end(), [&](const auto& p) { return p.first == front.tx; });
                if (f == funding.end()) funding.emplace_back(front.tx, used);
                else f->second += used;
                need -= used;
                front.remaining -= used;
                if (front.remaining == 0) it->second.pop_front();
            }
            if (need > 0) graph.dangling.push_back({rec.tx_id, input.address, need});
        }
        for (const auto& [source, amount] : funding) graph.edges.push_back({source, t, amount});

        for (const auto& output : rec.outputs)
            if (output.amount > 0) unspent[output.address].push_back({t, output.amount});
    }
    return graph;
}

bool is_acyclic(const TransactionGraph& graph) {
    const std::size_t n = graph.nodes.size();
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& e : graph.edges) {
        out[e.source].push_back(e.target);
        ++indegree[e.target];
    }
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push_back(v);
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto v = ready.back();
        ready.pop_back();
        ++visited;
        for (const auto w : out[v])
            if (--indegree[w] == 0) ready.push_back(w);
    }
    return visited == n;
}

void write_edge_list(std::ostream& out, const UserGraph& graph) {
    out << "src,dst,amount,timestamp\n";
    for (const auto& e : graph.edges)
        out << e.sender << ',' << e.receiver << ',' << format_amount(e.amount) << ',' << e.timestamp << '\n';
}

void write_edge_list(std::ostream& out, const TransactionGraph& graph) {
    out << "src,dst,amount,timestamp\n";
    for (const auto& e : graph.edges)
        out << graph.nodes[e.source] << ',' << graph.nodes[e.target] << ',' << format_amount(e.amount) << ','
            << graph.timestamps[e.target] << '\n';
}

}  // namespace ledgerad
