#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ledgerad/ledger.hpp"

namespace ledgerad {

struct UserEdge {
    UserId sender;
    UserId receiver;
    Satoshi amount;
    std::int64_t timestamp;
    std::string tx_id;

    friend bool operator==(const UserEdge&, const UserEdge&) = default;
    friend auto operator<=>(const UserEdge&, const UserEdge&) = default;
};

/// Users as nodes, inter-user transfers as (parallel) directed edges.
/// Self-transfers (change) are not edges, but their users remain nodes.
struct UserGraph {
    std::vector<UserId> nodes;  // sorted ascending
    std::vector<UserEdge> edges;
    // Ledger totals per node (same order as `nodes`), self-transfers included.
    std::vector<Satoshi> received;
    std::vector<Satoshi> sent;

    std::size_t index_of(UserId user) const;  // throws std::out_of_range
};

struct UserGraphOptions {
    // Split each receiver's amount across senders in proportion to their
    // input share instead of giving every sender the full amount.
    bool pro_rata = false;
};

struct TxEdge {
    std::size_t source;  // funding record index
    std::size_t target;  // spending record index
    Satoshi amount;

    friend bool operator==(const TxEdge&, const TxEdge&) = default;
};

struct DanglingInput {
    std::string tx_id;
    std::string address;
    Satoshi missing;
};

/// Transactions as nodes (record order), spent-output flows as edges.
struct TransactionGraph {
    std::vector<std::string> nodes;
    std::vector<std::int64_t> timestamps;
    std::vector<TxEdge> edges;
    std::vector<DanglingInput> dangling;
};

UserGraph build_user_graph(const Ledger& records, const UserMap& users, const UserGraphOptions& options = {});

/// Inputs are matched to earlier outputs at the same address in FIFO order.
/// Multiple outputs of one funding transaction consumed by the same spender
/// collapse into a single edge carrying their sum.
TransactionGraph build_transaction_graph(const Ledger& records);

bool is_acyclic(const TransactionGraph& graph);

/// Edge list `src,dst,amount,timestamp`.
void write_edge_list(std::ostream& out, const UserGraph& graph);
void write_edge_list(std::ostream& out, const TransactionGraph& graph);

}  // namespace ledgerad
