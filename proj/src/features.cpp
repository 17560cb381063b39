#include "ledgerad/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace ledgerad {

namespace {

constexpr std::array<std::pair<Feature, std::string_view>, 14> kFeatureNames{{
    {Feature::in_degree, "in_degree"},
    {Feature::out_degree, "out_degree"},
    {Feature::unique_in_degree, "unique_in_degree"},
    {Feature::unique_out_degree, "unique_out_degree"},
    {Feature::clustering_coefficient, "clustering_coefficient"},
    {Feature::avg_in_transaction, "avg_in_transaction"},
    {Feature::avg_out_transaction, "avg_out_transaction"},
    {Feature::avg_in_interval, "avg_in_interval"},
    {Feature::avg_out_interval, "avg_out_interval"},
    {Feature::balance, "balance"},
    {Feature::creation_date, "creation_date"},
    {Feature::active_duration, "active_duration"},
    {Feature::mean_time_interval, "mean_time_interval"},
    {Feature::total_amount, "total_amount"},
}};

struct Incident {
    std::size_t counterpart;
    Satoshi amount;
    std::int64_t timestamp;
};

// Per-node view shared by both graph kinds.
struct Adjacency {
    std::vector<std::vector<Incident>> in;
    std::vector<std::vector<Incident>> out;

    explicit Adjacency(std::size_t n) : in(n), out(n) {}
};

std::size_t distinct_counterparts(const std::vector<Incident>& edges) {
    std::vector<std::size_t> ids;
    ids.reserve(edges.size());
    for (const auto& e : edges) ids.push_back(e.counterpart);
    std::sort(ids.begin(), ids.end());
    return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

double mean_amount_btc(const std::vector<Incident>& edges) {
    if (edges.empty()) return 0.0;
    Satoshi total = 0;
    for (const auto& e : edges) total += e.amount;
    return to_btc(total) / static_cast<double>(edges.size());
}

// Mean gap between consecutive sorted timestamps = (last - first) / (count - 1).
double mean_interval(const std::vector<Incident>& edges) {
    if (edges.size() < 2) return 0.0;
    auto [lo, hi] = std::minmax_element(edges.begin(), edges.end(),
                                        [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return static_cast<double>(hi->timestamp - lo->timestamp) / static_cast<double>(edges.size() - 1);
}

// Local clustering coefficient of every node on the undirected simple projection.
std::vector<double> clustering_coefficients(const Adjacency& adj) {
    const std::size_t n = adj.in.size();
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& e : adj.in[v]) nbrs[v].push_back(e.counterpart);
        for (const auto& e : adj.out[v]) nbrs[v].push_back(e.counterpart);
        auto& list = nbrs[v];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        list.erase(std::remove(list.begin(), list.end(), v), list.end());
    }
    std::vector<double> cc(n, 0.0);
    std::vector<char> mark(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        const auto d = nbrs[v].size();
        if (d < 2) continue;
        for (const auto w : nbrs[v]) mark[w] = 1;
        std::size_t links = 0;
        for (const auto w : nbrs[v])
            for (const auto x : nbrs[w]) links += mark[x];
        for (const auto w : nbrs[v]) mark[w] = 0;
        // each neighbor-neighbor link was counted from both ends
        cc[v] = static_cast<double>(links / 2) / (static_cast<double>(d) * static_cast<double>(d - 1) / 2.0);
    }
    return cc;
}

struct NodeExtras {
    double balance = 0.0;
    double creation_date = 0.0;
    double active_duration = 0.0;
    double total_amount = 0.0;
};

double feature_value(Feature f, const Adjacency& adj, std::size_t v, double cc, const NodeExtras& extra) {
    switch (f) {
        case Feature::in_degree: return static_cast<double>(adj.in[v].size());
        case Feature::out_degree: return static_cast<double>(adj.out[v].size());
        case Feature::unique_in_degree: return static_cast<double>(distinct_counterparts(adj.in[v]));
        case Feature::unique_out_degree: return static_cast<double>(distinct_counterparts(adj.out[v]));
        case Feature::clustering_coefficient: return cc;
        case Feature::avg_in_transaction: return mean_amount_btc(adj.in[v]);
        case Feature::avg_out_transaction: return mean_amount_btc(adj.out[v]);
        case Feature::avg_in_interval: return mean_interval(adj.in[v]);
        case Feature::avg_out_interval: return mean_interval(adj.out[v]);
        case Feature::mean_time_interval: return 0.5 * (mean_interval(adj.in[v]) + mean_interval(adj.out[v]));
        case Feature::balance: return extra.balance;
        case Feature::creation_date: return extra.creation_date;
        case Feature::active_duration: return extra.active_duration;
        case Feature::total_amount: return extra.total_amount;
    }
    throw std::logic_error("unhandled feature");
}

template <typename ExtrasFn>
Eigen::MatrixXd fill(const FeatureSchema& schema, const Adjacency& adj, ExtrasFn&& extras) {
    const auto n = adj.in.size();
    const auto cc = clustering_coefficients(adj);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(schema.size()));
    for (std::size_t v = 0; v < n; ++v) {
        const NodeExtras extra = extras(v);
        for (std::size_t c = 0; c < schema.size(); ++c)
            values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(c)) =
                feature_value(schema.features()[c], adj, v, cc[v], extra);
    }
    return values;
}

std::pair<std::int64_t, std::int64_t> timestamp_span(const std::vector<Incident>& a, const std::vector<Incident>& b) {
    auto lo = std::numeric_limits<std::int64_t>::max();
    auto hi = std::numeric_limits<std::int64_t>::min();
    for (const auto* list : {&a, &b})
        for (const auto& e : *list) {
            lo = std::min(lo, e.timestamp);
            hi = std::max(hi, e.timestamp);
        }
    return {lo, hi};
}

}  // namespace

std::string_view to_string(GraphKind kind) { return kind == GraphKind::user ? "user" : "tx"; }

GraphKind parse_graph_kind(std::string_view text) {
    if (text == "user") return GraphKind::user;
    if (text == "tx" || text == "transaction") return GraphKind::transaction;
    throw std::invalid_argument("unknown graph kind '" + std::string(text) + "'");
}

std::string_view feature_name(Feature feature) {
    for (const auto& [f, name] : kFeatureNames)
        if (f == feature) return name;
    throw std::logic_error("unnamed feature");
}

Feature parse_feature(std::string_view name) {
    for (const auto& [f, n] : kFeatureNames)
        if (n == name) return f;
    throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
}

FeatureSchema::FeatureSchema(GraphKind kind, std::vector<Feature> features) : kind_(kind), features_(std::move(features)) {
    if (features_.empty()) throw std::invalid_argument("feature schema must be non-empty");
    auto sorted = features_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("feature schema has duplicate names");
    if (kind_ == GraphKind::user && std::count(features_.begin(), features_.end(), Feature::total_amount))
        throw std::invalid_argument("total_amount is a transaction-graph feature");
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> names;
    for (const auto f : features_) names.emplace_back(feature_name(f));
    return names;
}

FeatureSchema FeatureSchema::parse(GraphKind kind, std::string_view names) {
    std::vector<Feature> features;
    std::size_t start = 0;
    while (start <= names.size()) {
        auto end = names.find(',', start);
        if (end == std::string_view::npos) end = names.size();
        features.push_back(parse_feature(names.substr(start, end - start)));
        start = end + 1;
    }
    return FeatureSchema(kind, std::move(features));
}

FeatureSchema default_schema(GraphKind kind) {
    if (kind == GraphKind::user)
        return FeatureSchema(kind, {Feature::in_degree, Feature::out_degree, Feature::avg_in_transaction,
                                    Feature::avg_out_transaction, Feature::mean_time_interval,
                                    Feature::clustering_coefficient});
    return FeatureSchema(kind, {Feature::in_degree, Feature::out_degree, Feature::total_amount});
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& indices) const {
    FeatureMatrix out{{}, Eigen::MatrixXd(static_cast<Eigen::Index>(indices.size()), values.cols()), schema, normalized};
    out.entity_ids.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        out.entity_ids.push_back(entity_ids.at(indices[r]));
        out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(indices[r]));
    }
    return out;
}

FeatureMatrix extract_user_features(const UserGraph& graph, const FeatureSchema& schema) {
    if (schema.kind() != GraphKind::user) throw std::invalid_argument("schema is not a user-graph schema");
    Adjacency adj(graph.nodes.size());
    for (const auto& e : graph.edges) {
        const auto s = graph.index_of(e.sender);
        const auto r = graph.index_of(e.receiver);
        adj.out[s].push_back({r, e.amount, e.timestamp});
        adj.in[r].push_back({s, e.amount, e.timestamp});
    }
    FeatureMatrix matrix{{}, {}, schema, false};
    for (const auto user : graph.nodes) matrix.entity_ids.push_back(std::to_string(user));
    matrix.values = fill(schema, adj, [&](std::size_t v) {
        NodeExtras extra;
        extra.balance = to_btc(graph.received[v] - graph.sent[v]);
        if (!adj.in[v].empty() || !adj.out[v].empty()) {
            const auto [lo, hi] = timestamp_span(adj.in[v], adj.out[v]);
            extra.creation_date = static_cast<double>(lo);
            extra.active_duration = static_cast<double>(hi - lo);
        }
        return extra;
    });
    return matrix;
}

FeatureMatrix extract_transaction_features(const TransactionGraph& graph, const Ledger& records,
                                           const FeatureSchema& schema) {
    if (schema.kind() != GraphKind::transaction) throw std::invalid_argument("schema is not a transaction-graph schema");
    if (graph.nodes.size() != records.size())
        throw std::invalid_argument("transaction graph and records disagree on transaction count");
    for (std::size_t t = 0; t < records.size(); ++t)
        if (graph.nodes[t] != records[t].tx_id)
            throw std::invalid_argument("transaction '" + graph.nodes[t] + "' missing from records");

    Adjacency adj(graph.nodes.size());
    for (const auto& e : graph.edges) {
        adj.out[e.source].push_back({e.target, e.amount, graph.timestamps[e.target]});
        adj.in[e.target].push_back({e.source, e.amount, graph.timestamps[e.source]});
    }
    FeatureMatrix matrix{graph.nodes, {}, schema, false};
    matrix.values = fill(schema, adj, [&](std::size_t v) {
        NodeExtras extra;
        Satoshi inflow = 0;
        Satoshi outflow = 0;
        for (const auto& e : adj.in[v]) inflow += e.amount;
        for (const auto& e : adj.out[v]) outflow += e.amount;
        extra.balance = to_btc(inflow - outflow);
        const auto own = records[v].timestamp;
        extra.creation_date = static_cast<double>(own);
        std::int64_t last = own;
        for (const auto& e : adj.out[v]) last = std::max(last, e.timestamp);
        extra.active_duration = static_cast<double>(last - own);
        extra.total_amount = to_btc(records[v].total_output());
        return extra;
    });
    return matrix;
}

FeatureMatrix normalize(const FeatureMatrix& matrix) {
    if (matrix.normalized) throw std::logic_error("feature matrix is already normalized");
    FeatureMatrix out = matrix;
    out.values = matrix.values.unaryExpr([](double x) { return signed_log1p(x); });
    const auto m = out.values.rows();
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
        auto col = out.values.col(c);
        if (m == 0 || col.maxCoeff() == col.minCoeff()) {
            col.setZero();
            continue;
        }
        const double mean = col.sum() / static_cast<double>(m);
        col.array() -= mean;
        const double stddev = std::sqrt(col.squaredNorm() / static_cast<double>(m));
        col /= stddev;
    }
    out.normalized = true;
    return out;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
    out << "entity_id";
    for (const auto& name : matrix.schema.names()) out << ',' << name;
    out << '\n';
    char buf[32];
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        out << matrix.entity_ids[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", matrix.values(r, c));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace ledgerad
