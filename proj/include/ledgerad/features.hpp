#pragma once

#include <cmath>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ledgerad/graphs.hpp"

namespace ledgerad {

enum class GraphKind { user, transaction };

std::string_view to_string(GraphKind kind);
GraphKind parse_graph_kind(std::string_view text);

enum class Feature {
    in_degree,
    out_degree,
    unique_in_degree,
    unique_out_degree,
    clustering_coefficient,
    avg_in_transaction,
    avg_out_transaction,
    avg_in_interval,
    avg_out_interval,
    balance,
    creation_date,
    active_duration,
    // Mean of avg_in_interval and avg_out_interval.
    mean_time_interval,
    // Transaction graph only: sum of the record's outputs.
    total_amount,
};

std::string_view feature_name(Feature feature);
Feature parse_feature(std::string_view name);

class FeatureSchema {
public:
    FeatureSchema(GraphKind kind, std::vector<Feature> features);

    GraphKind kind() const { return kind_; }
    const std::vector<Feature>& features() const { return features_; }
    std::size_t size() const { return features_.size(); }
    std::vector<std::string> names() const;

    /// Comma-separated feature names.
    static FeatureSchema parse(GraphKind kind, std::string_view names);

private:
    GraphKind kind_;
    std::vector<Feature> features_;
};

/// User: in/out degree, avg in/out transaction, mean time interval, clustering.
/// Transaction: in-degree, out-degree, total amount.
FeatureSchema default_schema(GraphKind kind);

struct FeatureMatrix {
    std::vector<std::string> entity_ids;
    Eigen::MatrixXd values;  // one row per entity
    FeatureSchema schema;
    bool normalized = false;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    /// Rows at `indices`, in the given order.
    FeatureMatrix select_rows(const std::vector<std::size_t>& indices) const;
};

FeatureMatrix extract_user_features(const UserGraph& graph, const FeatureSchema& schema);
FeatureMatrix extract_transaction_features(const TransactionGraph& graph, const Ledger& records,
                                           const FeatureSchema& schema);

/// x -> sign(x)·ln(1+|x|), then population z-score per column; constant
/// columns become zero. Throws std::logic_error on an already-normalized input.
FeatureMatrix normalize(const FeatureMatrix& matrix);

inline double signed_log1p(double x) { return x < 0 ? -std::log1p(-x) : std::log1p(x); }

/// CSV with header `entity_id,<feature names...>`.
void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);

}  // namespace ledgerad
