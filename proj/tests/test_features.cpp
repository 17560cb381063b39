#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "ledgerad/features.hpp"
#include "ledgerad/graphs.hpp"
#include "ledgerad/synth.hpp"

using namespace ledgerad;

namespace {

FeatureSchema all_user_features() {
    return FeatureSchema(GraphKind::user,
                         {Feature::in_degree, Feature::out_degree, Feature::unique_in_degree, Feature::unique_out_degree,
                          Feature::clustering_coefficient, Feature::avg_in_transaction, Feature::avg_out_transaction,
                          Feature::avg_in_interval, Feature::avg_out_interval, Feature::balance, Feature::creation_date,
                          Feature::active_duration, Feature::mean_time_interval});
}

double at(const FeatureMatrix& m, const std::string& id, Feature f) {
    const auto row = std::find(m.entity_ids.begin(), m.entity_ids.end(), id) - m.entity_ids.begin();
    const auto& fs = m.schema.features();
    const auto col = std::find(fs.begin(), fs.end(), f) - fs.begin();
    REQUIRE(static_cast<std::size_t>(row) < m.entity_ids.size());
    REQUIRE(static_cast<std::size_t>(col) < fs.size());
    return m.values(row, col);
}

UserMap identity_map(const Ledger& records) {
    UserMap map;
    complete_user_map(map, records);
    return map;
}

SynthConfig small_synth(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.tx_count = 2000;
    cfg.user_count = 150;
    cfg.funnel_count = 2;
    cfg.burst_count = 2;
    cfg.dormant_count = 1;
    cfg.funnel_fan_in = 12;
    cfg.burst_fan_out = 12;
    return cfg;
}

}  // namespace

TEST_CASE("default schemas") {
    const auto user = default_schema(GraphKind::user);
    const auto tx = default_schema(GraphKind::transaction);
    CHECK(user.size() == 6);
    CHECK(tx.size() == 3);
    CHECK(tx.names() == std::vector<std::string>{"in_degree", "out_degree", "total_amount"});
    for (const auto& s : {user, tx}) {
        auto names = s.names();
        std::sort(names.begin(), names.end());
        CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
    }
}

TEST_CASE("schema validation and parsing") {
    CHECK_THROWS(FeatureSchema(GraphKind::user, {}));
    CHECK_THROWS(FeatureSchema(GraphKind::user, {Feature::in_degree, Feature::in_degree}));
    CHECK_THROWS(FeatureSchema(GraphKind::user, {Feature::total_amount}));
    CHECK_THROWS(FeatureSchema::parse(GraphKind::user, "in_degree,bogus"));
    const auto s = FeatureSchema::parse(GraphKind::transaction, "total_amount,in_degree");
    CHECK(s.features() == std::vector<Feature>{Feature::total_amount, Feature::in_degree});
    const auto all = all_user_features();
    for (const auto f : all.features()) CHECK(parse_feature(feature_name(f)) == f);
    CHECK(parse_feature("total_amount") == Feature::total_amount);
}

TEST_CASE("a user that only pays itself gets an all-zero row") {
    const auto records = parse_ledger_string("t1,100,a1:5.00000000,a1c:5.00000000\n");
    UserMap users;
    users.assign("a1", 1);
    users.assign("a1c", 1);
    const auto m = extract_user_features(build_user_graph(records, users), all_user_features());
    REQUIRE(m.rows() == 1);
    CHECK(m.values.row(0).isZero());
}

TEST_CASE("two receipts by hand") {
    // u (address aU) receives 2 BTC at t=100 and 4 BTC at t=160.
    const auto records = parse_ledger_string(
        "t1,100,a1:2.00000000,aU:2.00000000\n"
        "t2,160,a2:4.00000000,aU:4.00000000\n");
    const auto users = identity_map(records);
    const auto m = extract_user_features(build_user_graph(records, users), all_user_features());
    const auto u = std::to_string(users.at("aU"));
    CHECK(at(m, u, Feature::in_degree) == 2);
    CHECK(at(m, u, Feature::out_degree) == 0);
    CHECK(at(m, u, Feature::unique_in_degree) == 2);
    CHECK(at(m, u, Feature::avg_in_transaction) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(at(m, u, Feature::avg_out_transaction) == 0);
    CHECK(at(m, u, Feature::avg_in_interval) == 60);
    CHECK(at(m, u, Feature::avg_out_interval) == 0);
    CHECK(at(m, u, Feature::mean_time_interval) == 30);
    CHECK(at(m, u, Feature::balance) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(at(m, u, Feature::creation_date) == 100);
    CHECK(at(m, u, Feature::active_duration) == 60);
}

TEST_CASE("triangle of mutual payments has clustering coefficient 1") {
    std::string text;
    int t = 0;
    for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b)
            if (a != b)
                text += "t" + std::to_string(++t) + "," + std::to_string(t) + ",a" + std::to_string(a) +
                        ":1.00000000,a" + std::to_string(b) + ":1.00000000\n";
    const auto records = parse_ledger_string(text);
    const auto m = extract_user_features(build_user_graph(records, identity_map(records)), all_user_features());
    for (const auto& id : m.entity_ids) CHECK(at(m, id, Feature::clustering_coefficient) == 1.0);
}

TEST_CASE("clustering coefficient ignores edge direction") {
    // 1 -> 2 -> 3: node 2 has neighbours {1, 3} that are not linked.
    const auto path = parse_ledger_string("t1,1,a1:1.00000000,a2:1.00000000\nt2,2,a2:1.00000000,a3:1.00000000\n");
    const auto pm = extract_user_features(build_user_graph(path, identity_map(path)), all_user_features());
    for (const auto& id : pm.entity_ids) CHECK(at(pm, id, Feature::clustering_coefficient) == 0.0);
    // Adding 1 -> 3 closes the undirected projection into a triangle.
    const auto closed = parse_ledger_string(
        "t1,1,a1:1.00000000,a2:1.00000000\nt2,2,a2:1.00000000,a3:1.00000000\nt3,3,a1:1.00000000,a3:1.00000000\n");
    const auto cm = extract_user_features(build_user_graph(closed, identity_map(closed)), all_user_features());
    for (const auto& id : cm.entity_ids) CHECK(at(cm, id, Feature::clustering_coefficient) == 1.0);
}

TEST_CASE("coinbase transaction with no spenders") {
    const auto records = parse_ledger_string("cb,1,,aA:3.00000000|aB:2.00000000\n");
    const auto m = extract_transaction_features(build_transaction_graph(records), records,
                                                default_schema(GraphKind::transaction));
    REQUIRE(m.rows() == 1);
    CHECK(m.values(0, 0) == 0);
    CHECK(m.values(0, 1) == 0);
    CHECK(m.values(0, 2) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("diamond degrees") {
    const auto records = parse_ledger_string(
        "t1,1,,aB:2.00000000|aC:3.00000000\n"
        "t2,2,aB:2.00000000,aD:2.00000000\n"
        "t3,3,aC:3.00000000,aE:3.00000000\n"
        "t4,4,aD:2.00000000|aE:3.00000000,aF:5.00000000\n");
    const FeatureSchema schema(GraphKind::transaction, {Feature::in_degree, Feature::out_degree, Feature::total_amount,
                                                        Feature::balance, Feature::active_duration});
    const auto m = extract_transaction_features(build_transaction_graph(records), records, schema);
    CHECK(at(m, "t1", Feature::in_degree) == 0);
    CHECK(at(m, "t1", Feature::out_degree) == 2);
    CHECK(at(m, "t1", Feature::active_duration) == 2);
    CHECK(at(m, "t4", Feature::in_degree) == 2);
    CHECK(at(m, "t4", Feature::balance) == doctest::Approx(5.0));
}

TEST_CASE("transaction features require matching records") {
    const auto records = parse_ledger_string("t1,1,,aA:1.00000000\n");
    auto graph = build_transaction_graph(records);
    graph.nodes[0] = "other";
    CHECK_THROWS(extract_transaction_features(graph, records, default_schema(GraphKind::transaction)));
    CHECK_THROWS(extract_transaction_features(build_transaction_graph(records), records, default_schema(GraphKind::user)));
}

TEST_CASE("normalization by hand") {
    FeatureMatrix m{{"a", "b", "c"}, Eigen::MatrixXd(3, 2), default_schema(GraphKind::transaction), false};
    m.schema = FeatureSchema(GraphKind::transaction, {Feature::in_degree, Feature::out_degree});
    m.values << 5, 0, 5, std::numbers::e - 1.0, 5, 0;
    const auto z = normalize(m);
    CHECK(z.normalized);
    CHECK(z.values.col(0).isZero());
    // log1p column {0, 1, 0}: mean 1/3, population std sqrt(2)/3.
    CHECK(z.values(0, 1) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(z.values(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    FeatureMatrix pair{{"a", "b"}, Eigen::MatrixXd(2, 1), FeatureSchema(GraphKind::user, {Feature::balance}), false};
    pair.values << 0, std::numbers::e - 1.0;
    const auto zp = normalize(pair);
    CHECK(zp.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(zp.values(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(normalize(z), std::logic_error);
}

TEST_CASE("signed log1p is odd and strictly increasing") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    std::vector<double> xs(500);
    for (auto& x : xs) x = u(rng);
    xs.push_back(0.0);
    for (const double x : xs) CHECK(signed_log1p(-x) == -signed_log1p(x));
    std::vector<std::size_t> by_raw(xs.size());
    std::iota(by_raw.begin(), by_raw.end(), std::size_t{0});
    auto by_log = by_raw;
    std::sort(by_raw.begin(), by_raw.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::sort(by_log.begin(), by_log.end(), [&](auto a, auto b) { return signed_log1p(xs[a]) < signed_log1p(xs[b]); });
    CHECK(by_raw == by_log);
}

TEST_CASE("feature invariants on synthetic ledgers") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto s = generate(small_synth(seed));
        const auto ug = build_user_graph(s.records, s.users);
        const auto um = extract_user_features(ug, all_user_features());
        const auto tg = build_transaction_graph(s.records);
        const auto tm = extract_transaction_features(
            tg, s.records,
            FeatureSchema(GraphKind::transaction, {Feature::in_degree, Feature::out_degree, Feature::clustering_coefficient,
                                                   Feature::active_duration, Feature::total_amount}));
        CHECK(um.values.allFinite());
        CHECK(tm.values.allFinite());
        for (const auto* m : {&um, &tm}) {
            for (Eigen::Index r = 0; r < m->rows(); ++r) {
                for (Eigen::Index c = 0; c < 2; ++c) {
                    CHECK(m->values(r, c) >= 0);
                    CHECK(m->values(r, c) == std::floor(m->values(r, c)));
                }
            }
        }
        CHECK(um.values.col(4).minCoeff() >= 0.0);
        CHECK(um.values.col(4).maxCoeff() <= 1.0);
        CHECK(um.values.col(11).minCoeff() >= 0.0);
        CHECK(tm.values.col(2).minCoeff() >= 0.0);
        CHECK(tm.values.col(2).maxCoeff() <= 1.0);
        CHECK(tm.values.col(3).minCoeff() >= 0.0);

        // Fee-free ledgers conserve value: balances add up to the minted coins.
        Satoshi minted = 0;
        for (const auto& r : s.records)
            if (r.is_coinbase()) minted += r.total_output();
        Satoshi balances = 0;
        for (std::size_t v = 0; v < ug.nodes.size(); ++v) balances += ug.received[v] - ug.sent[v];
        CHECK(balances == minted);
        CHECK(um.values.col(9).sum() == doctest::Approx(to_btc(minted)).epsilon(1e-9));

        for (const auto* m : {&um, &tm}) {
            const auto z = normalize(*m);
            for (Eigen::Index c = 0; c < z.cols(); ++c) {
                const auto col = z.values.col(c);
                const double mean = col.mean();
                const double sd = std::sqrt((col.array() - mean).square().mean());
                if (m->values.col(c).maxCoeff() == m->values.col(c).minCoeff()) {
                    CHECK(col.isZero());
                } else {
                    CHECK(std::abs(mean) < 1e-9);
                    CHECK(std::abs(sd - 1.0) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("feature csv") {
    FeatureMatrix m{{"x"}, Eigen::MatrixXd(1, 2), FeatureSchema(GraphKind::transaction, {Feature::in_degree, Feature::total_amount}), false};
    m.values << 1, 0.1;
    std::ostringstream out;
    write_feature_csv(out, m);
    CHECK(out.str() == "entity_id,in_degree,total_amount\nx,1,0.10000000000000001\n");
}
