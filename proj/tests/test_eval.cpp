#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ledgerad/eval.hpp"
#include "ledgerad/tuning.hpp"

using namespace ledgerad;

namespace {

AnomalyRanking ranking_of(const std::vector<std::string>& ids) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < ids.size(); ++i) scores.push_back(static_cast<double>(ids.size() - i));
    return make_ranking(ids, scores);
}

// users u0..u9, transactions t0..t9; user ui appears in ti only.
OwnershipIndex diagonal_ownership() {
    OwnershipIndex own;
    for (int i = 0; i < 10; ++i) own.add("u" + std::to_string(i), "t" + std::to_string(i));
    return own;
}

std::vector<std::string> names(const char* prefix, std::initializer_list<int> idx) {
    std::vector<std::string> out;
    for (const int i : idx) out.push_back(prefix + std::to_string(i));
    return out;
}

}  // namespace

TEST_CASE("ownership of a single payment") {
    const auto records = parse_ledger_string("t1,1,a1:1.00000000,a2:1.00000000\n");
    UserMap users;
    users.assign("a1", 1);
    users.assign("a2", 2);
    const auto own = build_ownership(records, users);
    CHECK(own.transactions_of("1") == std::vector<std::string>{"t1"});
    CHECK(own.transactions_of("2") == std::vector<std::string>{"t1"});
    CHECK(own.users_of("t1") == std::vector<std::string>{"1", "2"});
    CHECK(own.transactions_of("9").empty());
}

TEST_CASE("ownership on the diamond ledger by hand") {
    const auto records = parse_ledger_string(
        "t1,1,,aB:2.00000000|aC:3.00000000\n"
        "t2,2,aB:2.00000000,aD:2.00000000\n"
        "t3,3,aC:3.00000000,aE:3.00000000\n"
        "t4,4,aD:2.00000000|aE:3.00000000,aF:5.00000000\n");
    UserMap users;
    for (const auto& [a, u] : std::vector<std::pair<std::string, UserId>>{{"aB", 0}, {"aC", 0}, {"aD", 1}, {"aE", 2}, {"aF", 1}})
        users.assign(a, u);
    const auto own = build_ownership(records, users);
    CHECK(own.transactions_of("0") == std::vector<std::string>{"t1", "t2", "t3"});
    CHECK(own.transactions_of("1") == std::vector<std::string>{"t2", "t4"});
    CHECK(own.transactions_of("2") == std::vector<std::string>{"t3", "t4"});
    CHECK(own.users_of("t4") == std::vector<std::string>{"1", "2"});
}

TEST_CASE("ownership maps are inverses") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> pick(0, 30);
    std::string text;
    for (int t = 0; t < 200; ++t)
        text += "t" + std::to_string(t) + "," + std::to_string(t) + ",a" + std::to_string(pick(rng)) + ":1.00000000,a" +
                std::to_string(pick(rng)) + ":0.50000000|a" + std::to_string(pick(rng)) + ":0.50000000\n";
    const auto records = parse_ledger_string(text);
    UserMap users;
    complete_user_map(users, records);
    const auto own = build_ownership(records, users);
    std::set<std::pair<std::string, std::string>> forward;
    std::set<std::pair<std::string, std::string>> backward;
    for (const auto& [u, txs] : own.user_to_tx())
        for (const auto& t : txs) forward.emplace(u, t);
    for (const auto& [t, us] : own.tx_to_users())
        for (const auto& u : us) backward.emplace(u, t);
    CHECK(forward == backward);
    CHECK(forward.size() == std::accumulate(own.user_to_tx().begin(), own.user_to_tx().end(), std::size_t{0},
                                            [](std::size_t n, const auto& kv) { return n + kv.second.size(); }));
}

TEST_CASE("dual-evaluation arithmetic on reference values") {
    // Reference values: 0.02495 and 0.026316 give 0.025633; 0.1782 and 0.1101 give 0.14415.
    CHECK(std::abs(dual_evaluation_metric(0.02495, 0.026316) - 0.025633) < 5e-7);
    CHECK(std::abs(dual_evaluation_metric(0.1782, 0.1101) - 0.14415) < 5e-6);
}

TEST_CASE("perfectly consistent rankings score 1") {
    const auto users = ranking_of(names("u", {3, 1, 4, 0, 2, 5, 6, 7, 8, 9}));
    const auto txs = ranking_of(names("t", {1, 4, 3, 2, 0, 9, 8, 7, 6, 5}));
    const auto r = dual_evaluation(users, txs, diagonal_ownership(), 5, 5);
    CHECK(r.A1 == 1.0);
    CHECK(r.A2 == 1.0);
    CHECK(r.m_DE == 1.0);
    CHECK(r.x_n_size == 5);
    CHECK(r.y_m_size == 5);
}

TEST_CASE("disjoint rankings score 0") {
    const auto users = ranking_of(names("u", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
    const auto txs = ranking_of(names("t", {5, 6, 7, 8, 9, 0, 1, 2, 3, 4}));
    const auto r = dual_evaluation(users, txs, diagonal_ownership(), 5, 5);
    CHECK(r.m_DE == 0.0);
}

TEST_CASE("partial overlap by hand") {
    // Top 4 users own t0..t3; the top 4 transactions are t0, t1, t7, t8.
    const auto users = ranking_of(names("u", {0, 1, 2, 3, 9, 8, 7, 6, 5, 4}));
    const auto txs = ranking_of(names("t", {0, 1, 7, 8, 2, 3, 4, 5, 6, 9}));
    const auto r = dual_evaluation(users, txs, diagonal_ownership(), 4, 2);
    CHECK(r.A1 == 0.5);
    // Top 2 transactions belong to u0 and u1, both in the top 2 users.
    CHECK(r.A2 == 1.0);
    CHECK(r.m_DE == 0.75);
}

TEST_CASE("empty X_N is reported, not fatal") {
    OwnershipIndex own;
    own.add("u1", "t1");
    const auto users = ranking_of({"u0", "u1"});
    const auto txs = ranking_of({"t1", "t0"});
    const auto r = dual_evaluation(users, txs, own, 1, 1);
    CHECK(r.A1 == 0.0);
    CHECK(r.x_n_size == 0);
    CHECK(r.warnings.size() == 1);
    CHECK(r.A2 == 0.0);  // Y_M = {u1}, top-1 user is u0
    CHECK_THROWS(dual_evaluation(users, txs, own, 3, 1));
    CHECK_THROWS(dual_evaluation(users, txs, own, 1, 3));
}

TEST_CASE("relabeling entity ids does not change the metric") {
    std::mt19937_64 rng(9);
    OwnershipIndex own;
    OwnershipIndex renamed;
    std::uniform_int_distribution<int> user(0, 19);
    std::vector<std::string> u_ids;
    std::vector<std::string> t_ids;
    for (int i = 0; i < 20; ++i) u_ids.push_back("u" + std::to_string(i));
    for (int t = 0; t < 60; ++t) {
        t_ids.push_back("t" + std::to_string(t));
        for (int k = 0; k < 3; ++k) {
            const int u = user(rng);
            own.add("u" + std::to_string(u), "t" + std::to_string(t));
            renamed.add("user-" + std::to_string(97 * u % 101), "tx-" + std::to_string(53 * t % 61));
        }
    }
    std::shuffle(u_ids.begin(), u_ids.end(), rng);
    std::shuffle(t_ids.begin(), t_ids.end(), rng);
    auto rename_users = u_ids;
    auto rename_txs = t_ids;
    for (auto& s : rename_users) s = "user-" + std::to_string(97 * std::stoi(s.substr(1)) % 101);
    for (auto& s : rename_txs) s = "tx-" + std::to_string(53 * std::stoi(s.substr(1)) % 61);
    const auto a = dual_evaluation(ranking_of(u_ids), ranking_of(t_ids), own, 5, 10);
    const auto b = dual_evaluation(ranking_of(rename_users), ranking_of(rename_txs), renamed, 5, 10);
    CHECK(a.A1 == b.A1);
    CHECK(a.A2 == b.A2);
    CHECK(a.x_n_size == b.x_n_size);
    CHECK(a.A1 >= 0.0);
    CHECK(a.A1 <= 1.0);
    CHECK(a.A2 >= 0.0);
    CHECK(a.A2 <= 1.0);
}

TEST_CASE("centroid distance ratios") {
    Eigen::MatrixXd X(4, 1);
    X << -1, 1, 10, 10;
    KMeansModel<double> model;
    model.k = 2;
    model.centroids.resize(2, 1);
    model.centroids << 0, 10;
    model.assignments = {0, 0, 1, 1};
    const std::vector<std::string> ids{"a", "b", "c", "d"};

    // The farthest point of its cluster has ratio 1.
    CHECK(centroid_distance_ratios(model, X, make_ranking(ids, {1, 0, 0, 0}), 1) == 1.0);
    // Points sitting on their centroid contribute 0.
    CHECK(centroid_distance_ratios(model, X, make_ranking(ids, {0, 0, 2, 1}), 2) == 0.0);
    CHECK(centroid_distance_ratios(model, X, make_ranking(ids, {0, 1, 2, 0}), 2) == 0.5);
    CHECK_THROWS(centroid_distance_ratios(model, X, make_ranking(ids, {0, 0, 0, 0}), 0));
    CHECK_THROWS(centroid_distance_ratios(model, X, make_ranking(ids, {0, 0, 0, 0}), 5));
}

TEST_CASE("ground truth hits") {
    const auto ranking = ranking_of({"t5", "t1", "t9", "t3", "t0"});
    const std::vector<TruthEntry> truth{{GraphKind::transaction, "t9", "theft"}, {GraphKind::transaction, "t0", "theft"}};
    const auto top3 = ground_truth_hits(ranking, truth, 3);
    CHECK(top3.hit_count == 1);
    REQUIRE(top3.hits.size() == 1);
    CHECK(top3.hits[0].id == "t9");
    CHECK(top3.hits[0].rank == 3);
    CHECK(top3.hits[0].label == "theft");
    CHECK(ground_truth_hits(ranking, truth, 5).hit_count == truth.size());
    CHECK(ground_truth_hits(ranking, {}, 5).hit_count == 0);
    CHECK_THROWS(ground_truth_hits(ranking, truth, 6));
}

TEST_CASE("ground truth file round trip") {
    std::istringstream in("# kind,id,label\nuser,42,thief\ntx,t7,funnel_theft\ntransaction,t8,\n");
    const auto truth = read_ground_truth(in);
    REQUIRE(truth.entries.size() == 3);
    CHECK(truth.of_kind(GraphKind::user).size() == 1);
    CHECK(truth.of_kind(GraphKind::transaction).size() == 2);
    std::ostringstream out;
    write_ground_truth(out, truth);
    CHECK(out.str() == "user,42,thief\ntx,t7,funnel_theft\ntx,t8,\n");
    std::istringstream bad("wallet,1,x\n");
    CHECK_THROWS_AS(read_ground_truth(bad), ParseError);
}

TEST_CASE("ranking csv round trip") {
    auto ranking = make_ranking({"a", "b", "c"}, {0.5, 2.0, 0.5});
    ranking.flagged_count = 1;
    CHECK(ranking.entries[0].entity_id == "b");
    CHECK(ranking.entries[1].entity_id == "a");  // ties keep row order
    std::stringstream io;
    write_ranking_csv(io, ranking);
    const auto back = read_ranking_csv(io);
    CHECK(back.flagged_count == 1);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.entries[i].entity_id == ranking.entries[i].entity_id);
        CHECK(back.entries[i].score == ranking.entries[i].score);
    }
}

TEST_CASE("nu sweep picks the best candidate by exhaustive evaluation") {
    const auto own = diagonal_ownership();
    // At ν the user ranking agrees with the transaction ranking in the top
    // slots to a degree that peaks at ν = 0.05.
    const auto users_at = [](double nu) {
        if (nu == 0.05) return ranking_of(names("u", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
        if (nu == 0.01) return ranking_of(names("u", {0, 1, 2, 9, 8, 5, 6, 7, 3, 4}));
        return ranking_of(names("u", {9, 8, 7, 6, 5, 4, 3, 2, 1, 0}));
    };
    const auto txs_at = [](double) { return ranking_of(names("t", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9})); };
    const std::vector<double> candidates{0.005, 0.01, 0.05, 0.1, 0.5};
    const auto sweep = tune_nu(users_at, txs_at, candidates, own, 4, 4);
    double best = -1.0;
    double best_nu = 0.0;
    for (const double nu : candidates) {
        const double m = dual_evaluation(users_at(nu), txs_at(nu), own, 4, 4).m_DE;
        if (m > best) {
            best = m;
            best_nu = nu;
        }
    }
    CHECK(sweep.best_nu == best_nu);
    CHECK(sweep.best_nu == 0.05);
    REQUIRE(sweep.curve.size() == candidates.size());
    std::ostringstream csv;
    write_nu_sweep_csv(csv, sweep);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    CHECK(text.rfind("nu,A1,A2\n", 0) == 0);

    const std::vector<double> single{0.3};
    CHECK(tune_nu(users_at, txs_at, single, own, 4, 4).best_nu == 0.3);
    // Ties go to the earliest candidate.
    const std::vector<double> tied{0.5, 0.1};
    CHECK(tune_nu(users_at, txs_at, tied, own, 4, 4).best_nu == 0.5);
}
