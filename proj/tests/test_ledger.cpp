#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "ledgerad/ledger.hpp"

using namespace ledgerad;

TEST_CASE("empty stream parses to no records") {
    CHECK(parse_ledger_string("").empty());
    CHECK(parse_ledger_string("# only a comment\n\n").empty());
}

TEST_CASE("single line with one input and two outputs") {
    const auto records = parse_ledger_string("t1,1300000000,aA:5.00000000,aB:3.00000000|aC:2.00000000\n");
    REQUIRE(records.size() == 1);
    const auto& r = records[0];
    CHECK(r.tx_id == "t1");
    CHECK(r.timestamp == 1300000000);
    REQUIRE(r.inputs.size() == 1);
    CHECK(r.inputs[0] == TxEndpoint{"aA", 5 * kSatoshiPerBtc});
    REQUIRE(r.outputs.size() == 2);
    CHECK(r.outputs[0] == TxEndpoint{"aB", 3 * kSatoshiPerBtc});
    CHECK(r.outputs[1] == TxEndpoint{"aC", 2 * kSatoshiPerBtc});
    CHECK(r.total_input() == r.total_output());
}

TEST_CASE("coinbase lines have an empty input field") {
    const auto records = parse_ledger_string("cb,10,,aA:50.00000000\n");
    REQUIRE(records.size() == 1);
    CHECK(records[0].is_coinbase());
}

TEST_CASE("malformed lines carry their line number") {
    try {
        parse_ledger_string("t1,xx,aA:1.00000000,aB:1.00000000\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }
    try {
        parse_ledger_string("# header\nt1,5,,aB:1.00000000\nt2,6,aB:1.0,aC:1.00000000\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_ledger_string("t1,5,,aB:-1.00000000\n"), ParseError);
    CHECK_THROWS_AS(parse_ledger_string("t1,-5,,aB:1.00000000\n"), ParseError);
    CHECK_THROWS_AS(parse_ledger_string("t1,5,,aB:1.00000000,extra\n"), ParseError);
    CHECK_THROWS_AS(parse_ledger_string("t1,5,,aB\n"), ParseError);
}

TEST_CASE("duplicate tx ids are rejected") {
    try {
        parse_ledger_string("t1,5,,aB:1.00000000\nt1,6,,aC:1.00000000\n");
        FAIL("expected a duplicate error");
    } catch (const DuplicateIdError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("amounts are exact satoshi") {
    CHECK(parse_amount("0.00000001") == 1);
    CHECK(parse_amount("21000000.00000000") == 21'000'000 * kSatoshiPerBtc);
    CHECK(parse_amount("0.10000000") == 10'000'000);
    CHECK(format_amount(1) == "0.00000001");
    CHECK(format_amount(123'456'789) == "1.23456789");
    CHECK_THROWS(parse_amount("1.5"));
    CHECK_THROWS(parse_amount("1"));
    CHECK_THROWS(parse_amount(".00000001"));
    CHECK_THROWS(parse_amount("1e3.00000000"));
}

TEST_CASE("write then parse reproduces the records bit for bit") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<Satoshi> amount(0, 3 * kSatoshiPerBtc * 1000);
    std::uniform_int_distribution<int> count(0, 4);
    for (int trial = 0; trial < 20; ++trial) {
        Ledger records;
        for (int t = 0; t < 50; ++t) {
            TransactionRecord r;
            r.tx_id = "tx" + std::to_string(trial) + "_" + std::to_string(t);
            r.timestamp = 1'000'000 + t;
            for (int i = count(rng); i > 0; --i) r.inputs.push_back({"a" + std::to_string(count(rng)), amount(rng)});
            for (int i = count(rng) + 1; i > 0; --i) r.outputs.push_back({"b" + std::to_string(count(rng)), amount(rng)});
            records.push_back(std::move(r));
        }
        std::ostringstream out;
        write_ledger(out, records);
        CHECK(parse_ledger_string(out.str()) == records);
    }
}

TEST_CASE("user map completion assigns fresh ids in first-appearance order") {
    const auto records = parse_ledger_string("t1,1,aA:1.00000000,aB:1.00000000\n");
    SUBCASE("empty map file") {
        std::istringstream in("");
        const auto map = load_user_map(in, records);
        CHECK(map.at("aA") == 0);
        CHECK(map.at("aB") == 1);
    }
    SUBCASE("fresh ids exceed the listed maximum") {
        std::istringstream in("aA,7\n");
        const auto map = load_user_map(in, records);
        CHECK(map.at("aA") == 7);
        CHECK(map.at("aB") == 8);
    }
    SUBCASE("conflicting lines") {
        std::istringstream in("aA,1\naA,2\n");
        CHECK_THROWS_AS(load_user_map(in, records), UserMapConflictError);
    }
    SUBCASE("repeated identical lines are fine") {
        std::istringstream in("aA,1\naA,1\n");
        CHECK(load_user_map(in, records).at("aA") == 1);
    }
}

TEST_CASE("user map round trip") {
    const auto records = parse_ledger_string("t1,1,aA:1.00000000,aB:1.00000000|aC:0.00000000\n");
    std::istringstream in("aC,3\n");
    const auto map = load_user_map(in, records);
    std::ostringstream out;
    write_user_map(out, map);
    std::istringstream again(out.str());
    const auto reloaded = load_user_map(again, records);
    CHECK(reloaded.entries() == map.entries());
}

TEST_CASE("validation reports invariant violations without failing") {
    auto records = parse_ledger_string("t1,1,,aA:1.00000000\nt2,2,aA:1.00000000,aB:1.00000000\n");
    auto report = validate_ledger(records);
    CHECK(report.record_count == 2);
    CHECK(report.error_count == 0);

    SUBCASE("empty outputs") {
        records.push_back({"t3", 3, {{"aB", 1}}, {}});
        report = validate_ledger(records);
        CHECK(report.error_count == 1);
        REQUIRE(report.errors.size() == 1);
        CHECK(report.errors[0].line == 3);
        CHECK(report.errors[0].reason == "no outputs");
    }
    SUBCASE("negative amounts cannot come from the parser") {
        CHECK_THROWS(parse_ledger_string("t1,1,,aA:-1.00000000\n"));
        records[0].outputs[0].amount = -1;
        CHECK(validate_ledger(records).error_count == 1);
    }
    SUBCASE("duplicate ids built in memory") {
        records[1].tx_id = "t1";
        report = validate_ledger(records);
        CHECK(report.error_count == 1);
        CHECK(report.errors[0].reason == "duplicate tx_id");
    }
}
