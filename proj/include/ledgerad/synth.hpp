#pragma once

#include <cstdint>

#include "ledgerad/eval.hpp"
#include "ledgerad/ledger.hpp"

namespace ledgerad {

/// Background users trade log-normal amounts, always spending an address's
/// whole balance with change returned to one of their own addresses, and
/// occasionally mint coinbase rewards. Planted motifs:
///  - funnel theft: one transaction sweeps the balances of many funded
///    addresses (at least funnel_fan_in distinct funding transactions) into
///    a single fresh thief address;
///  - burst sender: a freshly funded actor disperses to burst_fan_out
///    distinct users in one transaction;
///  - dormant user: funded near the start, silent, then a rapid run of
///    dormant_burst spends near the end.
/// Generation is fee-free and timestamps are strictly increasing.
struct SynthConfig {
    std::size_t user_count = 500;  // includes the planted actors
    std::size_t tx_count = 10'000;
    std::uint64_t seed = 1;
    std::size_t funnel_count = 25;
    std::size_t funnel_fan_in = 60;
    std::size_t burst_count = 25;
    std::size_t burst_fan_out = 60;
    std::size_t dormant_count = 5;
    std::size_t dormant_burst = 5;
    std::size_t max_addresses_per_user = 3;
    double amount_log_mean = 0.0;  // of the payment size in BTC
    double amount_log_sigma = 1.0;
    double mean_inter_arrival = 600.0;  // seconds
    double coinbase_fraction = 0.05;
    Satoshi coinbase_reward = 50 * kSatoshiPerBtc;
    std::int64_t start_time = 1'300'000'000;

    /// Transactions consumed by the planted motifs.
    std::size_t anomaly_tx_count() const;
    std::size_t actor_count() const { return funnel_count + burst_count + dormant_count; }
};

struct SynthLedger {
    Ledger records;
    UserMap users;
    GroundTruth truth;
};

SynthLedger generate(const SynthConfig& config);

}  // namespace ledgerad
