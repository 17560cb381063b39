#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ledgerad {

/// Integer satoshi; 1 BTC = 10^8 satoshi.
using Satoshi = std::int64_t;
using UserId = std::uint64_t;

inline constexpr Satoshi kSatoshiPerBtc = 100'000'000;

inline double to_btc(Satoshi amount) { return static_cast<double>(amount) / static_cast<double>(kSatoshiPerBtc); }

struct TxEndpoint {
    std::string address;
    Satoshi amount = 0;

    friend bool operator==(const TxEndpoint&, const TxEndpoint&) = default;
};

/// One ledger entry. Coinbase transactions have no inputs.
struct TransactionRecord {
    std::string tx_id;
    std::int64_t timestamp = 0;
    std::vector<TxEndpoint> inputs;
    std::vector<TxEndpoint> outputs;

    bool is_coinbase() const { return inputs.empty(); }
    Satoshi total_input() const;
    Satoshi total_output() const;

    friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

using Ledger = std::vector<TransactionRecord>;

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& reason);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DuplicateIdError : public ParseError {
public:
    DuplicateIdError(std::size_t line, const std::string& tx_id);
};

class UserMapConflictError : public ParseError {
public:
    UserMapConflictError(std::size_t line, const std::string& address);
};

/// Address -> user id. Total over a ledger once built by load_user_map.
class UserMap {
public:
    void assign(const std::string& address, UserId user);
    bool contains(const std::string& address) const { return ids_.count(address) != 0; }
    UserId at(const std::string& address) const;
    std::size_t size() const { return ids_.size(); }
    const std::unordered_map<std::string, UserId>& entries() const { return ids_; }

private:
    std::unordered_map<std::string, UserId> ids_;
};

struct ValidationIssue {
    std::size_t line;  // 1-based record position
    std::string reason;
};

struct ValidationReport {
    std::size_t record_count = 0;
    std::size_t error_count = 0;
    std::vector<ValidationIssue> errors;
};

/// Parses `tx_id,timestamp,in:amt|...,out:amt|...`. Blank lines and lines
/// starting with '#' are skipped.
Ledger parse_ledger(std::istream& in);
Ledger parse_ledger_string(const std::string& text);

/// Exact decimal with 8 fractional digits.
Satoshi parse_amount(const std::string& text);
std::string format_amount(Satoshi amount);

void write_ledger(std::ostream& out, const Ledger& records);

/// Reads `address,user_id` lines and completes the map over every ledger
/// address: unlisted addresses get fresh ids above the listed maximum, in
/// first-appearance order.
UserMap load_user_map(std::istream& in, const Ledger& records);
void complete_user_map(UserMap& map, const Ledger& records);
void write_user_map(std::ostream& out, const UserMap& map);

ValidationReport validate_ledger(const Ledger& records);

}  // namespace ledgerad
