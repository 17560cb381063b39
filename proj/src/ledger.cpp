#include "ledgerad/ledger.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_set>

namespace ledgerad {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename Int>
bool parse_int(std::string_view text, Int& value) {
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc{} && ptr == end;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool skippable(std::string_view line) {
    return line.empty() || line.front() == '#';
}

// Throws std::invalid_argument with a reason; callers attach the line number.
std::vector<TxEndpoint> parse_endpoints(std::string_view field) {
    std::vector<TxEndpoint> endpoints;
    if (field.empty()) return endpoints;
    for (const auto item : split(field, '|')) {
        const auto colon = item.rfind(':');
        if (colon == std::string_view::npos || colon == 0)
            throw std::invalid_argument("endpoint '" + std::string(item) + "' is not address:amount");
        endpoints.push_back({std::string(item.substr(0, colon)), parse_amount(std::string(item.substr(colon + 1)))});
    }
    return endpoints;
}

void write_endpoints(std::ostream& out, const std::vector<TxEndpoint>& endpoints) {
    for (std::size_t i = 0; i < endpoints.size(); ++i) {
        if (i) out << '|';
        out << endpoints[i].address << ':' << format_amount(endpoints[i].amount);
    }
}

}  // namespace

Satoshi TransactionRecord::total_input() const {
    Satoshi total = 0;
    for (const auto& e : inputs) total += e.amount;
    return total;
}

Satoshi TransactionRecord::total_output() const {
    Satoshi total = 0;
    for (const auto& e : outputs) total += e.amount;
    return total;
}

ParseError::ParseError(std::size_t line, const std::string& reason)
    : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}

DuplicateIdError::DuplicateIdError(std::size_t line, const std::string& tx_id)
    : ParseError(line, "duplicate tx_id '" + tx_id + "'") {}

UserMapConflictError::UserMapConflictError(std::size_t line, const std::string& address)
    : ParseError(line, "conflicting user id for address '" + address + "'") {}

void UserMap::assign(const std::string& address, UserId user) { ids_[address] = user; }

UserId UserMap::at(const std::string& address) const {
    const auto it = ids_.find(address);
    if (it == ids_.end()) throw std::out_of_range("address '" + address + "' missing from user map");
    return it->second;
}

Satoshi parse_amount(const std::string& text) {
    const auto dot = text.find('.');
    if (dot == std::string::npos || dot == 0 || text.size() - dot - 1 != 8)
        throw std::invalid_argument("amount '" + text + "' must have exactly 8 fractional digits");
    const std::string_view whole(text.data(), dot);
    const std::string_view frac(text.data() + dot + 1, 8);
    const auto digits = [](std::string_view s) {
        return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (!digits(whole) || !digits(frac)) throw std::invalid_argument("amount '" + text + "' is not a non-negative decimal");
    Satoshi btc = 0;
    Satoshi sat = 0;
    if (!parse_int(whole, btc) || !parse_int(frac, sat)) throw std::invalid_argument("amount '" + text + "' out of range");
    if (btc > (std::numeric_limits<Satoshi>::max() - sat) / kSatoshiPerBtc)
        throw std::invalid_argument("amount '" + text + "' out of range");
    return btc * kSatoshiPerBtc + sat;
}

std::string format_amount(Satoshi amount) {
    std::string sign;
    if (amount < 0) {
        sign = "-";
        amount = -amount;
    }
    std::string frac = std::to_string(amount % kSatoshiPerBtc);
    frac.insert(0, 8 - frac.size(), '0');
    return sign + std::to_string(amount / kSatoshiPerBtc) + "." + frac;
}

Ledger parse_ledger(std::istream& in) {
    Ledger records;
    std::unordered_set<std::string> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (skippable(line)) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 comma-separated fields, got " + std::to_string(fields.size()));
        TransactionRecord rec;
        rec.tx_id = std::string(fields[0]);
        if (rec.tx_id.empty()) throw ParseError(line_no, "empty tx_id");
        if (!parse_int(fields[1], rec.timestamp) || rec.timestamp < 0)
            throw ParseError(line_no, "timestamp '" + std::string(fields[1]) + "' is not a non-negative integer");
        try {
            rec.inputs = parse_endpoints(fields[2]);
            rec.outputs = parse_endpoints(fields[3]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
        if (!seen.insert(rec.tx_id).second) throw DuplicateIdError(line_no, rec.tx_id);
        records.push_back(std::move(rec));
    }
    return records;
}

Ledger parse_ledger_string(const std::string& text) {
    std::istringstream in(text);
    return parse_ledger(in);
}

void write_ledger(std::ostream& out, const Ledger& records) {
    for (const auto& rec : records) {
        out << rec.tx_id << ',' << rec.timestamp << ',';
        write_endpoints(out, rec.inputs);
        out << ',';
        write_endpoints(out, rec.outputs);
        out << '\n';
    }
}

UserMap load_user_map(std::istream& in, const Ledger& records) {
    UserMap map;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (skippable(line)) continue;
        const auto fields = split(line, ',');
        UserId user = 0;
        if (fields.size() != 2 || fields[0].empty() || !parse_int(fields[1], user))
            throw ParseError(line_no, "expected address,user_id");
        const std::string address(fields[0]);
        if (map.contains(address)) {
            if (map.at(address) != user) throw UserMapConflictError(line_no, address);
            continue;
        }
        map.assign(address, user);
    }
    complete_user_map(map, records);
    return map;
}

void complete_user_map(UserMap& map, const Ledger& records) {
    UserId next = 0;
    for (const auto& [address, user] : map.entries()) next = std::max(next, user + 1);
    const auto visit = [&](const std::vector<TxEndpoint>& endpoints) {
        for (const auto& e : endpoints)
            if (!map.contains(e.address)) map.assign(e.address, next++);
    };
    for (const auto& rec : records) {
        visit(rec.inputs);
        visit(rec.outputs);
    }
}

void write_user_map(std::ostream& out, const UserMap& map) {
    std::vector<std::pair<UserId, std::string>> rows;
    rows.reserve(map.size());
    for (const auto& [address, user] : map.entries()) rows.emplace_back(user, address);
    std::sort(rows.begin(), rows.end());
    for (const auto& [user, address] : rows) out << address << ',' << user << '\n';
}

ValidationReport validate_ledger(const Ledger& records) {
    ValidationReport report;
    report.record_count = records.size();
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        std::string reasons;
        const auto issue = [&](const char* reason) {
            if (!reasons.empty()) reasons += "; ";
            reasons += reason;
        };
        if (rec.tx_id.empty()) issue("empty tx_id");
        else if (!seen.insert(rec.tx_id).second) issue("duplicate tx_id");
        if (rec.timestamp < 0) issue("negative timestamp");
        if (rec.outputs.empty()) issue("no outputs");
        const auto negative = [](const TxEndpoint& e) { return e.amount < 0; };
        if (std::any_of(rec.inputs.begin(), rec.inputs.end(), negative) ||
            std::any_of(rec.outputs.begin(), rec.outputs.end(), negative))
            issue("negative amount");
        // One entry per offending record.
        if (!reasons.empty()) report.errors.push_back({i + 1, std::move(reasons)});
    }
    report.error_count = report.errors.size();
    return report;
}

}  // namespace ledgerad
