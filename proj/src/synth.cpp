#include "ledgerad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ledgerad {

namespace {

enum class Slot { background, funnel, burst_funding, burst, dormant_funding, dormant_spend };

struct Planned {
    Slot kind = Slot::background;
    std::size_t actor = 0;  // index into the actor block
};

class Generator {
public:
    explicit Generator(const SynthConfig& config) : cfg_(config), rng_(config.seed) {}

    SynthLedger run() {
        setup_users();
        const auto schedule = plan();
        std::int64_t now = cfg_.start_time;
        std::exponential_distribution<double> gap(1.0 / cfg_.mean_inter_arrival);
        for (std::size_t slot = 0; slot < schedule.size(); ++slot) {
            now += 1 + static_cast<std::int64_t>(gap(rng_));
            TransactionRecord rec;
            rec.tx_id = tx_name(slot);
            rec.timestamp = now;
            emit(schedule[slot], rec, slot);
            out_.records.push_back(std::move(rec));
        }
        return std::move(out_);
    }

private:
    struct Address {
        std::size_t owner;
        Satoshi balance = 0;
        std::vector<std::size_t> funders;
        std::size_t pool_pos = npos;
    };

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    static std::string tx_name(std::size_t i) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "tx%07zu", i);
        return buf;
    }

    std::size_t uniform(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    Satoshi payment() {
        std::lognormal_distribution<double> dist(cfg_.amount_log_mean, cfg_.amount_log_sigma);
        return std::max<Satoshi>(1, std::llround(dist(rng_) * static_cast<double>(kSatoshiPerBtc)));
    }

    std::size_t background_users() const { return cfg_.user_count - cfg_.actor_count(); }
    std::size_t actor_user(std::size_t actor) const { return background_users() + actor; }
    std::size_t thief(std::size_t i) const { return actor_user(i); }
    std::size_t burster(std::size_t i) const { return actor_user(cfg_.funnel_count + i); }
    std::size_t dormant(std::size_t i) const { return actor_user(cfg_.funnel_count + cfg_.burst_count + i); }

    void setup_users() {
        user_addresses_.resize(cfg_.user_count);
        for (std::size_t u = 0; u < cfg_.user_count; ++u) {
            const bool actor = u >= background_users();
            const std::size_t count = actor ? 1 : 1 + uniform(cfg_.max_addresses_per_user);
            for (std::size_t k = 0; k < count; ++k) {
                user_addresses_[u].push_back(addresses_.size());
                addresses_.push_back({u, 0, {}, npos});
                names_.push_back("u" + std::to_string(u) + "a" + std::to_string(k));
                out_.users.assign(names_.back(), u);
            }
        }
    }

    std::size_t free_slot(std::vector<Planned>& schedule, double lo, double hi) {
        const auto n = schedule.size();
        const auto first = static_cast<std::size_t>(lo * static_cast<double>(n));
        const auto last = std::max(first + 1, static_cast<std::size_t>(hi * static_cast<double>(n)));
        for (int attempt = 0; attempt < 10'000; ++attempt) {
            const auto s = first + uniform(last - first);
            if (schedule[s].kind == Slot::background) return s;
        }
        for (std::size_t s = 0; s < n; ++s)
            if (schedule[s].kind == Slot::background) return s;
        throw std::invalid_argument("synth: no free transaction slot");
    }

    std::vector<Planned> plan() {
        std::vector<Planned> schedule(cfg_.tx_count);
        for (std::size_t i = 0; i < cfg_.funnel_count; ++i)
            schedule[free_slot(schedule, 0.3, 0.95)] = {Slot::funnel, i};
        for (std::size_t i = 0; i < cfg_.burst_count; ++i) {
            const auto s = free_slot(schedule, 0.2, 0.6);
            schedule[s] = {Slot::burst, i};
            // funding must precede the burst
            std::size_t f = s;
            while (f > 0 && schedule[f].kind != Slot::background) --f;
            if (schedule[f].kind != Slot::background) throw std::invalid_argument("synth: no slot to fund a burst");
            schedule[f] = {Slot::burst_funding, i};
        }
        for (std::size_t i = 0; i < cfg_.dormant_count; ++i) {
            schedule[free_slot(schedule, 0.0, 0.05)] = {Slot::dormant_funding, i};
            for (std::size_t k = 0; k < cfg_.dormant_burst; ++k)
                schedule[free_slot(schedule, 0.92, 1.0)] = {Slot::dormant_spend, i};
        }
        return schedule;
    }

    void receive(TransactionRecord& rec, std::size_t addr, Satoshi amount, std::size_t slot) {
        rec.outputs.push_back({names_[addr], amount});
        auto& a = addresses_[addr];
        a.balance += amount;
        if (a.funders.empty() || a.funders.back() != slot) a.funders.push_back(slot);
        if (a.pool_pos == npos && a.owner < background_users()) {
            a.pool_pos = pool_.size();
            pool_.push_back(addr);
        }
    }

    Satoshi spend(TransactionRecord& rec, std::size_t addr) {
        auto& a = addresses_[addr];
        const Satoshi amount = a.balance;
        rec.inputs.push_back({names_[addr], amount});
        a.balance = 0;
        a.funders.clear();
        if (a.pool_pos != npos) {
            const auto moved = pool_.back();
            pool_[a.pool_pos] = moved;
            addresses_[moved].pool_pos = a.pool_pos;
            pool_.pop_back();
            a.pool_pos = npos;
        }
        return amount;
    }

    std::size_t random_address(std::size_t user) { return user_addresses_[user][uniform(user_addresses_[user].size())]; }

    std::size_t random_background_user_except(std::size_t user) {
        const auto bg = background_users();
        std::size_t r = uniform(bg - 1);
        if (user < bg && r >= user) ++r;
        return r;
    }

    void coinbase(TransactionRecord& rec, std::size_t slot) {
        receive(rec, random_address(uniform(background_users())), cfg_.coinbase_reward, slot);
    }

    // Spend `addr` in full: pay a background user, change back to the owner.
    void pay_from(TransactionRecord& rec, std::size_t addr, std::size_t slot) {
        const auto owner = addresses_[addr].owner;
        const Satoshi total = spend(rec, addr);
        const Satoshi paid = std::min(total, payment());
        receive(rec, random_address(random_background_user_except(owner)), paid, slot);
        if (total > paid) receive(rec, random_address(owner), total - paid, slot);
    }

    void emit(const Planned& plan, TransactionRecord& rec, std::size_t slot) {
        switch (plan.kind) {
            case Slot::background:
                if (pool_.empty() || std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.coinbase_fraction)
                    coinbase(rec, slot);
                else
                    pay_from(rec, pool_[uniform(pool_.size())], slot);
                return;
            case Slot::funnel: return funnel(plan.actor, rec, slot);
            case Slot::burst_funding: {
                burst_plan_[plan.actor] = burst_payments();
                Satoshi total = 0;
                for (const auto& [user, amount] : burst_plan_[plan.actor]) total += amount;
                receive(rec, user_addresses_[burster(plan.actor)].front(), total, slot);
                return;
            }
            case Slot::burst: {
                spend(rec, user_addresses_[burster(plan.actor)].front());
                for (const auto& [user, amount] : burst_plan_[plan.actor]) receive(rec, random_address(user), amount, slot);
                out_.truth.entries.push_back({GraphKind::transaction, rec.tx_id, "burst_dispersal"});
                out_.truth.entries.push_back({GraphKind::user, std::to_string(burster(plan.actor)), "burst_sender"});
                return;
            }
            case Slot::dormant_funding:
                receive(rec, user_addresses_[dormant(plan.actor)].front(), cfg_.coinbase_reward, slot);
                return;
            case Slot::dormant_spend: {
                const auto addr = user_addresses_[dormant(plan.actor)].front();
                if (addresses_[addr].balance == 0) {
                    emit({Slot::background, 0}, rec, slot);
                    return;
                }
                pay_from(rec, addr, slot);
                if (!dormant_reported_.count(plan.actor)) {
                    dormant_reported_.insert(plan.actor);
                    out_.truth.entries.push_back({GraphKind::user, std::to_string(dormant(plan.actor)), "dormant_reactivated"});
                }
                return;
            }
        }
    }

    std::vector<std::pair<std::size_t, Satoshi>> burst_payments() {
        std::vector<std::size_t> users(background_users());
        std::iota(users.begin(), users.end(), std::size_t{0});
        std::shuffle(users.begin(), users.end(), rng_);
        std::vector<std::pair<std::size_t, Satoshi>> payments;
        for (std::size_t k = 0; k < cfg_.burst_fan_out; ++k) payments.emplace_back(users[k % users.size()], payment());
        return payments;
    }

    void funnel(std::size_t actor, TransactionRecord& rec, std::size_t slot) {
        std::unordered_set<std::size_t> funders;
        Satoshi total = 0;
        while (funders.size() < cfg_.funnel_fan_in && !pool_.empty()) {
            const auto addr = pool_[uniform(pool_.size())];
            for (const auto f : addresses_[addr].funders) funders.insert(f);
            total += spend(rec, addr);
        }
        if (rec.inputs.empty()) {
            coinbase(rec, slot);
            return;
        }
        receive(rec, user_addresses_[thief(actor)].front(), total, slot);
        out_.truth.entries.push_back({GraphKind::transaction, rec.tx_id, "funnel_theft"});
        out_.truth.entries.push_back({GraphKind::user, std::to_string(thief(actor)), "funnel_thief"});
    }

    const SynthConfig& cfg_;
    std::mt19937_64 rng_;
    SynthLedger out_;
    std::vector<Address> addresses_;
    std::vector<std::string> names_;
    std::vector<std::vector<std::size_t>> user_addresses_;
    std::vector<std::size_t> pool_;  // funded background addresses
    std::unordered_map<std::size_t, std::vector<std::pair<std::size_t, Satoshi>>> burst_plan_;
    std::unordered_set<std::size_t> dormant_reported_;
};

}  // namespace

std::size_t SynthConfig::anomaly_tx_count() const {
    return funnel_count + 2 * burst_count + dormant_count * (1 + dormant_burst);
}

SynthLedger generate(const SynthConfig& config) {
    if (config.user_count == 0 || config.tx_count == 0) throw std::invalid_argument("synth: counts must be positive");
    if (config.anomaly_tx_count() >= config.tx_count)
        throw std::invalid_argument("synth: planted anomalies need more transactions than tx_count");
    if (config.actor_count() + 2 > config.user_count)
        throw std::invalid_argument("synth: user_count must exceed the planted actors by at least 2");
    if (config.max_addresses_per_user == 0) throw std::invalid_argument("synth: max_addresses_per_user must be positive");
    if (!(config.mean_inter_arrival > 0.0)) throw std::invalid_argument("synth: mean_inter_arrival must be positive");
    return Generator(config).run();
}

}  // namespace ledgerad
