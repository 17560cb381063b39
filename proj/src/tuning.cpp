#include "ledgerad/tuning.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace ledgerad {

NuSweep tune_nu(const RankByNu& user_rank, const RankByNu& tx_rank, std::span<const double> candidates,
                const OwnershipIndex& ownership, std::size_t N, std::size_t M) {
    if (candidates.empty()) throw std::invalid_argument("nu sweep needs at least one candidate");
    NuSweep sweep;
    double best = -1.0;
    for (const double nu : candidates) {
        const auto users = user_rank(nu);
        const auto txs = tx_rank(nu);
        auto result = dual_evaluation(users, txs, ownership, std::min(N, users.size()), std::min(M, txs.size()));
        if (result.m_DE > best) {
            best = result.m_DE;
            sweep.best_nu = nu;
        }
        sweep.curve.push_back({nu, std::move(result)});
    }
    return sweep;
}

void write_nu_sweep_csv(std::ostream& out, const NuSweep& sweep) {
    out << "nu,A1,A2\n";
    char buf[96];
    for (const auto& point : sweep.curve) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", point.nu, point.eval.A1, point.eval.A2);
        out << buf;
    }
}

}  // namespace ledgerad
