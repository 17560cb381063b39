#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ledgerad/eval.hpp"
#include "ledgerad/ranking.hpp"

namespace ledgerad {

struct NuSweepPoint {
    double nu;
    DualEvalResult eval;
};

struct NuSweep {
    double best_nu = 0;
    std::vector<NuSweepPoint> curve;
};

using RankByNu = std::function<AnomalyRanking(double nu)>;

/// Ranks both graphs at every candidate ν and keeps the ν with the largest
/// m_DE = (A1 + A2)/2; the earliest candidate wins ties. N and M are capped at
/// the ranking lengths.
NuSweep tune_nu(const RankByNu& user_rank, const RankByNu& tx_rank, std::span<const double> candidates,
                const OwnershipIndex& ownership, std::size_t N, std::size_t M);

/// CSV `nu,A1,A2`.
void write_nu_sweep_csv(std::ostream& out, const NuSweep& sweep);

}  // namespace ledgerad
