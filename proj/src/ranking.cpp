#include "ledgerad/ranking.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ledgerad/ledger.hpp"

namespace ledgerad {

void write_ranking_csv(std::ostream& out, const AnomalyRanking& ranking) {
    out << "rank,entity_id,score,flagged\n";
    char buf[32];
    for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.17g", ranking.entries[r].score);
        out << r + 1 << ',' << ranking.entries[r].entity_id << ',' << buf << ',' << (r < ranking.flagged_count ? 1 : 0)
            << '\n';
    }
}

AnomalyRanking read_ranking_csv(std::istream& in) {
    AnomalyRanking ranking;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line_no == 1) continue;  // header
        std::istringstream fields(line);
        std::string rank, id, score, flagged;
        if (!std::getline(fields, rank, ',') || !std::getline(fields, id, ',') || !std::getline(fields, score, ',') ||
            !std::getline(fields, flagged))
            throw ParseError(line_no, "expected rank,entity_id,score,flagged");
        try {
            ranking.entries.push_back({ranking.entries.size(), id, std::stod(score)});
        } catch (const std::exception&) {
            throw ParseError(line_no, "score '" + score + "' is not a number");
        }
        if (flagged == "1") ++ranking.flagged_count;
    }
    return ranking;
}

}  // namespace ledgerad
