#include "ledgerad/scatter.hpp"

#include <cstdio>
#include <ostream>
#include <vector>

namespace ledgerad {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 40.0;

std::string escape(const std::string& text) {
    std::string out;
    for (const char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void render_scatter(std::ostream& out, const FeatureMatrix& matrix, const AnomalyRanking& ranking, const std::string& title) {
    if (!matrix.normalized) throw std::invalid_argument("render_scatter expects a normalized matrix");
    const auto projection = principal_projection(matrix.values);
    const auto& pts = projection.points;

    const Eigen::Vector2d lo = pts.colwise().minCoeff().transpose();
    const Eigen::Vector2d hi = pts.colwise().maxCoeff().transpose();
    const auto scale = [&](double v, int axis) {
        const double span = hi(axis) - lo(axis);
        const double t = span > 0 ? (v - lo(axis)) / span : 0.5;
        return axis == 0 ? kMargin + t * (kWidth - 2 * kMargin) : kHeight - kMargin - t * (kHeight - 2 * kMargin);
    };

    std::vector<char> flagged(static_cast<std::size_t>(pts.rows()), 0);
    for (std::size_t r = 0; r < ranking.flagged_count && r < ranking.size(); ++r) flagged[ranking.entries[r].row] = 1;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
        << "<style>.normal{fill:#4a78b5;fill-opacity:0.5}.anomaly{fill:#d62728;stroke:#000;stroke-width:0.5}</style>\n"
        << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title)
        << "</text>\n";
    char buf[128];
    // normal points first so anomalies are drawn on top
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            if (flagged[static_cast<std::size_t>(i)] != pass) continue;
            std::snprintf(buf, sizeof buf, "<circle class=\"%s\" cx=\"%.3f\" cy=\"%.3f\" r=\"%d\"/>\n",
                          pass ? "anomaly" : "normal", scale(pts(i, 0), 0), scale(pts(i, 1), 1), pass ? 4 : 2);
            out << buf;
        }
    }
    out << "</svg>\n";
}

}  // namespace ledgerad
