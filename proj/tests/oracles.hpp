#pragma once

// Direct, unoptimized reimplementations used as references by the tests.

#include "strainveil/eval.hpp"
#include "strainveil/image.hpp"

#include <algorithm>
#include <vector>

namespace testing {

/// Square (2r+1)^2 element; pixels outside the grid count as false.
inline strainveil::BinaryMask naive_dilate(const strainveil::BinaryMask& m, int r) {
    strainveil::BinaryMask out = strainveil::BinaryMask::Constant(m.rows(), m.cols(), false);
    for (int y = 0; y < m.rows(); ++y)
        for (int x = 0; x < m.cols(); ++x)
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy >= 0 && yy < m.rows() && xx >= 0 && xx < m.cols() && m(yy, xx)) out(y, x) = true;
                }
    return out;
}

inline strainveil::BinaryMask naive_erode(const strainveil::BinaryMask& m, int r) {
    strainveil::BinaryMask out = strainveil::BinaryMask::Constant(m.rows(), m.cols(), true);
    for (int y = 0; y < m.rows(); ++y)
        for (int x = 0; x < m.cols(); ++x)
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= m.rows() || xx < 0 || xx >= m.cols() || !m(yy, xx)) out(y, x) = false;
                }
    return out;
}

inline strainveil::BinaryMask naive_edge_band(const strainveil::BinaryMask& m, int band) {
    return naive_dilate(m, band) && !naive_erode(m, band);
}

/// Sort-based median of the edge-clamped k x k window for pixels in `band`.
inline strainveil::Frame naive_median(const strainveil::Frame& f, const strainveil::BinaryMask& band, int k) {
    strainveil::Frame out = f;
    const int r = k / 2;
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            if (!band(y, x)) continue;
            for (int c = 0; c < f.channels(); ++c) {
                std::vector<int> w;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        w.push_back(f.at(std::clamp(x + dx, 0, f.width() - 1), std::clamp(y + dy, 0, f.height() - 1), c));
                std::sort(w.begin(), w.end());
                out.at(x, y, c) = static_cast<std::uint8_t>(w[w.size() / 2]);
            }
        }
    return out;
}

/// P(score+ > score-) + P(tie) / 2 over all positive/negative pairs.
inline double pairwise_auc(const std::vector<strainveil::ScoredLabel>& v) {
    double wins = 0, pairs = 0;
    for (const auto& p : v)
        for (const auto& n : v)
            if (p.positive && !n.positive) {
                pairs += 1;
                wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
            }
    return wins / pairs;
}

}  // namespace testing
