#pragma once

#include "strainveil/eval.hpp"

#include <string>
#include <vector>

namespace testing {

struct TableSpec {
    const char* expression;
    int removed, reduced, increased;  // video counts out of 100
    double reduced_pct, increased_pct;
    const char* rows[3];  // expected "% of videos" / "% changes" cells, in order
};

// Four reference tables: video splits, mean changes and expected rows.
inline const TableSpec kTables[4] = {
    {"Smile", 21, 64, 15, 50, 10, {"21% 100%", "64% 50%", "15% 10%"}},
    {"Smile", 59, 38, 3, 75, 5, {"59% 100%", "38% 75%", "3% 5%"}},
    {"Sadness", 0, 87, 13, 60, 22, {"0% 100%", "87% 60%", "13% 22%"}},
    {"Anger", 6, 88, 6, 40, 36, {"6% 100%", "88% 40%", "6% 36%"}},
};

struct Corpus {
    std::vector<strainveil::IntensitySeries> before, after;
};

// Constant-score videos with an event window over frames 5..14; the
// before level is 80 and the after level encodes the wanted outcome.
inline Corpus make_corpus(const TableSpec& t) {
    Corpus c;
    auto add = [&](int id, double after_level) {
        strainveil::IntensitySeries b;
        b.video_id = "v" + std::to_string(1000 + id);
        b.event_start = 5;
        b.event_end = 14;
        for (long f = 0; f < 20; ++f) {
            b.frames.push_back(f);
            b.scores.push_back(f >= 5 && f <= 14 ? 80.0 : 2.0);
        }
        strainveil::IntensitySeries a = b;
        for (long f = 5; f <= 14; ++f) a.scores[static_cast<std::size_t>(f)] = after_level;
        c.before.push_back(b);
        c.after.push_back(a);
    };
    int id = 0;
    for (int i = 0; i < t.removed; ++i) add(id++, 0.0);
    for (int i = 0; i < t.reduced; ++i) add(id++, 80.0 * (1.0 - t.reduced_pct / 100.0));
    for (int i = 0; i < t.increased; ++i) add(id++, 80.0 * (1.0 + t.increased_pct / 100.0));
    return c;
}

// Collapses a formatted table row "<label>   21%   100%" to "21% 100%".
inline std::string row_cells(const std::string& row) {
    std::vector<std::string> tok;
    std::string cur;
    for (char ch : row + ' ') {
        if (ch == ' ') {
            if (!cur.empty()) tok.push_back(cur), cur.clear();
        } else {
            cur += ch;
        }
    }
    if (tok.size() < 2) return {};
    return tok[tok.size() - 2] + " " + tok.back();
}

}  // namespace testing
