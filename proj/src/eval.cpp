#include "strainveil/eval.hpp"

#include "strainveil/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace strainveil {

double IntensitySeries::event_mean() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (has_event() && (frames[i] < *event_start || frames[i] > *event_end)) continue;
        sum += scores[i];
        ++n;
    }
    if (n == 0) throw InputError(video_id + ": event window contains no frames");
    return sum / static_cast<double>(n);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, const fs::path& path, std::size_t line, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw InputError(path.string() + ":" + std::to_string(line) + ": non-numeric " + what + " '" + s + "'");
}

long to_index(const std::string& s, const fs::path& path, std::size_t line, const char* what) {
    const double v = to_double(s, path, line, what);
    if (v != std::floor(v)) {
        throw InputError(path.string() + ":" + std::to_string(line) + ": " + what + " must be an integer");
    }
    return static_cast<long>(v);
}

}  // namespace

std::vector<IntensitySeries> load_intensity_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open intensity file " + path.string());
    std::vector<IntensitySeries> series;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = split_fields(line);
        if (lineno == 1 && !f.empty() && f[0] == "video_id") continue;
        if (f.size() != 3 && f.size() != 5) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 3 or 5 fields");
        }
        auto [it, inserted] = index.try_emplace(f[0], series.size());
        if (inserted) series.push_back({f[0], {}, {}, std::nullopt, std::nullopt});
        IntensitySeries& s = series[it->second];

        const long frame = to_index(f[1], path, lineno, "frame");
        if (!s.frames.empty() && frame <= s.frames.back()) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " +
                             (frame == s.frames.back() ? "duplicate" : "unordered") + " frame " + f[1] +
                             " for video " + s.video_id);
        }
        s.frames.push_back(frame);
        s.scores.push_back(to_double(f[2], path, lineno, "score"));

        if (f.size() == 5 && !f[3].empty() && !f[4].empty()) {
            const long start = to_index(f[3], path, lineno, "event_start");
            const long end = to_index(f[4], path, lineno, "event_end");
            if (start >= end) {
                throw InputError(path.string() + ":" + std::to_string(lineno) + ": event_start must precede event_end");
            }
            if (s.has_event() && (*s.event_start != start || *s.event_end != end)) {
                throw InputError(path.string() + ":" + std::to_string(lineno) + ": inconsistent event window for " +
                                 s.video_id);
            }
            s.event_start = start;
            s.event_end = end;
        }
    }
    return series;
}

const char* outcome_name(Outcome o) {
    switch (o) {
    case Outcome::removed:
        return "Removed";
    case Outcome::reduced:
        return "Reduced";
    case Outcome::increased:
        return "Increased";
    }
    return "?";
}

OutcomeCase classify_outcome(const IntensitySeries& before, const IntensitySeries& after, double noise_floor) {
    if (before.video_id != after.video_id) {
        throw InputError("video id mismatch: '" + before.video_id + "' vs '" + after.video_id + "'");
    }
    if (before.scores.size() != after.scores.size()) {
        throw InputError(before.video_id + ": before/after length mismatch (" + std::to_string(before.scores.size()) +
                         " vs " + std::to_string(after.scores.size()) + ")");
    }
    if (!(noise_floor >= 0.0)) throw InputError("noise_floor must be >= 0");

    // The window is taken from whichever side carries one; both sides are
    // averaged over the same frames.
    IntensitySeries a = after;
    IntensitySeries b = before;
    if (b.has_event()) {
        a.event_start = b.event_start;
        a.event_end = b.event_end;
    } else if (a.has_event()) {
        b.event_start = a.event_start;
        b.event_end = a.event_end;
    }
    const double B = b.event_mean();
    const double A = a.event_mean();

    if (A <= noise_floor) return {Outcome::removed, 100.0};
    if (A > B) {
        const double pct = B > 0.0 ? (A - B) / B * 100.0 : kMaxIncreasePct;
        return {Outcome::increased, std::min(pct, kMaxIncreasePct)};
    }
    return {Outcome::reduced, B > 0.0 ? (B - A) / B * 100.0 : 0.0};
}

std::array<AggregateRow, 3> aggregate(const std::vector<OutcomeCase>& outcomes) {
    if (outcomes.empty()) throw InputError("aggregate: no outcomes");
    std::array<AggregateRow, 3> rows{};
    rows[0].outcome = Outcome::removed;
    rows[1].outcome = Outcome::reduced;
    rows[2].outcome = Outcome::increased;
    std::array<double, 3> sums{};
    for (const auto& o : outcomes) {
        const auto k = static_cast<std::size_t>(o.outcome);
        ++rows[k].videos;
        sums[k] += o.change_pct;
    }
    const auto total = static_cast<double>(outcomes.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k].video_pct = static_cast<int>(std::lround(100.0 * static_cast<double>(rows[k].videos) / total));
        if (rows[k].videos > 0) rows[k].mean_change_pct = sums[k] / static_cast<double>(rows[k].videos);
    }
    return rows;
}

EvaluationReport evaluate(const std::vector<IntensitySeries>& before, const std::vector<IntensitySeries>& after,
                          double noise_floor) {
    std::map<std::string, const IntensitySeries*> after_by_id;
    for (const auto& s : after) after_by_id[s.video_id] = &s;
    std::map<std::string, const IntensitySeries*> before_by_id;
    for (const auto& s : before) before_by_id[s.video_id] = &s;
    if (before_by_id.size() != after_by_id.size()) {
        throw InputError("before/after files list different numbers of videos");
    }

    EvaluationReport report;
    std::vector<OutcomeCase> outcomes;
    for (const auto& [id, b] : before_by_id) {
        const auto it = after_by_id.find(id);
        if (it == after_by_id.end()) throw InputError("video '" + id + "' missing from the after file");
        const OutcomeCase oc = classify_outcome(*b, *it->second, noise_floor);
        report.per_video.emplace_back(id, oc);
        outcomes.push_back(oc);
    }
    report.aggregate = aggregate(outcomes);
    return report;
}

namespace {

// Removal is a 100% change by definition, so that row never prints "-".
std::string change_cell(const AggregateRow& row) {
    if (row.outcome == Outcome::removed) return "100%";
    return row.mean_change_pct ? std::to_string(std::lround(*row.mean_change_pct)) + "%" : "-";
}

}  // namespace

std::string format_report_table(const EvaluationReport& report, const std::string& expression) {
    std::ostringstream out;
    out << "# % changes = mean change of the event-window mean detector score per video\n";
    out << std::left << std::setw(24) << "Case" << std::setw(14) << "% of videos" << "% changes\n";
    for (const auto& row : report.aggregate) {
        out << std::setw(24) << (expression + " " + outcome_name(row.outcome)) << std::setw(14)
            << (std::to_string(row.video_pct) + "%") << change_cell(row) << '\n';
    }
    return out.str();
}

void write_report_csv(const EvaluationReport& report, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "case,videos,pct_videos,pct_change\n";
    for (const auto& row : report.aggregate) {
        out << outcome_name(row.outcome) << ',' << row.videos << ',' << row.video_pct << ',';
        if (row.mean_change_pct) out << std::lround(*row.mean_change_pct);
        out << '\n';
    }
    out << "\nvideo_id,case,pct_change\n";
    out << std::fixed << std::setprecision(3);
    for (const auto& [id, oc] : report.per_video) out << id << ',' << outcome_name(oc.outcome) << ',' << oc.change_pct << '\n';
}

// ---------------------------------------------------------------------------

RocCurve roc_curve(std::vector<ScoredLabel> scores) {
    const auto positives = static_cast<std::size_t>(
        std::count_if(scores.begin(), scores.end(), [](const ScoredLabel& s) { return s.positive; }));
    const std::size_t negatives = scores.size() - positives;
    if (positives == 0 || negatives == 0) throw InputError("roc_curve needs both positive and negative samples");
    for (const auto& s : scores) {
        if (!std::isfinite(s.score)) throw InputError("roc_curve: non-finite score");
    }
    std::stable_sort(scores.begin(), scores.end(),
                     [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

    RocCurve roc;
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size();) {
        const double threshold = scores[i].score;
        for (; i < scores.size() && scores[i].score == threshold; ++i) (scores[i].positive ? tp : fp)++;
        const RocPoint pt{static_cast<double>(fp) / static_cast<double>(negatives),
                          static_cast<double>(tp) / static_cast<double>(positives), threshold};
        const RocPoint& last = roc.points.back();
        roc.auc += (pt.fpr - last.fpr) * (pt.tpr + last.tpr) / 2.0;
        roc.points.push_back(pt);
    }
    return roc;
}

std::vector<ScoredLabel> roc_samples(const std::vector<IntensitySeries>& series) {
    std::vector<ScoredLabel> out;
    for (const auto& s : series) {
        if (!s.has_event()) continue;
        for (std::size_t i = 0; i < s.scores.size(); ++i) {
            out.push_back({s.scores[i], s.frames[i] >= *s.event_start && s.frames[i] <= *s.event_end});
        }
    }
    return out;
}

void write_roc_csv(const RocCurve& roc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << std::setprecision(10) << "# auc," << roc.auc << "\nthreshold,fpr,tpr\n";
    for (const auto& p : roc.points) out << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
}

namespace {

constexpr double kW = 480, kH = 320, kPad = 40;
const char* const kPalette[] = {"#1f4fd8", "#2ca02c", "#d62728", "#9467bd"};

std::string svg_polyline(const std::vector<std::pair<double, double>>& pts, const char* colour) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << "<polyline fill=\"none\" stroke=\"" << colour
      << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) s << x << ',' << y << ' ';
    s << "\"/>\n";
    return s.str();
}

std::string svg_open(const std::string& title) {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kPad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n"
      << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad << "\" height=\""
      << kH - 2 * kPad << "\" fill=\"none\" stroke=\"black\"/>\n";
    return s.str();
}

}  // namespace

void write_roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << svg_open("ROC");
    const double w = kW - 2 * kPad, h = kH - 2 * kPad;
    out << svg_polyline({{kPad, kPad + h}, {kPad + w, kPad}}, "#bbbbbb");
    for (std::size_t c = 0; c < curves.size(); ++c) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : curves[c].second.points) pts.emplace_back(kPad + p.fpr * w, kPad + (1.0 - p.tpr) * h);
        const char* colour = kPalette[c % 4];
        out << svg_polyline(pts, colour);
        out << "<text x=\"" << kPad + w - 150 << "\" y=\"" << kPad + h - 12.0 - 16.0 * static_cast<double>(c)
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << colour << "\">" << curves[c].first
            << " AUC=" << std::fixed << std::setprecision(3) << curves[c].second.auc << "</text>\n";
    }
    out << "</svg>\n";
}

std::vector<fs::path> emit_curves(const IntensitySeries& before, const IntensitySeries& after, const fs::path& stem) {
    if (before.scores.size() != after.scores.size()) throw InputError(before.video_id + ": length mismatch");
    fs::path csv = stem;
    csv += ".csv";
    fs::path svg = stem;
    svg += ".svg";
    {
        std::ofstream out(csv);
        if (!out) throw InputError("cannot write " + csv.string());
        out << std::setprecision(10) << "frame,before,after\n";
        for (std::size_t i = 0; i < before.scores.size(); ++i) {
            out << before.frames[i] << ',' << before.scores[i] << ',' << after.scores[i] << '\n';
        }
    }

    const double w = kW - 2 * kPad, h = kH - 2 * kPad;
    double top = 1.0;
    for (std::size_t i = 0; i < before.scores.size(); ++i) top = std::max({top, before.scores[i], after.scores[i]});
    const double f0 = static_cast<double>(before.frames.front());
    const double span = std::max(1.0, static_cast<double>(before.frames.back()) - f0);
    auto px = [&](double frame) { return kPad + (frame - f0) / span * w; };
    auto py = [&](double score) { return kPad + (1.0 - score / top) * h; };

    std::ofstream out(svg);
    if (!out) throw InputError("cannot write " + svg.string());
    out << svg_open("Intensity: " + before.video_id + " (before green, after blue)");
    const IntensitySeries& windowed = before.has_event() ? before : after;
    if (windowed.has_event()) {
        for (const long f : {*windowed.event_start, *windowed.event_end}) {
            out << std::fixed << std::setprecision(2) << "<line x1=\"" << px(static_cast<double>(f)) << "\" y1=\""
                << kPad << "\" x2=\"" << px(static_cast<double>(f)) << "\" y2=\"" << kPad + h
                << "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
        }
    }
    std::vector<std::pair<double, double>> b, a;
    for (std::size_t i = 0; i < before.scores.size(); ++i) {
        const double f = static_cast<double>(before.frames[i]);
        b.emplace_back(px(f), py(before.scores[i]));
        a.emplace_back(px(f), py(after.scores[i]));
    }
    out << svg_polyline(b, "#2ca02c") << svg_polyline(a, "#1f4fd8") << "</svg>\n";
    return {csv, svg};
}

}  // namespace strainveil
