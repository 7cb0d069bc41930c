#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace strainveil {

/// Per-frame detector output for one video. The event window is inclusive.
struct IntensitySeries {
    std::string video_id;
    std::vector<long> frames;
    std::vector<double> scores;
    std::optional<long> event_start;
    std::optional<long> event_end;

    bool has_event() const { return event_start && event_end; }
    /// Mean score over the event window, or the whole series without one.
    double event_mean() const;
};

/// Reads `video_id,frame,score[,event_start,event_end]`; one series per
/// video, in order of first appearance, frames strictly increasing.
std::vector<IntensitySeries> load_intensity_csv(const std::filesystem::path& path);

enum class Outcome { removed, reduced, increased };

const char* outcome_name(Outcome o);

struct OutcomeCase {
    Outcome outcome = Outcome::reduced;
    double change_pct = 0.0;
};

inline constexpr double kDefaultNoiseFloor = 1.0;
inline constexpr double kMaxIncreasePct = 999.0;

/// B = before.event_mean(), A = after mean over the same window.
/// A <= noise_floor -> removed (100); A > B -> increased ((A-B)/B, capped at
/// 999); otherwise reduced ((B-A)/B).
OutcomeCase classify_outcome(const IntensitySeries& before, const IntensitySeries& after,
                             double noise_floor = kDefaultNoiseFloor);

struct AggregateRow {
    Outcome outcome = Outcome::removed;
    std::size_t videos = 0;
    int video_pct = 0;                      // rounded share of all videos
    std::optional<double> mean_change_pct;  // empty when no video falls in the case
};

struct EvaluationReport {
    std::vector<std::pair<std::string, OutcomeCase>> per_video;
    std::array<AggregateRow, 3> aggregate{};
};

/// Rows in removed, reduced, increased order.
std::array<AggregateRow, 3> aggregate(const std::vector<OutcomeCase>& outcomes);

/// Pairs series by video_id (sorted by id), classifies and aggregates.
EvaluationReport evaluate(const std::vector<IntensitySeries>& before, const std::vector<IntensitySeries>& after,
                          double noise_floor = kDefaultNoiseFloor);

/// Table layout: Case | % of videos | % changes, integers.
std::string format_report_table(const EvaluationReport& report, const std::string& expression = "Expression");
void write_report_csv(const EvaluationReport& report, const std::filesystem::path& path);

struct ScoredLabel {
    double score;
    bool positive;
};

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;  // predicted positive when score >= threshold
};

struct RocCurve {
    std::vector<RocPoint> points;  // starts at (0,0), ends at (1,1)
    double auc = 0.0;
};

/// Descending threshold sweep over distinct scores; tied scores enter as one
/// step. AUC by the trapezoid rule.
RocCurve roc_curve(std::vector<ScoredLabel> scores);

/// Frames inside each series' event window are positives; series without a
/// window are skipped.
std::vector<ScoredLabel> roc_samples(const std::vector<IntensitySeries>& series);

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path);

/// Named polylines in one standalone SVG chart over [0,1] x [0,1].
void write_roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves, const std::filesystem::path& path);

/// Writes `<stem>.csv` (frame,before,after) and `<stem>.svg` with the event
/// window marked. Returns both paths.
std::vector<std::filesystem::path> emit_curves(const IntensitySeries& before, const IntensitySeries& after,
                                               const std::filesystem::path& stem);

}  // namespace strainveil
