#include "strainveil/align.hpp"

#include "strainveil/error.hpp"
#include "strainveil/parallel.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace strainveil {

SimilarityTransform SimilarityTransform::inverse() const {
    if (!valid()) throw PipelineError("cannot invert a degenerate similarity transform");
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = -rotation;
    inv.translation = -(inv.linear() * translation);
    return inv;
}

SimilarityTransform SimilarityTransform::operator*(const SimilarityTransform& other) const {
    SimilarityTransform out;
    out.scale = scale * other.scale;
    out.rotation = std::remainder(rotation + other.rotation, 2.0 * std::numbers::pi);
    out.translation = linear() * other.translation + translation;
    return out;
}

bool SimilarityTransform::valid() const {
    return std::isfinite(scale) && scale > 0.0 && std::isfinite(rotation) && translation.allFinite();
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    return out;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(path.string() + ":" + std::to_string(line) + ": non-numeric field '" + s + "'");
    }
}

}  // namespace

std::vector<LandmarkSet> parse_landmarks(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open landmark file " + path.string());
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"frame", "idx", "x", "y"}) {
        throw InputError(path.string() + ": expected header 'frame,idx,x,y'");
    }

    std::map<long, std::vector<std::optional<Eigen::Vector2d>>> frames;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
        }
        const double frame = parse_number(fields[0], path, lineno);
        const double idx = parse_number(fields[1], path, lineno);
        if (frame < 0 || frame != std::floor(frame) || idx < 0 || idx != std::floor(idx)) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": frame/idx must be non-negative integers");
        }
        if (idx >= kLandmarkCount) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": landmark index " + fields[1] +
                             " out of range 0..65");
        }
        auto& pts = frames[static_cast<long>(frame)];
        pts.resize(kLandmarkCount);
        auto& slot = pts[static_cast<std::size_t>(idx)];
        if (slot) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": duplicate landmark " + fields[1] +
                             " in frame " + fields[0]);
        }
        slot = Eigen::Vector2d(parse_number(fields[2], path, lineno), parse_number(fields[3], path, lineno));
    }
    if (frames.empty()) throw InputError(path.string() + ": no landmarks");

    std::vector<LandmarkSet> sets;
    long expected = 0;
    for (const auto& [frame, pts] : frames) {
        if (frame != expected) {
            throw InputError(path.string() + ": non-contiguous frame indices (missing frame " +
                             std::to_string(expected) + ")");
        }
        LandmarkSet set(2, kLandmarkCount);
        long count = 0;
        for (int i = 0; i < kLandmarkCount; ++i) {
            if (pts[i]) {
                set.col(i) = *pts[i];
                ++count;
            }
        }
        if (count != kLandmarkCount) {
            throw InputError(path.string() + ": frame " + std::to_string(frame) + ": expected 66 points, got " +
                             std::to_string(count));
        }
        sets.push_back(std::move(set));
        ++expected;
    }
    return sets;
}

void write_landmarks(const std::vector<LandmarkSet>& sets, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    out << "frame,idx,x,y\n";
    for (std::size_t f = 0; f < sets.size(); ++f) {
        for (Eigen::Index i = 0; i < sets[f].cols(); ++i) {
            out << f << ',' << i << ',' << sets[f](0, i) << ',' << sets[f](1, i) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------

SimilarityTransform estimate_similarity(const LandmarkSet& src, const LandmarkSet& dst) {
    if (src.cols() != dst.cols() || src.cols() < 2) {
        throw PipelineError("landmark sets must have equal size >= 2");
    }
    if (!src.allFinite() || !dst.allFinite()) throw PipelineError("non-finite landmark coordinates");

    const Eigen::Vector2d src_mean = src.rowwise().mean();
    const Eigen::Vector2d dst_mean = dst.rowwise().mean();
    const LandmarkSet a = src.colwise() - src_mean;
    const LandmarkSet b = dst.colwise() - dst_mean;

    const double spread = a.squaredNorm();
    if (!(spread > 1e-12 * (1.0 + src_mean.squaredNorm()))) {
        throw PipelineError("singular configuration: source landmarks have zero spread");
    }

    // Closed-form 2D Procrustes: the optimal rotation aligns the summed
    // dot and cross products of the centred point pairs.
    const double dot = (a.array() * b.array()).sum();
    const double cross = (a.row(0).array() * b.row(1).array() - a.row(1).array() * b.row(0).array()).sum();

    SimilarityTransform t;
    t.rotation = std::atan2(cross, dot);
    t.scale = std::hypot(dot, cross) / spread;
    if (!(t.scale > 0.0)) throw PipelineError("singular configuration: target landmarks have zero spread");
    t.translation = dst_mean - t.linear() * src_mean;
    return t;
}

double procrustes_residual(const SimilarityTransform& t, const LandmarkSet& src, const LandmarkSet& dst) {
    return (t.apply(src) - dst).squaredNorm();
}

Frame warp_crop(const Frame& frame, const SimilarityTransform& t, int out_w, int out_h) {
    const SimilarityTransform inv = t.inverse();
    const Eigen::Matrix2d lin = inv.linear();
    Frame out(out_w, out_h, frame.channels());
    for (int c = 0; c < frame.channels(); ++c) {
        const ImageD src = frame.plane(c).cast<double>();
        ImageD dst(out_h, out_w);
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                const Eigen::Vector2d p = lin * Eigen::Vector2d(x, y) + inv.translation;
                dst(y, x) = bilinear(src, p.x(), p.y());
            }
        }
        out.set_plane(c, to_u8(dst));
    }
    return out;
}

Eigen::Vector2d eye_center_right(const LandmarkSet& pts) { return pts.middleCols(36, 6).rowwise().mean(); }
Eigen::Vector2d eye_center_left(const LandmarkSet& pts) { return pts.middleCols(42, 6).rowwise().mean(); }

LandmarkSet default_template(const LandmarkSet& reference, const TemplateOptions& options) {
    if (reference.cols() != kLandmarkCount) throw InputError("template source needs 66 landmarks");
    const Eigen::Vector2d axis = eye_center_left(reference) - eye_center_right(reference);
    const double iod = axis.norm();
    if (!(iod > 0.0)) throw PipelineError("singular configuration: coincident eye centres");

    SimilarityTransform t;
    t.scale = options.inter_ocular / iod;
    t.rotation = -std::atan2(axis.y(), axis.x());
    const Eigen::Vector2d centroid = reference.rowwise().mean();
    const Eigen::Vector2d centre(0.5 * (options.crop_width - 1), 0.5 * (options.crop_height - 1));
    t.translation = centre - t.linear() * centroid;
    return t.apply(reference);
}

FrameSequence align_sequence(const FrameSequence& seq, const std::vector<LandmarkSet>& landmarks,
                             const LandmarkSet& templ, int out_w, int out_h) {
    if (landmarks.size() != seq.frames.size()) {
        throw InputError("landmark frames (" + std::to_string(landmarks.size()) + ") do not match video frames (" +
                         std::to_string(seq.frames.size()) + ")");
    }
    FrameSequence out;
    out.fps = seq.fps;
    out.frames.resize(seq.frames.size());
    std::vector<std::string> errors(seq.frames.size());
    parallel_for(0, static_cast<std::ptrdiff_t>(seq.frames.size()), [&](std::ptrdiff_t i) {
        try {
            const SimilarityTransform t = estimate_similarity(landmarks[i], templ);
            out.frames[i] = warp_crop(seq.frames[i], t, out_w, out_h);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) throw PipelineError("alignment failed: " + errors[i], static_cast<long>(i));
    }
    return out;
}

LandmarkSet schematic_face_landmarks(int width, int height) {
    const double cx = 0.5 * (width - 1);
    const double cy = 0.5 * (height - 1);
    const double s = 0.4 * std::min(width, height);
    const double pi = std::numbers::pi;
    LandmarkSet p(2, kLandmarkCount);
    auto set = [&](int i, double x, double y) { p.col(i) = Eigen::Vector2d(cx + s * x, cy + s * y); };

    for (int k = 0; k <= 16; ++k) set(k, -std::cos(pi * k / 16.0), -0.1 + std::sin(pi * k / 16.0));
    for (int k = 0; k < 5; ++k) {
        const double x = 0.15 + 0.15 * k;
        const double lift = 0.05 * std::sin(pi * k / 4.0);
        set(21 - k, -x, -0.55 - lift);
        set(22 + k, x, -0.55 - lift);
    }
    for (int k = 0; k < 4; ++k) set(27 + k, 0.0, -0.4 + 0.15 * k);
    for (int k = 0; k < 5; ++k) set(31 + k, -0.2 + 0.1 * k, 0.15 + 0.03 * (k == 2));
    for (int k = 0; k < 6; ++k) {
        const double a = pi - 2.0 * pi * k / 6.0;
        set(36 + k, -0.4 + 0.15 * std::cos(a), -0.35 - 0.07 * std::sin(a));
        set(42 + k, 0.4 - 0.15 * std::cos(a), -0.35 - 0.07 * std::sin(a));
    }
    for (int k = 0; k < 12; ++k) {
        const double a = pi - 2.0 * pi * k / 12.0;
        set(48 + k, 0.35 * std::cos(a), 0.45 - 0.15 * std::sin(a));
    }
    for (int k = 0; k < 6; ++k) {
        const double a = pi - 2.0 * pi * k / 6.0;
        set(60 + k, 0.25 * std::cos(a), 0.45 - 0.06 * std::sin(a));
    }
    return p;
}

}  // namespace strainveil
