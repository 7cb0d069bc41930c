#pragma once

#include "strainveil/image.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace strainveil {

inline constexpr int kLandmarkCount = 66;

/// 66 (x, y) positions in source-frame pixels, one column per point.
using LandmarkSet = Eigen::Matrix<double, 2, Eigen::Dynamic>;

/// Maps p to scale * R(rotation) * p + translation.
struct SimilarityTransform {
    double scale = 1.0;
    double rotation = 0.0;  // radians, counter-clockwise in (x, y)
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();

    static SimilarityTransform identity() { return {}; }

    Eigen::Matrix2d linear() const { return scale * Eigen::Rotation2Dd(rotation).toRotationMatrix(); }
    Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return linear() * p + translation; }
    LandmarkSet apply(const LandmarkSet& pts) const {
        return (linear() * pts).colwise() + translation;
    }

    SimilarityTransform inverse() const;
    /// (*this * other)(p) == this->apply(other.apply(p)).
    SimilarityTransform operator*(const SimilarityTransform& other) const;

    bool valid() const;
};

/// Parses `frame,idx,x,y` CSV (header required) into one set per frame.
std::vector<LandmarkSet> parse_landmarks(const std::filesystem::path& path);
void write_landmarks(const std::vector<LandmarkSet>& sets, const std::filesystem::path& path);

/// Least-squares similarity (Procrustes, no reflection) taking `src` onto `dst`.
SimilarityTransform estimate_similarity(const LandmarkSet& src, const LandmarkSet& dst);

/// Sum of squared distances between t(src) and dst.
double procrustes_residual(const SimilarityTransform& t, const LandmarkSet& src, const LandmarkSet& dst);

/// Output pixel q samples `frame` at t^-1(q), bilinear with edge clamping.
Frame warp_crop(const Frame& frame, const SimilarityTransform& t, int out_w, int out_h);

struct TemplateOptions {
    int crop_width = 256;
    int crop_height = 256;
    double inter_ocular = 96.0;
};

/// Canonical template from a reference landmark set: eye axis levelled,
/// inter-ocular distance fixed, landmark centroid at the crop centre.
LandmarkSet default_template(const LandmarkSet& reference, const TemplateOptions& options = {});

/// Centres of the two eyes in the 66-point layout (points 36-41 and 42-47).
Eigen::Vector2d eye_center_right(const LandmarkSet& pts);
Eigen::Vector2d eye_center_left(const LandmarkSet& pts);

/// Aligns every frame to `templ` independently. Errors carry the frame index.
FrameSequence align_sequence(const FrameSequence& seq, const std::vector<LandmarkSet>& landmarks,
                             const LandmarkSet& templ, int out_w, int out_h);

/// Schematic 66-point face layout scaled to a width x height frame; used by
/// the synthetic generator to emit static landmarks.
LandmarkSet schematic_face_landmarks(int width, int height);

}  // namespace strainveil
