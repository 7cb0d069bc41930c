#pragma once

#include "strainveil/image.hpp"

#include <cmath>
#include <filesystem>
#include <vector>

namespace strainveil {

/// Dense displacement field in pixels/frame. A point at (x, y) in the earlier
/// frame moves to (x + u, y + v) in the later one.
template <typename Scalar>
struct FlowField {
    Image<Scalar> u;
    Image<Scalar> v;

    FlowField() = default;
    FlowField(Eigen::Index width, Eigen::Index height)
        : u(Image<Scalar>::Zero(height, width)), v(Image<Scalar>::Zero(height, width)) {}
    FlowField(Image<Scalar> u_plane, Image<Scalar> v_plane) : u(std::move(u_plane)), v(std::move(v_plane)) {}

    Eigen::Index width() const { return u.cols(); }
    Eigen::Index height() const { return u.rows(); }
    bool all_finite() const { return u.allFinite() && v.allFinite(); }

    template <typename Other>
    FlowField<Other> cast() const {
        return {u.template cast<Other>(), v.template cast<Other>()};
    }
};

using FlowFieldD = FlowField<double>;

struct FlowParams {
    int pyramid_levels = 3;
    int window_radius = 7;
    int iterations_per_level = 3;
    double regularization_eps = 1e-4;
    double max_displacement = 16.0;

    void validate() const;
};

/// 5-tap binomial smoothing (1 4 6 4 1)/16 with edge clamping.
template <typename Scalar>
Image<Scalar> smooth5(const Image<Scalar>& img) {
    static constexpr Scalar w[5] = {1, 4, 6, 4, 1};
    const Eigen::Index h = img.rows(), wd = img.cols();
    Image<Scalar> tmp(h, wd), out(h, wd);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < wd; ++x) {
            Scalar acc = 0;
            for (int k = -2; k <= 2; ++k) acc += w[k + 2] * clamped(img, x + k, y);
            tmp(y, x) = acc / Scalar(16);
        }
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < wd; ++x) {
            Scalar acc = 0;
            for (int k = -2; k <= 2; ++k) acc += w[k + 2] * clamped(tmp, x, y + k);
            out(y, x) = acc / Scalar(16);
        }
    return out;
}

/// Level 0 is the input; level k+1 keeps the even pixels of smooth5(level k).
/// Throws InputError when the frame is smaller than 2^(levels-1) * 16.
template <typename Scalar>
std::vector<Image<Scalar>> build_pyramid(const Image<Scalar>& img, int levels);

/// 8-bit convenience wrapper; levels above 0 are rounded to bytes.
std::vector<Frame> build_pyramid(const Frame& frame, int levels);

/// out(x, y) = frame sampled bilinearly at (x + u, y + v), edge-clamped.
template <typename Scalar>
Image<Scalar> warp_by_flow(const Image<Scalar>& frame, const FlowField<Scalar>& f) {
    Image<Scalar> out(frame.rows(), frame.cols());
    for (Eigen::Index y = 0; y < frame.rows(); ++y)
        for (Eigen::Index x = 0; x < frame.cols(); ++x)
            out(y, x) = bilinear(frame, static_cast<Scalar>(x) + f.u(y, x), static_cast<Scalar>(y) + f.v(y, x));
    return out;
}

Frame warp_by_flow(const Frame& frame, const FlowFieldD& f);

/// Coarse-to-fine iterative Lucas-Kanade. Intensities are scaled to [0, 1]
/// before solving, so regularization_eps is relative to unit-range gradients.
FlowFieldD compute_flow(const ImageD& prev, const ImageD& next, const FlowParams& p = {});
FlowFieldD compute_flow(const Frame& prev, const Frame& next, const FlowParams& p = {});

/// Median endpoint error over pixels at least `margin` from every border.
double median_endpoint_error(const FlowFieldD& estimate, const FlowFieldD& truth, int margin);

/// Binary dump: "SVFL", u32 width, u32 height, f32 u plane, f32 v plane (LE).
void write_flow(const FlowFieldD& f, const std::filesystem::path& path);
FlowFieldD read_flow(const std::filesystem::path& path);

}  // namespace strainveil
