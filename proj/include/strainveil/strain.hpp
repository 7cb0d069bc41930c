#pragma once

#include "strainveil/flow.hpp"
#include "strainveil/image.hpp"

#include <filesystem>
#include <vector>

namespace strainveil {

template <typename Scalar>
struct FlowGradients {
    Image<Scalar> du_dx, du_dy, dv_dx, dv_dy;
};

/// Unit-step first derivative along x: central in the interior, forward at
/// x = 0, backward at x = w - 1.
template <typename Scalar>
Image<Scalar> diff_x(const Image<Scalar>& f) {
    const Eigen::Index w = f.cols();
    Image<Scalar> d(f.rows(), w);
    if (w == 1) return d.setZero();
    d.col(0) = f.col(1) - f.col(0);
    d.col(w - 1) = f.col(w - 1) - f.col(w - 2);
    if (w > 2) d.middleCols(1, w - 2) = (f.rightCols(w - 2) - f.leftCols(w - 2)) / Scalar(2);
    return d;
}

template <typename Scalar>
Image<Scalar> diff_y(const Image<Scalar>& f) {
    const Eigen::Index h = f.rows();
    Image<Scalar> d(h, f.cols());
    if (h == 1) return d.setZero();
    d.row(0) = f.row(1) - f.row(0);
    d.row(h - 1) = f.row(h - 1) - f.row(h - 2);
    if (h > 2) d.middleRows(1, h - 2) = (f.bottomRows(h - 2) - f.topRows(h - 2)) / Scalar(2);
    return d;
}

template <typename Scalar>
FlowGradients<Scalar> flow_gradients(const FlowField<Scalar>& f) {
    return {diff_x(f.u), diff_y(f.u), diff_x(f.v), diff_y(f.v)};
}

/// Frobenius norm of the infinitesimal strain tensor of (u, v):
/// sqrt(exx^2 + eyy^2 + 2 exy^2), exy = (du/dy + dv/dx) / 2.
template <typename Scalar>
Image<Scalar> strain_magnitude_plane(const FlowField<Scalar>& f) {
    const FlowGradients<Scalar> g = flow_gradients(f);
    const Image<Scalar> exy = (g.du_dy + g.dv_dx) / Scalar(2);
    return (g.du_dx.square() + g.dv_dy.square() + Scalar(2) * exy.square()).sqrt();
}

struct StrainMap {
    ImageD magnitude;
    ImageU8 normalized;  // empty until normalize_strain

    Eigen::Index width() const { return magnitude.cols(); }
    Eigen::Index height() const { return magnitude.rows(); }
    bool has_normalized() const { return normalized.size() == magnitude.size() && normalized.size() > 0; }
};

enum class NormalizationMode { per_frame, per_sequence };

StrainMap strain_magnitude(const FlowFieldD& f);

/// n = round(255 (m - lo) / (hi - lo)); n == 0 everywhere when hi == lo.
/// Uses the map's own extrema unless a [lo, hi] range is supplied.
StrainMap normalize_strain(StrainMap s);
StrainMap normalize_strain(StrainMap s, double lo, double hi);

/// Magnitude and normalization for each flow field, in order.
std::vector<StrainMap> strain_sequence(const std::vector<FlowFieldD>& flows,
                                       NormalizationMode mode = NormalizationMode::per_frame);

/// Raw magnitude dump: "SVSM", u32 width, u32 height, f32 plane (LE).
void write_strain_raw(const StrainMap& s, const std::filesystem::path& path);
ImageD read_strain_raw(const std::filesystem::path& path);

}  // namespace strainveil
