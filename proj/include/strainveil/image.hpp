#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace strainveil {

/// Single-channel raster, row-major, indexed (row = y, col = x).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageU8 = Image<std::uint8_t>;
using ImageF = Image<float>;
using ImageD = Image<double>;

/// true = replace from reference.
using BinaryMask = Image<bool>;

/// Interleaved 8-bit raster with 1 (gray) or 3 (RGB) channels.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, int channels, std::uint8_t fill = 0);
    Frame(int width, int height, int channels, std::vector<std::uint8_t> data);

    static Frame from_plane(const ImageU8& plane);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    /// Copy of channel `c` as a plane.
    ImageU8 plane(int c = 0) const;
    void set_plane(int c, const ImageU8& plane);

    bool same_shape(const Frame& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

struct FrameSequence {
    std::vector<Frame> frames;
    double fps = 25.0;

    std::size_t size() const { return frames.size(); }
    const Frame& operator[](std::size_t i) const { return frames[i]; }
};

/// Minimum frame edge accepted by the pipeline.
inline constexpr int kMinFrameEdge = 16;

/// Throws InputError unless the sequence has >= 2 frames of identical shape,
/// each at least kMinFrameEdge on both edges.
void validate_sequence(const FrameSequence& seq);

template <typename Scalar>
Image<Scalar> to_scalar(const ImageU8& img) {
    return img.template cast<Scalar>();
}

/// Round-to-nearest with saturation into [0,255].
template <typename Derived>
ImageU8 to_u8(const Eigen::ArrayBase<Derived>& img) {
    using Scalar = typename Derived::Scalar;
    return img.unaryExpr([](Scalar v) {
                  const Scalar r = std::round(v);
                  return static_cast<std::uint8_t>(std::clamp<Scalar>(r, Scalar(0), Scalar(255)));
              })
        .eval();
}

/// Edge-clamped pixel fetch.
template <typename Derived>
typename Derived::Scalar clamped(const Eigen::ArrayBase<Derived>& img, Eigen::Index x, Eigen::Index y) {
    x = std::clamp<Eigen::Index>(x, 0, img.cols() - 1);
    y = std::clamp<Eigen::Index>(y, 0, img.rows() - 1);
    return img(y, x);
}

/// Bilinear sample at real coordinates with edge clamping.
template <typename Derived, typename Real>
Real bilinear(const Eigen::ArrayBase<Derived>& img, Real x, Real y) {
    const Real maxx = static_cast<Real>(img.cols() - 1);
    const Real maxy = static_cast<Real>(img.rows() - 1);
    x = std::clamp<Real>(x, Real(0), maxx);
    y = std::clamp<Real>(y, Real(0), maxy);
    const auto x0 = static_cast<Eigen::Index>(std::floor(x));
    const auto y0 = static_cast<Eigen::Index>(std::floor(y));
    const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, img.cols() - 1);
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, img.rows() - 1);
    const Real fx = x - static_cast<Real>(x0);
    const Real fy = y - static_cast<Real>(y0);
    const Real a = static_cast<Real>(img(y0, x0));
    const Real b = static_cast<Real>(img(y0, x1));
    const Real c = static_cast<Real>(img(y1, x0));
    const Real d = static_cast<Real>(img(y1, x1));
    const Real top = a + fx * (b - a);
    const Real bottom = c + fx * (d - c);
    return top + fy * (bottom - top);
}

}  // namespace strainveil
