#include "strainveil/flow.hpp"

#include "plane_dump.hpp"
#include "strainveil/error.hpp"
#include "strainveil/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace strainveil {

void FlowParams::validate() const {
    if (pyramid_levels < 1) throw InputError("pyramid_levels must be >= 1");
    if (window_radius < 1) throw InputError("window_radius must be >= 1");
    if (iterations_per_level < 1) throw InputError("iterations_per_level must be >= 1");
    if (!(regularization_eps > 0.0)) throw InputError("regularization_eps must be > 0");
    if (!(max_displacement > 0.0)) throw InputError("max_displacement must be > 0");
}

template <typename Scalar>
std::vector<Image<Scalar>> build_pyramid(const Image<Scalar>& img, int levels) {
    if (levels < 1) throw InputError("pyramid needs at least one level");
    const Eigen::Index need = Eigen::Index(16) << (levels - 1);
    if (img.rows() < need || img.cols() < need) {
        throw InputError("too many pyramid levels (" + std::to_string(levels) + ") for a " +
                         std::to_string(img.cols()) + "x" + std::to_string(img.rows()) + " frame");
    }
    std::vector<Image<Scalar>> pyr;
    pyr.reserve(static_cast<std::size_t>(levels));
    pyr.push_back(img);
    for (int l = 1; l < levels; ++l) {
        const Image<Scalar> smooth = smooth5(pyr.back());
        Image<Scalar> half(smooth.rows() / 2, smooth.cols() / 2);
        for (Eigen::Index y = 0; y < half.rows(); ++y)
            for (Eigen::Index x = 0; x < half.cols(); ++x) half(y, x) = smooth(2 * y, 2 * x);
        pyr.push_back(std::move(half));
    }
    return pyr;
}

template std::vector<ImageF> build_pyramid(const ImageF&, int);
template std::vector<ImageD> build_pyramid(const ImageD&, int);

std::vector<Frame> build_pyramid(const Frame& frame, int levels) {
    if (frame.channels() != 1) throw InputError("build_pyramid expects a gray frame");
    const auto pyr = build_pyramid(to_scalar<double>(frame.plane()), levels);
    std::vector<Frame> out;
    out.reserve(pyr.size());
    out.push_back(frame);
    for (std::size_t l = 1; l < pyr.size(); ++l) out.push_back(Frame::from_plane(to_u8(pyr[l])));
    return out;
}

Frame warp_by_flow(const Frame& frame, const FlowFieldD& f) {
    if (frame.channels() != 1) throw InputError("warp_by_flow expects a gray frame");
    if (f.width() != frame.width() || f.height() != frame.height()) throw InputError("flow/frame size mismatch");
    return Frame::from_plane(to_u8(warp_by_flow(to_scalar<double>(frame.plane()), f)));
}

namespace {

// Central differences with edge clamping.
void gradients(const ImageD& img, ImageD& gx, ImageD& gy) {
    gx.resize(img.rows(), img.cols());
    gy.resize(img.rows(), img.cols());
    parallel_for(0, img.rows(), [&](std::ptrdiff_t y) {
        for (Eigen::Index x = 0; x < img.cols(); ++x) {
            gx(y, x) = 0.5 * (clamped(img, x + 1, y) - clamped(img, x - 1, y));
            gy(y, x) = 0.5 * (clamped(img, x, y + 1) - clamped(img, x, y - 1));
        }
    });
}

// Gaussian-weighted sum over a (2r+1)^2 window (sigma = r / 2), edge
// clamped. A hard-edged box makes the flow jump wherever a strong feature
// crosses the window border, which the strain derivative then amplifies.
// Summation order is fixed per pixel, independent of the row partition.
ImageD window_sum(const ImageD& img, const std::vector<double>& taps) {
    const int r = static_cast<int>(taps.size() / 2);
    ImageD tmp(img.rows(), img.cols()), out(img.rows(), img.cols());
    parallel_for(0, img.rows(), [&](std::ptrdiff_t y) {
        for (Eigen::Index x = 0; x < img.cols(); ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += taps[static_cast<std::size_t>(k + r)] * clamped(img, x + k, y);
            tmp(y, x) = acc;
        }
    });
    parallel_for(0, img.rows(), [&](std::ptrdiff_t y) {
        for (Eigen::Index x = 0; x < img.cols(); ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += taps[static_cast<std::size_t>(k + r)] * clamped(tmp, x, y + k);
            out(y, x) = acc;
        }
    });
    return out;
}

std::vector<double> window_taps(int r) {
    const double sigma = 0.5 * r;
    std::vector<double> taps(static_cast<std::size_t>(2 * r + 1));
    for (int k = -r; k <= r; ++k) taps[static_cast<std::size_t>(k + r)] = std::exp(-0.5 * k * k / (sigma * sigma));
    return taps;
}

FlowFieldD upsample_flow(const FlowFieldD& coarse, Eigen::Index width, Eigen::Index height) {
    FlowFieldD fine(width, height);
    parallel_for(0, height, [&](std::ptrdiff_t y) {
        for (Eigen::Index x = 0; x < width; ++x) {
            const double cx = 0.5 * static_cast<double>(x);
            const double cy = 0.5 * static_cast<double>(y);
            fine.u(y, x) = 2.0 * bilinear(coarse.u, cx, cy);
            fine.v(y, x) = 2.0 * bilinear(coarse.v, cx, cy);
        }
    });
    return fine;
}

}  // namespace

FlowFieldD compute_flow(const ImageD& prev, const ImageD& next, const FlowParams& p) {
    p.validate();
    if (prev.rows() != next.rows() || prev.cols() != next.cols()) {
        throw InputError("compute_flow: dimension mismatch");
    }
    const auto prev_pyr = build_pyramid<double>(prev / 255.0, p.pyramid_levels);
    const auto next_pyr = build_pyramid<double>(next / 255.0, p.pyramid_levels);
    const double eps = p.regularization_eps;
    const std::vector<double> taps = window_taps(p.window_radius);

    FlowFieldD flow;
    for (int level = p.pyramid_levels - 1; level >= 0; --level) {
        const ImageD& P = prev_pyr[static_cast<std::size_t>(level)];
        const ImageD& N = next_pyr[static_cast<std::size_t>(level)];
        flow = level == p.pyramid_levels - 1 ? FlowFieldD(P.cols(), P.rows()) : upsample_flow(flow, P.cols(), P.rows());
        const double limit = p.max_displacement / static_cast<double>(1 << level);

        ImageD gx, gy;
        gradients(P, gx, gy);
        const ImageD sxx = window_sum(gx * gx, taps);
        const ImageD sxy = window_sum(gx * gy, taps);
        const ImageD syy = window_sum(gy * gy, taps);

        for (int it = 0; it < p.iterations_per_level; ++it) {
            const ImageD residual = warp_by_flow(N, flow) - P;
            const ImageD bx = window_sum(gx * residual, taps);
            const ImageD by = window_sum(gy * residual, taps);
            parallel_for(0, P.rows(), [&](std::ptrdiff_t y) {
                for (Eigen::Index x = 0; x < P.cols(); ++x) {
                    const double a = sxx(y, x) + eps;
                    const double b = sxy(y, x);
                    const double d = syy(y, x) + eps;
                    const double det = a * d - b * b;
                    const double du = -(d * bx(y, x) - b * by(y, x)) / det;
                    const double dv = -(a * by(y, x) - b * bx(y, x)) / det;
                    flow.u(y, x) = std::clamp(flow.u(y, x) + du, -limit, limit);
                    flow.v(y, x) = std::clamp(flow.v(y, x) + dv, -limit, limit);
                }
            });
        }
    }
    return flow;
}

FlowFieldD compute_flow(const Frame& prev, const Frame& next, const FlowParams& p) {
    if (prev.channels() != 1 || next.channels() != 1) throw InputError("compute_flow expects gray frames");
    if (prev.width() != next.width() || prev.height() != next.height()) {
        throw InputError("compute_flow: dimension mismatch");
    }
    return compute_flow(to_scalar<double>(prev.plane()), to_scalar<double>(next.plane()), p);
}

double median_endpoint_error(const FlowFieldD& estimate, const FlowFieldD& truth, int margin) {
    std::vector<double> errs;
    for (Eigen::Index y = margin; y < estimate.height() - margin; ++y)
        for (Eigen::Index x = margin; x < estimate.width() - margin; ++x)
            errs.push_back(std::hypot(estimate.u(y, x) - truth.u(y, x), estimate.v(y, x) - truth.v(y, x)));
    if (errs.empty()) throw InputError("margin leaves no interior pixels");
    auto mid = errs.begin() + static_cast<std::ptrdiff_t>(errs.size() / 2);
    std::nth_element(errs.begin(), mid, errs.end());
    return *mid;
}

void write_flow(const FlowFieldD& f, const std::filesystem::path& path) {
    detail::write_planes(path, "SVFL", {&f.u, &f.v});
}

FlowFieldD read_flow(const std::filesystem::path& path) {
    auto planes = detail::read_planes(path, "SVFL", 2);
    return {std::move(planes[0]), std::move(planes[1])};
}

}  // namespace strainveil
