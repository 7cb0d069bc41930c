#include "strainveil/suppress.hpp"

#include "strainveil/error.hpp"
#include "strainveil/frame_io.hpp"
#include "strainveil/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace strainveil {

void SuppressionConfig::validate() const {
    if (!(threshold_percentile >= 0.0 && threshold_percentile <= 100.0)) {
        throw InputError("threshold_percentile must be in [0, 100]");
    }
    if (median_kernel < 3 || median_kernel % 2 == 0) throw InputError("median_kernel must be odd and >= 3");
    if (edge_band < 1) throw InputError("edge_band must be >= 1");
    if (!(face_blur_sigma >= 0.0) || !std::isfinite(face_blur_sigma)) throw InputError("face_blur_sigma must be >= 0");
    if (mask_min_blob < 0) throw InputError("mask_min_blob must be >= 0");
    if (reference_window < 0) throw InputError("reference_window must be >= 0");
}

std::size_t select_reference(const std::vector<StrainMap>& strains, ReferencePolicy policy, int window) {
    if (strains.empty()) throw InputError("select_reference: no strain maps");
    if (policy == ReferencePolicy::first_frame) return 0;
    const std::size_t n =
        window > 0 ? std::min(strains.size(), static_cast<std::size_t>(window)) : strains.size();
    std::size_t best = 0;
    double best_mean = strains[0].magnitude.mean();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = strains[i].magnitude.mean();
        if (m < best_mean) {
            best = i;
            best_mean = m;
        }
    }
    return best;
}

std::uint8_t nearest_rank_percentile(const ImageU8& values, double percentile) {
    if (values.size() == 0) throw InputError("percentile of an empty map");
    std::array<std::size_t, 256> hist{};
    for (Eigen::Index i = 0; i < values.size(); ++i) ++hist[values.data()[i]];
    const auto n = static_cast<double>(values.size());
    // Guard against representation noise in p * n / 100 for integral products.
    auto rank = static_cast<std::size_t>(std::ceil(percentile * n / 100.0 - 1e-9));
    rank = std::max<std::size_t>(rank, 1);
    std::size_t seen = 0;
    for (int v = 0; v < 256; ++v) {
        seen += hist[v];
        if (seen >= rank) return static_cast<std::uint8_t>(v);
    }
    return 255;
}

BinaryMask remove_small_blobs(const BinaryMask& m, int min_blob) {
    BinaryMask out = m;
    if (min_blob <= 1) return out;
    const Eigen::Index h = m.rows(), w = m.cols();
    Image<bool> seen = Image<bool>::Constant(h, w, false);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> stack, blob;
    for (Eigen::Index y0 = 0; y0 < h; ++y0) {
        for (Eigen::Index x0 = 0; x0 < w; ++x0) {
            if (!m(y0, x0) || seen(y0, x0)) continue;
            blob.clear();
            stack.assign(1, {y0, x0});
            seen(y0, x0) = true;
            while (!stack.empty()) {
                const auto [y, x] = stack.back();
                stack.pop_back();
                blob.emplace_back(y, x);
                constexpr int dy[4] = {-1, 1, 0, 0};
                constexpr int dx[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const Eigen::Index ny = y + dy[k], nx = x + dx[k];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w || !m(ny, nx) || seen(ny, nx)) continue;
                    seen(ny, nx) = true;
                    stack.emplace_back(ny, nx);
                }
            }
            if (blob.size() < static_cast<std::size_t>(min_blob)) {
                for (const auto& [y, x] : blob) out(y, x) = false;
            }
        }
    }
    return out;
}

BinaryMask threshold_mask(const StrainMap& s, double percentile, int min_blob) {
    if (!s.has_normalized()) throw InputError("threshold_mask needs a normalized strain map");
    const std::uint8_t t = nearest_rank_percentile(s.normalized, percentile);
    return remove_small_blobs(s.normalized > t, min_blob);
}

Frame replace_pixels(const Frame& current, const Frame& reference, const BinaryMask& m) {
    if (!current.same_shape(reference)) throw InputError("replace_pixels: frame shape mismatch");
    if (m.rows() != current.height() || m.cols() != current.width()) {
        throw InputError("replace_pixels: mask size mismatch");
    }
    Frame out = current;
    for (int y = 0; y < current.height(); ++y)
        for (int x = 0; x < current.width(); ++x)
            if (m(y, x))
                for (int c = 0; c < current.channels(); ++c) out.at(x, y, c) = reference.at(x, y, c);
    return out;
}

namespace {

// One separable pass of a square structuring element. `any` selects
// dilation (true if any tap is set) vs erosion (true only if every tap is
// set and inside the grid).
BinaryMask morph_pass(const BinaryMask& m, int r, bool horizontal, bool any) {
    const Eigen::Index h = m.rows(), w = m.cols();
    BinaryMask out(h, w);
    for (Eigen::Index y = 0; y < h; ++y) {
        for (Eigen::Index x = 0; x < w; ++x) {
            bool acc = !any;
            for (int k = -r; k <= r; ++k) {
                const Eigen::Index yy = horizontal ? y : y + k;
                const Eigen::Index xx = horizontal ? x + k : x;
                const bool inside = yy >= 0 && yy < h && xx >= 0 && xx < w;
                const bool bit = inside && m(yy, xx);
                if (any && bit) {
                    acc = true;
                    break;
                }
                if (!any && !bit) {
                    acc = false;
                    break;
                }
            }
            out(y, x) = acc;
        }
    }
    return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& m, int radius) {
    return morph_pass(morph_pass(m, radius, true, true), radius, false, true);
}

BinaryMask erode(const BinaryMask& m, int radius) {
    return morph_pass(morph_pass(m, radius, true, false), radius, false, false);
}

BinaryMask mask_edge_band(const BinaryMask& m, int band) {
    if (band < 1) throw InputError("edge band must be >= 1");
    return dilate(m, band) && !erode(m, band);
}

Frame median_smooth_edges(const Frame& frame, const BinaryMask& band, int kernel) {
    if (kernel < 3 || kernel % 2 == 0) throw InputError("median kernel must be odd and >= 3");
    if (band.rows() != frame.height() || band.cols() != frame.width()) {
        throw InputError("median_smooth_edges: band size mismatch");
    }
    const int r = kernel / 2;
    Frame out = frame;
    parallel_for(0, frame.height(), [&](std::ptrdiff_t yy) {
        const int y = static_cast<int>(yy);
        std::vector<std::uint8_t> window(static_cast<std::size_t>(kernel) * kernel);
        for (int x = 0; x < frame.width(); ++x) {
            if (!band(y, x)) continue;
            for (int c = 0; c < frame.channels(); ++c) {
                std::size_t n = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int sy = std::clamp(y + dy, 0, frame.height() - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int sx = std::clamp(x + dx, 0, frame.width() - 1);
                        window[n++] = frame.at(sx, sy, c);
                    }
                }
                auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
                std::nth_element(window.begin(), mid, window.end());
                out.at(x, y, c) = *mid;
            }
        }
    });
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[static_cast<std::size_t>(i + radius)];
    }
    for (double& v : k) v /= sum;
    return k;
}

Frame smooth_face(const Frame& frame, double sigma) {
    if (!(sigma >= 0.0)) throw InputError("smooth_face: sigma must be >= 0");
    if (sigma == 0.0) return frame;
    const std::vector<double> k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    Frame out(frame.width(), frame.height(), frame.channels());
    for (int c = 0; c < frame.channels(); ++c) {
        const ImageD src = frame.plane(c).cast<double>();
        ImageD tmp(src.rows(), src.cols()), dst(src.rows(), src.cols());
        parallel_for(0, src.rows(), [&](std::ptrdiff_t y) {
            for (Eigen::Index x = 0; x < src.cols(); ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * clamped(src, x + i, y);
                tmp(y, x) = acc;
            }
        });
        parallel_for(0, src.rows(), [&](std::ptrdiff_t y) {
            for (Eigen::Index x = 0; x < src.cols(); ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * clamped(tmp, x, y + i);
                dst(y, x) = acc;
            }
        });
        out.set_plane(c, to_u8(dst));
    }
    return out;
}

namespace {

std::vector<FlowFieldD> consecutive_flows(const std::vector<Frame>& luma, const FlowParams& flow_params) {
    std::vector<FlowFieldD> flows;
    flows.reserve(luma.size() - 1);
    for (std::size_t i = 1; i < luma.size(); ++i) {
        try {
            flows.push_back(compute_flow(luma[i - 1], luma[i], flow_params));
        } catch (const Error& e) {
            throw PipelineError(std::string("optical flow failed: ") + e.what(), static_cast<long>(i));
        }
    }
    return flows;
}

std::vector<Frame> luma_of(const FrameSequence& seq) {
    std::vector<Frame> luma;
    luma.reserve(seq.frames.size());
    for (const Frame& f : seq.frames) luma.push_back(to_luma(f));
    return luma;
}

}  // namespace

std::vector<StrainMap> strain_maps_for(const FrameSequence& aligned, const FlowParams& flow_params,
                                       NormalizationMode mode) {
    validate_sequence(aligned);
    flow_params.validate();
    return strain_sequence(consecutive_flows(luma_of(aligned), flow_params), mode);
}

SuppressionResult suppress_sequence(const FrameSequence& aligned, const SuppressionConfig& cfg,
                                    const FlowParams& flow_params) {
    cfg.validate();
    SuppressionResult result;
    result.strains = strain_maps_for(aligned, flow_params, cfg.normalization);

    const std::size_t pick = select_reference(result.strains, cfg.reference_policy, cfg.reference_window);
    result.reference_frame = cfg.reference_policy == ReferencePolicy::first_frame ? 0 : pick + 1;
    const Frame& reference = aligned.frames[result.reference_frame];

    const std::size_t n = aligned.frames.size();
    result.masks.resize(n - 1);
    result.frames.fps = aligned.fps;
    result.frames.frames.resize(n);
    result.frames.frames[0] = aligned.frames[0];

    // Per-frame compositing is independent once the reference is fixed.
    std::vector<std::string> errors(n);
    parallel_for(1, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
        try {
            const StrainMap& strain = result.strains[i - 1];
            BinaryMask mask = threshold_mask(strain, cfg.threshold_percentile, cfg.mask_min_blob);
            if (static_cast<std::size_t>(i) == result.reference_frame) {
                result.frames.frames[i] = aligned.frames[i];
            } else {
                const Frame replaced = replace_pixels(aligned.frames[i], reference, mask);
                const Frame edged =
                    median_smooth_edges(replaced, mask_edge_band(mask, cfg.edge_band), cfg.median_kernel);
                result.frames.frames[i] = smooth_face(edged, cfg.face_blur_sigma);
            }
            result.masks[i - 1] = std::move(mask);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) throw PipelineError("suppression failed: " + errors[i], static_cast<long>(i));
    }
    return result;
}

Frame mask_to_frame(const BinaryMask& m) {
    return Frame::from_plane(m.select(ImageU8::Constant(m.rows(), m.cols(), 255), ImageU8::Zero(m.rows(), m.cols())));
}

}  // namespace strainveil
