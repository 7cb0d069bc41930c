#include "strainveil/synth.hpp"

#include "strainveil/error.hpp"
#include "strainveil/parallel.hpp"
#include "strainveil/strain.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace strainveil {

Deformation parse_deformation(const std::string& name) {
    if (name == "none") return Deformation::none;
    if (name == "bulge") return Deformation::bulge;
    if (name == "shear") return Deformation::shear;
    throw InputError("unknown deformation '" + name + "' (expected none, bulge or shear)");
}

const char* deformation_name(Deformation d) {
    switch (d) {
    case Deformation::none:
        return "none";
    case Deformation::bulge:
        return "bulge";
    case Deformation::shear:
        return "shear";
    }
    return "?";
}

Frame random_texture(int width, int height, std::uint64_t seed, double sigma) {
    std::mt19937_64 rng(seed);
    ImageD noise(height, width);
    // Top 53 bits as a double in [0, 1); avoids implementation-defined
    // distribution objects so textures match across standard libraries.
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53;

    ImageD blurred = noise;
    if (sigma > 0.0) {
        const int r = static_cast<int>(std::ceil(3.0 * sigma));
        std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
        double sum = 0.0;
        for (int i = -r; i <= r; ++i) sum += k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        for (double& v : k) v /= sum;
        ImageD tmp(height, width);
        for (Eigen::Index y = 0; y < height; ++y)
            for (Eigen::Index x = 0; x < width; ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * clamped(noise, x + i, y);
                tmp(y, x) = acc;
            }
        for (Eigen::Index y = 0; y < height; ++y)
            for (Eigen::Index x = 0; x < width; ++x) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * clamped(tmp, x, y + i);
                blurred(y, x) = acc;
            }
    }
    const double lo = blurred.minCoeff(), hi = blurred.maxCoeff();
    const ImageD stretched = hi > lo ? ((blurred - lo) / (hi - lo) * 224.0 + 16.0).eval() : ImageD::Constant(height, width, 128.0);
    return Frame::from_plane(to_u8(stretched));
}

FlowFieldD deformation_field(Deformation d, double amplitude, int width, int height, double extent) {
    FlowFieldD f(width, height);
    if (d == Deformation::none || amplitude == 0.0) return f;
    const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
    const double sigma = std::min(width, height) * extent;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = (x - cx) / sigma, dy = (y - cy) / sigma;
            // exp(1/2 - r^2/2) * r peaks at r = 1 with value 1.
            const double g = std::exp(0.5 - 0.5 * (dx * dx + dy * dy));
            if (d == Deformation::bulge) {
                f.u(y, x) = amplitude * dx * g;
                f.v(y, x) = amplitude * dy * g;
            } else {
                f.u(y, x) = amplitude * dy * g;
            }
        }
    }
    return f;
}

double envelope(int t, int frames) {
    if (frames <= 0) return 0.0;
    return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / frames));
}

Frame render_deformed(const Frame& base, const FlowFieldD& field, double weight) {
    Frame out(base.width(), base.height(), base.channels());
    if (weight == 0.0) return base;
    for (int c = 0; c < base.channels(); ++c) {
        const ImageD src = base.plane(c).cast<double>();
        ImageD dst(src.rows(), src.cols());
        for (Eigen::Index y = 0; y < src.rows(); ++y)
            for (Eigen::Index x = 0; x < src.cols(); ++x)
                dst(y, x) = bilinear(src, static_cast<double>(x) - weight * field.u(y, x),
                                     static_cast<double>(y) - weight * field.v(y, x));
        out.set_plane(c, to_u8(dst));
    }
    return out;
}

FlowFieldD synth_flow_between(const FlowFieldD& field, double weight_from, double weight_to) {
    FlowFieldD flow(field.width(), field.height());
    parallel_for(0, field.height(), [&](std::ptrdiff_t y) {
        for (Eigen::Index x = 0; x < field.width(); ++x) {
            // Solve p - w_to D(p) = x - w_from D(x) for p.
            const double qx = static_cast<double>(x) - weight_from * field.u(y, x);
            const double qy = static_cast<double>(y) - weight_from * field.v(y, x);
            double px = static_cast<double>(x), py = static_cast<double>(y);
            for (int it = 0; it < 200; ++it) {
                const double nx = qx + weight_to * bilinear(field.u, px, py);
                const double ny = qy + weight_to * bilinear(field.v, px, py);
                const double step = std::hypot(nx - px, ny - py);
                px = nx;
                py = ny;
                if (step < 1e-12) break;
            }
            flow.u(y, x) = px - static_cast<double>(x);
            flow.v(y, x) = py - static_cast<double>(y);
        }
    });
    return flow;
}

SynthSequence synth_sequence(const Frame& base, Deformation d, double amplitude, int frames, double extent) {
    if (frames < 2) throw InputError("synth_sequence needs at least 2 frames");
    if (!(amplitude >= 0.0) || amplitude > kMaxSynthAmplitude) {
        throw InputError("amplitude must be within [0, 8] px");
    }
    if (!(extent > 0.0)) throw InputError("deformation extent must be > 0");
    const FlowFieldD field = deformation_field(d, amplitude, base.width(), base.height(), extent);
    // The backward map x -> x - w D(x) is invertible, and the fixed-point
    // solve converges, while the displacement gradient stays below 1.
    const FlowGradients<double> g = flow_gradients(field);
    const double steep = (g.du_dx.abs() + g.du_dy.abs()).max(g.dv_dx.abs() + g.dv_dy.abs()).maxCoeff();
    if (steep >= 0.9) {
        throw InputError("amplitude " + std::to_string(amplitude) + " too large for stable warping of a " +
                         std::to_string(base.width()) + "x" + std::to_string(base.height()) + " frame");
    }

    SynthSequence out;
    out.frames.frames.reserve(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) out.frames.frames.push_back(render_deformed(base, field, envelope(t, frames)));
    for (int t = 1; t < frames; ++t) {
        out.ground_truth.push_back(synth_flow_between(field, envelope(t - 1, frames), envelope(t, frames)));
    }
    return out;
}

}  // namespace strainveil
