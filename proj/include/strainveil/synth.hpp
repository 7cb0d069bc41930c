#pragma once

#include "strainveil/flow.hpp"
#include "strainveil/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace strainveil {

enum class Deformation { none, bulge, shear };

Deformation parse_deformation(const std::string& name);
const char* deformation_name(Deformation d);

inline constexpr double kMaxSynthAmplitude = 8.0;

/// Seeded band-limited noise: uniform noise, Gaussian blur of `sigma`, then
/// stretched to [16, 240].
Frame random_texture(int width, int height, std::uint64_t seed, double sigma = 3.0);

/// Gaussian radius of the deformation as a fraction of the shorter frame edge.
inline constexpr double kDefaultDeformExtent = 1.0 / 6.0;

/// Peak-normalized displacement field D(x) (max |D| == amplitude) centred on
/// the frame. bulge: radial, shear: horizontal displacement varying with y.
FlowFieldD deformation_field(Deformation d, double amplitude, int width, int height,
                             double extent = kDefaultDeformExtent);

/// Raised cosine 0.5 (1 - cos(2 pi t / frames)): zero at t = 0, one at the
/// apex t = frames / 2, symmetric about the apex.
double envelope(int t, int frames);

struct SynthSequence {
    FrameSequence frames;
    /// ground_truth[k] is the flow from frame k to frame k + 1.
    std::vector<FlowFieldD> ground_truth;
};

/// frame_t(x) = base(x - envelope(t) D(x)), so content moves by the scaled
/// deformation. Throws InputError when the field is too steep to invert.
SynthSequence synth_sequence(const Frame& base, Deformation d, double amplitude, int frames,
                             double extent = kDefaultDeformExtent);

/// Exact flow between two envelope weights of the same deformation field,
/// solved per pixel by fixed-point iteration.
FlowFieldD synth_flow_between(const FlowFieldD& field, double weight_from, double weight_to);

/// Renders base(x - weight * D(x)) for every channel.
Frame render_deformed(const Frame& base, const FlowFieldD& field, double weight);

}  // namespace strainveil
