#pragma once

#include "strainveil/flow.hpp"
#include "strainveil/image.hpp"
#include "strainveil/strain.hpp"

#include <vector>

namespace strainveil {

enum class ReferencePolicy { first_frame, min_mean_strain };

struct SuppressionConfig {
    double threshold_percentile = 10.0;
    ReferencePolicy reference_policy = ReferencePolicy::first_frame;
    /// Number of leading strain maps searched by min_mean_strain; 0 = all.
    int reference_window = 0;
    int median_kernel = 5;
    int edge_band = 3;
    double face_blur_sigma = 1.0;
    int mask_min_blob = 9;
    NormalizationMode normalization = NormalizationMode::per_frame;

    void validate() const;
};

/// first_frame -> 0. min_mean_strain -> index into `strains` of the lowest
/// mean raw magnitude within the window, lowest index on ties.
std::size_t select_reference(const std::vector<StrainMap>& strains, ReferencePolicy policy, int window = 0);

/// Nearest-rank percentile: smallest value v with at least p% of samples <= v.
std::uint8_t nearest_rank_percentile(const ImageU8& values, double percentile);

/// Clears 4-connected true regions smaller than `min_blob` pixels.
BinaryMask remove_small_blobs(const BinaryMask& m, int min_blob);

/// bits = normalized > percentile(normalized), then despeckled.
BinaryMask threshold_mask(const StrainMap& s, double percentile, int min_blob = 9);

/// out = reference where mask, current elsewhere; all channels together.
Frame replace_pixels(const Frame& current, const Frame& reference, const BinaryMask& m);

/// Square-element morphology; pixels outside the grid count as false.
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);

/// dilate(m, band) && !erode(m, band).
BinaryMask mask_edge_band(const BinaryMask& m, int band);

/// Pixels inside `band` take the median of the kernel x kernel window of the
/// input (edge-clamped); the rest are copied.
Frame median_smooth_edges(const Frame& frame, const BinaryMask& band, int kernel);

/// Normalized Gaussian taps for radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur over the whole frame; sigma == 0 is the identity.
Frame smooth_face(const Frame& frame, double sigma);

struct SuppressionResult {
    FrameSequence frames;
    /// strains[k] and masks[k] belong to frame k + 1 (flow from frame k).
    std::vector<StrainMap> strains;
    std::vector<BinaryMask> masks;
    std::size_t reference_frame = 0;
};

/// Per frame i >= 1: flow(i-1 -> i) on luma, strain, mask, replacement from
/// the reference frame, median smoothing of the mask edges, then the
/// full-face blur. Frame 0 and the reference frame pass through unchanged.
SuppressionResult suppress_sequence(const FrameSequence& aligned, const SuppressionConfig& cfg,
                                    const FlowParams& flow_params = {});

/// Flow and strain only (no compositing), for strain-map export.
std::vector<StrainMap> strain_maps_for(const FrameSequence& aligned, const FlowParams& flow_params,
                                       NormalizationMode mode = NormalizationMode::per_frame);

Frame mask_to_frame(const BinaryMask& m);

}  // namespace strainveil
