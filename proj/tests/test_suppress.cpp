#include "strainveil/error.hpp"
#include "strainveil/frame_io.hpp"
#include "strainveil/suppress.hpp"
#include "strainveil/synth.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace strainveil;

using testing::naive_dilate;
using testing::naive_erode;
using testing::naive_median;

namespace {

std::uint8_t sorted_percentile(const ImageU8& v, double p) {
    std::vector<int> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    const auto rank = std::max<long>(1, static_cast<long>(std::ceil(p * s.size() / 100.0 - 1e-9)));
    return static_cast<std::uint8_t>(s[static_cast<std::size_t>(rank - 1)]);
}

StrainMap strain_with_bytes(const ImageU8& bytes) {
    StrainMap s;
    s.magnitude = bytes.cast<double>();
    s.normalized = bytes;
    return s;
}

FrameSequence constant_sequence(int n, const Frame& f) {
    FrameSequence seq;
    seq.frames.assign(static_cast<std::size_t>(n), f);
    return seq;
}

}  // namespace

TEST_CASE("select_reference policies") {
    std::vector<StrainMap> s(3);
    s[0].magnitude = ImageD::Constant(4, 4, 0.5);
    s[1].magnitude = ImageD::Constant(4, 4, 0.1);
    s[2].magnitude = ImageD::Constant(4, 4, 0.9);
    CHECK(select_reference(s, ReferencePolicy::first_frame) == 0);
    CHECK(select_reference(s, ReferencePolicy::min_mean_strain) == 1);
    CHECK(select_reference(s, ReferencePolicy::min_mean_strain, 1) == 0);
    for (auto& m : s) m.magnitude.setConstant(0.3);
    CHECK(select_reference(s, ReferencePolicy::min_mean_strain) == 0);
    CHECK_THROWS_AS(select_reference({}, ReferencePolicy::first_frame), InputError);
}

TEST_CASE("nearest_rank_percentile matches a sort-based oracle") {
    std::mt19937 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const Frame f = testing::random_frame(13, 11, 1, 100 + trial);
        ImageU8 v = f.plane();
        if (trial % 3 == 0) v = (v / 32) * 32;  // heavy ties
        for (double p : {0.0, 1.0, 10.0, 33.3, 50.0, 90.0, 99.0, 100.0}) {
            REQUIRE(nearest_rank_percentile(v, p) == sorted_percentile(v, p));
        }
    }
}

TEST_CASE("threshold_mask edge cases") {
    CHECK_FALSE(threshold_mask(strain_with_bytes(ImageU8::Zero(16, 16)), 10, 0).any());

    ImageU8 ramp(16, 16);
    for (int i = 0; i < 256; ++i) ramp(i / 16, i % 16) = static_cast<std::uint8_t>(i);
    const BinaryMask m = threshold_mask(strain_with_bytes(ramp), 10, 0);
    const std::uint8_t t = sorted_percentile(ramp, 10);
    CHECK(m.count() == (ramp > t).count());
    CHECK(m.count() == 230);  // ~90% of pixels
    CHECK_FALSE(threshold_mask(strain_with_bytes(ramp), 100, 0).any());
}

TEST_CASE("threshold_mask is monotone in the percentile (property)") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        const ImageU8 v = testing::random_frame(24, 24, 1, seed).plane();
        long prev = std::numeric_limits<long>::max();
        for (double p = 0; p <= 100; p += 5) {
            const long c = threshold_mask(strain_with_bytes(v), p, 9).count();
            REQUIRE(c <= prev);
            prev = c;
        }
    }
}

TEST_CASE("remove_small_blobs uses 4-connectivity") {
    BinaryMask m = BinaryMask::Constant(10, 10, false);
    m.block(1, 1, 3, 3).setConstant(true);  // 9 px blob survives
    m(7, 7) = m(8, 8) = true;               // diagonal neighbours are separate blobs
    m(7, 2) = m(7, 3) = true;
    const BinaryMask out = remove_small_blobs(m, 9);
    CHECK(out.count() == 9);
    CHECK(remove_small_blobs(m, 2).count() == 11);
    CHECK(remove_small_blobs(m, 0).count() == m.count());
}

TEST_CASE("replace_pixels: empty, full and checkerboard masks") {
    const Frame cur = testing::random_frame(16, 12, 3, 1);
    const Frame ref = testing::random_frame(16, 12, 3, 2);
    CHECK(replace_pixels(cur, ref, BinaryMask::Constant(12, 16, false)) == cur);
    CHECK(replace_pixels(cur, ref, BinaryMask::Constant(12, 16, true)) == ref);
    BinaryMask checker(12, 16);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) checker(y, x) = (x + y) % 2 == 0;
    const Frame out = replace_pixels(cur, ref, checker);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) REQUIRE(out.at(x, y, c) == (checker(y, x) ? ref : cur).at(x, y, c));
    CHECK_THROWS_AS(replace_pixels(cur, testing::random_frame(16, 12, 1, 3), checker), InputError);
    CHECK_THROWS_AS(replace_pixels(cur, ref, BinaryMask::Constant(4, 4, true)), InputError);
}

TEST_CASE("morphology matches brute force on random masks") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const BinaryMask m = testing::random_mask(12, 9, rng, 0.3 + 0.004 * trial);
        for (int r : {1, 2, 3}) {
            REQUIRE((dilate(m, r) == naive_dilate(m, r)).all());
            REQUIRE((erode(m, r) == naive_erode(m, r)).all());
        }
    }
}

TEST_CASE("mask_edge_band: empty, full and single square") {
    CHECK_FALSE(mask_edge_band(BinaryMask::Constant(16, 16, false), 2).any());

    const BinaryMask full = BinaryMask::Constant(16, 16, true);
    const BinaryMask band = mask_edge_band(full, 2);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const bool border = x < 2 || y < 2 || x >= 14 || y >= 14;
            REQUIRE(band(y, x) == border);
        }

    BinaryMask sq = BinaryMask::Constant(16, 16, false);
    sq.block(5, 5, 5, 5).setConstant(true);
    const BinaryMask ring = mask_edge_band(sq, 1);
    CHECK((ring == (naive_dilate(sq, 1) && !naive_erode(sq, 1))).all());
    CHECK(ring.count() == 7 * 7 - 3 * 3);
    CHECK_FALSE(ring(7, 7));
    CHECK(ring(4, 4));
    CHECK(ring(5, 5));
    CHECK_THROWS_AS(mask_edge_band(sq, 0), InputError);
}

TEST_CASE("median_smooth_edges: trivial cases and salt-and-pepper against a sort oracle") {
    const Frame f = testing::random_frame(20, 20, 1, 4);
    CHECK(median_smooth_edges(f, BinaryMask::Constant(20, 20, false), 5) == f);
    const Frame flat(20, 20, 3, 77);
    CHECK(median_smooth_edges(flat, BinaryMask::Constant(20, 20, true), 5) == flat);

    Frame noisy(24, 24, 1, 128);
    BinaryMask sq = BinaryMask::Constant(24, 24, false);
    sq.block(6, 6, 12, 12).setConstant(true);
    const BinaryMask band = mask_edge_band(sq, 2);
    std::mt19937 rng(5);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            if (band(y, x) && rng() % 5 == 0) noisy.at(x, y) = rng() % 2 ? 255 : 0;
    const Frame out = median_smooth_edges(noisy, band, 5);
    CHECK(out == naive_median(noisy, band, 5));
    CHECK((out.plane().array() == 128).all());

    CHECK_THROWS_AS(median_smooth_edges(f, BinaryMask::Constant(20, 20, true), 4), InputError);
    CHECK_THROWS_AS(median_smooth_edges(f, BinaryMask::Constant(8, 8, true), 5), InputError);
}

TEST_CASE("smooth_face: identity, constants and analytic impulse response") {
    const Frame f = testing::random_frame(20, 20, 3, 6);
    CHECK(smooth_face(f, 0.0) == f);
    const Frame flat(20, 20, 1, 200);
    CHECK(smooth_face(flat, 2.5) == flat);

    Frame impulse(31, 31, 1, 0);
    impulse.at(15, 15) = 255;
    const Frame out = smooth_face(impulse, 1.0);
    double norm = 0;
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) norm += std::exp(-(dx * dx + dy * dy) / 2.0);
    for (int y = 0; y < 31; ++y)
        for (int x = 0; x < 31; ++x) {
            const int dx = x - 15, dy = y - 15;
            const double expect =
                std::abs(dx) <= 3 && std::abs(dy) <= 3 ? 255.0 * std::exp(-(dx * dx + dy * dy) / 2.0) / norm : 0.0;
            REQUIRE(std::abs(out.at(x, y) - expect) <= 1.0);
        }
    CHECK_THROWS_AS(smooth_face(f, -1), InputError);
}

TEST_CASE("suppress_sequence leaves a still sequence untouched") {
    SuppressionConfig cfg;
    cfg.face_blur_sigma = 0;
    const FrameSequence seq = constant_sequence(5, random_texture(64, 64, 3));
    const SuppressionResult r = suppress_sequence(seq, cfg);
    CHECK(r.frames.frames == seq.frames);
    CHECK(r.masks.size() == 4);
    for (const auto& m : r.masks) CHECK_FALSE(m.any());
}

TEST_CASE("suppress_sequence: length, containment and reference selection") {
    const Frame base = random_texture(64, 64, 8);
    const SynthSequence syn = synth_sequence(base, Deformation::bulge, 3.0, 8);
    SuppressionConfig cfg;
    cfg.face_blur_sigma = 0;
    cfg.threshold_percentile = 90;
    const SuppressionResult r = suppress_sequence(syn.frames, cfg);
    REQUIRE(r.frames.size() == syn.frames.size());
    CHECK(r.frames.frames[0] == syn.frames.frames[0]);
    CHECK(r.reference_frame == 0);
    for (std::size_t i = 1; i < r.frames.size(); ++i) {
        const BinaryMask& m = r.masks[i - 1];
        const BinaryMask touched = m || mask_edge_band(m, cfg.edge_band);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (!touched(y, x)) REQUIRE(r.frames.frames[i].at(x, y) == syn.frames.frames[i].at(x, y));
    }

    cfg.reference_policy = ReferencePolicy::min_mean_strain;
    const SuppressionResult r2 = suppress_sequence(syn.frames, cfg);
    CHECK(r2.reference_frame >= 1);
    CHECK(r2.frames.frames[r2.reference_frame] == syn.frames.frames[r2.reference_frame]);
}

TEST_CASE("suppress_sequence validation errors") {
    const FrameSequence seq = constant_sequence(3, random_texture(32, 32, 1));
    SuppressionConfig cfg;
    cfg.median_kernel = 4;
    CHECK_THROWS_AS(suppress_sequence(seq, cfg), InputError);
    cfg = {};
    cfg.threshold_percentile = 101;
    CHECK_THROWS_AS(suppress_sequence(seq, cfg), InputError);
    CHECK_THROWS_AS(suppress_sequence(constant_sequence(1, random_texture(32, 32, 1)), {}), InputError);
}
