#include "strainveil/error.hpp"
#include "strainveil/flow.hpp"
#include "strainveil/parallel.hpp"
#include "strainveil/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace strainveil;

namespace {

// next(x) = prev(x - s): content moves by +s, so the flow prev -> next is s.
ImageD shifted(const ImageD& img, int sx, int sy) {
    ImageD out(img.rows(), img.cols());
    for (Eigen::Index y = 0; y < img.rows(); ++y)
        for (Eigen::Index x = 0; x < img.cols(); ++x) out(y, x) = clamped(img, x - sx, y - sy);
    return out;
}

ImageD texture(int w, int h, std::uint64_t seed) { return to_scalar<double>(random_texture(w, h, seed).plane()); }

double mean_abs_residual(const ImageD& prev, const ImageD& next, const FlowFieldD& f, int margin) {
    const ImageD r = (warp_by_flow(next, f) - prev).abs();
    return r.block(margin, margin, r.rows() - 2 * margin, r.cols() - 2 * margin).mean();
}

}  // namespace

TEST_CASE("build_pyramid sizes, identity level and constants") {
    const Frame f = testing::random_frame(64, 64, 1, 1);
    const auto pyr = build_pyramid(f, 3);
    REQUIRE(pyr.size() == 3);
    CHECK(pyr[0] == f);
    CHECK(pyr[1].width() == 32);
    CHECK(pyr[2].width() == 16);
    CHECK(pyr[2].height() == 16);
    CHECK(build_pyramid(f, 1).front() == f);

    const Frame flat(64, 48, 1, 123);
    for (const Frame& level : build_pyramid(flat, 2)) CHECK((level.plane().array() == 123).all());

    CHECK_THROWS_WITH_AS(build_pyramid(f, 4), doctest::Contains("too many pyramid levels"), InputError);
    CHECK_THROWS_AS(build_pyramid(f, 0), InputError);
}

TEST_CASE("warp_by_flow: zero flow and analytic ramp") {
    ImageD ramp(20, 30);
    for (Eigen::Index y = 0; y < 20; ++y)
        for (Eigen::Index x = 0; x < 30; ++x) ramp(y, x) = static_cast<double>(x);
    FlowFieldD zero(30, 20);
    CHECK((warp_by_flow(ramp, zero) == ramp).all());

    FlowFieldD one(30, 20);
    one.u.setConstant(1.0);
    const ImageD w = warp_by_flow(ramp, one);
    for (Eigen::Index y = 0; y < 20; ++y)
        for (Eigen::Index x = 0; x < 30; ++x) REQUIRE(w(y, x) == std::min<double>(x + 1, 29));

    const Frame f = testing::random_frame(30, 20, 1, 2);
    CHECK(warp_by_flow(f, zero) == f);
}

TEST_CASE("compute_flow: zero-motion fixed point") {
    const ImageD t = texture(96, 96, 3);
    const FlowFieldD f = compute_flow(t, t);
    CHECK(f.u.abs().maxCoeff() < 1e-6);
    CHECK(f.v.abs().maxCoeff() < 1e-6);
}

TEST_CASE("compute_flow: textureless frames give near-zero flow") {
    ImageD flat(64, 64);
    flat.setConstant(100.0);
    const FlowFieldD f = compute_flow(flat, flat + 0.0);
    CHECK(f.u.abs().maxCoeff() < 1e-9);
    CHECK(f.v.abs().maxCoeff() < 1e-9);
}

TEST_CASE("compute_flow recovers a (+2, 0) shift") {
    const ImageD prev = texture(128, 128, 4);
    const FlowFieldD f = compute_flow(prev, shifted(prev, 2, 0));
    FlowFieldD truth(128, 128);
    truth.u.setConstant(2.0);
    CHECK(median_endpoint_error(f, truth, 16) < 0.25);
}

TEST_CASE("compute_flow output is finite and clamped") {
    const ImageD prev = texture(64, 64, 5);
    const ImageD next = to_scalar<double>(testing::random_frame(64, 64, 1, 6).plane());
    FlowParams p;
    p.max_displacement = 3.0;
    const FlowFieldD f = compute_flow(prev, next, p);
    CHECK(f.all_finite());
    CHECK(f.u.abs().maxCoeff() <= 3.0);
    CHECK(f.v.abs().maxCoeff() <= 3.0);
}

TEST_CASE("more iterations lower the photometric residual on smooth motion") {
    const Frame base = random_texture(96, 96, 7);
    const FlowFieldD field = deformation_field(Deformation::bulge, 3.0, 96, 96);
    const ImageD prev = to_scalar<double>(base.plane());
    const ImageD next = to_scalar<double>(render_deformed(base, field, 1.0).plane());
    FlowParams p1, p3;
    p1.iterations_per_level = 1;
    p3.iterations_per_level = 3;
    const double r1 = mean_abs_residual(prev, next, compute_flow(prev, next, p1), 8);
    const double r3 = mean_abs_residual(prev, next, compute_flow(prev, next, p3), 8);
    CHECK(r3 < r1);
}

TEST_CASE("compute_flow is bit-identical across thread counts") {
    const ImageD prev = texture(80, 64, 8);
    const ImageD next = shifted(prev, 1, -1);
    set_num_threads(1);
    const FlowFieldD a = compute_flow(prev, next);
    set_num_threads(7);
    const FlowFieldD b = compute_flow(prev, next);
    set_num_threads(0);
    CHECK((a.u == b.u).all());
    CHECK((a.v == b.v).all());
}

TEST_CASE("compute_flow parameter and shape errors") {
    const ImageD a = texture(64, 64, 9);
    CHECK_THROWS_AS(compute_flow(a, texture(64, 48, 9)), InputError);
    FlowParams bad;
    bad.window_radius = 0;
    CHECK_THROWS_AS(compute_flow(a, a, bad), InputError);
    bad = {};
    bad.regularization_eps = 0;
    CHECK_THROWS_AS(compute_flow(a, a, bad), InputError);
    CHECK_THROWS_AS(compute_flow(testing::random_frame(32, 32, 3, 1), testing::random_frame(32, 32, 3, 2)),
                    InputError);
}

TEST_CASE("SVFL round trip stores f32 planes") {
    testing::TempDir dir("svfl");
    FlowFieldD f(17, 9);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(-5, 5);
    for (Eigen::Index y = 0; y < 9; ++y)
        for (Eigen::Index x = 0; x < 17; ++x) f.u(y, x) = d(rng), f.v(y, x) = d(rng);
    write_flow(f, dir / "f.svfl");
    CHECK(std::filesystem::file_size(dir / "f.svfl") == 4 + 8 + 2 * 17 * 9 * 4);
    const FlowFieldD back = read_flow(dir / "f.svfl");
    CHECK((back.u - f.u.cast<float>().cast<double>()).abs().maxCoeff() == 0.0);
    CHECK((back.v - f.v.cast<float>().cast<double>()).abs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(read_flow(dir / "absent.svfl"), InputError);
}
