#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "heatmap.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace hsjp;
using namespace hsjp::heatmap;

TEST_SUITE_BEGIN("heatmap");

TEST_CASE("sigma_bound follows out_size / (6n)") {
    CHECK(sigma_bound(6, 56) == doctest::Approx(56.0 / 36.0));   // 1.5556
    CHECK(sigma_bound(1, 56) == doctest::Approx(56.0 / 6.0));    // 9.333
    CHECK(sigma_bound(8, 56) == doctest::Approx(56.0 / 48.0));   // 1.1667
    CHECK_THROWS_AS(sigma_bound(0, 56), ArgError);
}

TEST_CASE("render_targets peaks at 1 when the center is a pixel center") {
    GaussianSpec spec;
    spec.sigma = 1.5;
    spec.centers = {{10.5, 20.5}};
    const HeatmapStack s = render_targets(spec, 56, 56);
    CHECK(s.channel(0)[20 * 56 + 10] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("render value at one sigma is exp(-1/2)") {
    GaussianSpec spec;
    spec.sigma = 2.0;
    spec.centers = {{10.5, 10.5}};
    const HeatmapStack s = render_targets(spec, 32, 32);
    // pixel (12,10) has center (12.5,10.5), exactly sigma away
    CHECK(s.channel(0)[10 * 32 + 12] == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("out-of-frame centers are masked and zeroed") {
    GaussianSpec spec;
    spec.sigma = 1.5;
    spec.centers = {{-3.0, 10.0}, {5.0, 5.0}, {10.0, 56.0}};
    const HeatmapStack s = render_targets(spec, 56, 56);
    CHECK(s.mask[0] == 0);
    CHECK(s.mask[1] == 1);
    CHECK(s.mask[2] == 0);  // y == height is outside the half-open frame
    for (int i = 0; i < 56 * 56; ++i) CHECK(s.channel(0)[i] == 0.0f);
}

TEST_CASE("masked_mse hand cases") {
    HeatmapStack g = HeatmapStack::zeros(1, 56, 56);
    HeatmapStack h = HeatmapStack::zeros(1, 56, 56);
    CHECK(masked_mse(g, h) == 0.0);

    const double delta = 0.73;
    h.data[137] = static_cast<float>(delta);
    const double d = static_cast<double>(h.data[137]);
    CHECK(masked_mse(g, h) == doctest::Approx(d * d / 3136.0).epsilon(1e-12));

    g.mask[0] = 0;
    CHECK(masked_mse(g, h) == 0.0);  // all-masked: zero regardless of h
}

TEST_CASE("masked_mse rejects shape mismatches") {
    HeatmapStack g = HeatmapStack::zeros(1, 8, 8);
    HeatmapStack h = HeatmapStack::zeros(2, 8, 8);
    CHECK_THROWS_AS(masked_mse(g, h), ShapeError);
}

TEST_CASE("loss symmetry when the mask travels with the first argument") {
    Rng rng(4);
    HeatmapStack g = HeatmapStack::zeros(3, 8, 8);
    HeatmapStack h = HeatmapStack::zeros(3, 8, 8);
    for (auto& v : g.data) v = static_cast<float>(rng.next_double());
    for (auto& v : h.data) v = static_cast<float>(rng.next_double());
    g.mask = {1, 0, 1};
    HeatmapStack g2 = h;
    g2.mask = g.mask;
    HeatmapStack h2 = g;
    CHECK(masked_mse(g, h) == doctest::Approx(masked_mse(g2, h2)).epsilon(1e-15));
}

TEST_CASE("masked_mse_gradient matches the analytic form and zero cases") {
    HeatmapStack g = HeatmapStack::zeros(2, 8, 8);
    HeatmapStack h = HeatmapStack::zeros(2, 8, 8);
    Rng rng(9);
    for (auto& v : g.data) v = static_cast<float>(rng.next_double());
    for (auto& v : h.data) v = static_cast<float>(rng.next_double());

    HeatmapStack zero_grad = masked_mse_gradient(g, g);
    for (float v : zero_grad.data) CHECK(v == 0.0f);

    g.mask[1] = 0;
    for (int i = 0; i < 64; ++i) g.channel(1)[i] = 0.0f;
    const HeatmapStack d = masked_mse_gradient(g, h);
    for (int i = 0; i < 64; ++i) CHECK(d.channel(1)[i] == 0.0f);
    const double scale = 2.0 / (2.0 * 8 * 8);
    for (int i = 0; i < 64; ++i)
        CHECK(d.channel(0)[i] ==
              doctest::Approx(-scale * (g.channel(0)[i] - h.channel(0)[i])).epsilon(1e-6));
}

TEST_CASE("analytic loss gradient matches central finite differences") {
    const int c = 2, hh = 6, ww = 6;
    const std::size_t n = static_cast<std::size_t>(c) * hh * ww;
    std::vector<double> g(n), h(n);
    std::vector<std::uint8_t> mask{1, 0};
    Rng rng(31);
    for (auto& v : g) v = rng.next_double();
    for (auto& v : h) v = rng.next_double();

    std::vector<double> grad(n);
    masked_mse_gradient_raw(g.data(), h.data(), mask.data(), c, hh, ww, grad.data());

    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fd = oracles::central_difference(
            [&] { return masked_mse_raw(g.data(), h.data(), mask.data(), c, hh, ww); },
            &h[i], 1e-6);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-12});
        worst = std::max(worst, std::abs(fd - grad[i]) / denom);
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("decode_peaks refines toward the larger neighbor") {
    GaussianSpec spec;
    spec.sigma = 1.5;
    spec.centers = {{20.0, 30.0}};
    const HeatmapStack s = render_targets(spec, 56, 56);
    const auto peaks = decode_peaks(s);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].valid);
    CHECK(std::hypot(peaks[0].x - 20.0, peaks[0].y - 30.0) <= 0.5);
}

TEST_CASE("decode_peaks on a zero channel applies the tie-break rule at (0,0)") {
    const HeatmapStack s = HeatmapStack::zeros(1, 8, 8);
    const auto peaks = decode_peaks(s);
    // argmax at index 0; the only in-bounds neighbors are to the right and
    // below with equal value 0, so the quarter shift moves toward them.
    CHECK(peaks[0].x == doctest::Approx(0.75));
    CHECK(peaks[0].y == doctest::Approx(0.75));
    CHECK(peaks[0].score == 0.0);
}

TEST_CASE("decode_peaks picks the strictly larger of two modes") {
    HeatmapStack s = HeatmapStack::zeros(1, 32, 32);
    render_gaussian(s.channel(0), 32, 32, 8.5, 8.5, 1.5);
    std::vector<float> second(32 * 32);
    render_gaussian(second.data(), 32, 32, 24.5, 24.5, 1.5);
    for (int i = 0; i < 32 * 32; ++i) s.channel(0)[i] += 0.7f * second[i];
    const auto peaks = decode_peaks(s);
    CHECK(std::hypot(peaks[0].x - 8.5, peaks[0].y - 8.5) <= 0.5);
}

TEST_CASE("render/decode round trip stays within half a heatmap pixel") {
    Rng rng(555);
    const double sigma = 1.5;
    for (int trial = 0; trial < 300; ++trial) {
        const double margin = 3.0 * sigma;
        GaussianSpec spec;
        spec.sigma = sigma;
        spec.centers = {{rng.uniform(margin, 56 - margin), rng.uniform(margin, 56 - margin)}};
        const auto peaks = decode_peaks(render_targets(spec, 56, 56));
        CHECK(std::hypot(peaks[0].x - spec.centers[0].x, peaks[0].y - spec.centers[0].y) <= 0.5);
    }
}

TEST_CASE("rendered response decays monotonically along axis rays") {
    GaussianSpec spec;
    spec.sigma = 2.5;
    spec.centers = {{13.2, 17.8}};
    const HeatmapStack s = render_targets(spec, 32, 32);
    const int cy = 17, cx = 13;
    for (int x = cx; x + 1 < 32; ++x)
        CHECK(s.channel(0)[cy * 32 + x + 1] <= s.channel(0)[cy * 32 + x]);
    for (int x = cx; x > 0; --x)
        CHECK(s.channel(0)[cy * 32 + x - 1] <= s.channel(0)[cy * 32 + x]);
    for (int y = cy; y + 1 < 32; ++y)
        CHECK(s.channel(0)[(y + 1) * 32 + cx] <= s.channel(0)[y * 32 + cx]);
    for (int y = cy; y > 0; --y)
        CHECK(s.channel(0)[(y - 1) * 32 + cx] <= s.channel(0)[y * 32 + cx]);
}

TEST_CASE("mosaic tiles channels row-major") {
    HeatmapStack s = HeatmapStack::zeros(4, 8, 8);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 64; ++i) s.channel(c)[i] = 0.25f * c;
    const auto img = mosaic(s, 2);
    CHECK(img.width == 16);
    CHECK(img.height == 16);
    CHECK(img.at(0, 0, 0) == 0.0f);
    CHECK(img.at(0, 8, 0) == 0.25f);
    CHECK(img.at(8, 0, 0) == 0.5f);
    CHECK(img.at(8, 8, 0) == 0.75f);
}

TEST_SUITE_END();
