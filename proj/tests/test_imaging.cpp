#include <doctest.h>

#include <cmath>

#include "affine.hpp"
#include "color.hpp"
#include "error.hpp"
#include "image.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace hsjp;
using namespace hsjp::imaging;

TEST_SUITE_BEGIN("imaging");

namespace {

std::vector<std::uint8_t> ppm_bytes(int w, int h, const std::vector<std::uint8_t>& rgb) {
    std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), rgb.begin(), rgb.end());
    return bytes;
}

Image noise_image(int h, int w, int c, std::uint64_t seed) {
    Rng rng(seed);
    Image img = Image::zeros(h, w, c);
    for (auto& v : img.data) v = static_cast<float>(rng.next_double());
    return img;
}

}  // namespace

TEST_CASE("ppm decode maps 8-bit values exactly") {
    const auto bytes = ppm_bytes(2, 2, {0, 0, 0, 255, 255, 255, 128, 0, 0, 0, 128, 0});
    const Image img = decode_image(bytes.data(), bytes.size());
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.channels == 3);
    CHECK(img.at(0, 0, 0) == 0.0f);
    CHECK(img.at(0, 1, 0) == 1.0f);
    CHECK(img.at(1, 0, 0) == 128.0f / 255.0f);
    CHECK(img.at(1, 1, 1) == 128.0f / 255.0f);
    CHECK(img.at(1, 1, 0) == 0.0f);
}

TEST_CASE("ppm encode is bit-exact and round trips") {
    const auto bytes = ppm_bytes(2, 2, {0, 0, 0, 255, 255, 255, 128, 0, 0, 0, 128, 0});
    const Image img = decode_image(bytes.data(), bytes.size());
    const auto encoded = encode_ppm(img);
    CHECK(encoded == bytes);
    const Image again = decode_image(encoded.data(), encoded.size());
    CHECK(again.data == img.data);
}

TEST_CASE("truncated ppm body reports byte offset") {
    auto bytes = ppm_bytes(4, 4, std::vector<std::uint8_t>(48, 7));
    bytes.resize(bytes.size() - 10);
    try {
        decode_image(bytes.data(), bytes.size());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("truncated PPM body") != std::string::npos);
        CHECK(msg.find("at byte") != std::string::npos);
    }
}

TEST_CASE("malformed ppm maxval rejected") {
    std::string text = "P6\n2 2\n65535\n";
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    bytes.resize(bytes.size() + 24, 0);
    CHECK_THROWS_AS(decode_image(bytes.data(), bytes.size()), ParseError);
}

TEST_CASE("png round trip preserves quantized values") {
    const Image img = noise_image(13, 9, 3, 42);
    const auto bytes = encode_png(img);
    const Image back = decode_image(bytes.data(), bytes.size());
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    REQUIRE(back.channels == 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const float expected = std::round(img.data[i] * 255.0f) / 255.0f;
        CHECK(back.data[i] == doctest::Approx(expected).epsilon(1e-6));
    }
    const Image gray = noise_image(7, 5, 1, 43);
    const auto gbytes = encode_png(gray);
    const Image gback = decode_image(gbytes.data(), gbytes.size());
    CHECK(gback.channels == 1);
}

TEST_CASE("png decode rejects garbage") {
    std::vector<std::uint8_t> junk{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 1, 2, 3, 4};
    CHECK_THROWS_AS(decode_image(junk.data(), junk.size()), ParseError);
}

TEST_CASE("resize identity and constants") {
    const Image img = noise_image(17, 11, 3, 7);
    const Image same = resize(img, 17, 11);
    CHECK(same.data == img.data);

    Image constant = Image::zeros(6, 6, 1);
    for (auto& v : constant.data) v = 0.37f;
    const Image up = resize(constant, 13, 9);
    for (float v : up.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("resize 2x2 checkerboard to 4x4 matches hand-evaluated bilinear weights") {
    Image cb = Image::zeros(2, 2, 1);
    cb.at(0, 0, 0) = 1.0f;
    cb.at(1, 1, 0) = 1.0f;
    const Image up = resize(cb, 4, 4);
    // Interior samples sit 0.25 px from a source pixel center: weights
    // (0.75, 0.25) per axis. Hand-evaluated values below.
    CHECK(up.at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(up.at(0, 3, 0) == doctest::Approx(0.0));
    CHECK(up.at(1, 1, 0) == doctest::Approx(0.625));
    CHECK(up.at(1, 2, 0) == doctest::Approx(0.375));
    CHECK(up.at(2, 1, 0) == doctest::Approx(0.375));
    CHECK(up.at(2, 2, 0) == doctest::Approx(0.625));
    const double center_mean =
        (up.at(1, 1, 0) + up.at(1, 2, 0) + up.at(2, 1, 0) + up.at(2, 2, 0)) / 4.0;
    CHECK(center_mean == doctest::Approx(0.5));
}

TEST_CASE("transform_point identity, rotation, scaling examples") {
    const auto id = AffineTransform::identity();
    const Point p = transform_point(id, {37, 112});
    CHECK(p.x == doctest::Approx(37.0));
    CHECK(p.y == doctest::Approx(112.0));

    // 90 degree rotation about (112,112), clockwise-positive on screen.
    auto rot = compose(AffineTransform::translation(112, 112),
                       compose(AffineTransform::rotation_deg(90),
                               AffineTransform::translation(-112, -112)));
    const Point q = transform_point(rot, {150, 112});
    CHECK(q.x == doctest::Approx(112.0).epsilon(1e-9));
    CHECK(q.y == doctest::Approx(150.0).epsilon(1e-9));

    auto scale = compose(AffineTransform::translation(112, 112),
                         compose(AffineTransform::scaling(1.35),
                                 AffineTransform::translation(-112, -112)));
    const Point r = transform_point(scale, {112 + 10, 112});
    CHECK(r.x == doctest::Approx(112 + 13.5));
    CHECK(r.y == doctest::Approx(112.0));
}

TEST_CASE("sample_spatial_augmentation: zero ranges give identity, fixed seed repeats") {
    SpatialAugRanges zero;
    zero.scale_min = zero.scale_max = 1.0;
    zero.rotate_deg = 0.0;
    zero.translate_frac = 0.0;
    Rng rng(5);
    const auto a = sample_spatial_augmentation(rng, zero, 224, 224);
    const double id[6] = {1, 0, 0, 0, 1, 0};
    for (int i = 0; i < 6; ++i) CHECK(a.m[i] == doctest::Approx(id[i]).epsilon(1e-12));

    SpatialAugRanges full;
    Rng r1(99), r2(99);
    const auto t1 = sample_spatial_augmentation(r1, full, 224, 224);
    const auto t2 = sample_spatial_augmentation(r2, full, 224, 224);
    for (int i = 0; i < 6; ++i) CHECK(t1.m[i] == t2.m[i]);
}

TEST_CASE("sampled rotation angles are uniform in [-45, 45]") {
    SpatialAugRanges ranges;
    ranges.scale_min = ranges.scale_max = 1.0;
    ranges.translate_frac = 0.0;
    ranges.rotate_deg = 45.0;
    Rng rng(1234);
    double mn = 1e9, mx = -1e9, sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto a = sample_spatial_augmentation(rng, ranges, 224, 224);
        const double theta = std::atan2(a.m[3], a.m[0]) * 180.0 / M_PI;
        mn = std::min(mn, theta);
        mx = std::max(mx, theta);
        sum += theta;
    }
    CHECK(mn >= -45.0);
    CHECK(mx <= 45.0);
    CHECK(std::abs(sum / n) < 0.5);
}

TEST_CASE("warp_image identity and pure translation semantics") {
    const Image img = noise_image(24, 24, 3, 11);
    const Image same = warp_image(img, AffineTransform::identity(), 24, 24);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(same.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));

    const Image moved = warp_image(img, AffineTransform::translation(10, 0), 24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            for (int c = 0; c < 3; ++c) {
                const float expect = x >= 10 ? img.at(y, x - 10, c) : 0.0f;
                CHECK(moved.at(y, x, c) == doctest::Approx(expect).epsilon(1e-5));
            }
}

TEST_CASE("rotate +30 then -30 recovers the image away from borders") {
    const int s = 64;
    Image img = Image::zeros(s, s, 1);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x)
            img.at(y, x, 0) = 0.5f + 0.4f * std::sin(x * 0.21f) * std::cos(y * 0.17f);
    auto about_center = [&](double deg) {
        return compose(AffineTransform::translation(s / 2.0, s / 2.0),
                       compose(AffineTransform::rotation_deg(deg),
                               AffineTransform::translation(-s / 2.0, -s / 2.0)));
    };
    const Image once = warp_image(img, about_center(30), s, s);
    const Image back = warp_image(once, about_center(-30), s, s);
    double mae = 0;
    int count = 0;
    for (int y = 16; y < s - 16; ++y)
        for (int x = 16; x < s - 16; ++x) {
            mae += std::abs(back.at(y, x, 0) - img.at(y, x, 0));
            ++count;
        }
    CHECK(mae / count < 0.05);
}

TEST_CASE("bilinear warp agrees with the nearest-neighbor reference on smooth ramps") {
    const int s = 48;
    Image img = Image::zeros(s, s, 1);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) img.at(y, x, 0) = 0.3f + 0.01f * x + 0.008f * y;
    Rng rng(3);
    const auto a = sample_spatial_augmentation(rng, SpatialAugRanges{}, s, s);
    const Image fine = warp_image(img, a, s, s);
    const Image coarse = oracles::nearest_warp(img, a, s, s);
    double worst = 0;
    for (int y = 2; y < s - 2; ++y)
        for (int x = 2; x < s - 2; ++x)
            if (coarse.at(y, x, 0) > 0 && fine.at(y, x, 0) > 0)
                worst = std::max(worst, static_cast<double>(std::abs(
                                            fine.at(y, x, 0) - coarse.at(y, x, 0))));
    CHECK(worst < 0.03);  // at most a one-pixel nearest-neighbor error on the ramp
}

TEST_CASE("compose/inverse round trip points to 1e-6") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = sample_spatial_augmentation(rng, SpatialAugRanges{}, 224, 224);
        const auto ainv = inverse(a);
        const auto ident = compose(a, ainv);
        CHECK(std::abs(ident.m[0] - 1) < 1e-9);
        CHECK(std::abs(ident.m[4] - 1) < 1e-9);
        CHECK(std::abs(ident.m[1]) < 1e-9);
        CHECK(std::abs(ident.m[3]) < 1e-9);
        const Point p{rng.uniform(0, 224), rng.uniform(0, 224)};
        const Point rt = transform_point(ainv, transform_point(a, p));
        CHECK(std::abs(rt.x - p.x) < 1e-6);
        CHECK(std::abs(rt.y - p.y) < 1e-6);
    }
}

TEST_CASE("warp_image rejects singular transforms") {
    AffineTransform degenerate;
    degenerate.m[0] = degenerate.m[4] = 0.0;
    const Image img = noise_image(8, 8, 1, 1);
    CHECK_THROWS_AS(warp_image(img, degenerate, 8, 8), ArgError);
}

TEST_CASE("warped blob argmax tracks transform_point within 1.5 px") {
    const int s = 96;
    Rng rng(2024);
    int tested = 0;
    for (int trial = 0; trial < 40 && tested < 25; ++trial) {
        Image img = Image::zeros(s, s, 1);
        const Point p{rng.uniform(30, s - 30), rng.uniform(30, s - 30)};
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                const double d2 = (x + 0.5 - p.x) * (x + 0.5 - p.x) +
                                  (y + 0.5 - p.y) * (y + 0.5 - p.y);
                img.at(y, x, 0) = static_cast<float>(std::exp(-d2 / 2.0));
            }
        const auto a = sample_spatial_augmentation(rng, SpatialAugRanges{}, s, s);
        const Point moved = transform_point(a, p);
        if (moved.x < 8 || moved.y < 8 || moved.x > s - 8 || moved.y > s - 8) continue;
        ++tested;
        const Image warped = warp_image(img, a, s, s);
        int bx = 0, by = 0;
        float best = -1;
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                if (warped.at(y, x, 0) > best) {
                    best = warped.at(y, x, 0);
                    bx = x;
                    by = y;
                }
        const double err = std::hypot(bx + 0.5 - moved.x, by + 0.5 - moved.y);
        CHECK(err <= 1.5);
    }
    CHECK(tested >= 20);
}

TEST_CASE("color_augment neutral parameters leave the image unchanged") {
    const Image img = noise_image(12, 10, 3, 21);
    const Image out = color_augment(img, ColorAugParams{});
    CHECK(out.data == img.data);
}

TEST_CASE("solarize threshold zero inverts every pixel") {
    const Image img = noise_image(9, 9, 3, 5);
    ColorAugParams p;
    p.solarize_threshold = 0.0f;
    const Image out = color_augment(img, p);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(1.0f - img.data[i]).epsilon(1e-6));
}

TEST_CASE("grayscale conversion is idempotent on gray content") {
    Image img = noise_image(8, 8, 3, 9);
    for (std::size_t px = 0; px < img.pixel_count(); ++px) {
        const float v = img.data[px * 3];
        img.data[px * 3 + 1] = v;
        img.data[px * 3 + 2] = v;
    }
    ColorAugParams p;
    p.grayscale = true;
    const Image out = color_augment(img, p);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));
}

TEST_CASE("every color op clamps into [0, 1]") {
    const Image img = noise_image(10, 10, 3, 33);
    Rng rng(55);
    for (int trial = 0; trial < 25; ++trial) {
        const auto params = sample_color_augmentation(rng, ColorAugRanges{});
        const Image out = color_augment(img, params);
        for (float v : out.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("hsv conversions are exact inverses") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const float r = static_cast<float>(rng.next_double());
        const float g = static_cast<float>(rng.next_double());
        const float b = static_cast<float>(rng.next_double());
        float h, s, v, r2, g2, b2;
        rgb_to_hsv(r, g, b, &h, &s, &v);
        hsv_to_rgb(h, s, v, &r2, &g2, &b2);
        CHECK(r2 == doctest::Approx(r).epsilon(1e-5));
        CHECK(g2 == doctest::Approx(g).epsilon(1e-5));
        CHECK(b2 == doctest::Approx(b).epsilon(1e-5));
    }
}

TEST_CASE("color augmentation sampling is deterministic per seed") {
    Rng a(17), b(17);
    for (int i = 0; i < 10; ++i) {
        const auto pa = sample_color_augmentation(a, ColorAugRanges{});
        const auto pb = sample_color_augmentation(b, ColorAugRanges{});
        CHECK(pa.brightness == pb.brightness);
        CHECK(pa.contrast == pb.contrast);
        CHECK(pa.saturation == pb.saturation);
        CHECK(pa.hue_deg == pb.hue_deg);
        CHECK(pa.grayscale == pb.grayscale);
        CHECK(pa.blur_sigma == pb.blur_sigma);
        CHECK(pa.solarize_threshold == pb.solarize_threshold);
    }
}

TEST_SUITE_END();
