#include "color.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace hsjp::imaging {

void rgb_to_hsv(float r, float g, float b, float* h, float* s, float* v) {
    const float mx = std::max({r, g, b});
    const float mn = std::min({r, g, b});
    const float d = mx - mn;
    *v = mx;
    *s = mx > 0.0f ? d / mx : 0.0f;
    if (d <= 0.0f) {
        *h = 0.0f;
        return;
    }
    float hh;
    if (mx == r)
        hh = std::fmod((g - b) / d, 6.0f);
    else if (mx == g)
        hh = (b - r) / d + 2.0f;
    else
        hh = (r - g) / d + 4.0f;
    hh *= 60.0f;
    if (hh < 0.0f) hh += 360.0f;
    *h = hh;
}

void hsv_to_rgb(float h, float s, float v, float* r, float* g, float* b) {
    const float c = v * s;
    const float hp = h / 60.0f;
    const float x = c * (1.0f - std::abs(std::fmod(hp, 2.0f) - 1.0f));
    float rr = 0, gg = 0, bb = 0;
    if (hp < 1)      { rr = c; gg = x; }
    else if (hp < 2) { rr = x; gg = c; }
    else if (hp < 3) { gg = c; bb = x; }
    else if (hp < 4) { gg = x; bb = c; }
    else if (hp < 5) { rr = x; bb = c; }
    else             { rr = c; bb = x; }
    const float m = v - c;
    *r = rr + m;
    *g = gg + m;
    *b = bb + m;
}

namespace {

void clamp_all(Image& img) {
    for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

float mean_luma(const Image& img) {
    double sum = 0.0;
    if (img.channels == 1) {
        for (float v : img.data) sum += v;
    } else {
        for (std::size_t p = 0; p < img.pixel_count(); ++p)
            sum += luma(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]);
    }
    return static_cast<float>(sum / static_cast<double>(img.pixel_count()));
}

void apply_hsv(Image& img, float sat_factor, float hue_shift) {
    if (img.channels != 3) return;  // hue/saturation are no-ops on gray
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        float* px = &img.data[p * 3];
        float h, s, v;
        rgb_to_hsv(px[0], px[1], px[2], &h, &s, &v);
        s = std::clamp(s * sat_factor, 0.0f, 1.0f);
        h = std::fmod(h + hue_shift, 360.0f);
        if (h < 0.0f) h += 360.0f;
        hsv_to_rgb(h, s, v, &px[0], &px[1], &px[2]);
    }
}

void gaussian_blur(Image& img, float sigma) {
    const int radius = static_cast<int>(std::ceil(3.0f * sigma));
    if (radius < 1) return;
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (double& k : kernel) k /= total;

    const int h = img.height, w = img.width, ch = img.channels;
    Image tmp = Image::zeros(h, w, ch);
    // horizontal pass, replicate borders
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * img.at(y, std::clamp(x + i, 0, w - 1), c);
                tmp.at(y, x, c) = static_cast<float>(acc);
            }
    // vertical pass
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * tmp.at(std::clamp(y + i, 0, h - 1), x, c);
                img.at(y, x, c) = static_cast<float>(acc);
            }
}

}  // namespace

Image color_augment(const Image& img, const ColorAugParams& p) {
    if (p.brightness <= 0 || p.contrast <= 0 || p.saturation <= 0)
        throw ArgError("color_augment: factors must be > 0");
    if (p.hue_deg < -180.0f || p.hue_deg > 180.0f)
        throw ArgError("color_augment: hue shift outside [-180, 180]");

    Image out = img;

    if (p.brightness != 1.0f) {
        for (float& v : out.data) v *= p.brightness;
        clamp_all(out);
    }
    if (p.contrast != 1.0f) {
        const float mean = mean_luma(out);
        for (float& v : out.data) v = mean + (v - mean) * p.contrast;
        clamp_all(out);
    }
    if (p.saturation != 1.0f || p.hue_deg != 0.0f) {
        apply_hsv(out, p.saturation, p.hue_deg);
        clamp_all(out);
    }
    if (p.grayscale && out.channels == 3) {
        for (std::size_t px = 0; px < out.pixel_count(); ++px) {
            const float g = luma(out.data[px * 3], out.data[px * 3 + 1], out.data[px * 3 + 2]);
            out.data[px * 3] = out.data[px * 3 + 1] = out.data[px * 3 + 2] = g;
        }
        clamp_all(out);
    }
    if (p.blur_sigma > 0.0f) {
        gaussian_blur(out, p.blur_sigma);
        clamp_all(out);
    }
    if (p.solarize_threshold >= 0.0f) {
        for (float& v : out.data)
            if (v >= p.solarize_threshold) v = 1.0f - v;
        clamp_all(out);
    }
    return out;
}

ColorAugParams sample_color_augmentation(Rng& rng, const ColorAugRanges& r) {
    ColorAugParams p;
    p.brightness = static_cast<float>(rng.uniform(r.factor_min, r.factor_max));
    p.contrast = static_cast<float>(rng.uniform(r.factor_min, r.factor_max));
    p.saturation = static_cast<float>(rng.uniform(r.factor_min, r.factor_max));
    p.hue_deg = static_cast<float>(rng.uniform(-r.hue_max_deg, r.hue_max_deg));
    p.grayscale = rng.bernoulli(r.grayscale_prob);
    if (rng.bernoulli(r.blur_prob))
        p.blur_sigma = static_cast<float>(rng.uniform(0.1, r.blur_sigma_max));
    if (rng.bernoulli(r.solarize_prob))
        p.solarize_threshold = static_cast<float>(rng.uniform(0.5, 1.0));
    return p;
}

}  // namespace hsjp::imaging
