#pragma once

#include "image.hpp"
#include "rng.hpp"

namespace hsjp::imaging {

struct ColorAugParams {
    float brightness = 1.0f;        // multiplicative, > 0
    float contrast = 1.0f;          // blend with mean luma, > 0
    float saturation = 1.0f;        // HSV S scale, > 0
    float hue_deg = 0.0f;           // HSV H shift in [-180, 180]
    bool grayscale = false;
    float blur_sigma = 0.0f;        // pixels, 0 = off
    float solarize_threshold = -1;  // in [0, 1], < 0 = off
};

// Applied in fixed order: brightness -> contrast -> saturation -> hue ->
// grayscale -> blur -> solarize; values are clamped to [0, 1] after each op.
Image color_augment(const Image& img, const ColorAugParams& params);

// Ranges for sampling jitter parameters during training.
struct ColorAugRanges {
    float factor_min = 0.7f;   // brightness/contrast/saturation
    float factor_max = 1.3f;
    float hue_max_deg = 18.0f;
    double grayscale_prob = 0.2;
    double blur_prob = 0.5;
    float blur_sigma_max = 1.2f;
    double solarize_prob = 0.1;
};

// Draw order: brightness, contrast, saturation, hue, grayscale, blur
// (coin then sigma), solarize (coin then threshold).
ColorAugParams sample_color_augmentation(Rng& rng, const ColorAugRanges& ranges);

// Exact conversions; h in [0, 360), s and v in [0, 1].
void rgb_to_hsv(float r, float g, float b, float* h, float* s, float* v);
void hsv_to_rgb(float h, float s, float v, float* r, float* g, float* b);

}  // namespace hsjp::imaging
