#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hsjp::imaging {

// Floating point image, values in [0, 1], row-major with interleaved
// channels (HWC). channels is 1 (gray) or 3 (RGB).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    static Image zeros(int h, int w, int c);

    float& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    const float& at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(height) * width;
    }
};

enum class ImageFormat { Auto, Png, Ppm };

// Decodes PNG (8-bit RGB/gray, palette and 16-bit inputs converted) or
// binary PPM (P6, maxval 255). 8-bit values map to v/255 exactly.
// Throws ParseError with the byte offset on malformed input.
Image decode_image(const std::uint8_t* bytes, std::size_t len,
                   ImageFormat format = ImageFormat::Auto);

// "P6\n<w> <h>\n255\n" followed by row-major RGB bytes, value = round(255*v).
// Gray images are expanded to RGB.
std::vector<std::uint8_t> encode_ppm(const Image& img);

std::vector<std::uint8_t> encode_png(const Image& img);

Image load_image(const std::string& path);

// Picks the codec from the extension (.png / .ppm).
void save_image(const std::string& path, const Image& img);

// Bilinear resize, align-corners-false convention (pixel centers at i+0.5),
// edge taps clamped.
Image resize(const Image& img, int out_h, int out_w);

inline float luma(float r, float g, float b) {
    return 0.299f * r + 0.587f * g + 0.114f * b;
}

// 3-channel view of a gray image (or a copy of an RGB one).
Image to_rgb(const Image& img);

}  // namespace hsjp::imaging
