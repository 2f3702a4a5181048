#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>

#include <png.h>

#include "error.hpp"

namespace hsjp::imaging {

Image Image::zeros(int h, int w, int c) {
    if (h < 1 || w < 1 || (c != 1 && c != 3))
        throw ArgError("Image::zeros: invalid dimensions " + std::to_string(h) + "x" +
                       std::to_string(w) + "x" + std::to_string(c));
    Image img;
    img.height = h;
    img.width = w;
    img.channels = c;
    img.data.assign(static_cast<std::size_t>(h) * w * c, 0.0f);
    return img;
}

Image to_rgb(const Image& img) {
    if (img.channels == 3) return img;
    Image out = Image::zeros(img.height, img.width, 3);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = img.data[p];
    return out;
}

namespace {

[[noreturn]] void decode_fail(std::size_t offset, const std::string& msg) {
    throw ParseError("image decode error at byte " + std::to_string(offset) + ": " + msg);
}

// ---------------------------------------------------------------- PPM (P6)

struct PpmReader {
    const std::uint8_t* bytes;
    std::size_t len;
    std::size_t pos = 0;

    int peek() const { return pos < len ? bytes[pos] : -1; }
    int get() { return pos < len ? bytes[pos++] : -1; }

    void skip_space_and_comments() {
        for (;;) {
            int c = peek();
            if (c == '#') {
                while (c != '\n' && c != -1) c = get();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                get();
            } else {
                return;
            }
        }
    }

    int read_int() {
        skip_space_and_comments();
        if (!std::isdigit(peek())) decode_fail(pos, "expected integer in PPM header");
        long v = 0;
        while (std::isdigit(peek())) {
            v = v * 10 + (get() - '0');
            if (v > 1 << 28) decode_fail(pos, "PPM header value out of range");
        }
        return static_cast<int>(v);
    }
};

Image decode_ppm(const std::uint8_t* bytes, std::size_t len) {
    PpmReader r{bytes, len};
    if (len < 2 || bytes[0] != 'P' || bytes[1] != '6')
        decode_fail(0, "not a binary PPM (P6 magic missing)");
    r.pos = 2;
    const int w = r.read_int();
    const int h = r.read_int();
    const int maxval = r.read_int();
    if (w < 1 || h < 1) decode_fail(r.pos, "non-positive PPM dimensions");
    if (maxval != 255) decode_fail(r.pos, "unsupported PPM maxval " + std::to_string(maxval));
    // Exactly one whitespace byte separates the header from the raster.
    int sep = r.get();
    if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
        decode_fail(r.pos - 1, "missing whitespace after PPM maxval");
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (len - r.pos < need)
        decode_fail(len, "truncated PPM body: need " + std::to_string(need) + " bytes, have " +
                             std::to_string(len - r.pos));
    Image img = Image::zeros(h, w, 3);
    for (std::size_t i = 0; i < need; ++i)
        img.data[i] = static_cast<float>(bytes[r.pos + i]) / 255.0f;
    return img;
}

// -------------------------------------------------------------------- PNG

struct PngMemReader {
    const std::uint8_t* bytes;
    std::size_t len;
    std::size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t count) {
    auto* r = static_cast<PngMemReader*>(png_get_io_ptr(png));
    if (r->pos + count > r->len) {
        png_error(png, "unexpected end of stream");
        return;
    }
    std::memcpy(out, r->bytes + r->pos, count);
    r->pos += count;
}

void png_mem_write(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void png_mem_flush(png_structp) {}

struct PngErrorCtx {
    std::jmp_buf jmp;
    std::string message;
    std::size_t* offset;
};

void png_on_error(png_structp png, png_const_charp msg) {
    auto* ctx = static_cast<PngErrorCtx*>(png_get_error_ptr(png));
    ctx->message = msg ? msg : "libpng error";
    std::longjmp(ctx->jmp, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

Image decode_png(const std::uint8_t* bytes, std::size_t len) {
    if (len < 8 || png_sig_cmp(bytes, 0, 8) != 0)
        decode_fail(0, "not a PNG stream (signature mismatch)");

    PngMemReader reader{bytes, len, 0};
    PngErrorCtx err{};
    err.offset = &reader.pos;

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error,
                                             png_on_warning);
    if (!png) throw Error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("png_create_info_struct failed");
    }

    std::vector<std::uint8_t> raster;
    std::vector<png_bytep> rows;
    if (setjmp(err.jmp)) {
        std::size_t at = reader.pos;
        std::string msg = err.message;
        png_destroy_read_struct(&png, &info, nullptr);
        decode_fail(at, msg);
    }

    png_set_read_fn(png, &reader, png_mem_read);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int ch = png_get_channels(png, info);
    if ((ch != 1 && ch != 3) || w < 1 || h < 1)
        png_error(png, "unsupported PNG layout after expansion");

    raster.resize(static_cast<std::size_t>(w) * h * ch);
    rows.resize(h);
    for (int y = 0; y < h; ++y)
        rows[y] = raster.data() + static_cast<std::size_t>(y) * w * ch;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img = Image::zeros(h, w, ch);
    for (std::size_t i = 0; i < raster.size(); ++i)
        img.data[i] = static_cast<float>(raster[i]) / 255.0f;
    return img;
}

std::uint8_t quantize(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

Image decode_image(const std::uint8_t* bytes, std::size_t len, ImageFormat format) {
    if (!bytes || len == 0) throw ParseError("image decode error at byte 0: empty input");
    if (format == ImageFormat::Auto) {
        if (len >= 8 && png_sig_cmp(bytes, 0, 8) == 0)
            format = ImageFormat::Png;
        else if (len >= 2 && bytes[0] == 'P' && bytes[1] == '6')
            format = ImageFormat::Ppm;
        else
            decode_fail(0, "unrecognized image format");
    }
    return format == ImageFormat::Png ? decode_png(bytes, len) : decode_ppm(bytes, len);
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
    const Image rgb = to_rgb(img);
    std::string header = "P6\n" + std::to_string(rgb.width) + " " + std::to_string(rgb.height) +
                         "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + rgb.data.size());
    for (float v : rgb.data) out.push_back(quantize(v));
    return out;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw ArgError("encode_png: bad channel count");
    PngErrorCtx err{};
    std::size_t dummy = 0;
    err.offset = &dummy;

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error,
                                              png_on_warning);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("png_create_info_struct failed");
    }

    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> raster(img.data.size());
    std::vector<png_bytep> rows(img.height);
    if (setjmp(err.jmp)) {
        std::string msg = err.message;
        png_destroy_write_struct(&png, &info);
        throw Error("png encode error: " + msg);
    }

    png_set_write_fn(png, &out, png_mem_write, png_mem_flush);
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    for (std::size_t i = 0; i < img.data.size(); ++i) raster[i] = quantize(img.data[i]);
    for (int y = 0; y < img.height; ++y)
        rows[y] = raster.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    try {
        return decode_image(bytes.data(), bytes.size());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_image(const std::string& path, const Image& img) {
    std::vector<std::uint8_t> bytes;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0)
        bytes = encode_ppm(img);
    else
        bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write: " + path);
}

Image resize(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ArgError("resize: output dimensions must be >= 1");
    if (out_h == img.height && out_w == img.width) return img;

    Image out = Image::zeros(out_h, out_w, img.channels);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const double wy = fy - y0;
        const int y1 = std::clamp(y0 + 1, 0, img.height - 1);
        y0 = std::clamp(y0, 0, img.height - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            const double fx = (ox + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const double wx = fx - x0;
            const int x1 = std::clamp(x0 + 1, 0, img.width - 1);
            x0 = std::clamp(x0, 0, img.width - 1);
            for (int c = 0; c < img.channels; ++c) {
                const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
                const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
                out.at(oy, ox, c) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

}  // namespace hsjp::imaging
