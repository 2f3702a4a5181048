#include "affine.hpp"

#include <cmath>

#include "error.hpp"

namespace hsjp::imaging {

AffineTransform AffineTransform::translation(double tx, double ty) {
    AffineTransform t;
    t.m[2] = tx;
    t.m[5] = ty;
    return t;
}

AffineTransform AffineTransform::rotation_deg(double degrees) {
    const double rad = degrees * (M_PI / 180.0);
    const double c = std::cos(rad), s = std::sin(rad);
    AffineTransform t;
    t.m[0] = c;
    t.m[1] = -s;
    t.m[3] = s;
    t.m[4] = c;
    return t;
}

AffineTransform AffineTransform::scaling(double s) {
    AffineTransform t;
    t.m[0] = s;
    t.m[4] = s;
    return t;
}

AffineTransform compose(const AffineTransform& a, const AffineTransform& b) {
    AffineTransform r;
    r.m[0] = a.m[0] * b.m[0] + a.m[1] * b.m[3];
    r.m[1] = a.m[0] * b.m[1] + a.m[1] * b.m[4];
    r.m[2] = a.m[0] * b.m[2] + a.m[1] * b.m[5] + a.m[2];
    r.m[3] = a.m[3] * b.m[0] + a.m[4] * b.m[3];
    r.m[4] = a.m[3] * b.m[1] + a.m[4] * b.m[4];
    r.m[5] = a.m[3] * b.m[2] + a.m[4] * b.m[5] + a.m[5];
    return r;
}

AffineTransform inverse(const AffineTransform& a) {
    const double det = a.m[0] * a.m[4] - a.m[1] * a.m[3];
    if (std::abs(det) <= 1e-9) throw ArgError("affine inverse: singular transform");
    const double inv = 1.0 / det;
    AffineTransform r;
    r.m[0] = a.m[4] * inv;
    r.m[1] = -a.m[1] * inv;
    r.m[3] = -a.m[3] * inv;
    r.m[4] = a.m[0] * inv;
    r.m[2] = -(r.m[0] * a.m[2] + r.m[1] * a.m[5]);
    r.m[5] = -(r.m[3] * a.m[2] + r.m[4] * a.m[5]);
    return r;
}

Point transform_point(const AffineTransform& a, Point p) {
    return {a.m[0] * p.x + a.m[1] * p.y + a.m[2],
            a.m[3] * p.x + a.m[4] * p.y + a.m[5]};
}

AffineTransform sample_spatial_augmentation(Rng& rng, const SpatialAugRanges& ranges,
                                            double width, double height) {
    if (ranges.scale_min <= 0 || ranges.scale_max < ranges.scale_min)
        throw ArgError("sample_spatial_augmentation: bad scale range");
    const double s = rng.uniform(ranges.scale_min, ranges.scale_max);
    const double theta = rng.uniform(-ranges.rotate_deg, ranges.rotate_deg);
    const double tx = rng.uniform(-ranges.translate_frac, ranges.translate_frac) * width;
    const double ty = rng.uniform(-ranges.translate_frac, ranges.translate_frac) * height;

    const double cx = width / 2.0, cy = height / 2.0;
    AffineTransform a = compose(AffineTransform::rotation_deg(theta), AffineTransform::scaling(s));
    a = compose(AffineTransform::translation(cx, cy), a);
    a = compose(a, AffineTransform::translation(-cx, -cy));
    return compose(AffineTransform::translation(tx, ty), a);
}

Image warp_image(const Image& img, const AffineTransform& a, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ArgError("warp_image: output dimensions must be >= 1");
    const AffineTransform inv = inverse(a);
    Image out = Image::zeros(out_h, out_w, img.channels);

    const int ch = img.channels;
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            const Point src = transform_point(inv, {ox + 0.5, oy + 0.5});
            const double u = src.x - 0.5, v = src.y - 0.5;
            const int x0 = static_cast<int>(std::floor(u));
            const int y0 = static_cast<int>(std::floor(v));
            const double fx = u - x0, fy = v - y0;
            if (x0 < -1 || y0 < -1 || x0 >= img.width || y0 >= img.height) continue;

            auto tap = [&](int y, int x, int c) -> double {
                if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
                return img.at(y, x, c);
            };
            for (int c = 0; c < ch; ++c) {
                const double top = (1.0 - fx) * tap(y0, x0, c) + fx * tap(y0, x0 + 1, c);
                const double bot = (1.0 - fx) * tap(y0 + 1, x0, c) + fx * tap(y0 + 1, x0 + 1, c);
                out.at(oy, ox, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

}  // namespace hsjp::imaging
