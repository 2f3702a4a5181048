#pragma once

#include "image.hpp"
#include "rng.hpp"

namespace hsjp::imaging {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// 2x3 forward map on points: p' = (m0*x + m1*y + m2, m3*x + m4*y + m5).
// Coordinates: origin top-left, x rightward, y downward, pixel centers at
// integer + 0.5. Rotation is clockwise-positive on screen (y down).
struct AffineTransform {
    double m[6] = {1, 0, 0, 0, 1, 0};

    static AffineTransform identity() { return {}; }
    static AffineTransform translation(double tx, double ty);
    static AffineTransform rotation_deg(double degrees);
    static AffineTransform scaling(double s);
};

// compose(a, b) applies b first, then a.
AffineTransform compose(const AffineTransform& a, const AffineTransform& b);

// Throws ArgError when |det| <= 1e-9.
AffineTransform inverse(const AffineTransform& a);

Point transform_point(const AffineTransform& a, Point p);

struct SpatialAugRanges {
    double scale_min = 0.65;
    double scale_max = 1.35;
    double rotate_deg = 45.0;     // theta ~ U[-rotate_deg, rotate_deg]
    double translate_frac = 0.10; // per-axis fraction of that axis
};

// A = T(t) * T(c) * R(theta) * S(s) * T(-c), c = image center (w/2, h/2).
// Draw order: s, theta, tx, ty, each uniform in its range.
AffineTransform sample_spatial_augmentation(Rng& rng, const SpatialAugRanges& ranges,
                                            double width, double height);

// Inverse-mapping bilinear warp; samples outside the source are 0.
Image warp_image(const Image& img, const AffineTransform& a, int out_h, int out_w);

}  // namespace hsjp::imaging
