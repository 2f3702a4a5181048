#include "synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "color.hpp"
#include "error.hpp"

namespace hsjp::synthdata {

namespace fs = std::filesystem;

const SkeletonSpec& default_skeleton() {
    static const SkeletonSpec spec = [] {
        SkeletonSpec s;
        s.names = {"head",   "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
                   "l_wrist", "r_wrist",   "l_hip",      "r_hip",   "l_knee",
                   "r_knee", "l_ankle",    "r_ankle"};
        s.flip_pairs = {0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11};
        const int pelvis = 13, neck = 14;
        // parent, child, length range (fraction of size), absolute angle
        // range in degrees (y down: 90 = down, -90 = up, 0 = right).
        s.bones = {
            {pelvis, neck, 0.20, 0.26, -105, -75},
            {neck, 0, 0.09, 0.12, -110, -70},    // head
            {neck, 1, 0.07, 0.10, 160, 200},     // l_shoulder (screen left)
            {neck, 2, 0.07, 0.10, -20, 20},      // r_shoulder
            {1, 3, 0.10, 0.14, 60, 170},         // l upper arm
            {2, 4, 0.10, 0.14, 10, 120},         // r upper arm
            {3, 5, 0.09, 0.13, 30, 180},         // l forearm
            {4, 6, 0.09, 0.13, 0, 150},          // r forearm
            {pelvis, 7, 0.04, 0.06, 150, 210},   // l_hip
            {pelvis, 8, 0.04, 0.06, -30, 30},    // r_hip
            {7, 9, 0.13, 0.17, 60, 120},         // l thigh
            {8, 10, 0.13, 0.17, 60, 120},        // r thigh
            {9, 11, 0.12, 0.16, 60, 120},        // l shin
            {10, 12, 0.12, 0.16, 60, 120},       // r shin
        };
        validate_skeleton(s);
        return s;
    }();
    return spec;
}

void validate_skeleton(const SkeletonSpec& spec) {
    const int k = spec.num_keypoints();
    if (k < 1) throw ArgError("skeleton: no keypoints");
    if (static_cast<int>(spec.flip_pairs.size()) != k)
        throw ArgError("skeleton: flip_pairs size mismatch");
    for (int i = 0; i < k; ++i) {
        const int j = spec.flip_pairs[static_cast<std::size_t>(i)];
        if (j < 0 || j >= k || spec.flip_pairs[static_cast<std::size_t>(j)] != i)
            throw ArgError("skeleton: flip_pairs is not an involution at index " +
                           std::to_string(i));
    }
    // Every joint except the pelvis must be the child of exactly one bone,
    // reachable from the pelvis.
    const int joints = spec.num_joints();
    std::vector<int> parent(static_cast<std::size_t>(joints), -2);
    parent[static_cast<std::size_t>(spec.pelvis_index())] = -1;
    for (const auto& b : spec.bones) {
        if (b.parent < 0 || b.parent >= joints || b.child < 0 || b.child >= joints)
            throw ArgError("skeleton: bone references unknown joint");
        if (b.child == spec.pelvis_index()) throw ArgError("skeleton: pelvis cannot be a child");
        if (parent[static_cast<std::size_t>(b.child)] != -2)
            throw ArgError("skeleton: joint " + std::to_string(b.child) + " has two parents");
        parent[static_cast<std::size_t>(b.child)] = b.parent;
        if (b.len_lo <= 0 || b.len_hi < b.len_lo) throw ArgError("skeleton: bad bone length");
    }
    for (int j = 0; j < joints; ++j) {
        if (parent[static_cast<std::size_t>(j)] == -2)
            throw ArgError("skeleton: joint " + std::to_string(j) + " is not connected");
        // walk to the root, bounded by joint count to catch cycles
        int cur = j, hops = 0;
        while (cur != spec.pelvis_index()) {
            cur = parent[static_cast<std::size_t>(cur)];
            if (cur < 0 || ++hops > joints)
                throw ArgError("skeleton: bone graph is not a pelvis-rooted tree");
        }
    }
}

KeypointAnnotation AnnotatedSample::annotation() const {
    KeypointAnnotation ann;
    ann.points = keypoints;
    ann.visible = visible;
    for (int i = 0; i < 4; ++i) ann.bbox[i] = bbox[i];
    return ann;
}

namespace {

// ------------------------------------------------------------ primitives

void paint_disk(Image& img, double cx, double cy, double radius, const float rgb[3],
                double alpha) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius + 1)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            const double cov = std::clamp(radius + 0.5 - d, 0.0, 1.0) * alpha;
            if (cov <= 0) continue;
            for (int c = 0; c < img.channels; ++c) {
                float& px = img.at(y, x, c);
                px = static_cast<float>(px + cov * (rgb[c % 3] - px));
            }
        }
}

void paint_rect(Image& img, double cx, double cy, double hx, double hy, const float rgb[3],
                double alpha) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - hx - 1)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + hx + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - hy - 1)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + hy + 1)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double covx = std::clamp(hx + 0.5 - std::abs(x - cx), 0.0, 1.0);
            const double covy = std::clamp(hy + 0.5 - std::abs(y - cy), 0.0, 1.0);
            const double cov = std::min(covx, covy) * alpha;
            if (cov <= 0) continue;
            for (int c = 0; c < img.channels; ++c) {
                float& px = img.at(y, x, c);
                px = static_cast<float>(px + cov * (rgb[c % 3] - px));
            }
        }
}

void paint_capsule(Image& img, Point a, Point b, double radius, const float rgb[3],
                   double alpha) {
    const double lox = std::min(a.x, b.x) - radius - 1, hix = std::max(a.x, b.x) + radius + 1;
    const double loy = std::min(a.y, b.y) - radius - 1, hiy = std::max(a.y, b.y) + radius + 1;
    const int x0 = std::max(0, static_cast<int>(std::floor(lox)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(hix)));
    const int y0 = std::max(0, static_cast<int>(std::floor(loy)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(hiy)));
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double t = len2 > 0 ? ((x - a.x) * vx + (y - a.y) * vy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double d = std::hypot(x - (a.x + t * vx), y - (a.y + t * vy));
            const double cov = std::clamp(radius + 0.5 - d, 0.0, 1.0) * alpha;
            if (cov <= 0) continue;
            for (int c = 0; c < img.channels; ++c) {
                float& px = img.at(y, x, c);
                px = static_cast<float>(px + cov * (rgb[c % 3] - px));
            }
        }
}

// ------------------------------------------------------------ background

struct NoiseLattice {
    int cells = 0;
    std::vector<float> values;  // (cells+1)^2 per channel, channel-major

    float sample(double tx, double ty, int c) const {
        const int stride = cells + 1;
        int ix = static_cast<int>(std::floor(tx));
        int iy = static_cast<int>(std::floor(ty));
        ix = std::clamp(ix, 0, cells - 1);
        iy = std::clamp(iy, 0, cells - 1);
        const double fx = std::clamp(tx - ix, 0.0, 1.0);
        const double fy = std::clamp(ty - iy, 0.0, 1.0);
        const float* base = values.data() + static_cast<std::size_t>(c) * stride * stride;
        auto at = [&](int yy, int xx) { return base[yy * stride + xx]; };
        const double top = (1 - fx) * at(iy, ix) + fx * at(iy, ix + 1);
        const double bot = (1 - fx) * at(iy + 1, ix) + fx * at(iy + 1, ix + 1);
        return static_cast<float>((1 - fy) * top + fy * bot);
    }
};

// Deterministic textured background. The vertical luminance gradient and the
// horizontal red/blue tint give every grid cell a position-dependent color
// signature; noise and primitives keep patches individually distinctive.
void paint_background(Image& img, Rng& rng, bool mirrored) {
    const int size = img.width;
    double gy = rng.uniform(0.35, 0.60);
    double gx = rng.uniform(0.35, 0.60);
    const double base = rng.uniform(0.42, 0.52);

    struct Scale { int cells; double amp; };
    const Scale scales[3] = {{3, 0.12}, {6, 0.08}, {12, 0.05}};
    NoiseLattice lattices[3];
    for (int s = 0; s < 3; ++s) {
        const int stride = scales[s].cells + 1;
        lattices[s].cells = scales[s].cells;
        lattices[s].values.resize(static_cast<std::size_t>(3) * stride * stride);
        for (auto& v : lattices[s].values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        if (mirrored)  // reverse each lattice row so the noise field mirrors
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < stride; ++y) {
                    float* row = lattices[s].values.data() +
                                 (static_cast<std::size_t>(c) * stride + y) * stride;
                    std::reverse(row, row + stride);
                }
    }
    if (mirrored) gx = -gx;

    const double denom = size > 1 ? size - 1 : 1;
    for (int y = 0; y < size; ++y) {
        const double fy = y / denom - 0.5;
        for (int x = 0; x < size; ++x) {
            const double fx = x / denom - 0.5;
            double rgbv[3];
            const double lum = base + gy * fy;
            rgbv[0] = lum + gx * fx;
            rgbv[1] = lum;
            rgbv[2] = lum - gx * fx;
            for (int s = 0; s < 3; ++s) {
                const double tx = static_cast<double>(x) / denom * lattices[s].cells;
                const double ty = static_cast<double>(y) / denom * lattices[s].cells;
                for (int c = 0; c < 3; ++c)
                    rgbv[c] += scales[s].amp * lattices[s].sample(tx, ty, c);
            }
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = static_cast<float>(std::clamp(rgbv[c], 0.0, 1.0));
        }
    }

    const int n_prims = 2 + static_cast<int>(rng.next_below(5));
    for (int i = 0; i < n_prims; ++i) {
        const int kind = static_cast<int>(rng.next_below(3));
        float rgb[3];
        for (float& c : rgb) c = static_cast<float>(rng.next_double());
        const double alpha = rng.uniform(0.4, 0.9);
        double cx = rng.uniform(0.1, 0.9) * size;
        const double cy = rng.uniform(0.1, 0.9) * size;
        if (kind == 0) {
            const double radius = rng.uniform(0.05, 0.16) * size;
            if (mirrored) cx = (size - 1) - cx;
            paint_disk(img, cx, cy, radius, rgb, alpha);
        } else if (kind == 1) {
            const double hx = rng.uniform(0.04, 0.14) * size;
            const double hy = rng.uniform(0.04, 0.14) * size;
            if (mirrored) cx = (size - 1) - cx;
            paint_rect(img, cx, cy, hx, hy, rgb, alpha);
        } else {
            double ex = cx + rng.uniform(-0.3, 0.3) * size;
            const double ey = cy + rng.uniform(-0.3, 0.3) * size;
            const double radius = rng.uniform(0.01, 0.03) * size;
            if (mirrored) {
                cx = (size - 1) - cx;
                ex = (size - 1) - ex;
            }
            paint_capsule(img, {cx, cy}, {ex, ey}, radius, rgb, alpha);
        }
    }
}

}  // namespace

std::vector<Image> gen_pretext_corpus(int count, int size, std::uint64_t seed) {
    if (count < 1) throw ArgError("gen_pretext_corpus: count must be >= 1");
    if (size < 8) throw ArgError("gen_pretext_corpus: size must be >= 8");
    std::vector<Image> images;
    images.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        Image img = Image::zeros(size, size, 3);
        paint_background(img, rng, false);
        images.push_back(std::move(img));
    }
    return images;
}

AnnotatedSample gen_keypoint_sample(int size, std::uint64_t seed, const SkeletonSpec& skeleton,
                                    bool mirrored) {
    validate_skeleton(skeleton);
    if (size < 16) throw ArgError("gen_keypoint_sample: size must be >= 16");
    Rng rng(seed);

    AnnotatedSample sample;
    sample.image = Image::zeros(size, size, 3);
    paint_background(sample.image, rng, mirrored);

    // Joint geometry; every draw happens regardless of `mirrored` so the two
    // renders share identical parameters.
    const double g = rng.uniform(0.75, 1.05);
    const int joints = skeleton.num_joints();
    std::vector<Point> pos(static_cast<std::size_t>(joints));
    pos[static_cast<std::size_t>(skeleton.pelvis_index())] = {
        size * (0.5 + rng.uniform(-0.06, 0.06)), size * (0.55 + rng.uniform(-0.06, 0.06))};
    for (const auto& b : skeleton.bones) {
        const double len = rng.uniform(b.len_lo, b.len_hi) * size * g;
        const double ang = rng.uniform(b.ang_lo_deg, b.ang_hi_deg) * (M_PI / 180.0);
        const Point p = pos[static_cast<std::size_t>(b.parent)];
        pos[static_cast<std::size_t>(b.child)] = {p.x + len * std::cos(ang),
                                                  p.y + len * std::sin(ang)};
    }

    float figure_rgb[3];
    {
        const bool bright = rng.bernoulli(0.5);
        const float value = static_cast<float>(bright ? rng.uniform(0.75, 0.95)
                                                      : rng.uniform(0.05, 0.30));
        const float hue = static_cast<float>(rng.uniform(0.0, 360.0));
        const float sat = static_cast<float>(rng.uniform(0.3, 0.9));
        imaging::hsv_to_rgb(hue, sat, value, &figure_rgb[0], &figure_rgb[1], &figure_rgb[2]);
    }
    const double limb_r = rng.uniform(0.018, 0.026) * size;
    const double head_r = rng.uniform(0.045, 0.060) * size;

    // Occluder geometry is drawn per keypoint before any rendering.
    struct Occluder { bool on; double cx, cy, hx, hy; float rgb[3]; };
    std::vector<Occluder> occluders(static_cast<std::size_t>(skeleton.num_keypoints()));
    for (int i = 0; i < skeleton.num_keypoints(); ++i) {
        Occluder& o = occluders[static_cast<std::size_t>(i)];
        o.on = rng.bernoulli(0.10);
        o.cx = pos[static_cast<std::size_t>(i)].x + rng.uniform(-0.01, 0.01) * size;
        o.cy = pos[static_cast<std::size_t>(i)].y + rng.uniform(-0.01, 0.01) * size;
        o.hx = rng.uniform(0.035, 0.06) * size;
        o.hy = rng.uniform(0.035, 0.06) * size;
        for (float& c : o.rgb) c = static_cast<float>(rng.next_double());
    }

    if (mirrored) {
        for (auto& p : pos) p.x = (size - 1) - p.x;
        for (auto& o : occluders) o.cx = (size - 1) - o.cx;
    }

    const double torso_r = 1.4 * limb_r;
    for (std::size_t bi = 0; bi < skeleton.bones.size(); ++bi) {
        const auto& b = skeleton.bones[bi];
        const double r = (b.parent == skeleton.pelvis_index() && b.child == skeleton.neck_index())
                             ? torso_r
                             : limb_r;
        paint_capsule(sample.image, pos[static_cast<std::size_t>(b.parent)],
                      pos[static_cast<std::size_t>(b.child)], r, figure_rgb, 1.0);
    }
    paint_disk(sample.image, pos[0].x, pos[0].y, head_r, figure_rgb, 1.0);

    for (const auto& o : occluders)
        if (o.on) paint_rect(sample.image, o.cx, o.cy, o.hx, o.hy, o.rgb, 1.0);

    // Annotations: the mirrored sample relabels left/right through the
    // pairing involution.
    const int k = skeleton.num_keypoints();
    sample.keypoints.resize(static_cast<std::size_t>(k));
    sample.visible.assign(static_cast<std::size_t>(k), 1);
    for (int i = 0; i < k; ++i) {
        const int src = mirrored ? skeleton.flip_pairs[static_cast<std::size_t>(i)] : i;
        sample.keypoints[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(src)];
    }
    for (int i = 0; i < k; ++i) {
        const int src = mirrored ? skeleton.flip_pairs[static_cast<std::size_t>(i)] : i;
        const Point p = sample.keypoints[static_cast<std::size_t>(i)];
        bool visible = p.x >= 0 && p.x < size && p.y >= 0 && p.y < size;
        for (const auto& o : occluders) {
            if (!o.on) continue;
            if (std::abs(p.x - o.cx) <= o.hx && std::abs(p.y - o.cy) <= o.hy) visible = false;
        }
        (void)src;
        sample.visible[static_cast<std::size_t>(i)] = visible ? 1 : 0;
    }

    double lox = size, loy = size, hix = 0, hiy = 0;
    for (const auto& p : pos) {
        lox = std::min(lox, p.x);
        hix = std::max(hix, p.x);
        loy = std::min(loy, p.y);
        hiy = std::max(hiy, p.y);
    }
    const double margin = head_r + 1.0;
    lox = std::clamp(lox - margin, 0.0, static_cast<double>(size - 1));
    loy = std::clamp(loy - margin, 0.0, static_cast<double>(size - 1));
    hix = std::clamp(hix + margin, lox + 1.0, static_cast<double>(size));
    hiy = std::clamp(hiy + margin, loy + 1.0, static_cast<double>(size));
    sample.bbox[0] = lox;
    sample.bbox[1] = loy;
    sample.bbox[2] = hix - lox;
    sample.bbox[3] = hiy - loy;
    return sample;
}

std::vector<AnnotatedSample> gen_keypoint_corpus(int count, int size, std::uint64_t seed,
                                                 const SkeletonSpec& skeleton) {
    if (count < 1) throw ArgError("gen_keypoint_corpus: count must be >= 1");
    std::vector<AnnotatedSample> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        samples.push_back(gen_keypoint_sample(size, mix_seed(seed, static_cast<std::uint64_t>(i)),
                                              skeleton));
    return samples;
}

void write_keypoint_corpus(const std::string& dir, const std::vector<AnnotatedSample>& samples) {
    fs::create_directories(dir);
    std::ostringstream index;
    char buf[64];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "img_%05zu.png", i);
        imaging::save_image((fs::path(dir) / buf).string(), samples[i].image);
        index << buf << " " << samples[i].keypoints.size();
        for (std::size_t kp = 0; kp < samples[i].keypoints.size(); ++kp) {
            std::snprintf(buf, sizeof(buf), " %.4f %.4f %d", samples[i].keypoints[kp].x,
                          samples[i].keypoints[kp].y, samples[i].visible[kp] ? 1 : 0);
            index << buf;
        }
        std::snprintf(buf, sizeof(buf), " %.4f %.4f %.4f %.4f", samples[i].bbox[0],
                      samples[i].bbox[1], samples[i].bbox[2], samples[i].bbox[3]);
        index << buf << "\n";
    }
    std::ofstream f(fs::path(dir) / "annotations.txt", std::ios::trunc);
    if (!f) throw IoError("cannot write annotations in " + dir);
    f << index.str();
}

}  // namespace hsjp::synthdata
