#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace hsjp::synthdata {

using dataset::KeypointAnnotation;
using imaging::Image;
using imaging::Point;

// Articulated stick figure. Joints 0..K-1 are exported keypoints; two latent
// joints (pelvis = K, neck = K+1) root the bone tree and are not annotated.
struct SkeletonSpec {
    struct Bone {
        int parent = 0;
        int child = 0;
        double len_lo = 0, len_hi = 0;        // fraction of working size
        double ang_lo_deg = 0, ang_hi_deg = 0; // absolute, y-down screen angles
    };

    std::vector<std::string> names;  // K keypoint names
    std::vector<int> flip_pairs;     // involution: index of the mirrored keypoint
    std::vector<Bone> bones;         // tree rooted at the pelvis

    int num_keypoints() const { return static_cast<int>(names.size()); }
    int pelvis_index() const { return num_keypoints(); }
    int neck_index() const { return num_keypoints() + 1; }
    int num_joints() const { return num_keypoints() + 2; }
};

// 13 keypoints: head, shoulders, elbows, wrists, hips, knees, ankles.
const SkeletonSpec& default_skeleton();

// Checks the pairing involution and that the bone graph is a pelvis-rooted
// tree covering every joint.
void validate_skeleton(const SkeletonSpec& spec);

struct AnnotatedSample {
    Image image;
    std::vector<Point> keypoints;
    std::vector<std::uint8_t> visible;
    double bbox[4] = {0, 0, 0, 0};  // x, y, w, h

    KeypointAnnotation annotation() const;
};

// Textured backgrounds: a fixed-direction illumination gradient (vertical
// luminance, horizontal red/blue tint) plus multi-scale value noise and a few
// random primitives. The gradient makes patch content position-coded, which
// is what the shuffled-patch pretext needs to be learnable at desk scale.
std::vector<Image> gen_pretext_corpus(int count, int size, std::uint64_t seed);

// One figure over a pretext-style background. `mirrored` renders the
// x-mirrored geometry with left/right roles swapped; it exists so tests can
// check flip consistency against a horizontally flipped render.
AnnotatedSample gen_keypoint_sample(int size, std::uint64_t seed, const SkeletonSpec& skeleton,
                                    bool mirrored = false);

std::vector<AnnotatedSample> gen_keypoint_corpus(int count, int size, std::uint64_t seed,
                                                 const SkeletonSpec& skeleton);

// PNGs plus annotations.txt ("file K x1 y1 v1 ... xK yK vK bx by bw bh").
void write_keypoint_corpus(const std::string& dir, const std::vector<AnnotatedSample>& samples);

}  // namespace hsjp::synthdata
