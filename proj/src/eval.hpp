#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "heatmap.hpp"
#include "model.hpp"
#include "synthdata.hpp"
#include "train_config.hpp"

namespace hsjp::eval {

using imaging::Point;

// Strict inequality: ||pred - gt||_2 < eps.
bool patch_correct(Point pred, Point gt, double eps);

// A puzzle is solved iff every patch is correctly located.
bool puzzle_solved(const std::vector<std::uint8_t>& correct_flags);

// P = T / (T + F); throws on an empty evaluation set.
double precision(std::int64_t solved, std::int64_t failed);

struct HsjpEvalResult {
    double precision = 0;        // fraction of fully solved puzzles
    double patch_accuracy = 0;   // fraction of correctly located patches
    std::int64_t solved = 0, failed = 0;
    std::int64_t patches_correct = 0, patches_total = 0;
};

// Splits and shuffles each image with a per-image seed derived from
// eval_seed, no augmentation, forwards, decodes peaks, and scores patches
// at cfg.resolved_eps() (heatmap px).
HsjpEvalResult evaluate_hsjp(const model::Network<float>& net,
                             const std::vector<const imaging::Image*>& images,
                             const train::TrainConfig& cfg, std::uint64_t eval_seed);

struct OksConfig {
    std::vector<double> k;  // per-keypoint falloff constants, > 0
};

// The standard 17-keypoint benchmark constants when num_keypoints == 17,
// uniform k = 0.08 otherwise (synthetic skeletons).
OksConfig default_oks_config(int num_keypoints);

// Mean over visible keypoints of exp(-d^2 / (2 scale^2 k_i^2)); empty when
// no keypoint is visible. scale is the object scale (sqrt of bbox area).
std::optional<double> oks(const std::vector<Point>& pred, const std::vector<Point>& gt,
                          const std::vector<std::uint8_t>& visible, double scale,
                          const OksConfig& cfg);

struct MapResult {
    double map = 0;
    std::array<double, 10> ap{};     // thresholds 0.50 : 0.05 : 0.95
    std::int64_t valid_instances = 0;
    std::int64_t excluded = 0;       // invalid entries (e.g. no visible keypoints)
};

// Single-instance matching: AP@t = fraction of valid instances with
// OKS >= t. Entries < 0 are treated as invalid and excluded with a count.
MapResult map_over_thresholds(const std::vector<double>& per_instance_oks);

struct PoseEvalResult {
    MapResult map;
    double mean_oks = 0;
};

PoseEvalResult evaluate_pose(const model::Network<float>& net, const dataset::Dataset& ds,
                             const train::TrainConfig& cfg);

struct SweepRow {
    int depth = 0;
    double map = 0;
};

// Finetunes once per freeze depth with identical seeds/config, evaluating
// each run on eval_ds. Intermediate checkpoints go under workdir.
std::vector<SweepRow> transfer_sweep(const std::string& pretrained_ckpt,
                                     const dataset::Dataset& train_ds,
                                     const dataset::Dataset& eval_ds,
                                     const std::vector<int>& depths,
                                     const train::TrainConfig& cfg,
                                     const synthdata::SkeletonSpec& skeleton,
                                     const std::string& workdir);

// Side-by-side predicted vs target heatmap mosaic for one image.
imaging::Image prediction_mosaic(const model::Network<float>& net, const imaging::Image& image,
                                 const train::TrainConfig& cfg, std::uint64_t eval_seed);

}  // namespace hsjp::eval
