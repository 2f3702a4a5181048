#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "heatmap.hpp"
#include "model.hpp"
#include "puzzle.hpp"
#include "synthdata.hpp"
#include "train_config.hpp"

namespace hsjp::train {

// ------------------------------------------------------------------- Adam

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::int64_t t = 0;
    AdamConfig cfg;
    std::vector<std::vector<float>> m, v;  // aligned with network params
};

AdamState make_adam_state(const model::Network<float>& net);

// Bias-corrected update of one tensor at step t (t counts from 1).
void adam_update_tensor(float* p, const float* g, float* m, float* v, std::size_t n,
                        std::int64_t t, double lr, const AdamConfig& cfg);

// Updates the listed parameter blocks; t increments once per call. Frozen
// blocks are excluded by the caller via `blocks`.
void adam_step(AdamState& state, model::Network<float>& net, const model::Grads<float>& grads,
               double lr, const std::vector<int>& blocks);

std::vector<int> unfrozen_blocks(const model::Network<float>& net);

// ------------------------------------------------------------- batch build

struct HsjpBatch {
    int batch = 0;
    int in_channels = 3;
    int size = 0;
    std::vector<float> input;  // B x C x S x S
    std::vector<heatmap::HeatmapStack> targets;
    std::vector<puzzle::Permutation> perms;
};

// Per image: split, Fisher-Yates shuffle, assemble, one sampled affine,
// warp, color jitter, transform the shuffled centers by the same affine,
// divide by stride 4, render masked targets. One u64 is drawn from `rng`
// per item to seed its private stream.
HsjpBatch make_hsjp_batch(const std::vector<const imaging::Image*>& images,
                          const TrainConfig& cfg, Rng& rng);

struct KeypointBatch {
    int batch = 0;
    int size = 0;
    std::vector<float> input;  // B x 3 x S x S
    std::vector<heatmap::HeatmapStack> targets;
};

// Finetuning augmentation: horizontal flip (with left/right index swap) plus
// rotation/rescale; no translation, no color jitter.
KeypointBatch make_keypoint_batch(const std::vector<dataset::AnnotatedSampleRef>& items,
                                  const TrainConfig& cfg,
                                  const synthdata::SkeletonSpec& skeleton, Rng& rng);

// Horizontal flip of an annotated sample: pixels mirror, keypoint i takes
// the coordinates of its paired keypoint at x -> (width - 1 - x).
void flip_annotated(imaging::Image& image, std::vector<imaging::Point>& keypoints,
                    std::vector<std::uint8_t>& visible,
                    const synthdata::SkeletonSpec& skeleton);

// ------------------------------------------------------------ train loops

struct EpochRecord {
    int epoch = 0;
    double loss = 0;
    double lr = 0;
    double precision = -1;  // held-out HSJP precision; < 0 when not evaluated
    bool has_precision = false;
};

struct PretrainResult {
    std::vector<EpochRecord> log;
    int best_epoch = -1;          // epoch of the saved checkpoint (precision mode)
    double best_precision = -1;
    double holdout_precision = -1;  // of the saved model
    double holdout_patch_accuracy = -1;
    std::size_t train_count = 0, holdout_count = 0;
    std::size_t total_steps = 0;  // optimizer steps taken
};

// Runs epochs * ceil(|train| / batch) Adam steps of masked-MSE training on
// shuffled mosaics; evaluates jigsaw precision on a held-out split every
// eval_every epochs and saves the best-precision weights (select=precision)
// or the final weights (select=final). Writes out_ckpt atomically and a
// tab-separated "epoch\tloss\tlr[\tprecision]" log when paths are non-empty.
PretrainResult pretrain(const dataset::Dataset& ds, const TrainConfig& cfg,
                        const std::string& out_ckpt, const std::string& log_path);

struct FinetuneResult {
    std::vector<EpochRecord> log;
    int head_channels = 0;
};

// Deterministic initial network for finetuning: checkpoint backbone with a
// freshly seeded head, or a from-scratch network when init_ckpt is empty.
// Exposed so evaluations can reproduce the exact pre-training state.
model::Network<float> initial_finetune_network(const std::string& init_ckpt, int keypoints,
                                               const TrainConfig& cfg);

// Swaps the head to K keypoint channels, honors freeze_depth and fraction,
// and trains with per-keypoint visibility masks. Saves the final weights.
FinetuneResult finetune(const dataset::Dataset& ds, const std::string& init_ckpt,
                        const TrainConfig& cfg, const synthdata::SkeletonSpec& skeleton,
                        const std::string& out_ckpt, const std::string& log_path);

// floor(fraction * |ds|) items chosen without replacement, deterministic per
// seed; original order preserved. Throws when the result would be empty.
dataset::Dataset subsample_labels(const dataset::Dataset& ds, double fraction,
                                  std::uint64_t seed);

void write_metrics_log(const std::string& path, const std::vector<EpochRecord>& log);

}  // namespace hsjp::train
