#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affine.hpp"
#include "color.hpp"

namespace hsjp::train {

// Step-decay learning rate schedule: base_lr before the first milestone,
// the milestone's lr at and after its epoch.
struct Schedule {
    double base_lr = 1e-3;
    std::vector<std::pair<int, double>> milestones;  // (epoch, lr)
    int total_epochs = 40;
};

double lr_at_epoch(const Schedule& s, int epoch);
void validate_schedule(const Schedule& s);

// Single source of truth for run settings. Keys in config files and CLI
// flags map onto these fields one-to-one; defaults are the initializers.
struct TrainConfig {
    int n = 3;                 // patches per side
    int size = 96;             // working resolution (multiple of 4)
    int batch = 16;
    int epochs = 40;
    std::uint64_t seed = 1;
    double lr = 1e-3;
    std::string milestones = "30:0.0001,36:0.00001";  // "epoch:lr,..."
    double sigma = 0.0;        // heatmap px; 0 = auto (min(1.5, 0.995*bound))
    double eps = 0.0;          // jigsaw tolerance, heatmap px; 0 = auto (half cell)
    double scale_min = 0.65;
    double scale_max = 1.35;
    double rotate = 45.0;      // degrees, symmetric
    double translate = 0.10;   // fraction per axis
    bool color = true;         // color jitter during pretraining
    bool flip = true;          // horizontal flip during finetuning
    double fraction = 1.0;     // labeled subset for finetuning
    int freeze_depth = 0;      // leading layer groups frozen [0, 6]
    bool concat_unshuffled = false;
    double holdout = 0.1;      // held-out fraction for pretext precision
    int eval_every = 5;        // epochs between held-out evaluations
    int threads = 1;
    bool deterministic = false;  // forces threads = 1
    std::string select = "precision";  // checkpoint selection: precision|final

    Schedule schedule() const;
    double resolved_sigma() const;  // respects the 3-sigma bound
    double resolved_eps() const;
    int out_size() const { return size / 4; }
    int effective_threads() const { return deterministic ? 1 : threads; }
    imaging::SpatialAugRanges spatial_ranges() const;

    // Throws ConfigError naming the offending key on any violated invariant.
    void validate() const;
};

// The paper-scale preset: 224 input, N=6, batch 256, 240 epochs with drops
// at 190/220. Not desk-feasible; callers should warn when selecting it.
TrainConfig paper_preset();

// Flat key=value file; '#' comments and blank lines allowed. Unknown or
// duplicate keys are errors naming the key and line.
TrainConfig parse_config_file(const std::string& path);

// Applies one key=value pair (CLI overrides reuse this). Throws ConfigError
// on unknown keys or unparsable values.
void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value);

std::vector<std::pair<int, double>> parse_milestones(const std::string& text);

}  // namespace hsjp::train
