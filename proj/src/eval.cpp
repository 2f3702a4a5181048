#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "error.hpp"
#include "puzzle.hpp"
#include "train.hpp"

namespace hsjp::eval {

using imaging::Image;

bool patch_correct(Point pred, Point gt, double eps) {
    if (eps <= 0) throw ArgError("patch_correct: eps must be > 0");
    const double dx = pred.x - gt.x, dy = pred.y - gt.y;
    return std::sqrt(dx * dx + dy * dy) < eps;
}

bool puzzle_solved(const std::vector<std::uint8_t>& correct_flags) {
    for (std::uint8_t f : correct_flags)
        if (!f) return false;
    return true;
}

double precision(std::int64_t solved, std::int64_t failed) {
    if (solved < 0 || failed < 0) throw ArgError("precision: negative counts");
    if (solved + failed == 0) throw ArgError("precision: empty evaluation set");
    return static_cast<double>(solved) / static_cast<double>(solved + failed);
}

namespace {

// CHW copy, shared with the train batch builders' layout.
void image_to_chw(const Image& img, float* dst) {
    const std::size_t plane = img.pixel_count();
    for (int c = 0; c < img.channels; ++c)
        for (std::size_t p = 0; p < plane; ++p)
            dst[c * plane + p] = img.data[p * img.channels + c];
}

Image ensure_size(const Image& img, int size) {
    if (img.height == size && img.width == size) return img;
    return imaging::resize(img, size, size);
}

}  // namespace

HsjpEvalResult evaluate_hsjp(const model::Network<float>& net,
                             const std::vector<const Image*>& images,
                             const train::TrainConfig& cfg, std::uint64_t eval_seed) {
    if (images.empty()) throw ArgError("evaluate_hsjp: empty evaluation set");
    const int s = cfg.size;
    const int out = cfg.out_size();
    const int cells = cfg.n * cfg.n;
    const double eps = cfg.resolved_eps();
    const puzzle::PatchGrid grid = puzzle::make_grid(s, cfg.n);
    const bool concat = net.in_channels == 6;
    const int in_c = concat ? 6 : 3;
    if (net.head_channels != cells)
        throw ShapeError("evaluate_hsjp: network head has " +
                         std::to_string(net.head_channels) + " channels, expected n^2 = " +
                         std::to_string(cells));

    const int batch_size = std::min<int>(16, static_cast<int>(images.size()));
    const std::size_t item_floats = static_cast<std::size_t>(in_c) * s * s;
    const std::size_t out_floats = static_cast<std::size_t>(cells) * out * out;
    std::vector<float> input(static_cast<std::size_t>(batch_size) * item_floats);
    std::vector<float> output(static_cast<std::size_t>(batch_size) * out_floats);
    model::Cache<float> cache;

    HsjpEvalResult result;
    std::vector<std::vector<Point>> gt_centers(static_cast<std::size_t>(batch_size));

    for (std::size_t base = 0; base < images.size(); base += batch_size) {
        const int b = static_cast<int>(std::min<std::size_t>(batch_size, images.size() - base));
        for (int i = 0; i < b; ++i) {
            const std::size_t idx = base + static_cast<std::size_t>(i);
            Rng ir(mix_seed(eval_seed, idx));
            Image img = ensure_size(imaging::to_rgb(*images[idx]), s);
            puzzle::Permutation perm{puzzle::fisher_yates(cells, ir), mix_seed(eval_seed, idx)};
            Image mosaic =
                puzzle::assemble_shuffled(puzzle::pad_to(img, grid.padded_size), grid, perm);
            if (grid.padded_size != s) mosaic = imaging::resize(mosaic, s, s);

            float* dst = input.data() + item_floats * i;
            image_to_chw(mosaic, dst);
            if (concat) image_to_chw(img, dst + static_cast<std::size_t>(3) * s * s);

            auto& centers = gt_centers[static_cast<std::size_t>(i)];
            centers.clear();
            for (const Point c : puzzle::shuffled_centers(grid, perm, s))
                centers.push_back({c.x / 4.0, c.y / 4.0});
        }

        model::forward(net, input.data(), b, s, output.data(), cache,
                       cfg.effective_threads());

        for (int i = 0; i < b; ++i) {
            const auto peaks =
                heatmap::decode_peaks_raw(output.data() + out_floats * i, nullptr, cells, out,
                                          out);
            std::vector<std::uint8_t> flags(static_cast<std::size_t>(cells));
            for (int p = 0; p < cells; ++p) {
                const bool ok = patch_correct({peaks[static_cast<std::size_t>(p)].x,
                                               peaks[static_cast<std::size_t>(p)].y},
                                              gt_centers[static_cast<std::size_t>(i)]
                                                        [static_cast<std::size_t>(p)],
                                              eps);
                flags[static_cast<std::size_t>(p)] = ok ? 1 : 0;
                result.patches_correct += ok ? 1 : 0;
            }
            result.patches_total += cells;
            if (puzzle_solved(flags))
                ++result.solved;
            else
                ++result.failed;
        }
    }

    result.precision = precision(result.solved, result.failed);
    result.patch_accuracy =
        static_cast<double>(result.patches_correct) / static_cast<double>(result.patches_total);
    return result;
}

OksConfig default_oks_config(int num_keypoints) {
    if (num_keypoints < 1) throw ArgError("default_oks_config: bad keypoint count");
    OksConfig cfg;
    if (num_keypoints == 17) {
        cfg.k = {0.052, 0.050, 0.050, 0.070, 0.070, 0.158, 0.158, 0.144, 0.144,
                 0.124, 0.124, 0.214, 0.214, 0.174, 0.174, 0.178, 0.178};
    } else {
        cfg.k.assign(static_cast<std::size_t>(num_keypoints), 0.08);
    }
    return cfg;
}

std::optional<double> oks(const std::vector<Point>& pred, const std::vector<Point>& gt,
                          const std::vector<std::uint8_t>& visible, double scale,
                          const OksConfig& cfg) {
    if (pred.size() != gt.size() || visible.size() != gt.size() || cfg.k.size() != gt.size())
        throw ShapeError("oks: keypoint count mismatch");
    if (scale <= 0) throw ArgError("oks: scale must be > 0");
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!visible[i]) continue;
        if (cfg.k[i] <= 0) throw ArgError("oks: falloff constants must be > 0");
        const double dx = pred[i].x - gt[i].x, dy = pred[i].y - gt[i].y;
        const double denom = 2.0 * scale * scale * cfg.k[i] * cfg.k[i];
        sum += std::exp(-(dx * dx + dy * dy) / denom);
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

MapResult map_over_thresholds(const std::vector<double>& per_instance_oks) {
    if (per_instance_oks.empty()) throw ArgError("map_over_thresholds: empty input");
    MapResult r;
    std::vector<double> valid;
    for (double v : per_instance_oks) {
        if (v < 0.0) {
            ++r.excluded;
            continue;
        }
        valid.push_back(v);
    }
    r.valid_instances = static_cast<std::int64_t>(valid.size());
    if (valid.empty()) return r;  // map stays 0, all excluded
    double total = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double t = 0.50 + 0.05 * j;
        std::int64_t hits = 0;
        for (double v : valid)
            if (v >= t) ++hits;
        r.ap[static_cast<std::size_t>(j)] =
            static_cast<double>(hits) / static_cast<double>(valid.size());
        total += r.ap[static_cast<std::size_t>(j)];
    }
    r.map = total / 10.0;
    return r;
}

PoseEvalResult evaluate_pose(const model::Network<float>& net, const dataset::Dataset& ds,
                             const train::TrainConfig& cfg) {
    if (!ds.has_keypoints) throw ArgError("evaluate_pose: dataset has no annotations");
    if (ds.size() == 0) throw ArgError("evaluate_pose: empty dataset");
    if (net.in_channels != 3) throw ShapeError("evaluate_pose: network expects 3 channels");
    const int k = static_cast<int>(ds.annotations[0].points.size());
    if (net.head_channels != k)
        throw ShapeError("evaluate_pose: network head has " +
                         std::to_string(net.head_channels) + " channels, dataset has " +
                         std::to_string(k) + " keypoints");

    const int s = cfg.size;
    const int out = cfg.out_size();
    const OksConfig okscfg = default_oks_config(k);

    const int batch_size = std::min<int>(16, static_cast<int>(ds.size()));
    const std::size_t item_floats = static_cast<std::size_t>(3) * s * s;
    const std::size_t out_floats = static_cast<std::size_t>(k) * out * out;
    std::vector<float> input(static_cast<std::size_t>(batch_size) * item_floats);
    std::vector<float> output(static_cast<std::size_t>(batch_size) * out_floats);
    model::Cache<float> cache;

    std::vector<double> scores;
    scores.reserve(ds.size());
    double oks_sum = 0.0;
    std::int64_t oks_count = 0;

    for (std::size_t base = 0; base < ds.size(); base += batch_size) {
        const int b = static_cast<int>(std::min<std::size_t>(batch_size, ds.size() - base));
        for (int i = 0; i < b; ++i) {
            const Image img = ensure_size(imaging::to_rgb(ds.images[base + i]), s);
            image_to_chw(img, input.data() + item_floats * i);
        }
        model::forward(net, input.data(), b, s, output.data(), cache,
                       cfg.effective_threads());
        for (int i = 0; i < b; ++i) {
            const auto& ann = ds.annotations[base + static_cast<std::size_t>(i)];
            const auto peaks = heatmap::decode_peaks_raw(output.data() + out_floats * i, nullptr,
                                                         k, out, out);
            std::vector<Point> pred(static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j)
                pred[static_cast<std::size_t>(j)] = {peaks[static_cast<std::size_t>(j)].x * 4.0,
                                                     peaks[static_cast<std::size_t>(j)].y * 4.0};
            const double scale = std::sqrt(ann.bbox[2] * ann.bbox[3]);
            const auto score = oks(pred, ann.points, ann.visible, scale, okscfg);
            if (score) {
                scores.push_back(*score);
                oks_sum += *score;
                ++oks_count;
            } else {
                scores.push_back(-1.0);
            }
        }
    }

    PoseEvalResult result;
    result.map = map_over_thresholds(scores);
    result.mean_oks = oks_count ? oks_sum / static_cast<double>(oks_count) : 0.0;
    return result;
}

std::vector<SweepRow> transfer_sweep(const std::string& pretrained_ckpt,
                                     const dataset::Dataset& train_ds,
                                     const dataset::Dataset& eval_ds,
                                     const std::vector<int>& depths,
                                     const train::TrainConfig& cfg,
                                     const synthdata::SkeletonSpec& skeleton,
                                     const std::string& workdir) {
    namespace fs = std::filesystem;
    fs::create_directories(workdir);
    std::vector<SweepRow> rows;
    for (int depth : depths) {
        train::TrainConfig run = cfg;
        run.freeze_depth = depth;
        const std::string ckpt =
            (fs::path(workdir) / ("ft_depth_" + std::to_string(depth) + ".ckpt")).string();
        const std::string log =
            (fs::path(workdir) / ("ft_depth_" + std::to_string(depth) + ".log")).string();
        train::finetune(train_ds, pretrained_ckpt, run, skeleton, ckpt, log);
        const model::Network<float> net = model::load_checkpoint(ckpt);
        rows.push_back({depth, evaluate_pose(net, eval_ds, run).map.map});
    }
    return rows;
}

imaging::Image prediction_mosaic(const model::Network<float>& net, const Image& image,
                                 const train::TrainConfig& cfg, std::uint64_t eval_seed) {
    const int s = cfg.size;
    const int out = cfg.out_size();
    const int cells = cfg.n * cfg.n;
    const puzzle::PatchGrid grid = puzzle::make_grid(s, cfg.n);
    const bool concat = net.in_channels == 6;

    Rng ir(eval_seed);
    Image img = ensure_size(imaging::to_rgb(image), s);
    puzzle::Permutation perm{puzzle::fisher_yates(cells, ir), eval_seed};
    Image mosaic = puzzle::assemble_shuffled(puzzle::pad_to(img, grid.padded_size), grid, perm);
    if (grid.padded_size != s) mosaic = imaging::resize(mosaic, s, s);

    const std::size_t item_floats = static_cast<std::size_t>(concat ? 6 : 3) * s * s;
    std::vector<float> input(item_floats);
    image_to_chw(mosaic, input.data());
    if (concat) image_to_chw(img, input.data() + static_cast<std::size_t>(3) * s * s);
    std::vector<float> output(static_cast<std::size_t>(cells) * out * out);
    model::Cache<float> cache;
    model::forward(net, input.data(), 1, s, output.data(), cache, 1);

    heatmap::HeatmapStack pred = heatmap::HeatmapStack::zeros(cells, out, out);
    std::copy(output.begin(), output.end(), pred.data.begin());

    heatmap::GaussianSpec spec;
    spec.sigma = cfg.resolved_sigma();
    for (const Point c : puzzle::shuffled_centers(grid, perm, s))
        spec.centers.push_back({c.x / 4.0, c.y / 4.0});
    const heatmap::HeatmapStack target = heatmap::render_targets(spec, out, out);

    const Image left = heatmap::mosaic(pred, cfg.n);
    const Image right = heatmap::mosaic(target, cfg.n);
    const int gap = 4;
    Image side = Image::zeros(std::max(left.height, right.height),
                              left.width + gap + right.width, 1);
    for (int y = 0; y < left.height; ++y)
        for (int x = 0; x < left.width; ++x) side.at(y, x, 0) = left.at(y, x, 0);
    for (int y = 0; y < right.height; ++y)
        for (int x = 0; x < right.width; ++x)
            side.at(y, left.width + gap + x, 0) = right.at(y, x, 0);
    return side;
}

}  // namespace hsjp::eval
