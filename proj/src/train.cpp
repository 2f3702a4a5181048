#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "color.hpp"
#include "error.hpp"
#include "eval.hpp"

namespace hsjp::train {

using imaging::Image;
using imaging::Point;

// ------------------------------------------------------------------- Adam

AdamState make_adam_state(const model::Network<float>& net) {
    AdamState s;
    s.m.resize(net.params.size());
    s.v.resize(net.params.size());
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        s.m[i].assign(net.params[i].size(), 0.0f);
        s.v[i].assign(net.params[i].size(), 0.0f);
    }
    return s;
}

void adam_update_tensor(float* p, const float* g, float* m, float* v, std::size_t n,
                        std::int64_t t, double lr, const AdamConfig& cfg) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
        const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        p[i] = static_cast<float>(p[i] - lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
    }
}

void adam_step(AdamState& state, model::Network<float>& net, const model::Grads<float>& grads,
               double lr, const std::vector<int>& blocks) {
    if (grads.size() != net.params.size() || state.m.size() != net.params.size())
        throw ShapeError("adam_step: state/grads not aligned with parameters");
    state.t += 1;
    for (int b : blocks) {
        auto& p = net.params[static_cast<std::size_t>(b)];
        const auto& g = grads[static_cast<std::size_t>(b)];
        if (g.size() != p.size()) throw ShapeError("adam_step: gradient shape mismatch at " + p.name);
        adam_update_tensor(p.v.data(), g.data(), state.m[static_cast<std::size_t>(b)].data(),
                           state.v[static_cast<std::size_t>(b)].data(), p.size(), state.t, lr,
                           state.cfg);
    }
}

std::vector<int> unfrozen_blocks(const model::Network<float>& net) {
    std::vector<int> blocks;
    for (int i = 0; i < static_cast<int>(net.params.size()); ++i)
        if (!net.frozen[static_cast<std::size_t>(model::param_group(i))]) blocks.push_back(i);
    return blocks;
}

// ------------------------------------------------------------- batch build

namespace {

// HWC [0,1] image into a CHW float plane.
void image_to_chw(const Image& img, float* dst) {
    const std::size_t plane = img.pixel_count();
    for (int c = 0; c < img.channels; ++c)
        for (std::size_t p = 0; p < plane; ++p) dst[c * plane + p] = img.data[p * img.channels + c];
}

Image ensure_size(const Image& img, int size) {
    if (img.height == size && img.width == size) return img;
    return imaging::resize(img, size, size);
}

}  // namespace

void flip_annotated(Image& image, std::vector<Point>& keypoints,
                    std::vector<std::uint8_t>& visible,
                    const synthdata::SkeletonSpec& skeleton) {
    Image out = Image::zeros(image.height, image.width, image.channels);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < image.channels; ++c)
                out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
    image = std::move(out);

    const int k = skeleton.num_keypoints();
    if (static_cast<int>(keypoints.size()) != k || static_cast<int>(visible.size()) != k)
        throw ShapeError("flip_annotated: keypoint count mismatch");
    std::vector<Point> fk(keypoints.size());
    std::vector<std::uint8_t> fv(visible.size());
    for (int i = 0; i < k; ++i) {
        const int src = skeleton.flip_pairs[static_cast<std::size_t>(i)];
        fk[static_cast<std::size_t>(i)] = {image.width - 1 - keypoints[static_cast<std::size_t>(src)].x,
                                           keypoints[static_cast<std::size_t>(src)].y};
        fv[static_cast<std::size_t>(i)] = visible[static_cast<std::size_t>(src)];
    }
    keypoints = std::move(fk);
    visible = std::move(fv);
}

HsjpBatch make_hsjp_batch(const std::vector<const Image*>& images, const TrainConfig& cfg,
                          Rng& rng) {
    HsjpBatch batch;
    batch.batch = static_cast<int>(images.size());
    batch.size = cfg.size;
    batch.in_channels = cfg.concat_unshuffled ? 6 : 3;
    const int s = cfg.size;
    const int out = cfg.out_size();
    const int cells = cfg.n * cfg.n;
    const double sigma = cfg.resolved_sigma();
    const puzzle::PatchGrid grid = puzzle::make_grid(s, cfg.n);

    const std::size_t item_floats = static_cast<std::size_t>(batch.in_channels) * s * s;
    batch.input.assign(static_cast<std::size_t>(batch.batch) * item_floats, 0.0f);
    batch.targets.reserve(images.size());
    batch.perms.reserve(images.size());

    for (std::size_t item = 0; item < images.size(); ++item) {
        const std::uint64_t item_seed = rng.next_u64();
        Rng ir(item_seed);

        Image img = ensure_size(imaging::to_rgb(*images[item]), s);
        puzzle::Permutation perm{puzzle::fisher_yates(cells, ir), item_seed};
        Image mosaic = puzzle::assemble_shuffled(puzzle::pad_to(img, grid.padded_size), grid,
                                                 perm);
        if (grid.padded_size != s) mosaic = imaging::resize(mosaic, s, s);

        const imaging::AffineTransform a =
            imaging::sample_spatial_augmentation(ir, cfg.spatial_ranges(), s, s);
        Image warped = imaging::warp_image(mosaic, a, s, s);
        imaging::ColorAugParams cp;
        if (cfg.color) cp = imaging::sample_color_augmentation(ir, imaging::ColorAugRanges{});
        if (cfg.color) warped = imaging::color_augment(warped, cp);

        float* dst = batch.input.data() + item_floats * item;
        image_to_chw(warped, dst);
        if (cfg.concat_unshuffled) {
            Image orig = imaging::warp_image(img, a, s, s);
            if (cfg.color) orig = imaging::color_augment(orig, cp);
            image_to_chw(orig, dst + static_cast<std::size_t>(3) * s * s);
        }

        heatmap::GaussianSpec spec;
        spec.sigma = sigma;
        spec.centers.reserve(static_cast<std::size_t>(cells));
        for (const Point c : puzzle::shuffled_centers(grid, perm, s)) {
            const Point t = imaging::transform_point(a, c);
            spec.centers.push_back({t.x / 4.0, t.y / 4.0});
        }
        batch.targets.push_back(heatmap::render_targets(spec, out, out));
        batch.perms.push_back(std::move(perm));
    }
    return batch;
}

KeypointBatch make_keypoint_batch(const std::vector<dataset::AnnotatedSampleRef>& items,
                                  const TrainConfig& cfg,
                                  const synthdata::SkeletonSpec& skeleton, Rng& rng) {
    KeypointBatch batch;
    batch.batch = static_cast<int>(items.size());
    batch.size = cfg.size;
    const int s = cfg.size;
    const int out = cfg.out_size();
    const double sigma = cfg.resolved_sigma();
    const int k = skeleton.num_keypoints();

    const std::size_t item_floats = static_cast<std::size_t>(3) * s * s;
    batch.input.assign(static_cast<std::size_t>(batch.batch) * item_floats, 0.0f);
    batch.targets.reserve(items.size());

    imaging::SpatialAugRanges ranges = cfg.spatial_ranges();
    ranges.translate_frac = 0.0;  // finetuning augments with flip/rotate/rescale only

    for (std::size_t item = 0; item < items.size(); ++item) {
        const std::uint64_t item_seed = rng.next_u64();
        Rng ir(item_seed);

        Image img = ensure_size(imaging::to_rgb(*items[item].image), s);
        const auto& ann = *items[item].annotation;
        if (static_cast<int>(ann.points.size()) != k)
            throw ShapeError("make_keypoint_batch: annotation has " +
                             std::to_string(ann.points.size()) + " keypoints, skeleton has " +
                             std::to_string(k));
        std::vector<Point> kps = ann.points;
        std::vector<std::uint8_t> vis = ann.visible;

        const bool do_flip = cfg.flip && ir.bernoulli(0.5);
        if (do_flip) flip_annotated(img, kps, vis, skeleton);

        const imaging::AffineTransform a = imaging::sample_spatial_augmentation(ir, ranges, s, s);
        const Image warped = imaging::warp_image(img, a, s, s);
        image_to_chw(warped, batch.input.data() + item_floats * item);

        heatmap::GaussianSpec spec;
        spec.sigma = sigma;
        spec.centers.reserve(static_cast<std::size_t>(k));
        for (const Point& p : kps) {
            const Point t = imaging::transform_point(a, p);
            spec.centers.push_back({t.x / 4.0, t.y / 4.0});
        }
        heatmap::HeatmapStack target = heatmap::render_targets(spec, out, out);
        for (int i = 0; i < k; ++i)
            if (!vis[static_cast<std::size_t>(i)]) {
                target.mask[static_cast<std::size_t>(i)] = 0;
                float* ch = target.channel(i);
                std::fill(ch, ch + static_cast<std::size_t>(out) * out, 0.0f);
            }
        batch.targets.push_back(std::move(target));
    }
    return batch;
}

// ------------------------------------------------------------ train loops

namespace {

constexpr std::uint64_t kStreamHoldout = 0x701D;
constexpr std::uint64_t kStreamOrder = 0x0E0;
constexpr std::uint64_t kStreamBatch = 0x0BA;
constexpr std::uint64_t kStreamEval = 0xE7A1;
constexpr std::uint64_t kStreamInit = 0x1217;
constexpr std::uint64_t kStreamHead = 0x6EAD;
constexpr std::uint64_t kStreamSubset = 0x5AB5;

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t j = n; j > 1; --j) {
        const std::size_t k = rng.next_below(j);
        std::swap(idx[j - 1], idx[k]);
    }
    return idx;
}

// Mean per-sample masked MSE and the scaled loss gradient for a batch.
double batch_loss_and_grad(const std::vector<heatmap::HeatmapStack>& targets, const float* out,
                           int out_size, float* dout) {
    const int b = static_cast<int>(targets.size());
    const int c = targets[0].channels;
    const std::size_t item_n = static_cast<std::size_t>(c) * out_size * out_size;
    double loss = 0.0;
    const float inv_b = 1.0f / static_cast<float>(b);
    for (int i = 0; i < b; ++i) {
        const auto& g = targets[static_cast<std::size_t>(i)];
        const float* h = out + item_n * i;
        float* d = dout + item_n * i;
        loss += heatmap::masked_mse_raw(g.data.data(), h, g.mask.data(), c, out_size, out_size);
        heatmap::masked_mse_gradient_raw(g.data.data(), h, g.mask.data(), c, out_size, out_size,
                                         d);
        for (std::size_t j = 0; j < item_n; ++j) d[j] *= inv_b;
    }
    return loss / b;
}

}  // namespace

void write_metrics_log(const std::string& path, const std::vector<EpochRecord>& log) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write metrics log: " + path);
    char buf[128];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof(buf), "%d\t%.8e\t%g", r.epoch, r.loss, r.lr);
        f << buf;
        if (r.has_precision) {
            std::snprintf(buf, sizeof(buf), "\t%.6f", r.precision);
            f << buf;
        }
        f << "\n";
    }
}

PretrainResult pretrain(const dataset::Dataset& ds, const TrainConfig& cfg,
                        const std::string& out_ckpt, const std::string& log_path) {
    cfg.validate();
    if (ds.size() == 0) throw ArgError("pretrain: empty dataset");

    const int threads = cfg.effective_threads();
    const int head_channels = cfg.n * cfg.n;
    const int in_channels = cfg.concat_unshuffled ? 6 : 3;
    const Schedule schedule = cfg.schedule();

    // Held-out split for jigsaw precision.
    const auto order = shuffled_indices(ds.size(), mix_seed(cfg.seed, kStreamHoldout));
    const std::size_t holdout_count =
        static_cast<std::size_t>(std::floor(cfg.holdout * static_cast<double>(ds.size())));
    std::vector<const Image*> holdout, train_imgs;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < holdout_count ? holdout : train_imgs).push_back(&ds.images[order[i]]);

    model::Network<float> net =
        model::build_network<float>(cfg.size, head_channels, in_channels,
                                    mix_seed(cfg.seed, kStreamInit));
    AdamState adam = make_adam_state(net);
    const std::vector<int> blocks = unfrozen_blocks(net);

    const int out = cfg.out_size();
    const std::size_t out_floats =
        static_cast<std::size_t>(cfg.batch) * head_channels * out * out;
    std::vector<float> out_buf(out_floats), dout_buf(out_floats);
    model::Cache<float> cache;
    model::Grads<float> grads = model::zero_grads(net);

    PretrainResult result;
    result.train_count = train_imgs.size();
    result.holdout_count = holdout.size();
    std::vector<model::Param<float>> best_params;
    const std::uint64_t eval_seed = mix_seed(cfg.seed, kStreamEval);

    const std::size_t n_train = train_imgs.size();
    const std::size_t steps = (n_train + cfg.batch - 1) / cfg.batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(schedule, epoch);
        const auto epoch_order =
            shuffled_indices(n_train, mix_seed(cfg.seed, kStreamOrder, epoch));
        Rng batch_rng(mix_seed(cfg.seed, kStreamBatch, epoch));

        double loss_sum = 0.0;
        std::size_t item_count = 0;
        for (std::size_t step = 0; step < steps; ++step) {
            std::vector<const Image*> items;
            for (std::size_t i = step * cfg.batch;
                 i < std::min(n_train, (step + 1) * cfg.batch); ++i)
                items.push_back(train_imgs[epoch_order[i]]);
            if (items.empty()) continue;

            HsjpBatch batch = make_hsjp_batch(items, cfg, batch_rng);
            model::forward(net, batch.input.data(), batch.batch, cfg.size, out_buf.data(),
                           cache, threads);
            const double loss = batch_loss_and_grad(batch.targets, out_buf.data(), out,
                                                    dout_buf.data());
            for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0f);
            model::backward(net, cache, dout_buf.data(), grads, threads);
            adam_step(adam, net, grads, lr, blocks);
            ++result.total_steps;

            loss_sum += loss * batch.batch;
            item_count += static_cast<std::size_t>(batch.batch);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = item_count ? loss_sum / static_cast<double>(item_count) : 0.0;
        rec.lr = lr;
        const bool eval_now = !holdout.empty() && ((epoch + 1) % cfg.eval_every == 0 ||
                                                   epoch == cfg.epochs - 1);
        if (eval_now) {
            const auto ev = eval::evaluate_hsjp(net, holdout, cfg, eval_seed);
            rec.precision = ev.precision;
            rec.has_precision = true;
            if (ev.precision > result.best_precision) {
                result.best_precision = ev.precision;
                result.best_epoch = epoch;
                best_params = net.params;
            }
        }
        result.log.push_back(rec);
    }

    if (cfg.select == "precision" && !best_params.empty()) net.params = best_params;
    if (result.best_epoch < 0) result.best_epoch = cfg.epochs - 1;

    if (!holdout.empty()) {
        const auto ev = eval::evaluate_hsjp(net, holdout, cfg, eval_seed);
        result.holdout_precision = ev.precision;
        result.holdout_patch_accuracy = ev.patch_accuracy;
    }

    if (!out_ckpt.empty()) model::save_checkpoint(net, out_ckpt);
    write_metrics_log(log_path, result.log);
    return result;
}

model::Network<float> initial_finetune_network(const std::string& init_ckpt, int keypoints,
                                               const TrainConfig& cfg) {
    if (init_ckpt.empty())
        return model::build_network<float>(cfg.size, keypoints, 3,
                                           mix_seed(cfg.seed, kStreamHead));
    model::Network<float> base = model::load_checkpoint(init_ckpt);
    if (base.in_channels != 3)
        throw ShapeError("finetune: checkpoint expects " + std::to_string(base.in_channels) +
                         " input channels; finetuning needs 3");
    Rng head_rng(mix_seed(cfg.seed, kStreamHead));
    return model::swap_head(base, keypoints, head_rng);
}

FinetuneResult finetune(const dataset::Dataset& ds, const std::string& init_ckpt,
                        const TrainConfig& cfg, const synthdata::SkeletonSpec& skeleton,
                        const std::string& out_ckpt, const std::string& log_path) {
    cfg.validate();
    if (!ds.has_keypoints) throw ArgError("finetune: dataset has no keypoint annotations");
    if (ds.size() == 0) throw ArgError("finetune: empty dataset");
    const int k = skeleton.num_keypoints();
    if (static_cast<int>(ds.annotations[0].points.size()) != k)
        throw ShapeError("finetune: dataset has " +
                         std::to_string(ds.annotations[0].points.size()) +
                         " keypoints per sample, skeleton has " + std::to_string(k));

    const dataset::Dataset subset =
        cfg.fraction < 1.0 ? subsample_labels(ds, cfg.fraction, mix_seed(cfg.seed, kStreamSubset))
                           : ds;

    model::Network<float> net = initial_finetune_network(init_ckpt, k, cfg);
    model::set_freeze_prefix(net, cfg.freeze_depth);
    AdamState adam = make_adam_state(net);
    const std::vector<int> blocks = unfrozen_blocks(net);
    const Schedule schedule = cfg.schedule();
    const int threads = cfg.effective_threads();

    const int out = cfg.out_size();
    const std::size_t out_floats = static_cast<std::size_t>(cfg.batch) * k * out * out;
    std::vector<float> out_buf(out_floats), dout_buf(out_floats);
    model::Cache<float> cache;
    model::Grads<float> grads = model::zero_grads(net);

    FinetuneResult result;
    result.head_channels = k;

    const std::size_t n_train = subset.size();
    const std::size_t steps = (n_train + cfg.batch - 1) / cfg.batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(schedule, epoch);
        const auto epoch_order =
            shuffled_indices(n_train, mix_seed(cfg.seed, kStreamOrder, epoch));
        Rng batch_rng(mix_seed(cfg.seed, kStreamBatch, epoch));

        double loss_sum = 0.0;
        std::size_t item_count = 0;
        for (std::size_t step = 0; step < steps; ++step) {
            std::vector<dataset::AnnotatedSampleRef> items;
            for (std::size_t i = step * cfg.batch;
                 i < std::min(n_train, (step + 1) * cfg.batch); ++i) {
                const std::size_t idx = epoch_order[i];
                items.push_back({&subset.images[idx], &subset.annotations[idx]});
            }
            if (items.empty()) continue;

            KeypointBatch batch = make_keypoint_batch(items, cfg, skeleton, batch_rng);
            model::forward(net, batch.input.data(), batch.batch, cfg.size, out_buf.data(),
                           cache, threads);
            const double loss = batch_loss_and_grad(batch.targets, out_buf.data(), out,
                                                    dout_buf.data());
            if (!blocks.empty()) {
                for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0f);
                model::backward(net, cache, dout_buf.data(), grads, threads);
                adam_step(adam, net, grads, lr, blocks);
            }
            loss_sum += loss * batch.batch;
            item_count += static_cast<std::size_t>(batch.batch);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = item_count ? loss_sum / static_cast<double>(item_count) : 0.0;
        rec.lr = lr;
        result.log.push_back(rec);
    }

    if (!out_ckpt.empty()) model::save_checkpoint(net, out_ckpt);
    write_metrics_log(log_path, result.log);
    return result;
}

dataset::Dataset subsample_labels(const dataset::Dataset& ds, double fraction,
                                  std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw ArgError("subsample_labels: fraction must be in (0, 1]");
    if (fraction == 1.0) return ds;
    const std::size_t keep =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ds.size())));
    if (keep == 0) throw ArgError("subsample_labels: subset would be empty");

    auto order = shuffled_indices(ds.size(), seed);
    order.resize(keep);
    std::sort(order.begin(), order.end());

    dataset::Dataset out;
    out.has_keypoints = ds.has_keypoints;
    for (std::size_t idx : order) {
        if (idx < ds.files.size()) out.files.push_back(ds.files[idx]);
        out.images.push_back(ds.images[idx]);
        if (ds.has_keypoints) out.annotations.push_back(ds.annotations[idx]);
    }
    return out;
}

}  // namespace hsjp::train
