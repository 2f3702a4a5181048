#include "hsjp/hsjp.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "dataset.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "synthdata.hpp"
#include "train.hpp"
#include "train_config.hpp"

namespace {

thread_local std::string g_last_error;

struct ConfigHandle {
    hsjp::train::TrainConfig cfg;
};

template <class Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return HSJP_OK;
    } catch (const hsjp::ConfigError& e) {
        g_last_error = e.what();
        return HSJP_E_CONFIG;
    } catch (const hsjp::ShapeError& e) {
        g_last_error = e.what();
        return HSJP_E_SHAPE;
    } catch (const hsjp::ParseError& e) {
        g_last_error = e.what();
        return HSJP_E_PARSE;
    } catch (const hsjp::IoError& e) {
        g_last_error = e.what();
        return HSJP_E_IO;
    } catch (const hsjp::ArgError& e) {
        g_last_error = e.what();
        return HSJP_E_ARG;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return HSJP_E_INTERNAL;
    }
}

int require(bool ok, const char* what) {
    if (ok) return HSJP_OK;
    g_last_error = what;
    return HSJP_E_ARG;
}

const hsjp::train::TrainConfig& cfg_of(const hsjp_config* cfg) {
    return reinterpret_cast<const ConfigHandle*>(cfg)->cfg;
}

std::string config_value(const hsjp::train::TrainConfig& c, const std::string& key) {
    char buf[64];
    auto real = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };
    if (key == "n") return std::to_string(c.n);
    if (key == "size") return std::to_string(c.size);
    if (key == "batch") return std::to_string(c.batch);
    if (key == "epochs") return std::to_string(c.epochs);
    if (key == "seed") return std::to_string(c.seed);
    if (key == "lr") return real(c.lr);
    if (key == "milestones") return c.milestones;
    if (key == "sigma") return real(c.sigma);
    if (key == "eps") return real(c.eps);
    if (key == "scale_min") return real(c.scale_min);
    if (key == "scale_max") return real(c.scale_max);
    if (key == "rotate") return real(c.rotate);
    if (key == "translate") return real(c.translate);
    if (key == "color") return c.color ? "true" : "false";
    if (key == "flip") return c.flip ? "true" : "false";
    if (key == "fraction") return real(c.fraction);
    if (key == "freeze_depth") return std::to_string(c.freeze_depth);
    if (key == "concat_unshuffled") return c.concat_unshuffled ? "true" : "false";
    if (key == "holdout") return real(c.holdout);
    if (key == "eval_every") return std::to_string(c.eval_every);
    if (key == "threads") return std::to_string(c.threads);
    if (key == "deterministic") return c.deterministic ? "true" : "false";
    if (key == "select") return c.select;
    throw hsjp::ConfigError("unknown config key '" + key + "'");
}

void write_report(const char* path, const std::vector<std::pair<std::string, double>>& rows) {
    if (!path) return;
    std::FILE* f = std::fopen(path, "w");
    if (!f) throw hsjp::IoError(std::string("cannot write report: ") + path);
    for (const auto& [name, value] : rows) std::fprintf(f, "%s\t%.6f\n", name.c_str(), value);
    std::fclose(f);
}

}  // namespace

extern "C" {

const char* hsjp_version(void) { return "0.1.0"; }

const char* hsjp_last_error(void) { return g_last_error.c_str(); }

hsjp_config* hsjp_config_new(void) {
    return reinterpret_cast<hsjp_config*>(new ConfigHandle{});
}

hsjp_config* hsjp_config_new_paper_preset(void) {
    auto* h = new ConfigHandle{};
    h->cfg = hsjp::train::paper_preset();
    return reinterpret_cast<hsjp_config*>(h);
}

void hsjp_config_free(hsjp_config* cfg) { delete reinterpret_cast<ConfigHandle*>(cfg); }

int hsjp_config_load(hsjp_config* cfg, const char* path) {
    if (int rc = require(cfg && path, "hsjp_config_load: NULL argument")) return rc;
    return guarded([&] {
        reinterpret_cast<ConfigHandle*>(cfg)->cfg = hsjp::train::parse_config_file(path);
    });
}

int hsjp_config_set(hsjp_config* cfg, const char* key, const char* value) {
    if (int rc = require(cfg && key && value, "hsjp_config_set: NULL argument")) return rc;
    return guarded([&] {
        hsjp::train::apply_config_kv(reinterpret_cast<ConfigHandle*>(cfg)->cfg, key, value);
    });
}

int hsjp_config_get(const hsjp_config* cfg, const char* key, char* buf, size_t cap) {
    if (int rc = require(cfg && key && buf && cap > 0, "hsjp_config_get: NULL argument"))
        return rc;
    return guarded([&] {
        const std::string v = config_value(cfg_of(cfg), key);
        if (v.size() + 1 > cap)
            throw hsjp::ArgError("hsjp_config_get: buffer too small for '" + v + "'");
        std::memcpy(buf, v.c_str(), v.size() + 1);
    });
}

int hsjp_config_validate(const hsjp_config* cfg) {
    if (int rc = require(cfg != nullptr, "hsjp_config_validate: NULL config")) return rc;
    return guarded([&] { cfg_of(cfg).validate(); });
}

int hsjp_synth(const char* kind, int count, int size, uint64_t seed, const char* out_dir) {
    if (int rc = require(kind && out_dir, "hsjp_synth: NULL argument")) return rc;
    return guarded([&] {
        const std::string k = kind;
        if (k == "pretext") {
            hsjp::dataset::write_pretext_corpus(
                out_dir, hsjp::synthdata::gen_pretext_corpus(count, size, seed));
        } else if (k == "keypoints") {
            hsjp::synthdata::write_keypoint_corpus(
                out_dir, hsjp::synthdata::gen_keypoint_corpus(
                             count, size, seed, hsjp::synthdata::default_skeleton()));
        } else {
            throw hsjp::ArgError("hsjp_synth: kind must be 'pretext' or 'keypoints', got '" +
                                 k + "'");
        }
    });
}

int hsjp_pretrain(const hsjp_config* cfg, const char* data_dir, const char* out_ckpt,
                  double* holdout_precision, double* holdout_patch_accuracy) {
    if (int rc = require(cfg && data_dir && out_ckpt, "hsjp_pretrain: NULL argument")) return rc;
    return guarded([&] {
        const hsjp::dataset::Dataset ds = hsjp::dataset::load_corpus(data_dir);
        const auto result = hsjp::train::pretrain(ds, cfg_of(cfg), out_ckpt,
                                                  std::string(out_ckpt) + ".log");
        if (holdout_precision) *holdout_precision = result.holdout_precision;
        if (holdout_patch_accuracy) *holdout_patch_accuracy = result.holdout_patch_accuracy;
    });
}

int hsjp_finetune(const hsjp_config* cfg, const char* data_dir, const char* init_ckpt,
                  const char* out_ckpt) {
    if (int rc = require(cfg && data_dir && out_ckpt, "hsjp_finetune: NULL argument")) return rc;
    return guarded([&] {
        const hsjp::dataset::Dataset ds = hsjp::dataset::load_corpus(data_dir);
        hsjp::train::finetune(ds, init_ckpt ? init_ckpt : "", cfg_of(cfg),
                              hsjp::synthdata::default_skeleton(), out_ckpt,
                              std::string(out_ckpt) + ".log");
    });
}

int hsjp_eval_hsjp(const hsjp_config* cfg, const char* ckpt, const char* data_dir,
                   const char* report_path, double* precision, double* patch_accuracy) {
    if (int rc = require(cfg && ckpt && data_dir, "hsjp_eval_hsjp: NULL argument")) return rc;
    return guarded([&] {
        const hsjp::dataset::Dataset ds = hsjp::dataset::load_corpus(data_dir);
        const hsjp::model::Network<float> net = hsjp::model::load_checkpoint(ckpt);
        std::vector<const hsjp::imaging::Image*> images;
        for (const auto& img : ds.images) images.push_back(&img);
        const auto r = hsjp::eval::evaluate_hsjp(net, images, cfg_of(cfg), cfg_of(cfg).seed);
        if (precision) *precision = r.precision;
        if (patch_accuracy) *patch_accuracy = r.patch_accuracy;
        write_report(report_path, {{"precision", r.precision},
                                   {"patch_accuracy", r.patch_accuracy},
                                   {"solved", static_cast<double>(r.solved)},
                                   {"failed", static_cast<double>(r.failed)}});
    });
}

int hsjp_eval_pose(const hsjp_config* cfg, const char* ckpt, const char* data_dir,
                   const char* report_path, double* map, double* aps10) {
    if (int rc = require(cfg && ckpt && data_dir, "hsjp_eval_pose: NULL argument")) return rc;
    return guarded([&] {
        const hsjp::dataset::Dataset ds = hsjp::dataset::load_corpus(data_dir);
        const hsjp::model::Network<float> net = hsjp::model::load_checkpoint(ckpt);
        const auto r = hsjp::eval::evaluate_pose(net, ds, cfg_of(cfg));
        if (map) *map = r.map.map;
        if (aps10)
            for (int i = 0; i < 10; ++i) aps10[i] = r.map.ap[static_cast<std::size_t>(i)];
        std::vector<std::pair<std::string, double>> rows{
            {"mAP", r.map.map},
            {"mean_oks", r.mean_oks},
            {"valid_instances", static_cast<double>(r.map.valid_instances)},
            {"excluded", static_cast<double>(r.map.excluded)}};
        char name[32];
        for (int i = 0; i < 10; ++i) {
            std::snprintf(name, sizeof(name), "AP@%.2f", 0.50 + 0.05 * i);
            rows.emplace_back(name, r.map.ap[static_cast<std::size_t>(i)]);
        }
        write_report(report_path, rows);
    });
}

int hsjp_viz(const hsjp_config* cfg, const char* ckpt, const char* data_dir, int index,
             const char* out_png) {
    if (int rc = require(cfg && ckpt && data_dir && out_png, "hsjp_viz: NULL argument"))
        return rc;
    return guarded([&] {
        const hsjp::dataset::Dataset ds = hsjp::dataset::load_corpus(data_dir);
        if (index < 0 || static_cast<std::size_t>(index) >= ds.size())
            throw hsjp::ArgError("hsjp_viz: index " + std::to_string(index) +
                                 " outside corpus of " + std::to_string(ds.size()));
        const hsjp::model::Network<float> net = hsjp::model::load_checkpoint(ckpt);
        const auto img = hsjp::eval::prediction_mosaic(
            net, ds.images[static_cast<std::size_t>(index)], cfg_of(cfg),
            hsjp::mix_seed(cfg_of(cfg).seed, static_cast<std::uint64_t>(index)));
        hsjp::imaging::save_image(out_png, img);
    });
}

}  // extern "C"
