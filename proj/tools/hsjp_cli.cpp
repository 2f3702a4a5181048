// Command-line front end for the HSJP toolkit. Talks to the core exclusively
// through the C API in hsjp/hsjp.h.

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsjp/hsjp.h"

namespace {

struct ConfigGuard {
    hsjp_config* cfg = nullptr;
    explicit ConfigGuard(bool paper) {
        cfg = paper ? hsjp_config_new_paper_preset() : hsjp_config_new();
    }
    ~ConfigGuard() { hsjp_config_free(cfg); }
    ConfigGuard(ConfigGuard&& other) noexcept : cfg(other.cfg) { other.cfg = nullptr; }
    ConfigGuard(const ConfigGuard&) = delete;
    ConfigGuard& operator=(const ConfigGuard&) = delete;
};

[[noreturn]] void die(const std::string& context) {
    std::fprintf(stderr, "error: %s: %s\n", context.c_str(), hsjp_last_error());
    std::exit(1);
}

void check(int rc, const std::string& context) {
    if (rc != HSJP_OK) die(context);
}

// Shared training/eval options. Flags mirror config keys one-to-one; only
// flags the user actually passed are applied, so file values survive.
struct CommonOpts {
    std::string preset;
    std::string config_file;
    std::map<std::string, std::string> values;  // config key -> value

    void add_to(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "Configuration preset: paper (224/N=6/240 epochs)");
        cmd->add_option("--config", config_file, "key=value config file");
        auto opt = [this, cmd](const char* flag, const char* key, const char* help) {
            cmd->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { values[key] = v; }, help);
        };
        opt("--n", "n", "Patches per side");
        opt("--size", "size", "Working resolution (multiple of 4)");
        opt("--sigma", "sigma", "Target Gaussian sigma in heatmap px (0 = auto)");
        opt("--epochs", "epochs", "Training epochs");
        opt("--batch", "batch", "Batch size");
        opt("--seed", "seed", "Base RNG seed");
        opt("--lr", "lr", "Base learning rate");
        opt("--milestones", "milestones", "LR schedule, e.g. 30:1e-4,36:1e-5");
        opt("--eps", "eps", "Jigsaw tolerance in heatmap px (0 = half cell)");
        opt("--fraction", "fraction", "Labeled fraction for finetuning");
        opt("--freeze-depth", "freeze_depth", "Leading layer groups to freeze [0,6]");
        opt("--holdout", "holdout", "Held-out fraction for pretext precision");
        opt("--eval-every", "eval_every", "Epochs between held-out evaluations");
        opt("--select", "select", "Checkpoint selection: precision|final");
        opt("--threads", "threads", "Worker threads");
        cmd->add_flag_function(
            "--concat-unshuffled",
            [this](std::int64_t) { values["concat_unshuffled"] = "true"; },
            "Concatenate the unshuffled image (6-channel input)");
        cmd->add_flag_function(
            "--deterministic", [this](std::int64_t) { values["deterministic"] = "true"; },
            "Single-threaded, bit-reproducible execution");
    }

    ConfigGuard make() const {
        if (!preset.empty() && preset != "paper") {
            std::fprintf(stderr, "error: unknown preset '%s'\n", preset.c_str());
            std::exit(1);
        }
        const bool paper = preset == "paper";
        if (paper)
            std::fprintf(stderr,
                         "warning: the paper preset (224 input, N=6, 240 epochs, batch 256) is "
                         "not desk-feasible; expect a very long run\n");
        ConfigGuard guard(paper);
        if (!config_file.empty())
            check(hsjp_config_load(guard.cfg, config_file.c_str()), "loading " + config_file);
        for (const auto& [key, value] : values)
            check(hsjp_config_set(guard.cfg, key.c_str(), value.c_str()), "setting " + key);
        check(hsjp_config_validate(guard.cfg), "validating configuration");
        return guard;
    }
};

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heatmap-style jigsaw pretraining and keypoint finetuning toolkit"};
    app.require_subcommand(1);

    // ------------------------------------------------------------- synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    std::string synth_kind = "pretext", synth_out;
    int synth_count = 200, synth_size = 96;
    std::uint64_t synth_seed = 1;
    synth->add_option("--kind", synth_kind, "pretext | keypoints")->capture_default_str();
    synth->add_option("--count", synth_count, "Number of images")->capture_default_str();
    synth->add_option("--size", synth_size, "Image side in pixels")->capture_default_str();
    synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();

    // ---------------------------------------------------------- pretrain
    auto* pretrain = app.add_subcommand("pretrain", "HSJP pretraining");
    CommonOpts pre_opts;
    std::string pre_data, pre_out;
    pretrain->add_option("--data", pre_data, "Corpus directory")->required();
    pretrain->add_option("--out", pre_out, "Output checkpoint path")->required();
    pre_opts.add_to(pretrain);

    // ---------------------------------------------------------- finetune
    auto* finetune = app.add_subcommand("finetune", "Keypoint finetuning");
    CommonOpts fin_opts;
    std::string fin_data, fin_out, fin_init;
    finetune->add_option("--data", fin_data, "Keypoint corpus directory")->required();
    finetune->add_option("--out", fin_out, "Output checkpoint path")->required();
    finetune->add_option("--init", fin_init, "Pretrained checkpoint (omit for scratch)");
    fin_opts.add_to(finetune);

    // --------------------------------------------------------- eval-hsjp
    auto* eval_hsjp = app.add_subcommand("eval-hsjp", "Jigsaw precision evaluation");
    CommonOpts eh_opts;
    std::string eh_data, eh_ckpt, eh_report;
    eval_hsjp->add_option("--data", eh_data, "Corpus directory")->required();
    eval_hsjp->add_option("--ckpt", eh_ckpt, "Checkpoint to evaluate")->required();
    eval_hsjp->add_option("--report", eh_report, "Write metric\\tvalue rows to this file");
    eh_opts.add_to(eval_hsjp);

    // --------------------------------------------------------- eval-pose
    auto* eval_pose = app.add_subcommand("eval-pose", "OKS-mAP keypoint evaluation");
    CommonOpts ep_opts;
    std::string ep_data, ep_ckpt, ep_report;
    eval_pose->add_option("--data", ep_data, "Keypoint corpus directory")->required();
    eval_pose->add_option("--ckpt", ep_ckpt, "Checkpoint to evaluate")->required();
    eval_pose->add_option("--report", ep_report, "Write metric\\tvalue rows to this file");
    ep_opts.add_to(eval_pose);

    // ------------------------------------------------------------ sweeps
    auto* sweep_n = app.add_subcommand("sweep-n", "Pretrain + evaluate across patch counts");
    CommonOpts sn_opts;
    std::string sn_data, sn_out, sn_values = "2,3,4";
    sweep_n->add_option("--data", sn_data, "Corpus directory")->required();
    sweep_n->add_option("--out", sn_out, "Work directory for checkpoints")->required();
    sweep_n->add_option("--values", sn_values, "Comma-separated N values")
        ->capture_default_str();
    sn_opts.add_to(sweep_n);

    auto* sweep_freeze = app.add_subcommand("sweep-freeze", "Finetune across freeze depths");
    CommonOpts sf_opts;
    std::string sf_data, sf_eval, sf_ckpt, sf_out, sf_depths = "0,1,2,3,4,5,6";
    sweep_freeze->add_option("--data", sf_data, "Finetuning corpus")->required();
    sweep_freeze->add_option("--eval-data", sf_eval, "Evaluation corpus")->required();
    sweep_freeze->add_option("--ckpt", sf_ckpt, "Pretrained checkpoint")->required();
    sweep_freeze->add_option("--out", sf_out, "Work directory")->required();
    sweep_freeze->add_option("--depths", sf_depths, "Comma-separated depths")
        ->capture_default_str();
    sf_opts.add_to(sweep_freeze);

    auto* sweep_fraction = app.add_subcommand("sweep-fraction",
                                              "Finetune across labeled fractions");
    CommonOpts sfr_opts;
    std::string sfr_data, sfr_eval, sfr_ckpt, sfr_out, sfr_fractions = "0.1,0.5,1.0";
    sweep_fraction->add_option("--data", sfr_data, "Finetuning corpus")->required();
    sweep_fraction->add_option("--eval-data", sfr_eval, "Evaluation corpus")->required();
    sweep_fraction->add_option("--ckpt", sfr_ckpt, "Pretrained checkpoint (omit for scratch)");
    sweep_fraction->add_option("--out", sfr_out, "Work directory")->required();
    sweep_fraction->add_option("--fractions", sfr_fractions, "Comma-separated fractions")
        ->capture_default_str();
    sfr_opts.add_to(sweep_fraction);

    // --------------------------------------------------------------- viz
    auto* viz = app.add_subcommand("viz", "Export predicted vs target heatmap mosaics");
    CommonOpts viz_opts;
    std::string viz_data, viz_ckpt, viz_out;
    int viz_index = 0;
    viz->add_option("--data", viz_data, "Corpus directory")->required();
    viz->add_option("--ckpt", viz_ckpt, "Checkpoint")->required();
    viz->add_option("--index", viz_index, "Sample index")->capture_default_str();
    viz->add_option("--out", viz_out, "Output PNG path")->required();
    viz_opts.add_to(viz);

    CLI11_PARSE(app, argc, argv);

    if (*synth) {
        check(hsjp_synth(synth_kind.c_str(), synth_count, synth_size, synth_seed,
                         synth_out.c_str()),
              "synth");
        std::printf("wrote %d %s images to %s\n", synth_count, synth_kind.c_str(),
                    synth_out.c_str());
    } else if (*pretrain) {
        ConfigGuard cfg = pre_opts.make();
        double precision = -1, patch_acc = -1;
        check(hsjp_pretrain(cfg.cfg, pre_data.c_str(), pre_out.c_str(), &precision, &patch_acc),
              "pretrain");
        std::printf("checkpoint\t%s\n", pre_out.c_str());
        if (precision >= 0) {
            std::printf("holdout_precision\t%.6f\n", precision);
            std::printf("holdout_patch_accuracy\t%.6f\n", patch_acc);
        }
    } else if (*finetune) {
        ConfigGuard cfg = fin_opts.make();
        check(hsjp_finetune(cfg.cfg, fin_data.c_str(),
                            fin_init.empty() ? nullptr : fin_init.c_str(), fin_out.c_str()),
              "finetune");
        std::printf("checkpoint\t%s\n", fin_out.c_str());
    } else if (*eval_hsjp) {
        ConfigGuard cfg = eh_opts.make();
        double precision = 0, patch_acc = 0;
        check(hsjp_eval_hsjp(cfg.cfg, eh_ckpt.c_str(), eh_data.c_str(),
                             eh_report.empty() ? nullptr : eh_report.c_str(), &precision,
                             &patch_acc),
              "eval-hsjp");
        std::printf("precision\t%.6f\npatch_accuracy\t%.6f\n", precision, patch_acc);
    } else if (*eval_pose) {
        ConfigGuard cfg = ep_opts.make();
        double map = 0;
        std::vector<double> aps(10, 0.0);
        check(hsjp_eval_pose(cfg.cfg, ep_ckpt.c_str(), ep_data.c_str(),
                             ep_report.empty() ? nullptr : ep_report.c_str(), &map, aps.data()),
              "eval-pose");
        std::printf("mAP\t%.6f\n", map);
        for (int i = 0; i < 10; ++i) std::printf("AP@%.2f\t%.6f\n", 0.50 + 0.05 * i, aps[i]);
    } else if (*sweep_n) {
        std::printf("n\tprecision\tpatch_accuracy\n");
        for (const std::string& value : split_csv(sn_values)) {
            CommonOpts opts = sn_opts;
            opts.values["n"] = value;
            ConfigGuard cfg = opts.make();
            const std::string ckpt = sn_out + "/pretrain_n" + value + ".ckpt";
            double precision = -1, patch_acc = -1;
            check(hsjp_pretrain(cfg.cfg, sn_data.c_str(), ckpt.c_str(), &precision, &patch_acc),
                  "sweep-n pretrain n=" + value);
            std::printf("%s\t%.6f\t%.6f\n", value.c_str(), precision, patch_acc);
            std::fflush(stdout);
        }
    } else if (*sweep_freeze) {
        std::printf("depth\tmAP\n");
        for (const std::string& value : split_csv(sf_depths)) {
            CommonOpts opts = sf_opts;
            opts.values["freeze_depth"] = value;
            ConfigGuard cfg = opts.make();
            const std::string ckpt = sf_out + "/ft_depth" + value + ".ckpt";
            check(hsjp_finetune(cfg.cfg, sf_data.c_str(), sf_ckpt.c_str(), ckpt.c_str()),
                  "sweep-freeze finetune depth=" + value);
            double map = 0;
            check(hsjp_eval_pose(cfg.cfg, ckpt.c_str(), sf_eval.c_str(), nullptr, &map, nullptr),
                  "sweep-freeze eval depth=" + value);
            std::printf("%s\t%.6f\n", value.c_str(), map);
            std::fflush(stdout);
        }
    } else if (*sweep_fraction) {
        std::printf("fraction\tmAP\n");
        for (const std::string& value : split_csv(sfr_fractions)) {
            CommonOpts opts = sfr_opts;
            opts.values["fraction"] = value;
            ConfigGuard cfg = opts.make();
            const std::string ckpt = sfr_out + "/ft_fraction" + value + ".ckpt";
            check(hsjp_finetune(cfg.cfg, sfr_data.c_str(),
                                sfr_ckpt.empty() ? nullptr : sfr_ckpt.c_str(), ckpt.c_str()),
                  "sweep-fraction finetune fraction=" + value);
            double map = 0;
            check(hsjp_eval_pose(cfg.cfg, ckpt.c_str(), sfr_eval.c_str(), nullptr, &map,
                                 nullptr),
                  "sweep-fraction eval fraction=" + value);
            std::printf("%s\t%.6f\n", value.c_str(), map);
            std::fflush(stdout);
        }
    } else if (*viz) {
        ConfigGuard cfg = viz_opts.make();
        check(hsjp_viz(cfg.cfg, viz_ckpt.c_str(), viz_data.c_str(), viz_index, viz_out.c_str()),
              "viz");
        std::printf("wrote %s\n", viz_out.c_str());
    }
    return 0;
}
