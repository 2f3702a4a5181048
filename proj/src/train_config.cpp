#include "train_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "error.hpp"
#include "heatmap.hpp"

namespace hsjp::train {

double lr_at_epoch(const Schedule& s, int epoch) {
    if (epoch < 0 || epoch >= s.total_epochs)
        throw ArgError("lr_at_epoch: epoch " + std::to_string(epoch) + " outside [0, " +
                       std::to_string(s.total_epochs) + ")");
    double lr = s.base_lr;
    for (const auto& [e, v] : s.milestones)
        if (epoch >= e) lr = v;
    return lr;
}

void validate_schedule(const Schedule& s) {
    if (s.base_lr <= 0) throw ConfigError("schedule: base lr must be > 0");
    if (s.total_epochs < 1) throw ConfigError("schedule: total epochs must be >= 1");
    int prev = -1;
    for (const auto& [e, v] : s.milestones) {
        if (e <= prev)
            throw ConfigError("schedule: milestone epochs must be strictly increasing");
        if (e >= s.total_epochs)
            throw ConfigError("schedule: milestone epoch " + std::to_string(e) +
                              " not below total epochs " + std::to_string(s.total_epochs));
        if (v <= 0) throw ConfigError("schedule: milestone lr must be > 0");
        prev = e;
    }
}

std::vector<std::pair<int, double>> parse_milestones(const std::string& text) {
    std::vector<std::pair<int, double>> out;
    if (text.empty() || text == "none") return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("milestones: expected 'epoch:lr', got '" + item + "'");
        try {
            std::size_t used = 0;
            const int e = std::stoi(item.substr(0, colon), &used);
            if (used != colon) throw std::invalid_argument("trailing");
            const std::string lr_text = item.substr(colon + 1);
            const double lr = std::stod(lr_text, &used);
            if (used != lr_text.size()) throw std::invalid_argument("trailing");
            out.emplace_back(e, lr);
        } catch (const std::exception&) {
            throw ConfigError("milestones: cannot parse '" + item + "'");
        }
    }
    return out;
}

Schedule TrainConfig::schedule() const {
    Schedule s;
    s.base_lr = lr;
    s.total_epochs = epochs;
    s.milestones = parse_milestones(milestones);
    return s;
}

double TrainConfig::resolved_sigma() const {
    if (sigma > 0.0) return sigma;
    return std::min(1.5, 0.995 * heatmap::sigma_bound(n, out_size()));
}

double TrainConfig::resolved_eps() const {
    if (eps > 0.0) return eps;
    return static_cast<double>(out_size()) / (2.0 * n);
}

imaging::SpatialAugRanges TrainConfig::spatial_ranges() const {
    imaging::SpatialAugRanges r;
    r.scale_min = scale_min;
    r.scale_max = scale_max;
    r.rotate_deg = rotate;
    r.translate_frac = translate;
    return r;
}

void TrainConfig::validate() const {
    if (n < 1) throw ConfigError("n: must be >= 1");
    if (size < 8 || size % 4 != 0) throw ConfigError("size: must be a multiple of 4, >= 8");
    if (n > size) throw ConfigError("n: exceeds working size");
    if (batch < 1) throw ConfigError("batch: must be >= 1");
    if (epochs < 1) throw ConfigError("epochs: must be >= 1");
    if (lr <= 0) throw ConfigError("lr: must be > 0");
    if (sigma > 0.0) {
        const double bound = heatmap::sigma_bound(n, out_size());
        if (sigma >= bound) {
            std::ostringstream os;
            os << "sigma: " << sigma << " violates the 3-sigma bound " << bound << " for n="
               << n << " at output size " << out_size();
            throw ConfigError(os.str());
        }
    }
    if (eps < 0) throw ConfigError("eps: must be >= 0");
    if (scale_min <= 0 || scale_max < scale_min)
        throw ConfigError("scale_min/scale_max: need 0 < min <= max");
    if (rotate < 0 || rotate > 180) throw ConfigError("rotate: must be in [0, 180]");
    if (translate < 0 || translate > 1) throw ConfigError("translate: must be in [0, 1]");
    if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("fraction: must be in (0, 1]");
    if (freeze_depth < 0 || freeze_depth > 6)
        throw ConfigError("freeze_depth: must be in [0, 6]");
    if (holdout < 0.0 || holdout >= 1.0) throw ConfigError("holdout: must be in [0, 1)");
    if (eval_every < 1) throw ConfigError("eval_every: must be >= 1");
    if (threads < 1) throw ConfigError("threads: must be >= 1");
    if (select != "precision" && select != "final")
        throw ConfigError("select: must be 'precision' or 'final'");
    Schedule s = schedule();
    validate_schedule(s);
}

TrainConfig paper_preset() {
    TrainConfig c;
    c.size = 224;
    c.n = 6;
    c.batch = 256;
    c.epochs = 240;
    c.lr = 1e-3;
    c.milestones = "190:0.0001,220:0.00001";
    return c;
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key + ": expected boolean, got '" + v + "'");
}

long long parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected integer, got '" + v + "'");
    }
}

double parse_real(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected number, got '" + v + "'");
    }
}

}  // namespace

void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "n") cfg.n = static_cast<int>(parse_int(value, key));
    else if (key == "size") cfg.size = static_cast<int>(parse_int(value, key));
    else if (key == "batch") cfg.batch = static_cast<int>(parse_int(value, key));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(value, key));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "lr") cfg.lr = parse_real(value, key);
    else if (key == "milestones") cfg.milestones = value;
    else if (key == "sigma") cfg.sigma = parse_real(value, key);
    else if (key == "eps") cfg.eps = parse_real(value, key);
    else if (key == "scale_min") cfg.scale_min = parse_real(value, key);
    else if (key == "scale_max") cfg.scale_max = parse_real(value, key);
    else if (key == "rotate") cfg.rotate = parse_real(value, key);
    else if (key == "translate") cfg.translate = parse_real(value, key);
    else if (key == "color") cfg.color = parse_bool(value, key);
    else if (key == "flip") cfg.flip = parse_bool(value, key);
    else if (key == "fraction") cfg.fraction = parse_real(value, key);
    else if (key == "freeze_depth") cfg.freeze_depth = static_cast<int>(parse_int(value, key));
    else if (key == "concat_unshuffled") cfg.concat_unshuffled = parse_bool(value, key);
    else if (key == "holdout") cfg.holdout = parse_real(value, key);
    else if (key == "eval_every") cfg.eval_every = static_cast<int>(parse_int(value, key));
    else if (key == "threads") cfg.threads = static_cast<int>(parse_int(value, key));
    else if (key == "deterministic") cfg.deterministic = parse_bool(value, key);
    else if (key == "select") cfg.select = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    TrainConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        try {
            apply_config_kv(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

}  // namespace hsjp::train
