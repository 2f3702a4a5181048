#include "dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace hsjp::dataset {

namespace fs = std::filesystem;

namespace {

Dataset load_keypoint_corpus(const std::string& dir, const std::string& index_path) {
    std::ifstream f(index_path);
    if (!f) throw IoError("cannot open " + index_path);
    Dataset ds;
    ds.has_keypoints = true;
    std::string line;
    int line_no = 0;
    int expected_k = -1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string file;
        int k = 0;
        if (!(is >> file >> k) || k < 1)
            throw ParseError(index_path + ":" + std::to_string(line_no) +
                             ": expected 'file K ...'");
        if (expected_k < 0) expected_k = k;
        if (k != expected_k)
            throw ParseError(index_path + ":" + std::to_string(line_no) +
                             ": inconsistent keypoint count " + std::to_string(k) + " vs " +
                             std::to_string(expected_k));
        KeypointAnnotation ann;
        ann.points.resize(static_cast<std::size_t>(k));
        ann.visible.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            double x, y;
            int v;
            if (!(is >> x >> y >> v) || (v != 0 && v != 1))
                throw ParseError(index_path + ":" + std::to_string(line_no) +
                                 ": malformed keypoint " + std::to_string(i));
            ann.points[static_cast<std::size_t>(i)] = {x, y};
            ann.visible[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
        }
        if (!(is >> ann.bbox[0] >> ann.bbox[1] >> ann.bbox[2] >> ann.bbox[3]) ||
            ann.bbox[2] <= 0 || ann.bbox[3] <= 0)
            throw ParseError(index_path + ":" + std::to_string(line_no) + ": malformed bbox");
        ds.files.push_back(file);
        ds.annotations.push_back(std::move(ann));
    }
    if (ds.files.empty()) throw ParseError(index_path + ": empty annotation file");
    for (const auto& file : ds.files)
        ds.images.push_back(imaging::load_image((fs::path(dir) / file).string()));
    return ds;
}

Dataset load_plain_corpus(const std::string& dir, const std::string& index_path) {
    std::ifstream f(index_path);
    if (!f) throw IoError("cannot open " + index_path);
    Dataset ds;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ds.files.push_back(line);
    }
    if (ds.files.empty()) throw ParseError(index_path + ": empty corpus index");
    for (const auto& file : ds.files)
        ds.images.push_back(imaging::load_image((fs::path(dir) / file).string()));
    return ds;
}

}  // namespace

Dataset load_corpus(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("corpus directory does not exist: " + dir);
    const fs::path ann = fs::path(dir) / "annotations.txt";
    if (fs::exists(ann)) return load_keypoint_corpus(dir, ann.string());
    const fs::path idx = fs::path(dir) / "corpus.txt";
    if (fs::exists(idx)) return load_plain_corpus(dir, idx.string());
    throw IoError("no corpus.txt or annotations.txt in " + dir);
}

void write_pretext_corpus(const std::string& dir, const std::vector<imaging::Image>& images) {
    fs::create_directories(dir);
    std::ostringstream index;
    char name[32];
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::snprintf(name, sizeof(name), "img_%05zu.png", i);
        imaging::save_image((fs::path(dir) / name).string(), images[i]);
        index << name << "\n";
    }
    std::ofstream f(fs::path(dir) / "corpus.txt", std::ios::trunc);
    if (!f) throw IoError("cannot write corpus index in " + dir);
    f << index.str();
}

}  // namespace hsjp::dataset
