#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affine.hpp"
#include "image.hpp"

namespace hsjp::dataset {

struct KeypointAnnotation {
    std::vector<imaging::Point> points;
    std::vector<std::uint8_t> visible;
    double bbox[4] = {0, 0, 0, 0};  // x, y, w, h
};

struct Dataset {
    bool has_keypoints = false;
    std::vector<std::string> files;
    std::vector<imaging::Image> images;
    std::vector<KeypointAnnotation> annotations;  // empty unless has_keypoints

    std::size_t size() const { return images.size(); }
};

// Reads a corpus directory: "annotations.txt" marks a keypoint corpus
// (one line per sample: "file K x1 y1 v1 ... xK yK vK bx by bw bh"),
// otherwise "corpus.txt" lists plain image files.
Dataset load_corpus(const std::string& dir);

void write_pretext_corpus(const std::string& dir, const std::vector<imaging::Image>& images);

struct AnnotatedSampleRef {
    const imaging::Image* image;
    const KeypointAnnotation* annotation;
};

}  // namespace hsjp::dataset
