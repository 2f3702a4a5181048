#include "puzzle.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "error.hpp"

namespace hsjp::puzzle {

PatchGrid make_grid(int working_size, int n) {
    if (n < 1) throw ArgError("make_grid: n must be >= 1");
    if (n > working_size)
        throw ArgError("make_grid: n (" + std::to_string(n) + ") exceeds working size (" +
                       std::to_string(working_size) + ")");
    PatchGrid g;
    g.n = n;
    g.patch_side = (working_size + n - 1) / n;
    g.padded_size = g.patch_side * n;
    return g;
}

std::vector<int> fisher_yates(int n_items, Rng& rng) {
    if (n_items < 1) throw ArgError("fisher_yates: n_items must be >= 1");
    std::vector<int> m(n_items);
    for (int i = 0; i < n_items; ++i) m[i] = i;
    for (int j = n_items - 1; j >= 1; --j) {
        const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
        std::swap(m[j], m[k]);
    }
    return m;
}

Permutation make_permutation(int n_items, std::uint64_t seed) {
    Rng rng(seed);
    return Permutation{fisher_yates(n_items, rng), seed};
}

Permutation inverse_permutation(const Permutation& perm) {
    Permutation inv;
    inv.seed = perm.seed;
    inv.mapping.assign(perm.mapping.size(), 0);
    for (std::size_t i = 0; i < perm.mapping.size(); ++i)
        inv.mapping[static_cast<std::size_t>(perm.mapping[i])] = static_cast<int>(i);
    return inv;
}

Image pad_to(const Image& img, int size) {
    if (img.height == size && img.width == size) return img;
    if (img.height > size || img.width > size)
        throw ArgError("pad_to: image larger than target size");
    Image out = Image::zeros(size, size, img.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y)
        std::memcpy(&out.at(y, 0, 0), &img.at(y, 0, 0), row_bytes * sizeof(float));
    return out;
}

Image assemble_shuffled(const Image& padded, const PatchGrid& grid, const Permutation& perm) {
    if (padded.height != grid.padded_size || padded.width != grid.padded_size)
        throw ArgError("assemble_shuffled: image is " + std::to_string(padded.height) + "x" +
                       std::to_string(padded.width) + ", grid expects " +
                       std::to_string(grid.padded_size));
    const int cells = grid.n * grid.n;
    if (static_cast<int>(perm.mapping.size()) != cells)
        throw ArgError("assemble_shuffled: permutation size mismatch");

    Image out = Image::zeros(padded.height, padded.width, padded.channels);
    const int ps = grid.patch_side;
    const std::size_t block_row = static_cast<std::size_t>(ps) * padded.channels;
    for (int i = 0; i < cells; ++i) {
        const int src_row = (i / grid.n) * ps, src_col = (i % grid.n) * ps;
        const int dst = perm.mapping[static_cast<std::size_t>(i)];
        const int dst_row = (dst / grid.n) * ps, dst_col = (dst % grid.n) * ps;
        for (int y = 0; y < ps; ++y)
            std::memcpy(&out.at(dst_row + y, dst_col, 0), &padded.at(src_row + y, src_col, 0),
                        block_row * sizeof(float));
    }
    return out;
}

std::vector<Point> shuffled_centers(const PatchGrid& grid, const Permutation& perm,
                                    int working_size) {
    const int cells = grid.n * grid.n;
    if (static_cast<int>(perm.mapping.size()) != cells)
        throw ArgError("shuffled_centers: permutation size mismatch");
    std::vector<Point> centers(static_cast<std::size_t>(cells));
    const double s = static_cast<double>(working_size);
    for (int i = 0; i < cells; ++i) {
        const int cell = perm.mapping[static_cast<std::size_t>(i)];
        const int m = cell % grid.n;  // column
        const int n = cell / grid.n;  // row
        centers[static_cast<std::size_t>(i)] = {(2 * m + 1) * s / (2.0 * grid.n),
                                                (2 * n + 1) * s / (2.0 * grid.n)};
    }
    return centers;
}

std::string serialize_permutation(const Permutation& perm, int grid_n) {
    if (static_cast<int>(perm.mapping.size()) != grid_n * grid_n)
        throw ArgError("serialize_permutation: size is not grid_n^2");
    std::ostringstream os;
    os << "perm " << grid_n << " " << perm.seed;
    for (int v : perm.mapping) os << " " << v;
    return os.str();
}

Permutation parse_permutation(const std::string& line, int* grid_n) {
    std::istringstream is(line);
    std::string tag;
    int n = 0;
    std::uint64_t seed = 0;
    if (!(is >> tag >> n >> seed) || tag != "perm" || n < 1)
        throw ParseError("parse_permutation: malformed header in '" + line + "'");
    Permutation perm;
    perm.seed = seed;
    perm.mapping.resize(static_cast<std::size_t>(n) * n);
    std::vector<bool> seen(perm.mapping.size(), false);
    for (auto& v : perm.mapping) {
        if (!(is >> v) || v < 0 || v >= static_cast<int>(perm.mapping.size()) ||
            seen[static_cast<std::size_t>(v)])
            throw ParseError("parse_permutation: mapping is not a bijection in '" + line + "'");
        seen[static_cast<std::size_t>(v)] = true;
    }
    if (grid_n) *grid_n = n;
    return perm;
}

}  // namespace hsjp::puzzle
