#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affine.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace hsjp::puzzle {

using imaging::Image;
using imaging::Point;

struct PatchGrid {
    int n = 1;           // patches per side
    int patch_side = 0;  // ceil(working_size / n) pixels
    int padded_size = 0; // n * patch_side
};

// patch_side is rounded up; the image is zero-padded on the right/bottom to
// padded_size before splitting. Throws when n > working_size or n < 1.
PatchGrid make_grid(int working_size, int n);

// mapping[i] = destination grid cell of original patch i (row-major cells).
struct Permutation {
    std::vector<int> mapping;
    std::uint64_t seed = 0;
};

// Backward Fisher-Yates (Knuth-Durstenfeld): for j from n-1 down to 1, swap
// j with uniform k in [0, j]. All n! outcomes equiprobable.
std::vector<int> fisher_yates(int n_items, Rng& rng);

Permutation make_permutation(int n_items, std::uint64_t seed);

Permutation inverse_permutation(const Permutation& perm);

// Zero-pads on the right/bottom; identity when already that size.
Image pad_to(const Image& img, int size);

// Moves original patch i into grid cell perm.mapping[i].
// pre: image height == width == grid.padded_size.
Image assemble_shuffled(const Image& padded, const PatchGrid& grid, const Permutation& perm);

// centers[i] = center of cell mapping[i] in working-size coordinates:
// ((2m+1)*S/(2N), (2n+1)*S/(2N)) for cell column m, row n.
std::vector<Point> shuffled_centers(const PatchGrid& grid, const Permutation& perm,
                                    int working_size);

// Line record: "perm N seed m0 m1 ... m(N^2-1)"; N = patches per side.
std::string serialize_permutation(const Permutation& perm, int grid_n);
Permutation parse_permutation(const std::string& line, int* grid_n);

}  // namespace hsjp::puzzle
