#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "eval.hpp"
#include "heatmap.hpp"
#include "puzzle.hpp"
#include "synthdata.hpp"
#include "train.hpp"

using namespace hsjp;
using namespace hsjp::eval;

TEST_SUITE_BEGIN("eval");

TEST_CASE("patch_correct uses a strict inequality") {
    CHECK(patch_correct({5, 5}, {5, 5}, 0.1));
    CHECK_FALSE(patch_correct({5, 5}, {5, 8}, 3.0));  // distance exactly eps
    CHECK(patch_correct({5, 5}, {5, 8}, 3.0001));

    // default eps at N=6, 56x56 output: half a grid cell = 4.667 px
    const double eps = 56.0 / (2.0 * 6.0);
    CHECK(eps == doctest::Approx(4.6667).epsilon(1e-3));
    CHECK(patch_correct({10, 10}, {14, 10}, eps));  // 4.0 px away
    CHECK_THROWS_AS(patch_correct({0, 0}, {0, 0}, 0.0), ArgError);
}

TEST_CASE("puzzle_solved is the conjunction over patches") {
    std::vector<std::uint8_t> all(36, 1);
    CHECK(puzzle_solved(all));
    all[17] = 0;
    CHECK_FALSE(puzzle_solved(all));
    CHECK(puzzle_solved(std::vector<std::uint8_t>{1}));  // N=1 degenerate puzzle
}

TEST_CASE("precision follows Eq. T/(T+F)") {
    CHECK(precision(5, 5) == doctest::Approx(0.5));
    CHECK(precision(7, 0) == doctest::Approx(1.0));
    CHECK(precision(368, 632) == doctest::Approx(0.368));
    CHECK_THROWS_AS(precision(0, 0), ArgError);
    // complements sum to one
    CHECK(precision(3, 11) + precision(11, 3) == doctest::Approx(1.0));
}

TEST_CASE("oks matches the exponential similarity form") {
    const OksConfig cfg = default_oks_config(13);
    REQUIRE(cfg.k.size() == 13);
    std::vector<imaging::Point> gt(13), pred(13);
    std::vector<std::uint8_t> vis(13, 1);
    for (int i = 0; i < 13; ++i) gt[static_cast<std::size_t>(i)] = {10.0 + i, 20.0};
    pred = gt;
    CHECK(*oks(pred, gt, vis, 30.0, cfg) == doctest::Approx(1.0));

    for (auto& p : pred) p.x += 1e6;
    CHECK(*oks(pred, gt, vis, 30.0, cfg) == doctest::Approx(0.0));

    // single visible keypoint at distance scale * k -> exp(-1/2)
    std::fill(vis.begin(), vis.end(), 0);
    vis[4] = 1;
    pred = gt;
    const double scale = 25.0;
    pred[4].x += scale * cfg.k[4];
    CHECK(*oks(pred, gt, vis, scale, cfg) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));

    std::fill(vis.begin(), vis.end(), 0);
    CHECK_FALSE(oks(pred, gt, vis, scale, cfg).has_value());
}

TEST_CASE("oks is invariant under joint rescaling of coordinates and scale") {
    const OksConfig cfg = default_oks_config(13);
    Rng rng(6);
    std::vector<imaging::Point> gt(13), pred(13);
    std::vector<std::uint8_t> vis(13, 1);
    for (int i = 0; i < 13; ++i) {
        gt[static_cast<std::size_t>(i)] = {rng.uniform(0, 96), rng.uniform(0, 96)};
        pred[static_cast<std::size_t>(i)] = {gt[static_cast<std::size_t>(i)].x + rng.uniform(-3, 3),
                                             gt[static_cast<std::size_t>(i)].y + rng.uniform(-3, 3)};
    }
    const double base = *oks(pred, gt, vis, 40.0, cfg);
    for (double lambda : {0.5, 2.0, 7.0}) {
        auto gts = gt;
        auto preds = pred;
        for (auto& p : gts) {
            p.x *= lambda;
            p.y *= lambda;
        }
        for (auto& p : preds) {
            p.x *= lambda;
            p.y *= lambda;
        }
        CHECK(*oks(preds, gts, vis, 40.0 * lambda, cfg) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("17-keypoint evaluations use the benchmark falloff vector") {
    const OksConfig cfg = default_oks_config(17);
    REQUIRE(cfg.k.size() == 17);
    CHECK(cfg.k[0] == doctest::Approx(0.052));   // nose-type keypoint
    CHECK(cfg.k[11] == doctest::Approx(0.214));  // hip-type keypoint
}

TEST_CASE("map_over_thresholds counts hits per threshold") {
    const MapResult all_perfect = map_over_thresholds({1.0, 1.0, 1.0});
    CHECK(all_perfect.map == doctest::Approx(1.0));

    const MapResult point6 = map_over_thresholds({0.6, 0.6});
    for (int j = 0; j < 10; ++j) {
        const double t = 0.50 + 0.05 * j;
        CHECK(point6.ap[static_cast<std::size_t>(j)] ==
              doctest::Approx(t <= 0.6 ? 1.0 : 0.0));
    }
    CHECK(point6.map == doctest::Approx(0.3));

    const MapResult with_invalid = map_over_thresholds({0.9, -1.0, 0.9});
    CHECK(with_invalid.excluded == 1);
    CHECK(with_invalid.valid_instances == 2);
    CHECK_THROWS_AS(map_over_thresholds({}), ArgError);
}

TEST_CASE("ap is non-increasing in the threshold") {
    Rng rng(14);
    std::vector<double> scores;
    for (int i = 0; i < 200; ++i) scores.push_back(rng.next_double());
    const MapResult r = map_over_thresholds(scores);
    for (int j = 1; j < 10; ++j)
        CHECK(r.ap[static_cast<std::size_t>(j)] <= r.ap[static_cast<std::size_t>(j - 1)]);
}

TEST_CASE("oracle-injected ground truth solves every puzzle") {
    // decode(render(gt)) stands in for a perfect network output
    train::TrainConfig cfg;
    cfg.n = 3;
    cfg.size = 96;
    const double eps = cfg.resolved_eps();
    const puzzle::PatchGrid grid = puzzle::make_grid(cfg.size, cfg.n);
    std::int64_t solved = 0, failed = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto perm = puzzle::make_permutation(9, 1000 + trial);
        heatmap::GaussianSpec spec;
        spec.sigma = cfg.resolved_sigma();
        for (const auto c : puzzle::shuffled_centers(grid, perm, cfg.size))
            spec.centers.push_back({c.x / 4.0, c.y / 4.0});
        const auto stack = heatmap::render_targets(spec, 24, 24);
        const auto peaks = heatmap::decode_peaks(stack);
        std::vector<std::uint8_t> flags;
        for (std::size_t i = 0; i < peaks.size(); ++i)
            flags.push_back(patch_correct({peaks[i].x, peaks[i].y}, spec.centers[i], eps) ? 1
                                                                                          : 0);
        (puzzle_solved(flags) ? solved : failed)++;
    }
    CHECK(precision(solved, failed) == doctest::Approx(1.0));
}

TEST_CASE("an untrained network scores near chance on the jigsaw task") {
    train::TrainConfig cfg;
    cfg.n = 3;
    cfg.size = 96;
    const auto corpus = synthdata::gen_pretext_corpus(200, 96, 2026);
    std::vector<const imaging::Image*> images;
    for (const auto& img : corpus) images.push_back(&img);
    const auto net = model::build_network<float>(96, 9, 3, 333);
    const auto r = evaluate_hsjp(net, images, cfg, 11);
    CHECK(r.patch_accuracy > 1.0 / 9.0 - 0.05);
    CHECK(r.patch_accuracy < 1.0 / 9.0 + 0.05);

    // determinism of the evaluation protocol
    const auto r2 = evaluate_hsjp(net, images, cfg, 11);
    CHECK(r.precision == r2.precision);
    CHECK(r.patches_correct == r2.patches_correct);
}

TEST_CASE("evaluate_hsjp validates the head against n") {
    train::TrainConfig cfg;
    cfg.n = 3;
    cfg.size = 96;
    const auto corpus = synthdata::gen_pretext_corpus(2, 96, 5);
    std::vector<const imaging::Image*> images;
    for (const auto& img : corpus) images.push_back(&img);
    const auto net = model::build_network<float>(96, 4, 3, 1);
    CHECK_THROWS_AS(evaluate_hsjp(net, images, cfg, 1), ShapeError);
}

TEST_CASE("evaluate_pose produces a finite mAP and respects shapes") {
    train::TrainConfig cfg;
    cfg.size = 96;
    dataset::Dataset ds;
    ds.has_keypoints = true;
    for (const auto& s : synthdata::gen_keypoint_corpus(12, 96, 88,
                                                        synthdata::default_skeleton())) {
        ds.images.push_back(s.image);
        ds.annotations.push_back(s.annotation());
    }
    const auto net = model::build_network<float>(96, 13, 3, 21);
    const auto r = evaluate_pose(net, ds, cfg);
    CHECK(std::isfinite(r.map.map));
    CHECK(r.map.map >= 0.0);
    CHECK(r.map.map <= 1.0);
    CHECK(r.map.valid_instances + r.map.excluded == 12);

    const auto wrong = model::build_network<float>(96, 9, 3, 21);
    CHECK_THROWS_AS(evaluate_pose(wrong, ds, cfg), ShapeError);
}

TEST_CASE("prediction mosaics have the side-by-side layout") {
    train::TrainConfig cfg;
    cfg.n = 2;
    cfg.size = 32;
    const auto net = model::build_network<float>(32, 4, 3, 3);
    const auto corpus = synthdata::gen_pretext_corpus(1, 32, 4);
    const auto img = prediction_mosaic(net, corpus[0], cfg, 7);
    // 2x2 tiles of 8x8 per side, 4 px gap
    CHECK(img.height == 16);
    CHECK(img.width == 16 + 4 + 16);
}

TEST_SUITE_END();
