#include <doctest.h>

#include <cmath>

#include "cpclab/locality.hpp"

using namespace cpclab;

namespace {

ScoreField gaussian_field(const Vec& mu, double sigma) {
    GaussianMixture g;
    g.components.push_back({1.0, Gaussian::isotropic(mu, sigma)});
    return ScoreField{"gauss",
                      [g](const Image& x, const ConditionSet&, double t) {
                          return mixture_score(g, x.values, t);
                      }};
}

}  // namespace

TEST_CASE("gradient map of an exact gaussian denoiser is diagonal") {
    const auto shape = make_shape(4, 4);
    Vec mu(16, 0.2);
    const double sigma = 0.3, t = 0.8;
    const auto field = gaussian_field(mu, sigma);

    Image x(shape);
    const PixelCoord target{2, 1};
    const auto map = pixel_gradient_map(field, x, {}, t, target, 1, 5);

    // analytic Jacobian: diag(sigma^2 / (sigma^2 + t^2))
    const double diag = sigma * sigma / (sigma * sigma + t * t);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (r == target.y && c == target.x)
                CHECK(std::abs(map.values.at(r, c) - diag) < 1e-5);
            else
                CHECK(map.values.at(r, c) <= 1e-6);
        }
    }
}

TEST_CASE("local score field keeps the gradient inside the block") {
    const auto m = default_model(make_shape(8, 8), 4, 0.05);
    const auto field = local_score_field(m, block_locality_rule(m.subsets));
    Image x(m.subsets.shape);
    const int cell = 3;
    const int target_pixel = m.subsets.blocks[cell][5];
    const PixelCoord target{m.subsets.shape.col(target_pixel),
                            m.subsets.shape.row(target_pixel)};
    const auto map = pixel_gradient_map(field, x, ConditionSet{cell}, 0.3,
                                        target, 2, 9);
    for (int i = 0; i < m.subsets.shape.pixels(); ++i) {
        if (!m.subsets.blocks[cell].contains(i))
            CHECK(map.values.values[i] <= 1e-8);
    }
    CHECK(map.values.values[target_pixel] > 1e-3);
}

TEST_CASE("batched map is the mean of its single-draw maps") {
    const auto field = gaussian_field(Vec(16, 0.0), 0.5);
    Image x(make_shape(4, 4));
    const PixelCoord target{1, 1};
    const std::uint64_t seed = 31;
    const int batch = 16;

    const auto big = pixel_gradient_map(field, x, {}, 1.0, target, batch, seed);
    Image mean(make_shape(4, 4));
    for (int b = 0; b < batch; ++b) {
        const auto one =
            pixel_gradient_map(field, x, {}, 1.0, target, 1, derive_seed(seed, b));
        for (int i = 0; i < 16; ++i) mean.values[i] += one.values.values[i];
    }
    for (int i = 0; i < 16; ++i)
        CHECK(std::abs(big.values.values[i] - mean.values[i] / batch) < 1e-12);
}

TEST_CASE("influence of the local field is exactly sparse") {
    const auto m = default_model(make_shape(16, 16), 4, 0.05);
    const auto field = local_score_field(m, block_locality_rule(m.subsets));
    Rng rng(13);
    Image x(m.subsets.shape);
    for (auto& v : x.values) v = 3.0 * rng.normal();

    const int k = 5;
    const ConditionSet J{k, 0, 10, 15};
    const int target_pixel = m.subsets.blocks[k][6];
    const PixelCoord target{m.subsets.shape.col(target_pixel),
                            m.subsets.shape.row(target_pixel)};

    const auto inf = conditional_influence(field, x, J, 3.0, target);
    REQUIRE(inf.values.size() == 4);
    CHECK(inf.value_of(k) > 0.0);
    CHECK(inf.value_of(0) == 0.0);
    CHECK(inf.value_of(10) == 0.0);
    CHECK(inf.value_of(15) == 0.0);
    CHECK(inf.dominant_id() == k);
    CHECK(std::isinf(inf.dominance_ratio()));
}

TEST_CASE("influence with no conditions is empty") {
    const auto field = gaussian_field(Vec(16, 0.0), 0.2);
    Image x(make_shape(4, 4));
    const auto inf = conditional_influence(field, x, {}, 1.0, {0, 0});
    CHECK(inf.values.empty());
    CHECK(inf.dominant_id() == -1);
}

TEST_CASE("influence does not depend on condition enumeration order") {
    const auto m = default_model(make_shape(8, 8), 4, 0.05);
    const auto field = local_score_field(m, block_locality_rule(m.subsets));
    Image x(m.subsets.shape);
    Rng rng(14);
    for (auto& v : x.values) v = rng.normal();
    const PixelCoord target{1, 1};
    const auto a =
        conditional_influence(field, x, ConditionSet{2, 0, 3}, 1.0, target);
    const auto b =
        conditional_influence(field, x, ConditionSet{3, 2, 0}, 1.0, target);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        CHECK(a.values[i].first == b.values[i].first);
        CHECK(a.values[i].second == b.values[i].second);
    }
}

TEST_CASE("energy area on synthetic maps") {
    GradientMap map;
    map.target = {8, 8};
    map.t = 1.0;
    map.values = Image(make_shape(16, 16));

    SUBCASE("all-zero map is undefined") {
        CHECK(!energy_area(map, 0.9).has_value());
    }

    SUBCASE("single spike at the target needs side 1") {
        map.values.at(8, 8) = 2.5;
        CHECK(energy_area(map, 0.9).value() == 1);
    }

    SUBCASE("uniform map: enumeration oracle") {
        for (auto& v : map.values.values) v = 0.7;
        // oracle: grow the clamped square until it holds 90% of the cells
        const int n = 256;
        int expected = -1;
        for (int half = 0; half <= 15 && expected < 0; ++half) {
            const int r0 = std::max(0, 8 - half), r1 = std::min(15, 8 + half);
            const int c0 = std::max(0, 8 - half), c1 = std::min(15, 8 + half);
            const int cells = (r1 - r0 + 1) * (c1 - c0 + 1);
            if (cells >= 0.9 * n) expected = std::max(r1 - r0, c1 - c0) + 1;
        }
        CHECK(energy_area(map, 0.9).value() == expected);
    }

    SUBCASE("fraction bounds are enforced") {
        CHECK_THROWS_AS(energy_area(map, 0.0), DomainError);
        CHECK_THROWS_AS(energy_area(map, 1.0), DomainError);
    }
}

TEST_CASE("total energy basics") {
    GradientMap map;
    map.target = {0, 0};
    map.values = Image(make_shape(2, 2));
    CHECK(total_energy(map) == 0.0);
    map.values.values[2] = 3.0;
    CHECK(total_energy(map) == 9.0);
    for (auto& v : map.values.values) v *= 2.0;
    CHECK(total_energy(map) == 36.0);
}

TEST_CASE("local field energy is confined to the cell at every probe level") {
    const auto m = default_model(make_shape(16, 16), 4, 0.05);
    const auto field = local_score_field(m, block_locality_rule(m.subsets));
    Image x(m.subsets.shape);
    const int cell = 9;
    const int target_pixel = m.subsets.blocks[cell][10];
    const PixelCoord target{m.subsets.shape.col(target_pixel),
                            m.subsets.shape.row(target_pixel)};
    for (double t : {0.05, 0.3, 1.0, 3.0}) {
        const auto map = pixel_gradient_map(field, x, ConditionSet{cell}, t,
                                            target, 1, 3);
        const auto side = energy_area(map, 0.9);
        REQUIRE(side.has_value());
        // the block has diameter 4 pixels; the clamped square may need up to
        // twice that to cover an off-center target's block
        CHECK(side.value() <= 2 * m.subsets.cell);
    }
}
