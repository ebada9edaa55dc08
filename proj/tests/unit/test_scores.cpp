#include <doctest.h>

#include <cmath>

#include "cpclab/scores.hpp"

using namespace cpclab;

namespace {

FactorizedModel small_model() {
    return default_model(make_shape(8, 8), 4, 0.05);  // 2x2 cells
}

// Model whose block marginals are two-component mixtures, so pixels within
// a cell are correlated (mixture assignment couples them).
FactorizedModel mixture_model() {
    auto m = small_model();
    const Vec bump = bump_template(4);
    for (int j = 0; j < m.n_conditions(); ++j) {
        GaussianMixture on;
        on.components.push_back({0.7, Gaussian::isotropic(bump, 0.05)});
        Vec shifted(bump.size(), 0.3);
        on.components.push_back({0.3, Gaussian::isotropic(shifted, 0.1)});
        m.present[j] = on;

        GaussianMixture off;
        off.components.push_back(
            {0.6, Gaussian::isotropic(Vec(16, 0.0), 0.05)});
        off.components.push_back(
            {0.4, Gaussian::isotropic(Vec(16, -0.2), 0.08)});
        m.absent[j] = off;
    }
    m.validate();
    return m;
}

double max_abs_diff(const Vec& a, const Vec& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("single-gaussian score is the closed form") {
    GaussianMixture m;
    m.components.push_back({1.0, Gaussian::isotropic({0.5, -1.0}, 0.2)});
    const double t = 0.3;
    const Vec x{1.0, 1.0};
    const Vec s = mixture_score(m, x, t);
    const double var = 0.2 * 0.2 + t * t;
    CHECK(s[0] == doctest::Approx((0.5 - 1.0) / var).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx((-1.0 - 1.0) / var).epsilon(1e-14));

    SUBCASE("score vanishes at the mean") {
        const Vec at_mean = mixture_score(m, {0.5, -1.0}, t);
        CHECK(at_mean[0] == 0.0);
        CHECK(at_mean[1] == 0.0);
    }
}

TEST_CASE("mixture score matches finite differences of its log-density") {
    // Independent oracle: central difference with step 1e-5, 1e-6 absolute.
    GaussianMixture m;
    m.components.push_back({0.3, Gaussian::isotropic({-1.0}, 0.5)});
    m.components.push_back({0.7, Gaussian::isotropic({2.0}, 1.2)});
    const double t = 0.4, h = 1e-5;
    for (double x : {-2.0, -0.5, 0.0, 1.3, 3.1}) {
        const double s = mixture_score(m, {x}, t)[0];
        const double fd =
            (m.log_density({x + h}, t) - m.log_density({x - h}, t)) / (2 * h);
        CHECK(std::abs(s - fd) < 1e-6);
    }
}

TEST_CASE("empty mixture is a domain error") {
    GaussianMixture m;
    CHECK_THROWS_AS(mixture_score(m, {0.0}, 1.0), DomainError);
}

TEST_CASE("block locality rule mirrors the partition") {
    const auto map = make_subset_map(make_shape(8, 8), 4);
    const auto rule = block_locality_rule(map);
    const int i = map.blocks[3][2];
    CHECK(rule.cond_subset(i, ConditionSet{3, 1}) == ConditionSet{3});
    CHECK(rule.cond_subset(i, ConditionSet{1}) == ConditionSet{});
    CHECK(rule.neighborhood[i].indices() == map.blocks[3].indices());
}

TEST_CASE("local score field is exact for the factorized model") {
    const auto m = small_model();
    const auto local = local_score_field(m, block_locality_rule(m.subsets));
    const auto global = global_score_field(m);

    Rng rng(55);
    const std::vector<ConditionSet> sets{
        {}, {0}, {3}, {0, 1}, {1, 2, 3}, {0, 1, 2, 3}};
    for (double t : {0.05, 0.3, 1.0, 3.0}) {
        for (const auto& J : sets) {
            Image x(m.subsets.shape);
            for (auto& v : x.values) v = t * rng.normal();
            CHECK(max_abs_diff(local(x, J, t), global(x, J, t)) < 1e-10);
        }
    }
}

TEST_CASE("local score field handles mixture marginals exactly") {
    const auto m = mixture_model();
    const auto local = local_score_field(m, block_locality_rule(m.subsets));
    const auto global = global_score_field(m);
    Rng rng(56);
    for (double t : {0.1, 1.0}) {
        for (const auto& J :
             {ConditionSet{}, ConditionSet{1}, ConditionSet{0, 2}}) {
            Image x(m.subsets.shape);
            for (auto& v : x.values) v = 0.5 + t * rng.normal();
            CHECK(max_abs_diff(local(x, J, t), global(x, J, t)) < 1e-10);
        }
    }
}

TEST_CASE("empty condition set reduces to the unconditional score") {
    const auto m = small_model();
    const auto local = local_score_field(m, block_locality_rule(m.subsets));
    const auto global = global_score_field(m);
    Image x(m.subsets.shape);
    Rng rng(57);
    for (auto& v : x.values) v = rng.normal();
    CHECK(max_abs_diff(local(x, {}, 0.5), global(x, {}, 0.5)) < 1e-12);
}

TEST_CASE("a single-pixel rule disagrees when cells are correlated") {
    const auto m = mixture_model();
    LocalityRule wrong;
    wrong.neighborhood.resize(m.subsets.shape.pixels());
    for (int i = 0; i < m.subsets.shape.pixels(); ++i)
        wrong.neighborhood[i] = IndexSet({i});
    std::vector<int> cell_of(m.subsets.shape.pixels());
    for (int i = 0; i < m.subsets.shape.pixels(); ++i)
        cell_of[i] = m.subsets.cell_of_pixel(i);
    wrong.cond_subset = [cell_of](int pixel, const ConditionSet& J) {
        return J.contains(cell_of[pixel]) ? ConditionSet{cell_of[pixel]}
                                          : ConditionSet{};
    };

    const auto narrow = local_score_field(m, wrong);
    const auto global = global_score_field(m);
    Image x(m.subsets.shape);
    Rng rng(58);
    for (auto& v : x.values) v = 0.4 * rng.normal();
    // at t where mixture responsibilities are state-dependent, the
    // per-pixel marginal ignores within-cell coupling
    CHECK(max_abs_diff(narrow(x, ConditionSet{0}, 0.1),
                       global(x, ConditionSet{0}, 0.1)) > 1e-4);
}

TEST_CASE("conditioner sparsity: conditions outside L_i do not move the score") {
    const auto m = small_model();
    const auto local = local_score_field(m, block_locality_rule(m.subsets));
    Image x(m.subsets.shape);
    Rng rng(59);
    for (auto& v : x.values) v = rng.normal();
    const Vec a = local(x, ConditionSet{0}, 0.7);
    const Vec b = local(x, ConditionSet{0, 3}, 0.7);
    for (int i : m.subsets.blocks[0])
        CHECK(a[i] == b[i]);  // bit-identical on block 0
    for (int i : m.subsets.blocks[1]) CHECK(a[i] == b[i]);
    for (int i : m.subsets.blocks[2]) CHECK(a[i] == b[i]);
}

TEST_CASE("blockwise field equals the global score on an exact model") {
    const auto m = mixture_model();
    const auto blockwise = blockwise_score_field(m);
    const auto global = global_score_field(m);
    Image x(m.subsets.shape);
    Rng rng(60);
    for (auto& v : x.values) v = rng.normal();
    for (const auto& J : {ConditionSet{}, ConditionSet{0, 3}})
        CHECK(max_abs_diff(blockwise(x, J, 0.6), global(x, J, 0.6)) < 1e-10);
}

TEST_CASE("empirical window score agrees with the kernel mixture score") {
    const auto m = small_model();
    const auto ts =
        sample_training_set(m, 1, 2, LabelingPolicy::AllLabels, 24, 8);
    const ConditionSet J{0};
    const double t = 0.8;

    const auto se = smoothed_empirical(ts, J, MatchRule::Exact, t);
    Image x(m.subsets.shape);
    Rng rng(61);
    for (auto& v : x.values) v = t * rng.normal();

    // route A: mixture with kernel std t, scored with no extra noise
    const Vec a = mixture_score(se.mixture, x.values, 0.0);
    // route B: shared window path
    const auto field = empirical_score_field(ts, MatchRule::Exact);
    const Vec b = field(x, J, t);
    CHECK(max_abs_diff(a, b) < 1e-9);
}

TEST_CASE("patch field with a covering radius equals the empirical field") {
    const auto m = small_model();
    const auto ts =
        sample_training_set(m, 1, 2, LabelingPolicy::SingleLabel, 30, 9);
    const auto patch = patch_score_field(ts, m.subsets, 1);  // covers 2x2 cells
    const auto global = empirical_score_field(ts, MatchRule::Exact);
    Image x(m.subsets.shape);
    Rng rng(62);
    for (auto& v : x.values) v = rng.normal();
    for (const auto& J : {ConditionSet{0}, ConditionSet{0, 3}}) {
        const Vec a = patch(x, J, 0.9);
        const Vec b = global(x, J, 0.9);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("patch selection matches on the local conditioner subgrid") {
    const auto map = make_subset_map(make_shape(16, 16), 4);  // 4x4 cells
    const auto m = default_model(make_shape(16, 16), 4, 0.05);
    const auto ts =
        sample_training_set(m, 1, 3, LabelingPolicy::SingleLabel, 60, 10);

    // radius 1 window around corner cell 0 covers cells {0,1,4,5}
    const ConditionSet win = window_cells(map, 0, 1);
    CHECK(win == ConditionSet{0, 1, 4, 5});

    // conditioning far outside the window must not affect the selection
    const auto sel_near = patch_selection(ts, map, 0, 1, ConditionSet{0});
    const auto sel_far = patch_selection(ts, map, 0, 1, ConditionSet{0, 15});
    CHECK(sel_near.items == sel_far.items);
}

TEST_CASE("score fields reject mismatched shapes") {
    const auto m = small_model();
    const auto local = local_score_field(m, block_locality_rule(m.subsets));
    Image wrong(make_shape(4, 4));
    CHECK_THROWS(local(wrong, {}, 1.0));
}
