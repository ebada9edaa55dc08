#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpclab/grid.hpp"
#include "cpclab/rng.hpp"

namespace cpclab {

// Gaussian with diagonal covariance. Isotropic marginals are the common
// case; products across blocks with different sigmas need the per-coordinate
// form.
struct Gaussian {
    Vec mean;
    Vec std_dev;  // all > 0

    static Gaussian isotropic(Vec mean, double sigma);

    int dim() const { return static_cast<int>(mean.size()); }
    // Log density at x of this Gaussian convolved with N(0, t^2 I).
    double log_density(const Vec& x, double t = 0.0) const;
    Vec sample(Rng& rng) const;
};

struct WeightedGaussian {
    double weight = 1.0;
    Gaussian g;
};

struct GaussianMixture {
    std::vector<WeightedGaussian> components;

    int dim() const;
    int size() const { return static_cast<int>(components.size()); }
    // Throws unless weights sum to 1 within 1e-12 and dimensions agree.
    void validate() const;

    // Log density of the mixture convolved with N(0, t^2 I), stable
    // log-sum-exp over components.
    double log_density(const Vec& x, double t = 0.0) const;
    Vec mean() const;
    Vec sample(Rng& rng) const;
    // Restriction to a subset of coordinate positions (exact for diagonal
    // components; weights unchanged).
    GaussianMixture marginal(const std::vector<int>& positions) const;
};

// Convolution with N(0, t^2 I): per-coordinate variance grows by t^2,
// weights and means unchanged.
GaussianMixture noise_distribution(const GaussianMixture& d, double t);

// Conditional model that factorizes over the disjoint cell blocks of a
// SubsetMap: each condition controls its own block, everything else follows
// the unconditioned marginals.
struct FactorizedModel {
    SubsetMap subsets;
    std::vector<GaussianMixture> present;  // p(x_{M_j} | c_j)
    std::vector<GaussianMixture> absent;   // p(x_{M_j} | empty)
    std::optional<GaussianMixture> background;  // p(x_{M_b} | empty)

    int n_conditions() const { return subsets.n_conditions(); }
    void validate() const;
};

// Gaussian bump of unit shape-scale centered in a cell x cell block,
// values b(u,v) = exp(-((u-(c-1)/2)^2 + (v-(c-1)/2)^2) / 2), row-major.
Vec bump_template(int cell);
// Largest template value on the integer grid (1 for odd cells,
// exp(-1/4) for even cells).
double bump_peak(int cell);

// Default desk-scale model: one bump-mean Gaussian per cell when present,
// zero-mean when absent, isotropic std sigma everywhere.
FactorizedModel default_model(GridShape shape, int cell, double sigma);
FactorizedModel default_model();  // 16x16, cell 4, sigma 0.05

// Full-dimension conditional p(x | c_J): product of per-block marginals
// assembled into one mixture (component count multiplies across blocks).
GaussianMixture conditional_mixture(const FactorizedModel& m,
                                    const ConditionSet& J);

// Marginal of the conditional onto an arbitrary pixel subset. Only blocks
// intersecting S enter the product.
GaussianMixture marginal_mixture(const FactorizedModel& m,
                                 const ConditionSet& J, const IndexSet& S);

enum class LabelingPolicy { AllLabels, SingleLabel, RandNumLabels, DropOneLabel };

const char* to_string(LabelingPolicy policy);
LabelingPolicy labeling_policy_from_string(const std::string& name);

struct TrainingItem {
    Image image;
    ConditionSet true_conditions;
    ConditionSet labeled_conditions;
};

struct TrainingSet {
    GridShape shape;
    LabelingPolicy policy = LabelingPolicy::AllLabels;
    std::uint64_t seed = 0;
    int count_min = 1;
    int count_max = 1;
    std::vector<TrainingItem> items;

    int size() const { return static_cast<int>(items.size()); }
};

// Draws object count uniform in [count_min, count_max], cells uniform
// without replacement, image from the conditional, labels per policy.
TrainingSet sample_training_set(const FactorizedModel& m, int count_min,
                                int count_max, LabelingPolicy policy,
                                int n_items, std::uint64_t seed);

// Item selection for the memorizing learner: exact label match first, then
// maximum overlap (ties all kept), then everything (flagged).
enum class MatchRule { Exact, MaxOverlap };

struct Selection {
    std::vector<int> items;
    bool exact_match = false;
    bool fallback_all = false;
};

Selection select_items(const std::vector<ConditionSet>& item_labels,
                       const ConditionSet& target, MatchRule rule);
Selection select_items(const TrainingSet& ts, const ConditionSet& J,
                       MatchRule rule);

struct SmoothedEmpirical {
    GaussianMixture mixture;
    Selection selection;
};

// Uniform-weight kernel mixture N(. ; x_i, t^2) over the selected items:
// the noised empirical measure of the matched training slice.
SmoothedEmpirical smoothed_empirical(const TrainingSet& ts,
                                     const ConditionSet& J, MatchRule rule,
                                     double t);

}  // namespace cpclab
