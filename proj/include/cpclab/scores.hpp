#pragma once

#include <functional>
#include <string>

#include "cpclab/distributions.hpp"

namespace cpclab {

// Per-pixel sparsity structure: the score at pixel i may read only the
// pixels N_i and the conditions L_i(J) <= J.
struct LocalityRule {
    std::vector<IndexSet> neighborhood;  // N_i, must contain i
    std::function<ConditionSet(int pixel, const ConditionSet& J)> cond_subset;
    bool time_dependent = false;  // fixed false in this artifact

    void validate(const GridShape& shape) const;
};

// Score evaluator contract: deterministic, finite output for finite input.
struct ScoreField {
    std::string name;
    std::function<Vec(const Image& x, const ConditionSet& J, double t)> eval;

    Vec operator()(const Image& x, const ConditionSet& J, double t) const {
        return eval(x, J, t);
    }
};

// Score of the noised mixture at x: sum_k r_k(x) (mu_k - x) / (sigma_k^2 + t^2)
// per coordinate, responsibilities via log-sum-exp.
Vec mixture_score(const GaussianMixture& m, const Vec& x, double t);

// The rule induced by a block partition: N_i = M_j and L_i(J) = {j} ∩ J for
// i in M_j; background pixels get N_i = M_b, L_i = empty.
LocalityRule block_locality_rule(const SubsetMap& subsets);

// Score field that evaluates, at each pixel, the noised marginal score of
// the subset distribution selected by the rule and reads that coordinate.
ScoreField local_score_field(const FactorizedModel& m, const LocalityRule& rule);

// Score of the explicitly block-factorized product: each block contributes
// its own marginal score independently. Equals the global score when the
// model factorizes exactly; the reference side of the composition bound.
ScoreField blockwise_score_field(const FactorizedModel& m);

// Global score of the full conditional mixture (the oracle the local field
// is checked against).
ScoreField global_score_field(const FactorizedModel& m);

// Kernel-smoothed score over selected training items, evaluated on a pixel
// window. Shared by the global empirical field (window = whole image) and
// the patch field so the two take identical arithmetic paths.
Vec empirical_window_score(const TrainingSet& ts, const std::vector<int>& items,
                           const IndexSet& window, const Vec& x_window,
                           double t);

// Memorizing learner: score of the noised empirical measure over items
// matched on the full label set. Kernel bandwidth equals the evaluation t.
ScoreField empirical_score_field(const TrainingSet& ts, MatchRule rule);

// Patch-local learner: for the cell containing each pixel, matches training
// items on the conditioner subgrid of the clamped (2k+1)x(2k+1) cell window
// at the same absolute position, and scores the window's empirical kernel
// mixture at that pixel.
ScoreField patch_score_field(const TrainingSet& ts, const SubsetMap& subsets,
                             int radius);

// Selection used by the patch field at one cell: labels and target both
// restricted to the window's cells.
Selection patch_selection(const TrainingSet& ts, const SubsetMap& subsets,
                          int cell_id, int radius, const ConditionSet& J);

}  // namespace cpclab
