#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "cpclab/scores.hpp"

namespace cpclab {

enum class Spacing { Geometric, Linear };

struct Schedule {
    double t_max = 3.0;
    double t_min = 0.01;
    int steps = 200;
    Spacing spacing = Spacing::Geometric;

    void validate() const;
    // steps+1 levels from t_max down to t_min.
    std::vector<double> times() const;
};

enum class SamplerKind { ProbabilityFlowOde, EulerMaruyamaSde };

struct PixelCoord {
    int x = 0;  // column
    int y = 0;  // row
    bool operator==(const PixelCoord&) const = default;
};

struct GenerationReport {
    Image image;
    std::vector<double> step_norms;  // ||x||_2 after each step
    int object_count = 0;
    std::vector<PixelCoord> peak_positions;
};

// A cell holds an object iff its max pixel reaches threshold * bump peak.
// Returns the count and the per-cell argmax coordinates.
std::pair<int, std::vector<PixelCoord>> count_objects(const Image& x,
                                                      const SubsetMap& subsets,
                                                      double threshold);

// Reverse diffusion from x ~ N(0, t_max^2 I). ODE update
// x <- x + (t_i - t_{i+1}) t_i s(x, J, t_i); the SDE variant doubles the
// drift and injects variance-matched noise. Counting uses `subsets` and
// `threshold`.
GenerationReport sample(const ScoreField& field, const ConditionSet& J,
                        const Schedule& sch, SamplerKind kind,
                        std::uint64_t seed, const SubsetMap& subsets,
                        double threshold = 0.5);

// Patch-wise inference: per step, for every cell, score the clamped cell
// window against position-matched training patches and write back only the
// center cell. ODE updates only.
GenerationReport patch_sample(const TrainingSet& ts, const SubsetMap& subsets,
                              int radius, const ConditionSet& J,
                              const Schedule& sch, std::uint64_t seed,
                              double threshold = 0.5);

struct KCase {
    int k = 0;
    std::vector<int> counts;
    double band_fraction = 0.0;  // count in [K-2, K+allowance]
    double full_fraction = 0.0;  // count in [K, K+allowance]
    bool success = false;
};

struct KmaxResult {
    int k_max = 0;
    std::vector<KCase> cases;
};

// Success at K <= n_train: every sample counts within [K, K+allowance].
// Success at K > n_train: more than 25% of samples count within
// [K-2, K+allowance] AND more than 25% reach [K, K+allowance] (a generator
// stuck below K-2 of the request must not pass on the band alone).
// k_max is the largest K (>= 1) with success at every smaller listed K;
// K = 0 entries are recorded but never gate k_max.
KmaxResult kmax_evaluate(
    const std::function<GenerationReport(int k, std::uint64_t seed)>& generator,
    int n_train, const std::vector<int>& k_list, int n_samples,
    int extra_allowance, std::uint64_t seed);

}  // namespace cpclab
