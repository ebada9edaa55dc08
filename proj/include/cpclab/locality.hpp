#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "cpclab/sampler.hpp"
#include "cpclab/scores.hpp"

namespace cpclab {

// Denoised estimate from the score, x0 = x + t^2 s(x, J, t).
Image denoise(const ScoreField& field, const Image& x, const ConditionSet& J,
              double t);

struct GradientMap {
    PixelCoord target;
    double t = 0.0;
    Image values;  // |d x0[target] / d x[i,j]|, batch-averaged
};

struct InfluenceVector {
    PixelCoord target;
    double t = 0.0;
    // one entry per condition in J, ordered by condition id
    std::vector<std::pair<int, double>> values;

    double max_value() const;
    // influence of one condition id (0 when absent)
    double value_of(int id) const;
    // largest / second largest; +inf when only one entry is nonzero
    double dominance_ratio() const;
    int dominant_id() const;  // -1 when all zero
};

struct LocalityProfile {
    GradientMap gradient_map;
    InfluenceVector influence;
    std::optional<int> area90;
    double total_energy = 0.0;
};

// Batch-averaged absolute denoiser Jacobian row: for each of `batch` draws
// x_t = x + t eps, central finite differences (step h) of x0[target] with
// respect to every input pixel. Draw b uses the stream derived from
// (seed, b), so a batch is the mean of the matching single-draw maps.
GradientMap pixel_gradient_map(const ScoreField& field, const Image& x,
                               const ConditionSet& J, double t,
                               PixelCoord target, int batch,
                               std::uint64_t seed, double step = 1e-4);

// Ablation influence: |x0(x_t, J)[target] - x0(x_t, J without k)[target]|
// for each k in J. Forward evaluations only; x is used as given.
InfluenceVector conditional_influence(const ScoreField& field, const Image& x,
                                      const ConditionSet& J, double t,
                                      PixelCoord target);

// Smallest odd-sided square centered at the target (clamped at borders)
// holding at least `fraction` of the map's squared-magnitude energy.
// Reported as the clamped extent; empty for an all-zero map.
std::optional<int> energy_area(const GradientMap& map, double fraction);

double total_energy(const GradientMap& map);

LocalityProfile locality_profile(const ScoreField& field, const Image& x,
                                 const ConditionSet& J, double t,
                                 PixelCoord target, int batch,
                                 std::uint64_t seed);

}  // namespace cpclab
