#include "cpclab/locality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpclab {

Image denoise(const ScoreField& field, const Image& x, const ConditionSet& J,
              double t) {
    const Vec s = field(x, J, t);
    Image out = x;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] += t * t * s[i];
    return out;
}

double InfluenceVector::max_value() const {
    double m = 0.0;
    for (const auto& [id, v] : values) m = std::max(m, v);
    return m;
}

double InfluenceVector::value_of(int id) const {
    for (const auto& [k, v] : values)
        if (k == id) return v;
    return 0.0;
}

double InfluenceVector::dominance_ratio() const {
    double first = 0.0, second = 0.0;
    for (const auto& [id, v] : values) {
        if (v > first) {
            second = first;
            first = v;
        } else if (v > second) {
            second = v;
        }
    }
    if (first == 0.0) return 0.0;
    if (second == 0.0) return std::numeric_limits<double>::infinity();
    return first / second;
}

int InfluenceVector::dominant_id() const {
    int best = -1;
    double most = 0.0;
    for (const auto& [id, v] : values) {
        if (v > most) {
            most = v;
            best = id;
        }
    }
    return best;
}

GradientMap pixel_gradient_map(const ScoreField& field, const Image& x,
                               const ConditionSet& J, double t,
                               PixelCoord target, int batch,
                               std::uint64_t seed, double step) {
    if (batch < 1) throw DomainError("gradient map needs batch >= 1");
    if (!(step > 0.0)) throw DomainError("finite-difference step must be > 0");
    const GridShape shape = x.shape;
    const int target_index = shape.index(target.y, target.x);
    if (target.x < 0 || target.x >= shape.width || target.y < 0 ||
        target.y >= shape.height)
        throw IndexError("gradient target outside the grid");

    GradientMap out;
    out.target = target;
    out.t = t;
    out.values = Image(shape);

    // denoised value at the target only: x0[target] = x[target] + t^2 s[target]
    auto denoised_at = [&](const Image& probe) {
        return probe.values[target_index] +
               t * t * field(probe, J, t)[target_index];
    };

    for (int b = 0; b < batch; ++b) {
        Rng rng(derive_seed(seed, b));
        Image noisy = x;
        for (auto& v : noisy.values) v += t * rng.normal();
        for (int i = 0; i < shape.pixels(); ++i) {
            Image plus = noisy, minus = noisy;
            plus.values[i] += step;
            minus.values[i] -= step;
            out.values.values[i] +=
                std::abs((denoised_at(plus) - denoised_at(minus)) /
                         (2.0 * step));
        }
    }
    for (auto& v : out.values.values) v /= batch;
    return out;
}

InfluenceVector conditional_influence(const ScoreField& field, const Image& x,
                                      const ConditionSet& J, double t,
                                      PixelCoord target) {
    const int target_index = x.shape.index(target.y, target.x);
    InfluenceVector out;
    out.target = target;
    out.t = t;
    if (J.empty()) return out;

    const double with_all = denoise(field, x, J, t).values[target_index];
    for (int k : J) {
        const double without =
            denoise(field, x, J.without(k), t).values[target_index];
        out.values.emplace_back(k, std::abs(with_all - without));
    }
    return out;
}

double total_energy(const GradientMap& map) {
    double acc = 0.0;
    for (double v : map.values.values) acc += v * v;
    return acc;
}

std::optional<int> energy_area(const GradientMap& map, double fraction) {
    if (!(fraction > 0.0) || !(fraction < 1.0))
        throw DomainError("energy fraction must lie in (0, 1)");
    const double total = total_energy(map);
    if (total <= 0.0) return std::nullopt;

    const GridShape shape = map.values.shape;
    const int tx = map.target.x, ty = map.target.y;
    const int max_half = std::max({tx, shape.width - 1 - tx, ty,
                                   shape.height - 1 - ty});
    for (int half = 0; half <= max_half; ++half) {
        const int r0 = std::max(0, ty - half), r1 = std::min(shape.height - 1, ty + half);
        const int c0 = std::max(0, tx - half), c1 = std::min(shape.width - 1, tx + half);
        double acc = 0.0;
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                const double v = map.values.at(r, c);
                acc += v * v;
            }
        if (acc >= fraction * total)
            return std::max(r1 - r0, c1 - c0) + 1;  // clamped extent
    }
    return std::max(shape.height, shape.width);
}

LocalityProfile locality_profile(const ScoreField& field, const Image& x,
                                 const ConditionSet& J, double t,
                                 PixelCoord target, int batch,
                                 std::uint64_t seed) {
    LocalityProfile out;
    out.gradient_map = pixel_gradient_map(field, x, J, t, target, batch, seed);
    out.influence = conditional_influence(field, x, J, t, target);
    out.area90 = energy_area(out.gradient_map, 0.9);
    out.total_energy = total_energy(out.gradient_map);
    return out;
}

}  // namespace cpclab
