#include "cpclab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cpclab {

void Schedule::validate() const {
    if (!(t_max > t_min) || !(t_min > 0.0))
        throw ConfigError("schedule requires t_max > t_min > 0");
    if (steps < 1) throw ConfigError("schedule requires steps >= 1");
}

std::vector<double> Schedule::times() const {
    validate();
    std::vector<double> out(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        const double frac = static_cast<double>(i) / steps;
        out[i] = spacing == Spacing::Geometric
                     ? t_max * std::pow(t_min / t_max, frac)
                     : t_max + (t_min - t_max) * frac;
    }
    out.front() = t_max;
    out.back() = t_min;
    return out;
}

std::pair<int, std::vector<PixelCoord>> count_objects(const Image& x,
                                                      const SubsetMap& subsets,
                                                      double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw DomainError("count threshold must lie in (0, 1)");
    const double cutoff = threshold * bump_peak(subsets.cell);
    int count = 0;
    std::vector<PixelCoord> peaks;
    for (const auto& block : subsets.blocks) {
        double best = -std::numeric_limits<double>::infinity();
        int best_pixel = -1;
        for (int i : block) {
            if (x.values[i] > best) {
                best = x.values[i];
                best_pixel = i;
            }
        }
        if (best >= cutoff) {
            ++count;
            peaks.push_back(
                {x.shape.col(best_pixel), x.shape.row(best_pixel)});
        }
    }
    return {count, peaks};
}

namespace {

Image initial_noise(const GridShape& shape, double t_max, Rng& rng) {
    Image x(shape);
    for (auto& v : x.values) v = t_max * rng.normal();
    return x;
}

void check_trajectory(const Vec& x, int step) {
    for (double v : x)
        if (!std::isfinite(v))
            throw DivergenceError(
                "trajectory diverged at step " + std::to_string(step), step);
}

double l2_norm(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

void finalize_report(GenerationReport& rep, const SubsetMap& subsets,
                     double threshold) {
    auto [count, peaks] = count_objects(rep.image, subsets, threshold);
    rep.object_count = count;
    rep.peak_positions = std::move(peaks);
}

}  // namespace

GenerationReport sample(const ScoreField& field, const ConditionSet& J,
                        const Schedule& sch, SamplerKind kind,
                        std::uint64_t seed, const SubsetMap& subsets,
                        double threshold) {
    const std::vector<double> t = sch.times();
    Rng rng(seed);

    GenerationReport rep;
    rep.image = initial_noise(subsets.shape, sch.t_max, rng);
    rep.step_norms.reserve(sch.steps);

    for (int i = 0; i < sch.steps; ++i) {
        const double ti = t[i], dt = t[i] - t[i + 1];
        const Vec s = field(rep.image, J, ti);
        if (kind == SamplerKind::ProbabilityFlowOde) {
            for (int p = 0; p < subsets.shape.pixels(); ++p)
                rep.image.values[p] += dt * ti * s[p];
        } else {
            // Reverse-time Euler-Maruyama for the variance-exploding process:
            // doubled drift plus noise of variance 2 t_i dt.
            const double noise = std::sqrt(2.0 * ti * dt);
            for (int p = 0; p < subsets.shape.pixels(); ++p)
                rep.image.values[p] +=
                    2.0 * dt * ti * s[p] + noise * rng.normal();
        }
        check_trajectory(rep.image.values, i);
        rep.step_norms.push_back(l2_norm(rep.image.values));
    }
    finalize_report(rep, subsets, threshold);
    return rep;
}

GenerationReport patch_sample(const TrainingSet& ts, const SubsetMap& subsets,
                              int radius, const ConditionSet& J,
                              const Schedule& sch, std::uint64_t seed,
                              double threshold) {
    if (radius < 0) throw DomainError("patch radius must be >= 0");
    if (!(ts.shape == subsets.shape))
        throw ConfigError("training set and subsets disagree on shape");
    const std::vector<double> t = sch.times();
    Rng rng(seed);

    GenerationReport rep;
    rep.image = initial_noise(subsets.shape, sch.t_max, rng);
    rep.step_norms.reserve(sch.steps);

    for (int i = 0; i < sch.steps; ++i) {
        const double ti = t[i], dt = t[i] - t[i + 1];
        const Image before = rep.image;  // all cells read the pre-step state
        for (int cell = 0; cell < subsets.n_conditions(); ++cell) {
            const IndexSet window = window_pixels(subsets, cell, radius);
            const Selection sel = patch_selection(ts, subsets, cell, radius, J);
            const Vec s = empirical_window_score(
                ts, sel.items, window, restrict_to(before, window), ti);
            // One denoising step on the patch, copied back only at the
            // center cell.
            for (int pos = 0; pos < subsets.blocks[cell].size(); ++pos) {
                const int pixel = subsets.blocks[cell][pos];
                rep.image.values[pixel] =
                    before.values[pixel] + dt * ti * s[window.position_of(pixel)];
            }
        }
        check_trajectory(rep.image.values, i);
        rep.step_norms.push_back(l2_norm(rep.image.values));
    }
    finalize_report(rep, subsets, threshold);
    return rep;
}

KmaxResult kmax_evaluate(
    const std::function<GenerationReport(int k, std::uint64_t seed)>& generator,
    int n_train, const std::vector<int>& k_list, int n_samples,
    int extra_allowance, std::uint64_t seed) {
    if (k_list.empty()) throw DomainError("empty K list");
    if (!std::is_sorted(k_list.begin(), k_list.end()))
        throw DomainError("K list must be sorted ascending");
    if (n_samples < 8) throw DomainError("need at least 8 samples per K");
    if (extra_allowance < 0) throw DomainError("allowance must be >= 0");

    KmaxResult result;
    bool chain_alive = true;
    for (int k : k_list) {
        KCase kc;
        kc.k = k;
        kc.counts.reserve(n_samples);
        int band_hits = 0, full_hits = 0;
        for (int s = 0; s < n_samples; ++s) {
            const GenerationReport rep = generator(
                k, derive_seed(seed, static_cast<std::uint64_t>(k) * 1000 + s));
            kc.counts.push_back(rep.object_count);
            const int hi = k + extra_allowance;
            if (rep.object_count >= k - 2 && rep.object_count <= hi)
                ++band_hits;
            if (rep.object_count >= k && rep.object_count <= hi) ++full_hits;
        }
        kc.band_fraction = static_cast<double>(band_hits) / n_samples;
        kc.full_fraction = static_cast<double>(full_hits) / n_samples;
        kc.success = k <= n_train
                         ? full_hits == n_samples
                         : kc.band_fraction > 0.25 && kc.full_fraction > 0.25;
        if (k >= 1) {
            if (kc.success && chain_alive)
                result.k_max = k;
            else
                chain_alive = false;
        }
        result.cases.push_back(std::move(kc));
    }
    return result;
}

}  // namespace cpclab
