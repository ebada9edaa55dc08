#include "cpclab/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpclab {

void LocalityRule::validate(const GridShape& shape) const {
    if (static_cast<int>(neighborhood.size()) != shape.pixels())
        throw ConfigError("locality rule does not cover every pixel");
    for (int i = 0; i < shape.pixels(); ++i)
        if (!neighborhood[i].contains(i))
            throw ConfigError("neighborhood of pixel " + std::to_string(i) +
                              " does not contain the pixel itself");
}

Vec mixture_score(const GaussianMixture& m, const Vec& x, double t) {
    if (m.components.empty()) throw DomainError("empty mixture");
    if (static_cast<int>(x.size()) != m.dim())
        throw ShapeError("mixture_score: dimension mismatch");

    const std::size_t n = x.size();
    Vec out(n, 0.0);

    if (m.components.size() == 1) {
        const auto& g = m.components.front().g;
        for (std::size_t i = 0; i < n; ++i) {
            const double var = g.std_dev[i] * g.std_dev[i] + t * t;
            out[i] = (g.mean[i] - x[i]) / var;
        }
        return out;
    }

    Vec logs(m.components.size());
    for (std::size_t k = 0; k < m.components.size(); ++k)
        logs[k] = std::log(m.components[k].weight) +
                  m.components[k].g.log_density(x, t);
    double lse_max = -std::numeric_limits<double>::infinity();
    for (double v : logs) lse_max = std::max(lse_max, v);
    double lse_sum = 0.0;
    for (double v : logs) lse_sum += std::exp(v - lse_max);

    for (std::size_t k = 0; k < m.components.size(); ++k) {
        const double r = std::exp(logs[k] - lse_max) / lse_sum;
        const auto& g = m.components[k].g;
        for (std::size_t i = 0; i < n; ++i) {
            const double var = g.std_dev[i] * g.std_dev[i] + t * t;
            out[i] += r * (g.mean[i] - x[i]) / var;
        }
    }
    return out;
}

LocalityRule block_locality_rule(const SubsetMap& subsets) {
    check_partition(subsets);
    LocalityRule rule;
    rule.neighborhood.resize(subsets.shape.pixels());
    std::vector<int> pixel_cell(subsets.shape.pixels(), -1);
    for (int j = 0; j < subsets.n_conditions(); ++j)
        for (int i : subsets.blocks[j]) {
            rule.neighborhood[i] = subsets.blocks[j];
            pixel_cell[i] = j;
        }
    for (int i : subsets.background) rule.neighborhood[i] = subsets.background;

    rule.cond_subset = [pixel_cell](int pixel, const ConditionSet& J) {
        const int j = pixel_cell[pixel];
        if (j >= 0 && J.contains(j)) return ConditionSet{j};
        return ConditionSet{};
    };
    rule.validate(subsets.shape);
    return rule;
}

ScoreField local_score_field(const FactorizedModel& m,
                             const LocalityRule& rule) {
    m.validate();
    rule.validate(m.subsets.shape);
    return ScoreField{
        "local",
        [m, rule](const Image& x, const ConditionSet& J, double t) {
            Vec out(x.shape.pixels());
            for (int i = 0; i < x.shape.pixels(); ++i) {
                const IndexSet& N = rule.neighborhood[i];
                const ConditionSet L = rule.cond_subset(i, J);
                if (!L.subset_of(J))
                    throw ConfigError("rule produced L_i not within J");
                const GaussianMixture marg = marginal_mixture(m, L, N);
                const Vec s = mixture_score(marg, restrict_to(x, N), t);
                out[i] = s[N.position_of(i)];
            }
            return out;
        }};
}

ScoreField blockwise_score_field(const FactorizedModel& m) {
    m.validate();
    return ScoreField{
        "blockwise",
        [m](const Image& x, const ConditionSet& J, double t) {
            if (!J.subset_of(m.subsets.all_conditions()))
                throw DomainError("unknown condition id in J");
            Vec out(x.shape.pixels(), 0.0);
            auto apply = [&](const IndexSet& block, const GaussianMixture& mix) {
                const Vec s = mixture_score(mix, restrict_to(x, block), t);
                for (int pos = 0; pos < block.size(); ++pos)
                    out[block[pos]] = s[pos];
            };
            for (int j = 0; j < m.subsets.n_conditions(); ++j)
                apply(m.subsets.blocks[j],
                      J.contains(j) ? m.present[j] : m.absent[j]);
            if (m.background) apply(m.subsets.background, *m.background);
            return out;
        }};
}

ScoreField global_score_field(const FactorizedModel& m) {
    m.validate();
    return ScoreField{
        "global",
        [m](const Image& x, const ConditionSet& J, double t) {
            return mixture_score(conditional_mixture(m, J), x.values, t);
        }};
}

Vec empirical_window_score(const TrainingSet& ts, const std::vector<int>& items,
                           const IndexSet& window, const Vec& x_window,
                           double t) {
    if (items.empty()) throw DomainError("empirical score over no items");
    if (!(t > 0.0)) throw DomainError("empirical score needs t > 0");
    if (static_cast<int>(x_window.size()) != window.size())
        throw ShapeError("window/value length mismatch");

    const std::size_t n = x_window.size();
    const double inv_var = 1.0 / (t * t);

    // Kernel components share the bandwidth, so responsibilities reduce to
    // a softmax over -|x - x_i|^2 / (2 t^2).
    Vec logs(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) {
        const Vec& img = ts.items[items[k]].image.values;
        double d2 = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double d = x_window[p] - img[window[static_cast<int>(p)]];
            d2 += d * d;
        }
        logs[k] = -0.5 * d2 * inv_var;
    }
    double m = -std::numeric_limits<double>::infinity();
    for (double v : logs) m = std::max(m, v);
    double sum = 0.0;
    for (double v : logs) sum += std::exp(v - m);

    Vec out(n, 0.0);
    for (std::size_t k = 0; k < items.size(); ++k) {
        const double r = std::exp(logs[k] - m) / sum;
        const Vec& img = ts.items[items[k]].image.values;
        for (std::size_t p = 0; p < n; ++p)
            out[p] += r * (img[window[static_cast<int>(p)]] - x_window[p]) * inv_var;
    }
    return out;
}

ScoreField empirical_score_field(const TrainingSet& ts, MatchRule rule) {
    if (ts.items.empty()) throw DomainError("empty training set");
    std::vector<int> all(ts.shape.pixels());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    IndexSet full(std::move(all));
    return ScoreField{
        "empirical",
        [ts, rule, full](const Image& x, const ConditionSet& J, double t) {
            const Selection sel = select_items(ts, J, rule);
            return empirical_window_score(ts, sel.items, full, x.values, t);
        }};
}

Selection patch_selection(const TrainingSet& ts, const SubsetMap& subsets,
                          int cell_id, int radius, const ConditionSet& J) {
    const ConditionSet cells = window_cells(subsets, cell_id, radius);
    std::vector<ConditionSet> labels;
    labels.reserve(ts.items.size());
    for (const auto& item : ts.items)
        labels.push_back(item.labeled_conditions.intersect(cells));
    return select_items(labels, J.intersect(cells), MatchRule::Exact);
}

ScoreField patch_score_field(const TrainingSet& ts, const SubsetMap& subsets,
                             int radius) {
    if (ts.items.empty()) throw DomainError("empty training set");
    if (radius < 0) throw DomainError("patch radius must be >= 0");
    if (!(ts.shape == subsets.shape))
        throw ConfigError("training set and subsets disagree on shape");
    return ScoreField{
        "patch",
        [ts, subsets, radius](const Image& x, const ConditionSet& J, double t) {
            Vec out(x.shape.pixels(), 0.0);
            for (int cell = 0; cell < subsets.n_conditions(); ++cell) {
                const IndexSet window = window_pixels(subsets, cell, radius);
                const Selection sel =
                    patch_selection(ts, subsets, cell, radius, J);
                const Vec s = empirical_window_score(
                    ts, sel.items, window, restrict_to(x, window), t);
                for (int pos = 0; pos < subsets.blocks[cell].size(); ++pos) {
                    const int pixel = subsets.blocks[cell][pos];
                    out[pixel] = s[window.position_of(pixel)];
                }
            }
            return out;
        }};
}

}  // namespace cpclab
