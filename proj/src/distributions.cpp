#include "cpclab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cpclab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

double log_sum_exp(const Vec& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

Gaussian Gaussian::isotropic(Vec mean, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian sigma must be > 0");
    Gaussian g;
    g.std_dev.assign(mean.size(), sigma);
    g.mean = std::move(mean);
    return g;
}

double Gaussian::log_density(const Vec& x, double t) const {
    if (x.size() != mean.size())
        throw ShapeError("gaussian log_density: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        const double var = std_dev[i] * std_dev[i] + t * t;
        const double d = x[i] - mean[i];
        acc += -0.5 * (d * d / var + std::log(var) + kLog2Pi);
    }
    return acc;
}

Vec Gaussian::sample(Rng& rng) const {
    Vec out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i)
        out[i] = mean[i] + std_dev[i] * rng.normal();
    return out;
}

int GaussianMixture::dim() const {
    return components.empty() ? 0 : components.front().g.dim();
}

void GaussianMixture::validate() const {
    if (components.empty()) throw DomainError("empty mixture");
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw DomainError("mixture weight must be > 0");
        if (c.g.dim() != dim())
            throw ShapeError("mixture components disagree on dimension");
        for (double s : c.g.std_dev)
            if (!(s > 0.0)) throw DomainError("component std must be > 0");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw DomainError("mixture weights must sum to 1 (got " +
                          std::to_string(total) + ")");
}

double GaussianMixture::log_density(const Vec& x, double t) const {
    if (components.empty()) throw DomainError("empty mixture");
    Vec logs(components.size());
    for (std::size_t k = 0; k < components.size(); ++k)
        logs[k] = std::log(components[k].weight) +
                  components[k].g.log_density(x, t);
    return log_sum_exp(logs);
}

Vec GaussianMixture::mean() const {
    if (components.empty()) throw DomainError("empty mixture");
    Vec out(dim(), 0.0);
    for (const auto& c : components)
        for (int i = 0; i < dim(); ++i) out[i] += c.weight * c.g.mean[i];
    return out;
}

Vec GaussianMixture::sample(Rng& rng) const {
    if (components.empty()) throw DomainError("empty mixture");
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& c : components) {
        acc += c.weight;
        if (u < acc) return c.g.sample(rng);
    }
    return components.back().g.sample(rng);
}

GaussianMixture GaussianMixture::marginal(
    const std::vector<int>& positions) const {
    GaussianMixture out;
    out.components.reserve(components.size());
    for (const auto& c : components) {
        Gaussian g;
        g.mean.reserve(positions.size());
        g.std_dev.reserve(positions.size());
        for (int p : positions) {
            if (p < 0 || p >= c.g.dim())
                throw IndexError("marginal position out of range");
            g.mean.push_back(c.g.mean[p]);
            g.std_dev.push_back(c.g.std_dev[p]);
        }
        out.components.push_back({c.weight, std::move(g)});
    }
    return out;
}

GaussianMixture noise_distribution(const GaussianMixture& d, double t) {
    if (t < 0.0) throw DomainError("noise level must be >= 0");
    GaussianMixture out = d;
    for (auto& c : out.components)
        for (auto& s : c.g.std_dev) s = std::sqrt(s * s + t * t);
    return out;
}

void FactorizedModel::validate() const {
    check_partition(subsets);
    if (static_cast<int>(present.size()) != subsets.n_conditions() ||
        static_cast<int>(absent.size()) != subsets.n_conditions())
        throw ConfigError("model marginals do not cover all conditions");
    for (int j = 0; j < subsets.n_conditions(); ++j) {
        present[j].validate();
        absent[j].validate();
        if (present[j].dim() != subsets.blocks[j].size() ||
            absent[j].dim() != subsets.blocks[j].size())
            throw ShapeError("marginal dimension does not match block size");
    }
    if (subsets.background.empty() != !background.has_value())
        throw ConfigError("background marginal presence mismatch");
    if (background) {
        background->validate();
        if (background->dim() != subsets.background.size())
            throw ShapeError("background marginal dimension mismatch");
    }
}

Vec bump_template(int cell) {
    if (cell < 1) throw DomainError("cell must be >= 1");
    Vec out;
    out.reserve(static_cast<std::size_t>(cell) * cell);
    const double c0 = (cell - 1) / 2.0;
    for (int u = 0; u < cell; ++u)
        for (int v = 0; v < cell; ++v)
            out.push_back(
                std::exp(-((u - c0) * (u - c0) + (v - c0) * (v - c0)) / 2.0));
    return out;
}

double bump_peak(int cell) {
    const Vec b = bump_template(cell);
    return *std::max_element(b.begin(), b.end());
}

FactorizedModel default_model(GridShape shape, int cell, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
    FactorizedModel m;
    m.subsets = make_subset_map(shape, cell);
    const Vec bump = bump_template(cell);
    const int block = cell * cell;
    for (int j = 0; j < m.subsets.n_conditions(); ++j) {
        GaussianMixture on, off;
        on.components.push_back({1.0, Gaussian::isotropic(bump, sigma)});
        off.components.push_back(
            {1.0, Gaussian::isotropic(Vec(block, 0.0), sigma)});
        m.present.push_back(std::move(on));
        m.absent.push_back(std::move(off));
    }
    m.validate();
    return m;
}

FactorizedModel default_model() {
    return default_model(make_shape(16, 16), 4, 0.05);
}

namespace {

// Cartesian product of per-block mixtures, scattered into `positions`
// (block-local position lists within the output vector).
GaussianMixture product_mixture(
    const std::vector<const GaussianMixture*>& parts,
    const std::vector<std::vector<int>>& positions, int out_dim) {
    GaussianMixture out;
    std::size_t count = 1;
    for (const auto* p : parts) count *= p->components.size();
    out.components.reserve(count);

    std::vector<std::size_t> pick(parts.size(), 0);
    while (true) {
        WeightedGaussian wg;
        wg.weight = 1.0;
        wg.g.mean.assign(out_dim, 0.0);
        wg.g.std_dev.assign(out_dim, 1.0);
        for (std::size_t b = 0; b < parts.size(); ++b) {
            const auto& comp = parts[b]->components[pick[b]];
            wg.weight *= comp.weight;
            for (std::size_t p = 0; p < positions[b].size(); ++p) {
                wg.g.mean[positions[b][p]] = comp.g.mean[p];
                wg.g.std_dev[positions[b][p]] = comp.g.std_dev[p];
            }
        }
        out.components.push_back(std::move(wg));
        // odometer increment
        std::size_t b = 0;
        while (b < parts.size()) {
            if (++pick[b] < parts[b]->components.size()) break;
            pick[b] = 0;
            ++b;
        }
        if (b == parts.size()) break;
        if (parts.empty()) break;
    }
    return out;
}

}  // namespace

GaussianMixture marginal_mixture(const FactorizedModel& m,
                                 const ConditionSet& J, const IndexSet& S) {
    if (!J.subset_of(m.subsets.all_conditions()))
        throw DomainError("unknown condition id in J");

    std::vector<const GaussianMixture*> parts;
    std::vector<std::vector<int>> positions;
    std::vector<GaussianMixture> restricted;  // keep marginals alive
    restricted.reserve(m.subsets.blocks.size() + 1);

    auto add_block = [&](const IndexSet& block, const GaussianMixture& mix) {
        std::vector<int> in_block;   // positions within the block
        std::vector<int> in_output;  // positions within S
        for (int pos = 0; pos < block.size(); ++pos) {
            const int p = S.position_of(block[pos]);
            if (p >= 0) {
                in_block.push_back(pos);
                in_output.push_back(p);
            }
        }
        if (in_block.empty()) return;
        restricted.push_back(mix.marginal(in_block));
        positions.push_back(std::move(in_output));
    };

    for (int j = 0; j < m.subsets.n_conditions(); ++j)
        add_block(m.subsets.blocks[j],
                  J.contains(j) ? m.present[j] : m.absent[j]);
    if (m.background) add_block(m.subsets.background, *m.background);

    parts.reserve(restricted.size());
    for (const auto& r : restricted) parts.push_back(&r);
    if (parts.empty()) throw DomainError("marginal over an empty subset");
    return product_mixture(parts, positions, S.size());
}

GaussianMixture conditional_mixture(const FactorizedModel& m,
                                    const ConditionSet& J) {
    std::vector<int> all(m.subsets.shape.pixels());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return marginal_mixture(m, J, IndexSet(std::move(all)));
}

const char* to_string(LabelingPolicy policy) {
    switch (policy) {
        case LabelingPolicy::AllLabels: return "all_labels";
        case LabelingPolicy::SingleLabel: return "single_label";
        case LabelingPolicy::RandNumLabels: return "rand_num_labels";
        case LabelingPolicy::DropOneLabel: return "drop_one_label";
    }
    return "unknown";
}

LabelingPolicy labeling_policy_from_string(const std::string& name) {
    if (name == "all_labels") return LabelingPolicy::AllLabels;
    if (name == "single_label") return LabelingPolicy::SingleLabel;
    if (name == "rand_num_labels") return LabelingPolicy::RandNumLabels;
    if (name == "drop_one_label") return LabelingPolicy::DropOneLabel;
    throw ConfigError("unknown labeling policy: " + name);
}

TrainingSet sample_training_set(const FactorizedModel& m, int count_min,
                                int count_max, LabelingPolicy policy,
                                int n_items, std::uint64_t seed) {
    if (count_min < 1 || count_min > count_max ||
        count_max > m.n_conditions())
        throw DomainError("need 1 <= count_min <= count_max <= n_conditions");
    if (n_items <= 0) throw DomainError("training set must be nonempty");

    TrainingSet ts;
    ts.shape = m.subsets.shape;
    ts.policy = policy;
    ts.seed = seed;
    ts.count_min = count_min;
    ts.count_max = count_max;
    ts.items.reserve(n_items);

    Rng rng(derive_seed(seed, 0));
    for (int n = 0; n < n_items; ++n) {
        const int count =
            count_min + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint64_t>(count_max - count_min + 1)));
        ConditionSet truth(rng.sample_distinct(m.n_conditions(), count));

        const GaussianMixture cond = conditional_mixture(m, truth);
        Image img(ts.shape, cond.sample(rng));

        ConditionSet labels;
        switch (policy) {
            case LabelingPolicy::AllLabels:
                labels = truth;
                break;
            case LabelingPolicy::SingleLabel: {
                const int pick = static_cast<int>(rng.uniform_int(truth.size()));
                labels = ConditionSet{truth.ids()[pick]};
                break;
            }
            case LabelingPolicy::RandNumLabels: {
                const int k = 1 + static_cast<int>(rng.uniform_int(truth.size()));
                std::vector<int> chosen = rng.sample_distinct(truth.size(), k);
                std::vector<int> ids;
                ids.reserve(k);
                for (int c : chosen) ids.push_back(truth.ids()[c]);
                labels = ConditionSet(std::move(ids));
                break;
            }
            case LabelingPolicy::DropOneLabel: {
                const int drop = static_cast<int>(rng.uniform_int(truth.size()));
                labels = truth.without(truth.ids()[drop]);
                break;
            }
        }
        ts.items.push_back({std::move(img), std::move(truth), std::move(labels)});
    }
    return ts;
}

Selection select_items(const std::vector<ConditionSet>& item_labels,
                       const ConditionSet& target, MatchRule rule) {
    Selection sel;
    if (rule == MatchRule::Exact) {
        for (std::size_t i = 0; i < item_labels.size(); ++i)
            if (item_labels[i] == target)
                sel.items.push_back(static_cast<int>(i));
        if (!sel.items.empty()) {
            sel.exact_match = true;
            return sel;
        }
    }
    int best = 0;
    std::vector<int> overlaps(item_labels.size());
    for (std::size_t i = 0; i < item_labels.size(); ++i) {
        overlaps[i] = item_labels[i].overlap(target);
        best = std::max(best, overlaps[i]);
    }
    if (best == 0) {
        // No label information applies; fall back to the full set.
        sel.fallback_all = true;
        sel.items.resize(item_labels.size());
        for (std::size_t i = 0; i < item_labels.size(); ++i)
            sel.items[i] = static_cast<int>(i);
        return sel;
    }
    for (std::size_t i = 0; i < item_labels.size(); ++i)
        if (overlaps[i] == best) sel.items.push_back(static_cast<int>(i));
    return sel;
}

Selection select_items(const TrainingSet& ts, const ConditionSet& J,
                       MatchRule rule) {
    std::vector<ConditionSet> labels;
    labels.reserve(ts.items.size());
    for (const auto& item : ts.items) labels.push_back(item.labeled_conditions);
    return select_items(labels, J, rule);
}

SmoothedEmpirical smoothed_empirical(const TrainingSet& ts,
                                     const ConditionSet& J, MatchRule rule,
                                     double t) {
    if (ts.items.empty()) throw DomainError("empty training set");
    if (!(t > 0.0)) throw DomainError("smoothing bandwidth must be > 0");
    SmoothedEmpirical out;
    out.selection = select_items(ts, J, rule);
    const double w = 1.0 / static_cast<double>(out.selection.items.size());
    out.mixture.components.reserve(out.selection.items.size());
    for (int idx : out.selection.items)
        out.mixture.components.push_back(
            {w, Gaussian::isotropic(ts.items[idx].image.values, t)});
    return out;
}

}  // namespace cpclab
