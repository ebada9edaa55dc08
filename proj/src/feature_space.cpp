#include "cpclab/feature_space.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cpclab/kl_lab.hpp"

namespace cpclab {

namespace {

Eigen::VectorXd to_eigen(const Vec& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                             static_cast<Eigen::Index>(v.size()));
}

Vec from_eigen(const Eigen::VectorXd& v) {
    return Vec(v.data(), v.data() + v.size());
}

}  // namespace

Vec LinearMap::apply(const Vec& x) const {
    return from_eigen(forward * to_eigen(x));
}

Vec LinearMap::apply_inverse(const Vec& z) const {
    return from_eigen(inverse * to_eigen(z));
}

void LinearMap::validate() const {
    if (forward.rows() != forward.cols() || inverse.rows() != inverse.cols() ||
        forward.rows() != inverse.rows())
        throw ShapeError("linear map matrices must be square, same size");
    const double err =
        (forward * inverse - Eigen::MatrixXd::Identity(dim(), dim()))
            .cwiseAbs()
            .maxCoeff();
    if (err > 1e-10)
        throw DomainError("map inverse check failed (|AB - I| = " +
                          std::to_string(err) + ")");
    if (std::abs(forward.partialPivLu().determinant()) <= 1e-12)
        throw DomainError("map is numerically singular");
}

LinearMap LinearMap::identity(int n) {
    LinearMap m;
    m.forward = Eigen::MatrixXd::Identity(n, n);
    m.inverse = m.forward;
    m.orthogonal = true;
    return m;
}

LinearMap LinearMap::from_matrix(const Eigen::MatrixXd& a) {
    LinearMap m;
    m.forward = a;
    m.inverse = a.partialPivLu().inverse();
    const int n = static_cast<int>(a.rows());
    m.orthogonal = (a.transpose() * a - Eigen::MatrixXd::Identity(n, n))
                       .cwiseAbs()
                       .maxCoeff() <= 1e-10;
    m.validate();
    return m;
}

LinearMap LinearMap::from_pair(const Eigen::MatrixXd& fwd,
                               const Eigen::MatrixXd& inv) {
    LinearMap m;
    m.forward = fwd;
    m.inverse = inv;
    const int n = static_cast<int>(fwd.rows());
    m.orthogonal = (fwd.transpose() * fwd - Eigen::MatrixXd::Identity(n, n))
                       .cwiseAbs()
                       .maxCoeff() <= 1e-10;
    m.validate();
    return m;
}

const char* to_string(MapSpec spec) {
    switch (spec) {
        case MapSpec::Identity: return "identity";
        case MapSpec::OrthogonalSeeded: return "orthogonal_seeded";
        case MapSpec::ShearSeeded: return "shear_seeded";
        case MapSpec::DenseSeeded: return "dense_seeded";
    }
    return "unknown";
}

MapSpec map_spec_from_string(const std::string& name) {
    if (name == "identity") return MapSpec::Identity;
    if (name == "orthogonal_seeded") return MapSpec::OrthogonalSeeded;
    if (name == "shear_seeded") return MapSpec::ShearSeeded;
    if (name == "dense_seeded") return MapSpec::DenseSeeded;
    throw ConfigError("unknown map spec: " + name);
}

namespace {

Eigen::MatrixXd random_matrix(int n, Rng& rng) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    return a;
}

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
    const Eigen::MatrixXd a = random_matrix(n, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    // fix the column signs so the factorization is canonical
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

}  // namespace

LinearMap make_map(MapSpec spec, int n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xFEA7));
    switch (spec) {
        case MapSpec::Identity:
            return LinearMap::identity(n);
        case MapSpec::OrthogonalSeeded: {
            const Eigen::MatrixXd q = random_orthogonal(n, rng);
            return LinearMap::from_pair(q, q.transpose());
        }
        case MapSpec::ShearSeeded: {
            // unit-determinant upper-triangular shear
            Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
            for (int i = 0; i + 1 < n; ++i) s(i, i + 1) = rng.uniform(0.3, 1.2);
            return LinearMap::from_matrix(s);
        }
        case MapSpec::DenseSeeded: {
            // rotation composed with a rank-one shear; Sherman-Morrison
            // gives the exact inverse pair
            const Eigen::MatrixXd q = random_orthogonal(n, rng);
            Eigen::VectorXd w(n), v(n);
            for (int i = 0; i < n; ++i) w(i) = rng.normal();
            for (int i = 0; i < n; ++i) v(i) = rng.normal();
            w.normalize();
            v.normalize();
            const double beta = 2.0 * std::sqrt(static_cast<double>(n));
            const double denom = 1.0 + beta * v.dot(w);
            const Eigen::MatrixXd shear =
                Eigen::MatrixXd::Identity(n, n) + beta * w * v.transpose();
            const Eigen::MatrixXd shear_inv =
                Eigen::MatrixXd::Identity(n, n) -
                (beta / denom) * w * v.transpose();
            // pixel -> feature applies the rotation after un-shearing
            return LinearMap::from_pair(q * shear_inv, shear * q.transpose());
        }
    }
    throw ConfigError("unhandled map spec");
}

FullGaussian pushforward(const LinearMap& map, const FullGaussian& g) {
    if (map.dim() != g.mean.size())
        throw ShapeError("pushforward dimension mismatch");
    return {map.forward * g.mean,
            map.forward * g.cov * map.forward.transpose()};
}

FullGaussian to_full(const Gaussian& g) {
    FullGaussian out;
    out.mean = to_eigen(g.mean);
    out.cov = Eigen::MatrixXd::Zero(g.dim(), g.dim());
    for (int i = 0; i < g.dim(); ++i)
        out.cov(i, i) = g.std_dev[i] * g.std_dev[i];
    return out;
}

double gaussian_kl(const FullGaussian& a, const FullGaussian& b) {
    const Eigen::Index n = a.mean.size();
    if (b.mean.size() != n || a.cov.rows() != n || b.cov.rows() != n)
        throw ShapeError("gaussian_kl dimension mismatch");
    const Eigen::LLT<Eigen::MatrixXd> llt_b(b.cov);
    const Eigen::LLT<Eigen::MatrixXd> llt_a(a.cov);
    if (llt_b.info() != Eigen::Success || llt_a.info() != Eigen::Success)
        throw DomainError("covariance not positive definite");

    const Eigen::MatrixXd solved = llt_b.solve(a.cov);
    const double trace = solved.trace();
    const Eigen::VectorXd d = b.mean - a.mean;
    const double maha = d.dot(llt_b.solve(d));
    double logdet_b = 0.0, logdet_a = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        logdet_b += 2.0 * std::log(llt_b.matrixL()(i, i));
        logdet_a += 2.0 * std::log(llt_a.matrixL()(i, i));
    }
    return 0.5 * (trace + maha - static_cast<double>(n) + logdet_b - logdet_a);
}

void FeatureFactorModel::validate() const {
    base.validate();
    map.validate();
    if (map.dim() != base.subsets.shape.pixels())
        throw ShapeError("map dimension does not match the feature grid");
}

Vec feature_local_score(const FeatureFactorModel& m, const Vec& z,
                        const ConditionSet& J, double t) {
    if (static_cast<int>(z.size()) != m.base.subsets.shape.pixels())
        throw ShapeError("feature vector dimension mismatch");
    const auto field = local_score_field(m.base,
                                         block_locality_rule(m.base.subsets));
    return field(Image(m.base.subsets.shape, z), J, t);
}

namespace {

// Lattice KL for low-dimensional full-covariance mixtures.
double mixture_kl_quadrature(const std::vector<double>& weights,
                             const std::vector<FullGaussian>& a,
                             const std::vector<FullGaussian>& b) {
    const int dims = static_cast<int>(a.front().mean.size());
    if (dims > 2)
        throw SizeError("quadrature commutation gap supports at most 2 dims");

    LatticeGeometry geom;
    geom.dims = dims;
    for (int d = 0; d < dims; ++d) {
        double lo = 1e300, hi = -1e300, smax = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            for (const auto* g : {&a[k], &b[k]}) {
                lo = std::min(lo, g->mean(d));
                hi = std::max(hi, g->mean(d));
                smax = std::max(smax, std::sqrt(g->cov(d, d)));
            }
        }
        geom.lo[d] = lo - 7.0 * smax;
        geom.hi[d] = hi + 7.0 * smax;
        geom.points[d] = 701;
    }

    auto mixture_density = [&](const std::vector<FullGaussian>& comps,
                               const Eigen::VectorXd& x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < comps.size(); ++k) {
            const Eigen::LLT<Eigen::MatrixXd> llt(comps[k].cov);
            const Eigen::VectorXd d = x - comps[k].mean;
            const double maha = d.dot(llt.solve(d));
            double logdet = 0.0;
            for (int i = 0; i < dims; ++i)
                logdet += 2.0 * std::log(llt.matrixL()(i, i));
            const double log_norm =
                -0.5 * (dims * std::log(2.0 * std::numbers::pi) + logdet);
            acc += weights[k] * std::exp(log_norm - 0.5 * maha);
        }
        return acc;
    };

    LatticeDensity qa, qb;
    if (dims == 1) {
        qa = lattice_from_function(geom, [&](double x) {
            Eigen::VectorXd v(1);
            v << x;
            return mixture_density(a, v);
        });
        qb = lattice_from_function(geom, [&](double x) {
            Eigen::VectorXd v(1);
            v << x;
            return mixture_density(b, v);
        });
    } else {
        qa = lattice_from_function2(geom, [&](double x, double y) {
            Eigen::VectorXd v(2);
            v << x, y;
            return mixture_density(a, v);
        });
        qb = lattice_from_function2(geom, [&](double x, double y) {
            Eigen::VectorXd v(2);
            v << x, y;
            return mixture_density(b, v);
        });
    }
    return kl(qa, qb);
}

}  // namespace

double commutation_gap(const LinearMap& map, const GaussianMixture& p,
                       double t) {
    if (!(t > 0.0)) throw DomainError("commutation gap needs t > 0");
    p.validate();
    if (map.dim() != p.dim()) throw ShapeError("map/mixture dimension mismatch");

    const int n = map.dim();
    std::vector<double> weights;
    std::vector<FullGaussian> noise_then_map;  // N_t[A # p] components
    std::vector<FullGaussian> map_then_noise;  // A # N_t[p] components
    const Eigen::MatrixXd t2i =
        t * t * Eigen::MatrixXd::Identity(n, n);
    for (const auto& c : p.components) {
        weights.push_back(c.weight);
        const FullGaussian pushed = pushforward(map, to_full(c.g));
        noise_then_map.push_back({pushed.mean, pushed.cov + t2i});
        Gaussian widened = c.g;
        for (auto& s : widened.std_dev) s = std::sqrt(s * s + t * t);
        map_then_noise.push_back(pushforward(map, to_full(widened)));
    }

    if (p.components.size() == 1)
        return gaussian_kl(noise_then_map.front(), map_then_noise.front());
    return mixture_kl_quadrature(weights, noise_then_map, map_then_noise);
}

namespace {

CosineMatrix cosine_from_means(const std::vector<Vec>& mus,
                               const Vec& mu_b,
                               const std::vector<int>& labels,
                               const LinearMap* transform) {
    const int n = static_cast<int>(mus.size());
    CosineMatrix out;
    out.labels = labels;
    out.values = Eigen::MatrixXd::Zero(n, n);
    out.defined.assign(n, 1);
    out.background_mean = transform ? transform->apply(mu_b) : mu_b;

    out.mean_diffs.reserve(n);
    for (const auto& mu : mus) {
        Vec m = transform ? transform->apply(mu) : mu;
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] -= out.background_mean[i];
        out.mean_diffs.push_back(std::move(m));
    }

    std::vector<double> norms(n);
    for (int i = 0; i < n; ++i) {
        norms[i] = to_eigen(out.mean_diffs[i]).norm();
        if (!(norms[i] > 0.0)) out.defined[i] = 0;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (!out.defined[i] || !out.defined[j]) {
                out.values(i, j) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            out.values(i, j) = to_eigen(out.mean_diffs[i])
                                   .dot(to_eigen(out.mean_diffs[j])) /
                               (norms[i] * norms[j]);
        }
    }
    return out;
}

}  // namespace

double CosineMatrix::max_offdiag() const {
    double worst = 0.0;
    const int n = static_cast<int>(labels.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (defined[i] && defined[j])
                worst = std::max(worst, std::abs(values(i, j)));
    return worst;
}

std::string CosineMatrix::classification() const {
    const double m = max_offdiag();
    if (m <= 0.1) return "disentangled";
    if (m >= 0.3) return "entangled";
    return "inconclusive";
}

CosineMatrix mean_difference_cosine(const FactorizedModel& m,
                                    const LinearMap* transform) {
    m.validate();
    if (m.n_conditions() < 2)
        throw DomainError("cosine heuristic needs at least 2 conditions");
    std::vector<Vec> mus;
    std::vector<int> labels;
    for (int j = 0; j < m.n_conditions(); ++j) {
        mus.push_back(conditional_mixture(m, ConditionSet{j}).mean());
        labels.push_back(j);
    }
    const Vec mu_b = conditional_mixture(m, ConditionSet{}).mean();
    return cosine_from_means(mus, mu_b, labels, transform);
}

CosineMatrix mean_difference_cosine(const std::vector<std::vector<Vec>>& samples,
                                    const std::vector<Vec>& background,
                                    const std::vector<int>& labels,
                                    const LinearMap* transform) {
    if (samples.size() < 2 || samples.size() != labels.size())
        throw DomainError("need sample sets for at least 2 labeled conditions");
    if (background.empty()) throw DomainError("background samples required");

    auto mean_of = [](const std::vector<Vec>& xs) {
        Vec acc(xs.front().size(), 0.0);
        for (const auto& x : xs)
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
        for (auto& v : acc) v /= static_cast<double>(xs.size());
        return acc;
    };

    std::vector<Vec> mus;
    for (const auto& s : samples) {
        if (s.empty()) throw DomainError("empty per-condition sample set");
        mus.push_back(mean_of(s));
    }
    return cosine_from_means(mus, mean_of(background), labels, transform);
}

}  // namespace cpclab
