#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "cpclab/distributions.hpp"
#include "cpclab/scores.hpp"

namespace cpclab {

// Invertible linear transform between pixel space and feature space.
struct LinearMap {
    Eigen::MatrixXd forward;  // z = forward * x
    Eigen::MatrixXd inverse;
    bool orthogonal = false;

    int dim() const { return static_cast<int>(forward.rows()); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return forward * x; }
    Vec apply(const Vec& x) const;
    Vec apply_inverse(const Vec& z) const;

    // Checks forward * inverse = I within 1e-10 and |det| > 1e-12.
    void validate() const;

    static LinearMap identity(int n);
    // Numeric inverse; detects orthogonality.
    static LinearMap from_matrix(const Eigen::MatrixXd& a);
    // Exact pair supplied by the caller.
    static LinearMap from_pair(const Eigen::MatrixXd& fwd,
                               const Eigen::MatrixXd& inv);
};

enum class MapSpec { Identity, OrthogonalSeeded, ShearSeeded, DenseSeeded };

const char* to_string(MapSpec spec);
MapSpec map_spec_from_string(const std::string& name);

// Seeded construction of the named map families. Orthogonal maps come from
// a QR factorization; the dense map composes a rotation with a rank-one
// shear strong enough to entangle disjoint block directions.
LinearMap make_map(MapSpec spec, int n, std::uint64_t seed);

struct FullGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// (A # g): mean A mu, covariance A Sigma A^T.
FullGaussian pushforward(const LinearMap& map, const FullGaussian& g);
FullGaussian to_full(const Gaussian& g);

// KL(a || b) between full-covariance Gaussians, closed form via Cholesky.
double gaussian_kl(const FullGaussian& a, const FullGaussian& b);

// Pixel-space model whose pushforward under `map` factorizes blockwise.
struct FeatureFactorModel {
    FactorizedModel base;  // the factorized distribution in feature space
    LinearMap map;         // z = map.forward * x

    void validate() const;
};

// Block-local score evaluated in feature space; exact for the factorized
// base, hence exact for the model's feature-space score.
Vec feature_local_score(const FeatureFactorModel& m, const Vec& z,
                        const ConditionSet& J, double t);

// KL(N_t[A # p] || A # N_t[p]): the cost of swapping noising with the
// transform. Closed form for one component; lattice quadrature for
// mixtures of dimension <= 2.
double commutation_gap(const LinearMap& map, const GaussianMixture& p,
                       double t);

struct CosineMatrix {
    std::vector<int> labels;
    Eigen::MatrixXd values;        // cosine of (d_i, d_j)
    std::vector<char> defined;     // d_i nonzero
    std::vector<Vec> mean_diffs;   // d_i = mu_i - mu_b
    Vec background_mean;

    // Largest |off-diagonal| over defined pairs.
    double max_offdiag() const;
    // "disentangled" (<= 0.1), "entangled" (>= 0.3), else "inconclusive".
    std::string classification() const;
};

// Analytic means from the model: mu_i under condition {i}, mu_b under none,
// optionally viewed through a transform applied to the means first.
CosineMatrix mean_difference_cosine(const FactorizedModel& m,
                                    const LinearMap* transform = nullptr);

// Empirical means from per-condition sample sets plus background samples.
CosineMatrix mean_difference_cosine(const std::vector<std::vector<Vec>>& samples,
                                    const std::vector<Vec>& background,
                                    const std::vector<int>& labels,
                                    const LinearMap* transform = nullptr);

}  // namespace cpclab
