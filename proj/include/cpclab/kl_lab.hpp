#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "cpclab/grid.hpp"

namespace cpclab {

// Uniform lattice over a truncated box, 1 or 2 dimensions.
struct LatticeGeometry {
    int dims = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};
    std::array<int, 2> points{2, 1};  // per dim; dim 1 unused when dims == 1

    double spacing(int d) const { return (hi[d] - lo[d]) / (points[d] - 1); }
    double coord(int d, int i) const { return lo[d] + spacing(d) * i; }
    std::size_t size() const {
        return static_cast<std::size_t>(points[0]) *
               (dims == 2 ? points[1] : 1);
    }
    bool operator==(const LatticeGeometry&) const = default;
    void validate() const;
};

// Density samples on a lattice; trapezoidal integral normalized to 1.
struct LatticeDensity {
    LatticeGeometry geom;
    Vec values;  // row-major, dim 0 outer

    double integral() const;
    // Scales to unit mass; returns |1 - previous integral|.
    double normalize();
    void validate(double tol = 1e-8) const;

    double& at(int i, int j = 0);
    double at(int i, int j = 0) const;
};

// Samples f over the geometry and normalizes.
LatticeDensity lattice_from_function(const LatticeGeometry& geom,
                                     const std::function<double(double)>& f);
LatticeDensity lattice_from_function2(
    const LatticeGeometry& geom,
    const std::function<double(double, double)>& f);

// Trapezoid quadrature of q log(q/r). Returns +infinity when q has mass
// where r vanishes. Throws on geometry mismatch.
double kl(const LatticeDensity& q, const LatticeDensity& r);

// Geometry extended by 6t on every side of q's box, spacing preserved.
LatticeGeometry extended_geometry(const LatticeGeometry& geom, double t);

// Quadrature convolution with the isotropic Gaussian of std t, evaluated on
// `target` (or the auto-extended geometry), renormalized. Throws
// ResolutionError when the renormalization correction reaches 1e-6.
LatticeDensity convolve_gaussian(const LatticeDensity& q, double t);
LatticeDensity convolve_gaussian(const LatticeDensity& q, double t,
                                 const LatticeGeometry& target);
// Renormalization correction of the last formulation, for callers that need
// to assert resolution margins.
double convolve_correction(const LatticeDensity& q, double t);

// Max-norm over the interior lattice of d/dt N_t[q] (central difference,
// step h_t) minus t * Laplacian(N_t[q]) (3-point stencil per axis).
double heat_equation_residual(const LatticeDensity& q, double t, double h_t);

struct KlDerivative {
    double fd = 0.0;       // central difference of t -> KL(N_t[q] || N_t[r])
    double formula = 0.0;  // -t E_{N_t[q]}[ (grad log N_t[q]/N_t[r])^2 ]
};

KlDerivative kl_derivative_check(const LatticeDensity& q,
                                 const LatticeDensity& r, double t,
                                 double h_t);

// Finite mixture-of-conditionals view of a joint (x continuous on a shared
// lattice, y finite).
struct ConditionalLattice {
    std::vector<double> weights;             // P(y), sums to 1
    std::vector<LatticeDensity> conditionals;  // p(x | y), shared geometry

    LatticeDensity marginal() const;
    void validate() const;
};

// For each t: sup over y of KL(N_t[marginal] || N_t[p(.|y)]).
std::vector<double> sup_kl_curve(const ConditionalLattice& family,
                                 const std::vector<double>& t_list);

// Discrete joint over a handful of small-arity variables; exact sums.
struct DiscreteJoint {
    std::vector<int> states;  // arity per variable, each <= 4, at most 8 vars
    Vec table;                // row-major, sums to 1 within 1e-12

    int n_vars() const { return static_cast<int>(states.size()); }
    std::size_t table_size() const;
    void validate() const;

    std::size_t flat_index(const std::vector<int>& assignment) const;
    // Marginal over a subset of variables (in the given order).
    DiscreteJoint marginal(const std::vector<int>& vars) const;
};

double kl_discrete(const DiscreteJoint& q, const DiscreteJoint& r);

// Conditional model family over discrete variables: a distribution per
// condition set, with variables partitioned into per-condition blocks plus
// a background.
struct DiscreteFamily {
    std::vector<int> states;
    std::vector<std::vector<int>> blocks;  // variable indices per condition
    std::vector<int> background;
    std::map<ConditionSet, DiscreteJoint> conditionals;

    int n_conditions() const { return static_cast<int>(blocks.size()); }
    const DiscreteJoint& at(const ConditionSet& J) const;
    void validate() const;
};

// Sup-KL deviations of the family from exact blockwise factorization.
struct FactorizationErrors {
    std::vector<double> conditioned;    // per condition j, J containing j
    std::vector<double> unconditioned;  // per condition j, J omitting j
    double background = 0.0;

    double sum_for(const ConditionSet& J) const;
};

FactorizationErrors factorization_errors(const DiscreteFamily& family);

struct BoundCheck {
    double lhs = 0.0;             // KL(p(.|c_J) || blockwise composition)
    double lhs_decomposed = 0.0;  // same value via the chain-rule route
    double rhs = 0.0;             // factorization error sum
};

BoundCheck composition_bound(const DiscreteFamily& family,
                             const ConditionSet& J);

// Family built as an exact product over blocks (factorization errors all
// zero), with seeded random block tables.
DiscreteFamily product_family(const std::vector<int>& states,
                              const std::vector<std::vector<int>>& blocks,
                              const std::vector<int>& background,
                              std::uint64_t seed);

// Product family mixed per condition set with weight lambda of a seeded
// random correlated joint.
DiscreteFamily perturbed_family(const DiscreteFamily& base, double lambda,
                                std::uint64_t seed);

}  // namespace cpclab
