#include "cpclab/kl_lab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "cpclab/rng.hpp"

namespace cpclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gauss_kernel(double d, double t) {
    return std::exp(-d * d / (2.0 * t * t)) /
           (std::sqrt(2.0 * std::numbers::pi) * t);
}

}  // namespace

void LatticeGeometry::validate() const {
    if (dims != 1 && dims != 2)
        throw DomainError("lattice supports 1 or 2 dimensions");
    for (int d = 0; d < dims; ++d) {
        if (!(hi[d] > lo[d])) throw DomainError("lattice extent is empty");
        if (points[d] < 2) throw DomainError("lattice needs >= 2 points per dim");
    }
}

double LatticeDensity::integral() const {
    geom.validate();
    if (values.size() != geom.size())
        throw ShapeError("lattice values do not match geometry");
    const int n0 = geom.points[0];
    const int n1 = geom.dims == 2 ? geom.points[1] : 1;
    auto w = [](int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; };
    double acc = 0.0;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            double weight = w(i, n0) * geom.spacing(0);
            if (geom.dims == 2) weight *= w(j, n1) * geom.spacing(1);
            acc += weight * values[static_cast<std::size_t>(i) * n1 + j];
        }
    return acc;
}

double LatticeDensity::normalize() {
    const double mass = integral();
    if (!(mass > 0.0)) throw DomainError("cannot normalize zero-mass lattice");
    for (auto& v : values) v /= mass;
    return std::abs(1.0 - mass);
}

void LatticeDensity::validate(double tol) const {
    for (double v : values)
        if (v < 0.0 || !std::isfinite(v))
            throw DomainError("lattice density must be finite and >= 0");
    if (std::abs(integral() - 1.0) > tol)
        throw DomainError("lattice density must integrate to 1");
}

double& LatticeDensity::at(int i, int j) {
    const int n1 = geom.dims == 2 ? geom.points[1] : 1;
    return values[static_cast<std::size_t>(i) * n1 + j];
}

double LatticeDensity::at(int i, int j) const {
    const int n1 = geom.dims == 2 ? geom.points[1] : 1;
    return values[static_cast<std::size_t>(i) * n1 + j];
}

LatticeDensity lattice_from_function(const LatticeGeometry& geom,
                                     const std::function<double(double)>& f) {
    LatticeDensity out;
    out.geom = geom;
    out.geom.dims = 1;
    out.values.resize(out.geom.size());
    for (int i = 0; i < geom.points[0]; ++i) out.values[i] = f(geom.coord(0, i));
    out.normalize();
    return out;
}

LatticeDensity lattice_from_function2(
    const LatticeGeometry& geom,
    const std::function<double(double, double)>& f) {
    LatticeDensity out;
    out.geom = geom;
    out.geom.dims = 2;
    out.values.resize(out.geom.size());
    for (int i = 0; i < geom.points[0]; ++i)
        for (int j = 0; j < geom.points[1]; ++j)
            out.at(i, j) = f(geom.coord(0, i), geom.coord(1, j));
    out.normalize();
    return out;
}

double kl(const LatticeDensity& q, const LatticeDensity& r) {
    if (!(q.geom == r.geom)) throw DomainError("kl: lattice geometry mismatch");
    const int n0 = q.geom.points[0];
    const int n1 = q.geom.dims == 2 ? q.geom.points[1] : 1;
    auto w = [](int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; };
    double acc = 0.0;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const double qi = q.at(i, j);
            if (qi <= 0.0) continue;
            const double ri = r.at(i, j);
            if (ri <= 0.0) return kInf;
            double weight = w(i, n0) * q.geom.spacing(0);
            if (q.geom.dims == 2) weight *= w(j, n1) * q.geom.spacing(1);
            acc += weight * qi * std::log(qi / ri);
        }
    return acc;
}

LatticeGeometry extended_geometry(const LatticeGeometry& geom, double t) {
    geom.validate();
    LatticeGeometry out = geom;
    for (int d = 0; d < geom.dims; ++d) {
        const double h = geom.spacing(d);
        const int margin = static_cast<int>(std::ceil(6.0 * t / h));
        out.lo[d] = geom.lo[d] - margin * h;
        out.hi[d] = geom.hi[d] + margin * h;
        out.points[d] = geom.points[d] + 2 * margin;
    }
    return out;
}

namespace {

// 1-D quadrature convolution of trapezoid-weighted samples onto a target
// axis. in/out grids share spacing by construction but need not align.
void convolve_axis(const Vec& in, int n_in, double lo_in, double h_in,
                   Vec& out, int n_out, double lo_out, double h_out,
                   int n_other, double t, bool axis_is_outer) {
    for (int o = 0; o < n_other; ++o) {
        for (int i = 0; i < n_out; ++i) {
            const double y = lo_out + h_out * i;
            double acc = 0.0;
            for (int k = 0; k < n_in; ++k) {
                const double wq = (k == 0 || k == n_in - 1) ? 0.5 : 1.0;
                const double x = lo_in + h_in * k;
                const std::size_t idx =
                    axis_is_outer ? static_cast<std::size_t>(k) * n_other + o
                                  : static_cast<std::size_t>(o) * n_in + k;
                acc += wq * in[idx] * gauss_kernel(y - x, t);
            }
            acc *= h_in;
            const std::size_t idx =
                axis_is_outer ? static_cast<std::size_t>(i) * n_other + o
                              : static_cast<std::size_t>(o) * n_out + i;
            out[idx] = acc;
        }
    }
}

LatticeDensity convolve_raw(const LatticeDensity& q, double t,
                            const LatticeGeometry& target) {
    if (!(t > 0.0)) throw DomainError("convolution needs t > 0");
    q.geom.validate();
    target.validate();
    if (target.dims != q.geom.dims)
        throw DomainError("convolution target dimensionality mismatch");

    LatticeDensity out;
    out.geom = target;
    if (q.geom.dims == 1) {
        out.values.assign(target.size(), 0.0);
        convolve_axis(q.values, q.geom.points[0], q.geom.lo[0],
                      q.geom.spacing(0), out.values, target.points[0],
                      target.lo[0], target.spacing(0), 1, t, true);
        return out;
    }
    // dims == 2: separable kernel, convolve axis 0 then axis 1.
    Vec mid(static_cast<std::size_t>(target.points[0]) * q.geom.points[1]);
    convolve_axis(q.values, q.geom.points[0], q.geom.lo[0], q.geom.spacing(0),
                  mid, target.points[0], target.lo[0], target.spacing(0),
                  q.geom.points[1], t, true);
    out.values.assign(target.size(), 0.0);
    convolve_axis(mid, q.geom.points[1], q.geom.lo[1], q.geom.spacing(1),
                  out.values, target.points[1], target.lo[1],
                  target.spacing(1), target.points[0], t, false);
    return out;
}

}  // namespace

LatticeDensity convolve_gaussian(const LatticeDensity& q, double t,
                                 const LatticeGeometry& target) {
    LatticeDensity out = convolve_raw(q, t, target);
    const double correction = out.normalize();
    if (correction >= 1e-6)
        throw ResolutionError(
            "convolution mass error " + std::to_string(correction) +
            "; lattice too coarse for t = " + std::to_string(t));
    return out;
}

LatticeDensity convolve_gaussian(const LatticeDensity& q, double t) {
    return convolve_gaussian(q, t, extended_geometry(q.geom, t));
}

double convolve_correction(const LatticeDensity& q, double t) {
    LatticeDensity out = convolve_raw(q, t, extended_geometry(q.geom, t));
    return std::abs(1.0 - out.integral());
}

double heat_equation_residual(const LatticeDensity& q, double t, double h_t) {
    if (!(t > 0.0) || !(h_t > 0.0) || !(t - h_t > 0.0))
        throw DomainError("heat residual needs t > h_t > 0");
    const LatticeGeometry geom = extended_geometry(q.geom, t + h_t);
    const LatticeDensity f_minus = convolve_gaussian(q, t - h_t, geom);
    const LatticeDensity f_mid = convolve_gaussian(q, t, geom);
    const LatticeDensity f_plus = convolve_gaussian(q, t + h_t, geom);

    const int n0 = geom.points[0];
    const int n1 = geom.dims == 2 ? geom.points[1] : 1;
    const double h0 = geom.spacing(0);
    const double h1 = geom.dims == 2 ? geom.spacing(1) : 1.0;

    double worst = 0.0;
    const int j_lo = geom.dims == 2 ? 1 : 0;
    const int j_hi = geom.dims == 2 ? n1 - 1 : 1;
    for (int i = 1; i < n0 - 1; ++i) {
        for (int j = j_lo; j < j_hi; ++j) {
            const double dt_f =
                (f_plus.at(i, j) - f_minus.at(i, j)) / (2.0 * h_t);
            double lap = (f_mid.at(i - 1, j) - 2.0 * f_mid.at(i, j) +
                          f_mid.at(i + 1, j)) /
                         (h0 * h0);
            if (geom.dims == 2)
                lap += (f_mid.at(i, j - 1) - 2.0 * f_mid.at(i, j) +
                        f_mid.at(i, j + 1)) /
                       (h1 * h1);
            worst = std::max(worst, std::abs(dt_f - t * lap));
        }
    }
    return worst;
}

KlDerivative kl_derivative_check(const LatticeDensity& q,
                                 const LatticeDensity& r, double t,
                                 double h_t) {
    if (!(t > 0.0) || !(h_t > 0.0) || !(t - h_t > 0.0))
        throw DomainError("kl derivative needs t > h_t > 0");
    const LatticeGeometry geom = extended_geometry(q.geom, t + h_t);

    KlDerivative out;
    {
        const auto qp = convolve_gaussian(q, t + h_t, geom);
        const auto rp = convolve_gaussian(r, t + h_t, geom);
        const auto qm = convolve_gaussian(q, t - h_t, geom);
        const auto rm = convolve_gaussian(r, t - h_t, geom);
        out.fd = (kl(qp, rp) - kl(qm, rm)) / (2.0 * h_t);
    }

    const auto q0 = convolve_gaussian(q, t, geom);
    const auto r0 = convolve_gaussian(r, t, geom);
    const int n0 = geom.points[0];
    const int n1 = geom.dims == 2 ? geom.points[1] : 1;
    const double h0 = geom.spacing(0);
    const double h1 = geom.dims == 2 ? geom.spacing(1) : 1.0;

    auto log_ratio = [&](int i, int j) {
        return std::log(q0.at(i, j)) - std::log(r0.at(i, j));
    };

    double acc = 0.0;
    const int j_lo = geom.dims == 2 ? 1 : 0;
    const int j_hi = geom.dims == 2 ? n1 - 1 : 1;
    for (int i = 1; i < n0 - 1; ++i) {
        for (int j = j_lo; j < j_hi; ++j) {
            const double gx =
                (log_ratio(i + 1, j) - log_ratio(i - 1, j)) / (2.0 * h0);
            double g2 = gx * gx;
            if (geom.dims == 2) {
                const double gy =
                    (log_ratio(i, j + 1) - log_ratio(i, j - 1)) / (2.0 * h1);
                g2 += gy * gy;
            }
            double weight = h0;
            if (geom.dims == 2) weight *= h1;
            acc += weight * q0.at(i, j) * g2;
        }
    }
    out.formula = -t * acc;
    return out;
}

LatticeDensity ConditionalLattice::marginal() const {
    validate();
    LatticeDensity out = conditionals.front();
    for (auto& v : out.values) v = 0.0;
    for (std::size_t y = 0; y < weights.size(); ++y)
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += weights[y] * conditionals[y].values[i];
    return out;
}

void ConditionalLattice::validate() const {
    if (weights.empty() || weights.size() != conditionals.size())
        throw DomainError("conditional family needs one weight per state");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw DomainError("state weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw DomainError("state weights must sum to 1");
    for (const auto& c : conditionals)
        if (!(c.geom == conditionals.front().geom))
            throw DomainError("conditionals must share one lattice");
}

std::vector<double> sup_kl_curve(const ConditionalLattice& family,
                                 const std::vector<double>& t_list) {
    family.validate();
    const LatticeDensity marg = family.marginal();
    std::vector<double> out;
    out.reserve(t_list.size());
    for (double t : t_list) {
        const LatticeGeometry geom = extended_geometry(marg.geom, t);
        const LatticeDensity m_t = convolve_gaussian(marg, t, geom);
        double sup = 0.0;
        for (const auto& cond : family.conditionals) {
            const LatticeDensity c_t = convolve_gaussian(cond, t, geom);
            sup = std::max(sup, kl(m_t, c_t));
        }
        out.push_back(sup);
    }
    return out;
}

std::size_t DiscreteJoint::table_size() const {
    std::size_t n = 1;
    for (int s : states) n *= static_cast<std::size_t>(s);
    return n;
}

void DiscreteJoint::validate() const {
    if (states.empty() || states.size() > 8)
        throw SizeError("discrete joint supports 1..8 variables");
    for (int s : states)
        if (s < 1 || s > 4)
            throw SizeError("discrete variables support 1..4 states");
    if (table.size() != table_size())
        throw ShapeError("discrete table size mismatch");
    double total = 0.0;
    for (double v : table) {
        if (v < 0.0 || !std::isfinite(v))
            throw DomainError("discrete table entries must be finite, >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw DomainError("discrete table must sum to 1");
}

std::size_t DiscreteJoint::flat_index(const std::vector<int>& a) const {
    std::size_t idx = 0;
    for (std::size_t v = 0; v < states.size(); ++v)
        idx = idx * states[v] + a[v];
    return idx;
}

namespace {

// Iterates every assignment of the given state vector.
void for_each_assignment(const std::vector<int>& states,
                         const std::function<void(const std::vector<int>&)>& f) {
    std::vector<int> a(states.size(), 0);
    while (true) {
        f(a);
        int v = static_cast<int>(states.size()) - 1;
        while (v >= 0) {
            if (++a[v] < states[v]) break;
            a[v] = 0;
            --v;
        }
        if (v < 0) break;
    }
}

}  // namespace

DiscreteJoint DiscreteJoint::marginal(const std::vector<int>& vars) const {
    DiscreteJoint out;
    out.states.reserve(vars.size());
    for (int v : vars) {
        if (v < 0 || v >= n_vars())
            throw DomainError("marginal over unknown variable");
        out.states.push_back(states[v]);
    }
    out.table.assign(out.table_size(), 0.0);
    std::vector<int> sub(vars.size());
    for_each_assignment(states, [&](const std::vector<int>& a) {
        for (std::size_t k = 0; k < vars.size(); ++k) sub[k] = a[vars[k]];
        out.table[out.flat_index(sub)] += table[flat_index(a)];
    });
    return out;
}

double kl_discrete(const DiscreteJoint& q, const DiscreteJoint& r) {
    if (q.states != r.states)
        throw DomainError("kl_discrete: state spaces differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < q.table.size(); ++i) {
        const double qi = q.table[i];
        if (qi <= 0.0) continue;
        const double ri = r.table[i];
        if (ri <= 0.0) return kInf;
        acc += qi * std::log(qi / ri);
    }
    return acc;
}

const DiscreteJoint& DiscreteFamily::at(const ConditionSet& J) const {
    const auto it = conditionals.find(J);
    if (it == conditionals.end())
        throw DomainError("family has no entry for the requested conditions");
    return it->second;
}

void DiscreteFamily::validate() const {
    if (blocks.empty()) throw DomainError("family needs at least one block");
    std::vector<int> seen(states.size(), 0);
    for (const auto& b : blocks)
        for (int v : b) {
            if (v < 0 || v >= static_cast<int>(states.size()))
                throw DomainError("block variable out of range");
            ++seen[v];
        }
    for (int v : background) ++seen[v];
    for (int c : seen)
        if (c != 1) throw DomainError("blocks+background must partition variables");
    // every condition subset must be present
    const int n = n_conditions();
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        std::vector<int> ids;
        for (int j = 0; j < n; ++j)
            if (mask & (1ULL << j)) ids.push_back(j);
        const auto& joint = at(ConditionSet(ids));
        joint.validate();
        if (joint.states != states)
            throw DomainError("family members disagree on state space");
    }
}

namespace {

// Conditional distributions over `target` for every positive-mass
// assignment of `given`, paired with the assignment's probability.
struct ConditionalSlices {
    std::vector<double> mass;           // P(given assignment)
    std::vector<DiscreteJoint> slices;  // p(target | given assignment)
};

ConditionalSlices conditional_slices(const DiscreteJoint& joint,
                                     const std::vector<int>& target,
                                     const std::vector<int>& given) {
    std::vector<int> given_states, target_states;
    for (int v : given) given_states.push_back(joint.states[v]);
    for (int v : target) target_states.push_back(joint.states[v]);

    DiscreteJoint proto;
    proto.states = target_states;
    std::size_t n_given = 1;
    for (int s : given_states) n_given *= static_cast<std::size_t>(s);

    std::vector<Vec> tables(n_given, Vec(proto.table_size(), 0.0));
    std::vector<double> mass(n_given, 0.0);

    std::vector<int> gsub(given.size()), tsub(target.size());
    DiscreteJoint gproto;
    gproto.states = given_states;
    for_each_assignment(joint.states, [&](const std::vector<int>& a) {
        for (std::size_t k = 0; k < given.size(); ++k) gsub[k] = a[given[k]];
        for (std::size_t k = 0; k < target.size(); ++k) tsub[k] = a[target[k]];
        const std::size_t g = given.empty() ? 0 : gproto.flat_index(gsub);
        const double p = joint.table[joint.flat_index(a)];
        tables[g][proto.flat_index(tsub)] += p;
        mass[g] += p;
    });

    ConditionalSlices out;
    for (std::size_t g = 0; g < n_given; ++g) {
        if (!(mass[g] > 0.0)) continue;
        DiscreteJoint slice = proto;
        slice.table = tables[g];
        for (auto& v : slice.table) v /= mass[g];
        out.mass.push_back(mass[g]);
        out.slices.push_back(std::move(slice));
    }
    return out;
}

std::vector<int> complement_vars(int n_vars, const std::vector<int>& vars) {
    std::vector<int> in(n_vars, 0);
    for (int v : vars) in[v] = 1;
    std::vector<int> out;
    for (int v = 0; v < n_vars; ++v)
        if (!in[v]) out.push_back(v);
    return out;
}

}  // namespace

double FactorizationErrors::sum_for(const ConditionSet& J) const {
    double acc = background;
    for (std::size_t j = 0; j < conditioned.size(); ++j)
        acc += J.contains(static_cast<int>(j)) ? conditioned[j]
                                               : unconditioned[j];
    return acc;
}

FactorizationErrors factorization_errors(const DiscreteFamily& family) {
    family.validate();
    const int n = family.n_conditions();
    const int n_vars = static_cast<int>(family.states.size());

    FactorizationErrors errs;
    errs.conditioned.assign(n, 0.0);
    errs.unconditioned.assign(n, 0.0);

    std::vector<ConditionSet> all_sets;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        std::vector<int> ids;
        for (int j = 0; j < n; ++j)
            if (mask & (1ULL << j)) ids.push_back(j);
        all_sets.emplace_back(ids);
    }

    for (int j = 0; j < n; ++j) {
        const auto& target = family.blocks[j];
        const auto given = complement_vars(n_vars, target);
        const DiscreteJoint ref_on = family.at(ConditionSet{j}).marginal(target);
        const DiscreteJoint ref_off = family.at(ConditionSet{}).marginal(target);
        for (const auto& J : all_sets) {
            const auto slices = conditional_slices(family.at(J), target, given);
            const DiscreteJoint& ref = J.contains(j) ? ref_on : ref_off;
            double& err =
                J.contains(j) ? errs.conditioned[j] : errs.unconditioned[j];
            for (const auto& slice : slices.slices)
                err = std::max(err, kl_discrete(slice, ref));
        }
    }

    if (!family.background.empty()) {
        const auto& target = family.background;
        const auto given = complement_vars(n_vars, target);
        const DiscreteJoint ref_b = family.at(ConditionSet{}).marginal(target);
        for (const auto& J : all_sets) {
            const auto slices = conditional_slices(family.at(J), target, given);
            for (const auto& slice : slices.slices)
                errs.background =
                    std::max(errs.background, kl_discrete(slice, ref_b));
        }
    }
    return errs;
}

BoundCheck composition_bound(const DiscreteFamily& family,
                             const ConditionSet& J) {
    family.validate();
    const int n = family.n_conditions();
    const int n_vars = static_cast<int>(family.states.size());
    const DiscreteJoint& p = family.at(J);

    std::vector<DiscreteJoint> refs;
    refs.reserve(n);
    for (int j = 0; j < n; ++j)
        refs.push_back(J.contains(j)
                           ? family.at(ConditionSet{j}).marginal(family.blocks[j])
                           : family.at(ConditionSet{}).marginal(family.blocks[j]));
    DiscreteJoint ref_b;
    if (!family.background.empty())
        ref_b = family.at(ConditionSet{}).marginal(family.background);

    BoundCheck out;

    // Direct route: sum over the full state space against the blockwise
    // product reference.
    std::vector<int> sub;
    double lhs = 0.0;
    for_each_assignment(family.states, [&](const std::vector<int>& a) {
        const double pa = p.table[p.flat_index(a)];
        if (!(pa > 0.0)) return;
        double ref = 1.0;
        for (int j = 0; j < n; ++j) {
            sub.assign(family.blocks[j].size(), 0);
            for (std::size_t k = 0; k < family.blocks[j].size(); ++k)
                sub[k] = a[family.blocks[j][k]];
            ref *= refs[j].table[refs[j].flat_index(sub)];
        }
        if (!family.background.empty()) {
            sub.assign(family.background.size(), 0);
            for (std::size_t k = 0; k < family.background.size(); ++k)
                sub[k] = a[family.background[k]];
            ref *= ref_b.table[ref_b.flat_index(sub)];
        }
        lhs += ref > 0.0 ? pa * std::log(pa / ref) : kInf;
    });
    out.lhs = lhs;

    // Chain-rule route: background first, then blocks in id order; each term
    // is an expected conditional KL against the same references.
    double acc = 0.0;
    if (!family.background.empty())
        acc += kl_discrete(p.marginal(family.background), ref_b);
    std::vector<int> prefix = family.background;
    for (int j = 0; j < n; ++j) {
        const auto slices = conditional_slices(p, family.blocks[j], prefix);
        for (std::size_t s = 0; s < slices.slices.size(); ++s)
            acc += slices.mass[s] * kl_discrete(slices.slices[s], refs[j]);
        prefix.insert(prefix.end(), family.blocks[j].begin(),
                      family.blocks[j].end());
    }
    out.lhs_decomposed = acc;

    out.rhs = factorization_errors(family).sum_for(J);
    return out;
}

DiscreteFamily product_family(const std::vector<int>& states,
                              const std::vector<std::vector<int>>& blocks,
                              const std::vector<int>& background,
                              std::uint64_t seed) {
    DiscreteFamily fam;
    fam.states = states;
    fam.blocks = blocks;
    fam.background = background;
    const int n = static_cast<int>(blocks.size());

    Rng rng(derive_seed(seed, 17));
    auto random_table = [&](const std::vector<int>& vars) {
        DiscreteJoint t;
        for (int v : vars) t.states.push_back(states[v]);
        t.table.resize(t.table_size());
        double total = 0.0;
        for (auto& x : t.table) {
            x = rng.uniform(0.2, 1.2);  // bounded away from zero
            total += x;
        }
        for (auto& x : t.table) x /= total;
        return t;
    };

    std::vector<DiscreteJoint> on, off;
    for (int j = 0; j < n; ++j) {
        on.push_back(random_table(blocks[j]));
        off.push_back(random_table(blocks[j]));
    }
    DiscreteJoint bg;
    if (!background.empty()) bg = random_table(background);

    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        std::vector<int> ids;
        for (int j = 0; j < n; ++j)
            if (mask & (1ULL << j)) ids.push_back(j);
        const ConditionSet J(ids);

        DiscreteJoint joint;
        joint.states = states;
        joint.table.assign(joint.table_size(), 0.0);
        std::vector<int> sub;
        for_each_assignment(states, [&](const std::vector<int>& a) {
            double p = 1.0;
            for (int j = 0; j < n; ++j) {
                const auto& tab = J.contains(j) ? on[j] : off[j];
                sub.assign(blocks[j].size(), 0);
                for (std::size_t k = 0; k < blocks[j].size(); ++k)
                    sub[k] = a[blocks[j][k]];
                p *= tab.table[tab.flat_index(sub)];
            }
            if (!background.empty()) {
                sub.assign(background.size(), 0);
                for (std::size_t k = 0; k < background.size(); ++k)
                    sub[k] = a[background[k]];
                p *= bg.table[bg.flat_index(sub)];
            }
            joint.table[joint.flat_index(a)] = p;
        });
        fam.conditionals.emplace(J, std::move(joint));
    }
    fam.validate();
    return fam;
}

DiscreteFamily perturbed_family(const DiscreteFamily& base, double lambda,
                                std::uint64_t seed) {
    if (!(lambda >= 0.0) || !(lambda < 1.0))
        throw DomainError("perturbation weight must lie in [0, 1)");
    DiscreteFamily fam = base;
    std::uint64_t stream = 0;
    for (auto& [J, joint] : fam.conditionals) {
        Rng rng(derive_seed(seed, ++stream));
        Vec noise(joint.table.size());
        double total = 0.0;
        for (auto& v : noise) {
            v = rng.uniform(0.05, 1.0);
            total += v;
        }
        for (std::size_t i = 0; i < joint.table.size(); ++i)
            joint.table[i] =
                (1.0 - lambda) * joint.table[i] + lambda * noise[i] / total;
    }
    fam.validate();
    return fam;
}

}  // namespace cpclab
