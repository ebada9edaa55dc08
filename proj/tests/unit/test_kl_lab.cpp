#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cpclab/kl_lab.hpp"
#include "cpclab/rng.hpp"

using namespace cpclab;

namespace {

double gauss(double x, double mu, double sigma) {
    return std::exp(-(x - mu) * (x - mu) / (2 * sigma * sigma)) /
           (std::sqrt(2 * std::numbers::pi) * sigma);
}

LatticeGeometry line(double lo, double hi, int points) {
    LatticeGeometry g;
    g.dims = 1;
    g.lo[0] = lo;
    g.hi[0] = hi;
    g.points[0] = points;
    return g;
}

LatticeDensity gaussian_lattice(double mu, double sigma, double lo, double hi,
                                int points) {
    return lattice_from_function(line(lo, hi, points),
                                 [=](double x) { return gauss(x, mu, sigma); });
}

}  // namespace

TEST_CASE("kl of a density with itself vanishes") {
    const auto q = gaussian_lattice(0.0, 1.0, -8, 8, 1024);
    CHECK(std::abs(kl(q, q)) < 1e-12);
}

TEST_CASE("kl of unit gaussians matches the closed form") {
    // analytic oracle: KL(N(0,1) || N(1,1)) = 1/2
    const auto q = gaussian_lattice(0.0, 1.0, -10, 11, 4096);
    const auto r = gaussian_lattice(1.0, 1.0, -10, 11, 4096);
    CHECK(kl(q, r) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("mass outside the support of r is tagged infinite") {
    LatticeDensity q, r;
    q.geom = r.geom = line(0, 1, 11);
    q.values.assign(11, 1.0);
    q.normalize();
    r.values.assign(11, 1.0);
    r.values[5] = 0.0;
    r.normalize();
    CHECK(std::isinf(kl(q, r)));
    CHECK(kl(q, r) > 0);
}

TEST_CASE("kl is nonnegative on random densities") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        LatticeDensity q, r;
        q.geom = r.geom = line(-1, 1, 301);
        q.values.resize(301);
        r.values.resize(301);
        for (int i = 0; i < 301; ++i) {
            q.values[i] = rng.uniform(0.1, 1.0);
            r.values[i] = rng.uniform(0.1, 1.0);
        }
        q.normalize();
        r.normalize();
        CHECK(kl(q, r) > -1e-10);
    }
}

TEST_CASE("convolving a spike reproduces the kernel") {
    LatticeDensity q;
    q.geom = line(-6, 6, 1201);  // spacing 0.01, node exactly at 0
    q.values.assign(q.geom.size(), 0.0);
    q.values[600] = 1.0;
    q.normalize();
    const auto out = convolve_gaussian(q, 1.0);
    for (int i = 0; i < out.geom.points[0]; i += 37) {
        const double x = out.geom.coord(0, i);
        CHECK(std::abs(out.values[i] - gauss(x, 0.0, 1.0)) < 1e-6);
    }
}

TEST_CASE("gaussian semigroup under convolution") {
    const auto q = gaussian_lattice(0.0, 0.5, -8, 8, 1601);
    const double t = 0.8;
    const auto out = convolve_gaussian(q, t);
    const double s = std::sqrt(0.25 + t * t);

    SUBCASE("matches the analytic widened gaussian pointwise") {
        for (int i = 0; i < out.geom.points[0]; i += 53) {
            const double x = out.geom.coord(0, i);
            CHECK(std::abs(out.values[i] - gauss(x, 0.0, s)) < 1e-6);
        }
    }

    SUBCASE("two-step convolution composes in quadrature, L1") {
        const double a = 0.5, b = 0.6;
        const auto two = convolve_gaussian(convolve_gaussian(q, a), b);
        const auto one =
            convolve_gaussian(q, std::sqrt(a * a + b * b), two.geom);
        double l1 = 0.0;
        for (std::size_t i = 0; i < two.values.size(); ++i)
            l1 += std::abs(two.values[i] - one.values[i]) *
                  two.geom.spacing(0);
        CHECK(l1 < 1e-5);
    }
}

TEST_CASE("coarse lattices are rejected by the mass check") {
    // kernel much narrower than the spacing: quadrature cannot resolve it
    const auto q = gaussian_lattice(0.0, 1.0, -8, 8, 33);  // spacing 0.5
    CHECK_THROWS_AS(convolve_gaussian(q, 0.05), ResolutionError);
}

TEST_CASE("heat identity residual is pure discretization error") {
    const double t = 0.5, h_t = 1e-4;
    const auto q = gaussian_lattice(0.0, 1.0, -8, 8, 4097);
    const double resid = heat_equation_residual(q, t, h_t);

    // independent scale reference: max |d/dt N_t[q]| via the same stencil
    const auto geom = extended_geometry(q.geom, t + h_t);
    const auto fp = convolve_gaussian(q, t + h_t, geom);
    const auto fm = convolve_gaussian(q, t - h_t, geom);
    double max_dt = 0.0;
    for (std::size_t i = 0; i < fp.values.size(); ++i)
        max_dt = std::max(max_dt,
                          std::abs(fp.values[i] - fm.values[i]) / (2 * h_t));
    CHECK(resid <= 1e-4 * max_dt);
}

TEST_CASE("heat identity residual for a mixture density") {
    const auto q = lattice_from_function(line(-9, 9, 4097), [](double x) {
        return 0.4 * gauss(x, -1.2, 0.7) + 0.6 * gauss(x, 1.0, 0.5);
    });
    const double t = 1.0, h_t = 1e-4;
    const double resid = heat_equation_residual(q, t, h_t);
    const auto geom = extended_geometry(q.geom, t + h_t);
    const auto fp = convolve_gaussian(q, t + h_t, geom);
    const auto fm = convolve_gaussian(q, t - h_t, geom);
    double max_dt = 0.0;
    for (std::size_t i = 0; i < fp.values.size(); ++i)
        max_dt = std::max(max_dt,
                          std::abs(fp.values[i] - fm.values[i]) / (2 * h_t));
    CHECK(resid <= 1e-4 * max_dt);
}

TEST_CASE("heat residual shrinks at second order in the spacing") {
    // Lattice halving divides the dominant stencil error by 4; the time-step
    // truncation cancels against it here, keeping the measured ratio above 4.
    const double h_t = 1e-3;
    struct Probe {
        double mu, sigma, lo, hi, t;
    };
    for (const Probe& p : {Probe{0.0, 1.0, -8, 8, 0.5},
                           Probe{0.3, 0.8, -8, 8, 0.8},
                           Probe{0.0, 1.5, -10, 10, 0.6}}) {
        const auto coarse = gaussian_lattice(p.mu, p.sigma, p.lo, p.hi, 801);
        const auto fine = gaussian_lattice(p.mu, p.sigma, p.lo, p.hi, 1601);
        const double rc = heat_equation_residual(coarse, p.t, h_t);
        const double rf = heat_equation_residual(fine, p.t, h_t);
        CHECK(rc / rf >= 4.0);
    }
}

TEST_CASE("heat residual bound holds on a 2-D lattice") {
    LatticeGeometry g;
    g.dims = 2;
    g.lo = {-6, -6};
    g.hi = {6, 6};
    g.points = {361, 361};
    const auto q = lattice_from_function2(g, [](double x, double y) {
        return gauss(x, 0.0, 0.9) * gauss(y, 0.0, 1.1);
    });
    const double t = 0.8, h_t = 1e-4;
    const double resid = heat_equation_residual(q, t, h_t);

    const auto geom = extended_geometry(q.geom, t + h_t);
    const auto fp = convolve_gaussian(q, t + h_t, geom);
    const auto fm = convolve_gaussian(q, t - h_t, geom);
    double max_dt = 0.0;
    for (std::size_t i = 0; i < fp.values.size(); ++i)
        max_dt = std::max(max_dt,
                          std::abs(fp.values[i] - fm.values[i]) / (2 * h_t));
    CHECK(resid <= 1e-3 * max_dt);
}

TEST_CASE("kl derivative: analytic gaussian oracle") {
    // closed form: KL_t = 1/(2 (1+t^2)), d/dt = -t/(1+t^2)^2
    const auto q = gaussian_lattice(0.0, 1.0, -10, 11, 4096);
    const auto r = gaussian_lattice(1.0, 1.0, -10, 11, 4096);
    const double t = 0.5;
    const auto d = kl_derivative_check(q, r, t, 1e-3);
    const double oracle = -t / ((1 + t * t) * (1 + t * t));
    CHECK(d.fd == doctest::Approx(oracle).epsilon(1e-3));
    CHECK(d.formula == doctest::Approx(oracle).epsilon(1e-3));
    CHECK(std::abs(d.fd - d.formula) <= 1e-3 * std::abs(d.formula));
    CHECK(d.formula < 0.0);
}

TEST_CASE("kl derivative vanishes when the densities agree") {
    const auto q = gaussian_lattice(0.3, 0.8, -9, 9, 2048);
    const auto d = kl_derivative_check(q, q, 0.7, 1e-3);
    CHECK(std::abs(d.fd) < 1e-9);
    CHECK(std::abs(d.formula) < 1e-9);
}

TEST_CASE("kl derivative is negative for distinct mixtures") {
    const auto q = lattice_from_function(line(-10, 10, 3001), [](double x) {
        return 0.5 * gauss(x, -1.0, 0.6) + 0.5 * gauss(x, 1.4, 0.8);
    });
    const auto r = gaussian_lattice(0.2, 1.1, -10, 10, 3001);
    for (double t : {0.3, 1.0, 2.0}) {
        const auto d = kl_derivative_check(q, r, t, 1e-3 * t);
        CHECK(d.formula < 0.0);
        CHECK(std::abs(d.fd - d.formula) <= 1e-3 * std::abs(d.formula));
    }
}

TEST_CASE("sup-kl curve: independent case is identically zero") {
    ConditionalLattice fam;
    fam.weights = {0.5, 0.5};
    fam.conditionals.push_back(gaussian_lattice(0.0, 1.0, -9, 9, 1025));
    fam.conditionals.push_back(gaussian_lattice(0.0, 1.0, -9, 9, 1025));
    const auto curve = sup_kl_curve(fam, {0.5, 1.0, 2.0});
    for (double v : curve) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("sup-kl curve decreases for translated conditionals") {
    ConditionalLattice fam;
    fam.weights = {0.4, 0.6};
    fam.conditionals.push_back(gaussian_lattice(-0.8, 0.6, -10, 10, 2049));
    fam.conditionals.push_back(gaussian_lattice(0.8, 0.6, -10, 10, 2049));
    const auto curve = sup_kl_curve(fam, {0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0});
    for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        CHECK(curve[i] - curve[i + 1] > 1e-9);
    // total smoothing limit
    CHECK(curve.back() < curve.front() / 10.0);
}

TEST_CASE("discrete joint caps and marginals") {
    DiscreteJoint j;
    j.states = {2, 3};
    j.table = {0.1, 0.2, 0.1, 0.15, 0.25, 0.2};
    j.validate();
    const auto m0 = j.marginal({0});
    CHECK(m0.table[0] == doctest::Approx(0.4));
    CHECK(m0.table[1] == doctest::Approx(0.6));
    const auto m10 = j.marginal({1, 0});
    CHECK(m10.states == std::vector<int>{3, 2});
    CHECK(m10.table[0 * 2 + 1] == doctest::Approx(0.15));

    DiscreteJoint too_many;
    too_many.states.assign(9, 2);
    too_many.table.assign(512, 1.0 / 512);
    CHECK_THROWS_AS(too_many.validate(), SizeError);

    DiscreteJoint too_wide;
    too_wide.states = {5};
    too_wide.table.assign(5, 0.2);
    CHECK_THROWS_AS(too_wide.validate(), SizeError);
}

TEST_CASE("exact product family has zero factorization errors") {
    const auto fam =
        product_family({2, 3, 2, 2}, {{0, 1}, {2}}, {3}, 404);
    const auto errs = factorization_errors(fam);
    for (double e : errs.conditioned) CHECK(std::abs(e) < 1e-12);
    for (double e : errs.unconditioned) CHECK(std::abs(e) < 1e-12);
    CHECK(std::abs(errs.background) < 1e-12);

    const auto bound = composition_bound(fam, ConditionSet{0});
    CHECK(std::abs(bound.lhs) < 1e-12);
    CHECK(std::abs(bound.rhs) < 1e-12);
}

TEST_CASE("single-block partition leaves the background error at zero") {
    const auto fam = product_family({2, 2}, {{0, 1}}, {}, 11);
    const auto errs = factorization_errors(fam);
    CHECK(errs.background == 0.0);
}

TEST_CASE("perturbed family: errors positive, verified by brute force") {
    const auto base = product_family({2, 2, 2}, {{0}, {1}}, {2}, 7);
    const auto fam = perturbed_family(base, 0.1, 99);
    const auto errs = factorization_errors(fam);
    for (double e : errs.conditioned) CHECK(e > 0.0);
    for (double e : errs.unconditioned) CHECK(e > 0.0);
    CHECK(errs.background > 0.0);

    // independent brute-force recomputation of the conditioned error for
    // block 0 (variable 0, complement variables 1, 2)
    double brute = 0.0;
    const DiscreteJoint ref = fam.at(ConditionSet{0}).marginal({0});
    for (std::uint64_t mask = 0; mask < 4; ++mask) {
        std::vector<int> ids;
        for (int j = 0; j < 2; ++j)
            if (mask & (1ULL << j)) ids.push_back(j);
        const ConditionSet J(ids);
        if (!J.contains(0)) continue;
        const auto& joint = fam.at(J);
        for (int v1 = 0; v1 < 2; ++v1) {
            for (int v2 = 0; v2 < 2; ++v2) {
                double mass = 0.0, p0 = 0.0;
                for (int v0 = 0; v0 < 2; ++v0) {
                    const double p = joint.table[joint.flat_index({v0, v1, v2})];
                    mass += p;
                    if (v0 == 0) p0 = p;
                }
                if (!(mass > 0)) continue;
                const double c0 = p0 / mass, c1 = 1.0 - c0;
                double div = 0.0;
                if (c0 > 0) div += c0 * std::log(c0 / ref.table[0]);
                if (c1 > 0) div += c1 * std::log(c1 / ref.table[1]);
                brute = std::max(brute, div);
            }
        }
    }
    CHECK(errs.conditioned[0] == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("composition bound holds on seeded perturbed families") {
    Rng rng(2025);
    for (int trial = 0; trial < 12; ++trial) {
        // random small shapes: up to 6 variables, 2-3 states
        const int n_blocks = 2 + static_cast<int>(rng.uniform_int(2));
        std::vector<std::vector<int>> blocks;
        std::vector<int> states;
        int v = 0;
        for (int b = 0; b < n_blocks; ++b) {
            const int width = 1 + static_cast<int>(rng.uniform_int(2));
            std::vector<int> block;
            for (int k = 0; k < width; ++k) {
                states.push_back(2 + static_cast<int>(rng.uniform_int(2)));
                block.push_back(v++);
            }
            blocks.push_back(block);
        }
        std::vector<int> background;
        states.push_back(2);
        background.push_back(v++);

        const auto base = product_family(states, blocks, background,
                                         derive_seed(50, trial));
        const double lambda = rng.uniform(0.02, 0.3);
        const auto fam = perturbed_family(base, lambda, derive_seed(60, trial));

        // random condition subset
        std::vector<int> ids;
        for (int j = 0; j < n_blocks; ++j)
            if (rng.uniform() < 0.5) ids.push_back(j);
        const ConditionSet J(ids);

        const auto bound = composition_bound(fam, J);
        CHECK(bound.lhs <= bound.rhs + 1e-10);
        CHECK(std::abs(bound.lhs - bound.lhs_decomposed) < 1e-10);
        CHECK(bound.lhs >= -1e-12);
    }
}
