#include "doctest.h"

#include <cmath>

#include "eldiv/divergence.hpp"
#include "eldiv/el_core.hpp"
#include "eldiv/model.hpp"

using namespace eldiv;

namespace {

ELSolution uniform_solution(int n, int r = 1) {
    ELSolution sol;
    sol.t = Vector::Zero(r);
    sol.denoms = Vector::Ones(n);
    sol.weights = Vector::Constant(n, 1.0 / n);
    sol.logel = 0.0;
    return sol;
}

ELSolution solve_mean(const Sample& s, double theta) {
    return solve_t(make_mean_model(), s, Vector::Constant(1, theta));
}

}  // namespace

TEST_CASE("power-divergence generators are normalized convex generators") {
    for (double lambda : {-2.0, -1.0, -0.5, 0.0, 2.0 / 3.0, 1.0, 1.5}) {
        PhiFamily phi = PhiFamily::power(lambda);
        CHECK(std::fabs(phi(1.0)) < 1e-15);
        CHECK(std::fabs(phi.deriv(1.0)) < 1e-15);
        CHECK(phi.curvature_at_one() == doctest::Approx(1.0));
        // Convexity at a few points: midpoint inequality.
        for (double x : {0.3, 0.8, 1.7}) {
            CHECK(phi(0.5 * x + 0.5) <= 0.5 * phi(x) + 0.5 * phi(1.0) + 1e-12);
        }
    }
    CHECK(PhiFamily::matusita_family().curvature_at_one() == doctest::Approx(0.25));
}

TEST_CASE("named generators agree with their power-family indices") {
    for (double x : {0.2, 0.7, 1.0, 1.9}) {
        CHECK(PhiFamily::kullback()(x) == doctest::Approx(PhiFamily::power(0.0)(x)).epsilon(1e-12));
        CHECK(PhiFamily::reversed_kullback()(x) ==
              doctest::Approx(PhiFamily::power(-1.0)(x)).epsilon(1e-12));
        CHECK(PhiFamily::pearson()(x) == doctest::Approx(PhiFamily::power(1.0)(x)).epsilon(1e-12));
        CHECK(PhiFamily::freeman_tukey()(x) ==
              doctest::Approx(PhiFamily::power(-0.5)(x)).epsilon(1e-12));
        CHECK(PhiFamily::cressie_read()(x) ==
              doctest::Approx(PhiFamily::power(2.0 / 3.0)(x)).epsilon(1e-12));
    }
}

TEST_CASE("power-family limits are continuous at lambda = 0 and -1") {
    for (double x : {0.25, 0.8, 1.3, 2.4}) {
        CHECK(std::fabs(PhiFamily::power(1e-7)(x) - PhiFamily::power(0.0)(x)) < 1e-6);
        CHECK(std::fabs(PhiFamily::power(-1.0 + 1e-7)(x) - PhiFamily::power(-1.0)(x)) < 1e-6);
        CHECK(std::fabs(PhiFamily::power(-1e-7)(x) - PhiFamily::power(0.0)(x)) < 1e-6);
    }
}

TEST_CASE("divergence of the uniform weights from themselves is zero") {
    auto sol = uniform_solution(7);
    for (double lambda : {-1.0, 0.0, 1.0}) {
        CHECK(std::fabs(d_phi_uniform(PhiFamily::power(lambda), sol)) < 1e-15);
    }
    CHECK(std::fabs(d_phi_between(PhiFamily::kullback(), sol, sol)) < 1e-15);
}

TEST_CASE("statistic oracles on {-1, 0, 2} at theta = 0") {
    Sample s = Sample::from_values({-1.0, 0.0, 2.0});
    ELSolution at0 = solve_mean(s, 0.0);
    ELSolution hat = uniform_solution(3);
    ELFit fit;
    fit.theta_hat = Vector::Constant(1, s.obs.col(0).mean());
    fit.inner = hat;
    fit.converged = true;

    // Kullback (lambda = 0): 2 * sum log(1 + t g_i) = -2 * logel.
    double t0 = statistic_T(PhiFamily::kullback(), HFunction::identity_fn(), fit, at0);
    double s0 = statistic_S(PhiFamily::kullback(), HFunction::identity_fn(), fit, at0);
    CHECK(std::fabs(t0 - 0.2355660713127668) < 1e-9);
    CHECK(std::fabs(s0 - t0) < 1e-12);  // r == p

    // Pearson (lambda = 1): n * sum (p_i - 1/n)^2 / p_i ... closed form 0.25.
    double t1 = statistic_T(PhiFamily::pearson(), HFunction::identity_fn(), fit, at0);
    double s1 = statistic_S(PhiFamily::pearson(), HFunction::identity_fn(), fit, at0);
    CHECK(std::fabs(t1 - 0.25) < 1e-9);
    CHECK(std::fabs(s1 - 0.25) < 1e-9);

    // Kullback divergence between the two weight vectors.
    double dkl = d_phi_between(PhiFamily::kullback(), hat, at0);
    CHECK(std::fabs(dkl - 0.03926101241892923) < 1e-9);

    // Pearson divergence of the null weights from uniform.
    double dp = d_phi_uniform(PhiFamily::pearson(), at0);
    CHECK(std::fabs(dp - 0.25 / 6.0) < 1e-12);
}

TEST_CASE("direct-divergence statistic closed form matches its definition") {
    Sample s = Sample::from_values({-2.0, -1.0, 0.5, 1.0, 3.0, 4.5});
    ELSolution at0 = solve_mean(s, 0.4);
    ELFit fit;
    fit.theta_hat = Vector::Constant(1, s.obs.col(0).mean());
    fit.inner = uniform_solution(6);
    fit.converged = true;
    for (double lambda : {-1.0, -0.5, 0.0, 2.0 / 3.0, 1.0, 2.0}) {
        PhiFamily phi = PhiFamily::power(lambda);
        double closed = statistic_S(phi, HFunction::identity_fn(), fit, at0);
        // Definition: (2n / phi''(1)) * D_phi(F_hat, F_0).
        double direct = 2.0 * s.n() * d_phi_between(phi, fit.inner, at0);
        CHECK(std::fabs(closed - direct) < 1e-10);
    }
}

TEST_CASE("equivalence class: adding a multiple of (x - 1) changes nothing") {
    // phi and phi + c (x - 1) generate the same divergence.
    Sample s = Sample::from_values({-1.5, 0.3, 0.9, 2.2, 3.7});
    ELSolution at0 = solve_mean(s, 0.8);
    ELFit fit;
    fit.theta_hat = Vector::Constant(1, s.obs.col(0).mean());
    fit.inner = uniform_solution(5);
    fit.converged = true;
    for (double lambda : {-1.0, 0.0, 1.0}) {
        PhiFamily base = PhiFamily::power(lambda);
        for (double c : {-0.7, 0.4, 2.0}) {
            auto shifted_uniform = [&](const ELSolution& el) {
                // (1/n) sum [phi(d_i) + c (d_i - 1)] / d_i; the shift term
                // telescopes to c (1 - sum w_i) = 0.
                double acc = 0.0;
                int n = el.weights.size();
                for (int i = 0; i < n; ++i) {
                    double d = el.denoms(i);
                    acc += (base(d) + c * (d - 1.0)) / d;
                }
                return acc / n;
            };
            CHECK(std::fabs(shifted_uniform(at0) - d_phi_uniform(base, at0)) < 1e-12);
        }
    }
}

TEST_CASE("Renyi transform: identity, limits, and continuity") {
    Sample s = Sample::from_values({-1.0, 0.0, 2.0});
    ELSolution at0 = solve_mean(s, 0.0);
    ELSolution hat = uniform_solution(3);

    // Order-1 value equals the Kullback form 2 sum log(1 + t g_i) when the
    // fitted weights are uniform.
    double one = renyi_statistic(1.0, hat, at0);
    double kl = 0.0;
    for (int i = 0; i < 3; ++i) kl += 2.0 * std::log(at0.denoms(i));
    CHECK(std::fabs(one - kl) < 1e-12);

    // Order-0 value equals the reversed-Kullback form.
    double zero = renyi_statistic(0.0, hat, at0);
    double rkl = 0.0;
    for (int i = 0; i < 3; ++i)
        rkl += 2.0 * (1.0 / at0.denoms(i)) * std::log(1.0 / at0.denoms(i));
    CHECK(std::fabs(zero - rkl) < 1e-10);

    // Continuity across the limit branches.
    CHECK(std::fabs(renyi_statistic(1.0 + 1e-7, hat, at0) - one) < 1e-6);
    CHECK(std::fabs(renyi_statistic(1.0 - 1e-7, hat, at0) - one) < 1e-6);
    CHECK(std::fabs(renyi_statistic(1e-7, hat, at0) - zero) < 1e-6);
    CHECK(std::fabs(renyi_statistic(-1e-7, hat, at0) - zero) < 1e-6);

    // General order: 2n/(a(a-1)) log( (1/n) sum d0^(a-1) ) for uniform fit.
    double a = 2.5;
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) acc += std::pow(at0.denoms(i), a - 1.0);
    double expected = 2.0 * 3 / (a * (a - 1.0)) * std::log(acc / 3.0);
    CHECK(std::fabs(renyi_statistic(a, hat, at0) - expected) < 1e-12);
}

TEST_CASE("transform functions: value and derivative conventions") {
    HFunction id = HFunction::identity_fn();
    CHECK(id(0.37) == doctest::Approx(0.37));
    CHECK(id.deriv_at_zero() == doctest::Approx(1.0));

    HFunction ren = HFunction::renyi(2.5);
    CHECK(std::fabs(ren(0.0)) < 1e-15);
    CHECK(ren.deriv_at_zero() == doctest::Approx(1.0));

    // Finite-difference check of deriv() for each kind.
    for (HFunction h : {HFunction::renyi(2.5), HFunction::sharma_mittal(2.0, 1.7),
                        HFunction::neg_log_complement_fn()}) {
        for (double x : {0.05, 0.2, 0.6}) {
            double fd = (h(x + 1e-6) - h(x - 1e-6)) / 2e-6;
            CHECK(h.deriv(x) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}
