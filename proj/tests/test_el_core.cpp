#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "eldiv/datasets.hpp"
#include "eldiv/el_core.hpp"
#include "eldiv/rng.hpp"

using namespace eldiv;

namespace {

Vector theta_of(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST_CASE("inner solution on {-1, 0, 2} at theta = 0 (closed form)") {
    // With g_i = x_i, the stationarity condition sum g_i/(1 + t g_i) = 0 has
    // the exact root t = 1/4; weights follow as 1/(n(1 + t x_i)).
    Sample s = Sample::from_values({-1.0, 0.0, 2.0});
    auto mean = make_mean_model();
    ELSolution sol = solve_t(mean, s, theta_of(0.0));
    CHECK(std::fabs(sol.t(0) - 0.25) < 1e-9);
    CHECK(std::fabs(sol.weights(0) - 4.0 / 9.0) < 1e-9);
    CHECK(std::fabs(sol.weights(1) - 1.0 / 3.0) < 1e-9);
    CHECK(std::fabs(sol.weights(2) - 2.0 / 9.0) < 1e-9);
    // -sum log(1 + t x_i) = -log(3/4) - log(3/2)
    CHECK(std::fabs(sol.logel - (-std::log(0.75) - std::log(1.5))) < 1e-12);
    CHECK(std::fabs(sol.logel - (-0.1177830356563834)) < 1e-9);
}

TEST_CASE("convex-hull violation is reported, not mis-solved") {
    Sample s = Sample::from_values({1.0, 2.0, 3.0});
    auto mean = make_mean_model();
    SolveReport rep = try_solve_t(mean, s, theta_of(1.0));  // theta at the hull edge
    CHECK(rep.status == SolveStatus::infeasible);
    CHECK_THROWS_AS(solve_t(mean, s, theta_of(0.5)), InfeasibleTheta);
    CHECK_THROWS_AS(solve_t(mean, s, theta_of(3.5)), InfeasibleTheta);
    // Strictly inside is fine.
    CHECK(try_solve_t(mean, s, theta_of(1.5)).status == SolveStatus::ok);
}

TEST_CASE("weight invariants hold on random feasible problems") {
    auto mean = make_mean_model();
    RepRng rng(20240915u, 1);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 10 + static_cast<int>(rng.uniform() * 40);
        std::vector<double> vals(n);
        for (auto& v : vals) v = rng.normal(0.0, 1.0 + rng.uniform());
        Sample s = Sample::from_values(vals);
        double lo = *std::min_element(vals.begin(), vals.end());
        double hi = *std::max_element(vals.begin(), vals.end());
        double th = lo + (0.05 + 0.9 * rng.uniform()) * (hi - lo);
        SolveReport rep = try_solve_t(mean, s, theta_of(th));
        if (rep.status != SolveStatus::ok) continue;
        const auto& sol = rep.solution;
        CHECK(std::fabs(sol.weights.sum() - 1.0) < 1e-10);
        double moment = 0.0;
        for (int i = 0; i < n; ++i) moment += sol.weights(i) * (vals[i] - th);
        CHECK(std::fabs(moment) < 1e-8);
        CHECK(sol.weights.minCoeff() > 0.0);
        CHECK(sol.grad_norm < 1e-8);
    }
}

TEST_CASE("unrestricted fit of the mean model is the sample mean") {
    Sample s = Sample::from_values(newcomb_day(2));
    auto mean = make_mean_model();
    ELFit fit = fit_unrestricted(mean, s);
    CHECK(fit.converged);
    CHECK(std::fabs(fit.theta_hat(0) - 28.55) < 1e-10);
    CHECK(std::fabs(fit.inner.logel) < 1e-12);  // uniform weights at the MLE
}

TEST_CASE("over-identified fit drives the profile gradient to zero") {
    auto mv = make_mean_variance_model();
    RepRng rng(77u, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> vals(30);
        double th0 = -1.0 + 2.0 * rng.uniform();
        double sd = std::sqrt(th0 * th0 + 1.0);
        for (auto& v : vals) v = rng.normal(th0, sd);
        Sample s = Sample::from_values(vals);
        ELFit fit = fit_unrestricted(mv, s);
        CHECK(fit.converged);
        // Stationarity: the envelope gradient vanishes at theta-hat.
        ELSolution sol = solve_t(mv, s, fit.theta_hat);
        double grad = 0.0;
        for (int i = 0; i < s.n(); ++i) {
            Matrix Gi = mv.G(s.row(i), fit.theta_hat);
            grad -= (Gi.transpose() * sol.t)(0) / sol.denoms(i);
        }
        CHECK(std::fabs(grad) < 1e-6);
        // logel <= 0 with equality only if the moment holds exactly.
        CHECK(fit.inner.logel <= 1e-12);
    }
}

TEST_CASE("restricted fit satisfies the constraint and its reduction") {
    auto cov = make_cov_model();
    auto cons = make_cov_constraint(1.0);
    RepRng rng(99u, 5);
    int checked = 0;
    for (int trial = 0; trial < 60 && checked < 40; ++trial) {
        std::vector<double> vals(30);
        for (auto& v : vals) v = rng.normal(1.0, 1.0);
        Sample s = Sample::from_values(vals);
        RestrictedFit direct;
        try {
            direct = cov_restricted_reduced(s, 2.0);
        } catch (const Error&) {
            continue;
        }
        ++checked;
        // Constraint holds exactly at the reduced solution.
        CHECK(std::fabs(cons.c(direct.theta)(0)) < 1e-9);
        // The generic stacked KKT solver lands on the same point.
        RestrictedFit generic = fit_restricted(cov, cons, s);
        CHECK(std::fabs(generic.theta(0) - direct.theta(0)) < 1e-7);
        CHECK(std::fabs(generic.theta(1) - direct.theta(1)) < 1e-6);
        // Reweighted moments vanish at the restricted estimate.
        Matrix g = eval_g_all(cov, s, direct.theta);
        Vector m = g.transpose() * direct.inner.weights;
        CHECK(m.lpNorm<Eigen::Infinity>() < 1e-7);
    }
    CHECK(checked >= 40);
}

TEST_CASE("covariance blocks: scalar mean model closed forms") {
    Sample s = Sample::from_values({1.0, 2.0, 3.0, 6.0});
    auto mean = make_mean_model();
    Vector th = theta_of(3.0);
    auto cov = estimate_covariances(mean, s, th);
    // S11 = mean (x - 3)^2 = (4 + 1 + 0 + 9)/4
    CHECK(cov.S11(0, 0) == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(cov.S12(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    // Just identified: V = S11, R = 0.
    CHECK(cov.V(0, 0) == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(std::fabs(cov.R(0, 0)) < 1e-12);
    CHECK_FALSE(cov.Q.has_value());
}

TEST_CASE("influence function of the mean is the centered observation") {
    Sample s = Sample::from_values(newcomb_day(3));
    auto mean = make_mean_model();
    double mu = s.obs.col(0).mean();
    Vector th = theta_of(mu);
    auto cov = estimate_covariances(mean, s, th);
    Vector x(1);
    x(0) = 36.0;
    Vector inf = influence_function(mean, x, th, cov);
    CHECK(inf(0) == doctest::Approx(-(36.0 - mu)).epsilon(1e-10));
    // Quadratic form: 2 IF^2 / V for the scalar mean.
    double inf2 = influence_function_2(mean, x, th, cov);
    CHECK(inf2 == doctest::Approx(2.0 * inf(0) * inf(0) / cov.V(0, 0)).epsilon(1e-10));
}

TEST_CASE("covariance blocks expose constraint projections") {
    Sample s = Sample::from_values(newcomb_day(2));
    auto cov_model = make_cov_model();
    auto cons = make_cov_constraint(1.0);
    Vector th(2);
    th(0) = 28.55;
    th(1) = s.obs.col(0).array().square().mean();
    auto cov = estimate_covariances(cov_model, s, th, &cons);
    REQUIRE(cov.Q.has_value());
    REQUIRE(cov.P.has_value());
    // P = V - V C' Q C V is positive semidefinite with rank p - q = 1.
    Eigen::SelfAdjointEigenSolver<Matrix> es(*cov.P);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
    CHECK(es.eigenvalues()(0) < 1e-9 * std::max(1.0, es.eigenvalues()(1)));
}
