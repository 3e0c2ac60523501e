#include "doctest.h"

#include <cmath>

#include "eldiv/composite.hpp"
#include "eldiv/datasets.hpp"
#include "eldiv/rng.hpp"

using namespace eldiv;

namespace {

CompositeTestInput make_input(const Sample& s) {
    CompositeTestInput in;
    in.model = make_cov_model();
    in.constraint = make_cov_constraint(1.0);
    in.sample = &s;
    return in;
}

Sample draw_normal(std::uint64_t rep, int n, double mean, double sd) {
    RepRng rng(424242u, rep);
    std::vector<double> vals(n);
    for (auto& v : vals) v = rng.normal(mean, sd);
    return Sample::from_values(vals);
}

}  // namespace

TEST_CASE("Wald statistic on {1, 2, 3} has the exact rational value 150/49") {
    Sample s = Sample::from_values({1.0, 2.0, 3.0});
    auto r = wald_test(make_input(s));
    CHECK(std::fabs(r.statistic - 150.0 / 49.0) < 1e-10);
    CHECK(r.df == 1);
    CHECK_FALSE(r.reject);
}

TEST_CASE("restricted fit output satisfies the null constraint") {
    Sample s = draw_normal(1, 30, 1.0, 1.0);
    auto in = make_input(s);
    auto r = composite_phi_test(in);
    CHECK(std::fabs(in.constraint.c(r.restricted.theta)(0)) < 1e-8);
    CHECK(r.df == 1);
    CHECK(r.statistic >= 0.0);
    CHECK(r.pvalue == doctest::Approx(1.0 - chi2_cdf(r.statistic, 1)).epsilon(1e-12));
}

TEST_CASE("all four statistics agree asymptotically in direction") {
    // Data generated far from the null must be rejected by every statistic.
    RepRng rng(7u, 9);
    std::vector<double> vals(40);
    for (auto& v : vals) v = rng.normal(5.0, 0.5);  // sigma/mu = 0.1, not 1
    Sample s = Sample::from_values(vals);
    auto in = make_input(s);
    in.alpha = 0.05;
    CHECK(composite_phi_test(in).reject);
    CHECK(wald_test(in).reject);
    CHECK(score_test(in).reject);
    CHECK(lagrange_test(in).reject);
}

TEST_CASE("closed scalar forms match the generic matrix implementations") {
    // 200 random samples; the three moment-based statistics must agree with
    // their generic matrix counterparts to 1e-9 relative accuracy.
    int checked = 0;
    for (std::uint64_t rep = 0; rep < 260 && checked < 200; ++rep) {
        Sample s = draw_normal(rep, 30, 1.0, 1.0);
        auto in = make_input(s);
        RestrictedFit restricted;
        try {
            restricted = fit_restricted(in.model, in.constraint, s);
        } catch (const Error&) {
            continue;
        }
        ++checked;
        double w_generic = wald_test(in).statistic;
        double w_closed = cov_wald_closed(s);
        CHECK(std::fabs(w_generic - w_closed) <= 1e-9 * std::max(1.0, std::fabs(w_closed)));

        double s_generic = score_test(in).statistic;
        double s_closed = cov_score_closed(s, restricted);
        CHECK(std::fabs(s_generic - s_closed) <= 1e-9 * std::max(1.0, std::fabs(s_closed)));

        double l_generic = lagrange_test(in).statistic;
        double l_closed = cov_lagrange_closed(s, restricted);
        CHECK(std::fabs(l_generic - l_closed) <= 1e-7 * std::max(1.0, std::fabs(l_closed)));
    }
    CHECK(checked == 200);
}

TEST_CASE("divergence statistic is invariant across equivalent generators") {
    Sample s = draw_normal(3, 30, 1.0, 1.0);
    auto in = make_input(s);
    in.phi = PhiFamily::kullback();
    double v0 = composite_phi_test(in).statistic;
    in.phi = PhiFamily::power(1e-9);  // same generator up to the limit branch
    double v1 = composite_phi_test(in).statistic;
    CHECK(std::fabs(v0 - v1) < 1e-5);
}

TEST_CASE("local-alternative power: size at f = 0 and growth in f") {
    Sample s = draw_normal(5, 30, 1.0, 1.0);
    auto model = make_cov_model();
    auto cons = make_cov_constraint(1.0);
    Vector theta0(2);
    theta0(0) = 1.0;
    theta0(1) = 2.0;  // on the constraint set: v = 2 u^2
    Vector f = Vector::Zero(2);
    CHECK(std::fabs(composite_power_beta2(model, cons, s, theta0, f, 0.05) - 0.05) <
          1e-9);
    f(1) = 3.0;
    double b = composite_power_beta2(model, cons, s, theta0, f, 0.05);
    CHECK(b > 0.05);
    f(1) = 6.0;
    CHECK(composite_power_beta2(model, cons, s, theta0, f, 0.05) > b);
}
