#pragma once

#include <string>
#include <vector>

#include "eldiv/divergence.hpp"
#include "eldiv/special.hpp"

namespace eldiv {

// A calibrated test-statistic family: which statistic (divergence difference
// T, direct divergence S, or the Renyi transform of order a) and its
// generator.  Renyi families are S-type with h = renyi(a), phi = power(a-1).
struct StatFamily {
    enum class Stat { T, S, renyi };
    Stat stat = Stat::S;
    PhiFamily phi = PhiFamily::kullback();
    HFunction h = HFunction::identity_fn();
    double renyi_a = 1.0;  // used when stat == renyi

    static StatFamily t_power(double lambda) {
        return {Stat::T, PhiFamily::power(lambda), HFunction::identity_fn(), 0.0};
    }
    static StatFamily s_power(double lambda) {
        return {Stat::S, PhiFamily::power(lambda), HFunction::identity_fn(), 0.0};
    }
    static StatFamily renyi_order(double a) {
        return {Stat::renyi, PhiFamily::power(a - 1.0), HFunction::renyi(a), a};
    }

    std::string label() const;
};

struct TestResult {
    double statistic = 0.0;
    int df = 0;
    double pvalue = 1.0;
    double alpha = 0.05;
    bool reject = false;
    bool infeasible_theta0 = false;  // theta0 outside the convex hull:
                                     // statistic reported as +infinity
    StatFamily family;
};

// Test H0: theta = theta0 with the given statistic family, calibrated against
// chi-square(p).  reject <=> statistic > chi2 upper-alpha quantile.
TestResult simple_test(const EstimatingModel& model, const Sample& sample,
                       const Vector& theta0, const StatFamily& family,
                       double alpha = 0.05);

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    bool lower_hull_truncated = false;  // endpoint stopped at the convex-hull
    bool upper_hull_truncated = false;  // boundary, not a statistic crossing
    StatFamily family;
};

struct ScanOptions {
    double step_fraction = 0.25;  // initial step = this * sd(first coord)/sqrt(n)
    int max_steps = 400;
    double endpoint_tol = 1e-6;
    const ELFit* reuse_fit = nullptr;  // skip the unrestricted fit (hot loops)
};

// Confidence interval for a scalar parameter (p == 1) by test inversion:
// { theta0 : statistic(theta0) <= chi2 quantile }.  Scans outward from the
// unrestricted estimate, then refines each crossing by bisection.
ConfidenceInterval confidence_interval(const EstimatingModel& model,
                                       const Sample& sample,
                                       const StatFamily& family,
                                       double level = 0.95,
                                       const ScanOptions& opts = {});

// First-order power approximation at an alternative theta_star for the test
// of H0: theta = theta0 (scalar parameter):
//   beta = 1 - Phi( sqrt(n)/sigma * (threshold - D_h(theta_star, theta0)) )
// where D_h is the transformed divergence between the tilted laws, sigma is
// the delta-method standard deviation of D_h, and the threshold is
// phi''(1) h'(0) chi2_{1,alpha} / (2n).  With paper_strict the h'(0) factor
// is dropped from the threshold.  Renyi families use the closed-form plug-in
// expressions for sigma; other families use a central finite difference for
// the divergence derivative.
double power_beta1(const EstimatingModel& model, const Sample& sample,
                   double theta0, double theta_star, const StatFamily& family,
                   double alpha = 0.05, bool paper_strict = false);

// Second-order (noncentral chi-square) power approximation at a local
// alternative theta_n = theta0 + f / sqrt(n):
//   beta = 1 - F_{chi2(p, delta)}(chi2_{p, alpha}),  delta = f' V^-1 f.
// Independent of the (h, phi) choice.
double power_beta2(const CovarianceEstimates& cov, const Vector& f, int df,
                   double alpha = 0.05);

}  // namespace eldiv
