#pragma once

#include "eldiv/inference.hpp"

namespace eldiv {

// Composite null H0: c(theta) = 0 for an exactly identified model (r == p).
// Four chi-square(q) calibrated statistics are available:
//   phi_divergence - (2 / phi''(1)) sum_i phi(d_i) / d_i at the restricted
//                    fit, d_i = 1 + t~' g(x_i, theta~); the divergence
//                    difference and direct divergence coincide when r == p
//   wald           - n c(theta-hat)' Q(theta-hat) c(theta-hat)
//   score          - n gbar(theta~)' S12^-T C' Q C S12^-1 gbar(theta~),
//                    moments evaluated at the restricted estimate theta~
//   lagrange       - n nu~' Q(theta~)^-1 nu~ with nu~ the constraint
//                    multiplier from the restricted fit
enum class CompositeKind { phi_divergence, wald, score, lagrange };

struct CompositeTestInput {
    EstimatingModel model;
    Constraint constraint;
    const Sample* sample = nullptr;
    PhiFamily phi = PhiFamily::kullback();  // used by phi_divergence only
    double alpha = 0.05;
};

struct CompositeTestResult {
    CompositeKind kind = CompositeKind::phi_divergence;
    double statistic = 0.0;
    int df = 0;  // q
    double pvalue = 1.0;
    double alpha = 0.05;
    bool reject = false;
    ELFit unrestricted;       // populated when the statistic needs it
    RestrictedFit restricted; // populated when the statistic needs it
};

CompositeTestResult composite_phi_test(const CompositeTestInput& input);
CompositeTestResult wald_test(const CompositeTestInput& input);
CompositeTestResult score_test(const CompositeTestInput& input);
CompositeTestResult lagrange_test(const CompositeTestInput& input);

// Power against the local alternative theta_n = theta0 + f / sqrt(n) (theta0
// on the constraint set): noncentral chi-square(q) with noncentrality
// rho = (C f)' Q (C f), evaluated at the chi2(q) upper-alpha quantile.
double composite_power_beta2(const EstimatingModel& model,
                             const Constraint& constraint,
                             const Sample& sample, const Vector& theta0,
                             const Vector& f, double alpha = 0.05);

// Closed scalar forms of the three moment-based statistics for the
// coefficient-of-variation model under v = 2 u^2, exposed for cross-checking
// against the generic matrix implementations.
double cov_wald_closed(const Sample& sample);
double cov_score_closed(const Sample& sample, const RestrictedFit& restricted);
double cov_lagrange_closed(const Sample& sample,
                           const RestrictedFit& restricted);

}  // namespace eldiv
