#include "eldiv/composite.hpp"

#include <cmath>
#include <limits>

namespace eldiv {

namespace {

void require_just_identified(const CompositeTestInput& input) {
    if (input.sample == nullptr) throw DomainError("missing sample");
    if (input.model.r != input.model.p) {
        throw DomainError(
            "composite tests require an exactly identified model (r == p)");
    }
}

CompositeTestResult calibrate(CompositeTestResult result, double alpha) {
    result.alpha = alpha;
    result.pvalue = 1.0 - chi2_cdf(result.statistic, result.df);
    result.reject = result.statistic > chi2_quantile(result.df, alpha);
    return result;
}

// When no parameter point on the constraint set is feasible (the origin lies
// outside the convex hull of the estimating-function values everywhere on the
// set), the restricted likelihood is identically zero and every ratio-type
// statistic diverges.  Report that as a degenerate rejection.
CompositeTestResult degenerate_rejection(CompositeTestResult result,
                                         double alpha) {
    result.statistic = std::numeric_limits<double>::infinity();
    result.alpha = alpha;
    result.pvalue = 0.0;
    result.reject = true;
    return result;
}

}  // namespace

CompositeTestResult composite_phi_test(const CompositeTestInput& input) {
    require_just_identified(input);
    CompositeTestResult result;
    result.kind = CompositeKind::phi_divergence;
    result.df = input.constraint.q;
    try {
        result.restricted =
            fit_restricted(input.model, input.constraint, *input.sample);
    } catch (const InfeasibleTheta&) {
        return degenerate_rejection(std::move(result), input.alpha);
    }

    // With r == p the divergence-difference and direct-divergence statistics
    // coincide:  (2 / phi''(1)) sum_i phi(d_i) / d_i at the restricted tilt.
    const Vector& d = result.restricted.inner.denoms;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        acc += input.phi(d(i)) / d(i);
    }
    result.statistic = 2.0 * acc / input.phi.curvature_at_one();
    return calibrate(std::move(result), input.alpha);
}

CompositeTestResult wald_test(const CompositeTestInput& input) {
    require_just_identified(input);
    CompositeTestResult result;
    result.kind = CompositeKind::wald;
    result.df = input.constraint.q;
    result.unrestricted = fit_unrestricted(input.model, *input.sample);

    CovarianceEstimates cov =
        estimate_covariances(input.model, *input.sample,
                             result.unrestricted.theta_hat, &input.constraint);
    Vector c = input.constraint.c(result.unrestricted.theta_hat);
    result.statistic =
        static_cast<double>(input.sample->n()) * c.dot((*cov.Q) * c);
    return calibrate(std::move(result), input.alpha);
}

CompositeTestResult score_test(const CompositeTestInput& input) {
    require_just_identified(input);
    CompositeTestResult result;
    result.kind = CompositeKind::score;
    result.df = input.constraint.q;
    try {
        result.restricted =
            fit_restricted(input.model, input.constraint, *input.sample);
    } catch (const InfeasibleTheta&) {
        return degenerate_rejection(std::move(result), input.alpha);
    }
    const Vector& theta = result.restricted.theta;

    CovarianceEstimates cov =
        estimate_covariances(input.model, *input.sample, theta,
                             &input.constraint);
    Vector gbar_t = gbar(input.model, *input.sample, theta);
    // First-order direction of the multiplier: nu ~ Q C S12^-1 gbar, so the
    // quadratic form n nu' Q^-1 nu becomes n (C S12^-1 gbar)' Q (C S12^-1 gbar).
    Vector s12_inv_g = cov.S12.fullPivLu().solve(gbar_t);
    Vector y = input.constraint.C(theta) * s12_inv_g;
    result.statistic =
        static_cast<double>(input.sample->n()) * y.dot((*cov.Q) * y);
    return calibrate(std::move(result), input.alpha);
}

CompositeTestResult lagrange_test(const CompositeTestInput& input) {
    require_just_identified(input);
    CompositeTestResult result;
    result.kind = CompositeKind::lagrange;
    result.df = input.constraint.q;
    try {
        result.restricted =
            fit_restricted(input.model, input.constraint, *input.sample);
    } catch (const InfeasibleTheta&) {
        return degenerate_rejection(std::move(result), input.alpha);
    }
    const Vector& theta = result.restricted.theta;

    CovarianceEstimates cov =
        estimate_covariances(input.model, *input.sample, theta,
                             &input.constraint);
    // Q^-1 = C V C', so the quadratic form needs no extra inversion.
    Matrix q_inv = input.constraint.C(theta) * cov.V *
                   input.constraint.C(theta).transpose();
    result.statistic = static_cast<double>(input.sample->n()) *
                       result.restricted.nu.dot(q_inv * result.restricted.nu);
    return calibrate(std::move(result), input.alpha);
}

double composite_power_beta2(const EstimatingModel& model,
                             const Constraint& constraint,
                             const Sample& sample, const Vector& theta0,
                             const Vector& f, double alpha) {
    CovarianceEstimates cov =
        estimate_covariances(model, sample, theta0, &constraint);
    Vector cf = constraint.C(theta0) * f;
    double rho = cf.dot((*cov.Q) * cf);
    if (rho < 0.0) rho = 0.0;
    double quant = chi2_quantile(constraint.q, alpha);
    return 1.0 - noncentral_chi2_cdf(quant, constraint.q, rho);
}

namespace {

// Sample moments m_k = (1/n) sum x^k used by the scalar closed forms.
struct Moments {
    double m1, m2, m3, m4;
};

Moments moments(const Sample& sample) {
    const auto x = sample.obs.col(0).array();
    Moments m;
    m.m1 = x.mean();
    m.m2 = x.square().mean();
    m.m3 = x.cube().mean();
    m.m4 = x.square().square().mean();
    return m;
}

}  // namespace

double cov_wald_closed(const Sample& sample) {
    Moments m = moments(sample);
    double u = m.m1;
    double v = m.m2;
    double denom = m.m4 - 8.0 * u * m.m3 - v * v + 24.0 * u * u * v -
                   16.0 * u * u * u * u;
    double c = 2.0 * u * u - v;
    return static_cast<double>(sample.n()) * c * c / denom;
}

double cov_score_closed(const Sample& sample, const RestrictedFit& restricted) {
    Moments m = moments(sample);
    double uh = m.m1;
    double vh = m.m2;
    double ut = restricted.theta(0);
    double vt = restricted.theta(1);
    double num = vh + vt - 4.0 * ut * uh;
    double denom = m.m4 - 8.0 * ut * m.m3 - 8.0 * uh * ut * vt +
                   10.0 * vh * vt + vt * vt;
    return static_cast<double>(sample.n()) * num * num / denom;
}

double cov_lagrange_closed(const Sample& sample,
                           const RestrictedFit& restricted) {
    Moments m = moments(sample);
    double uh = m.m1;
    double vh = m.m2;
    double ut = restricted.theta(0);
    double vt = restricted.theta(1);
    double gamma = restricted.nu(0);
    double q_inv = m.m4 - 8.0 * ut * m.m3 - 8.0 * uh * ut * vt +
                   10.0 * vh * vt + vt * vt;
    return static_cast<double>(sample.n()) * gamma * gamma * q_inv;
}

}  // namespace eldiv
