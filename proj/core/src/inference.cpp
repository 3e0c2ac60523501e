#include "eldiv/inference.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace eldiv {

std::string StatFamily::label() const {
    std::ostringstream os;
    const char* prefix = stat == Stat::S ? "S" : "T";
    switch (stat) {
        case Stat::T:
        case Stat::S:
            if (phi.kind == PhiFamily::Kind::power_divergence) {
                os << prefix << "(" << phi.lambda << ")";
            } else {
                os << prefix << "[" << phi.label() << "]";
            }
            break;
        case Stat::renyi:
            os << "renyi(" << renyi_a << ")";
            break;
    }
    return os.str();
}

namespace {

double evaluate_statistic(const StatFamily& family, const ELFit& fit,
                          const ELSolution& el0) {
    switch (family.stat) {
        case StatFamily::Stat::T:
            return statistic_T(family.phi, family.h, fit, el0);
        case StatFamily::Stat::S:
            return statistic_S(family.phi, family.h, fit, el0);
        case StatFamily::Stat::renyi:
            return renyi_statistic(family.renyi_a, fit.inner, el0);
    }
    throw DomainError("unknown statistic family");
}

}  // namespace

TestResult simple_test(const EstimatingModel& model, const Sample& sample,
                       const Vector& theta0, const StatFamily& family,
                       double alpha) {
    TestResult result;
    result.family = family;
    result.alpha = alpha;
    result.df = model.p;

    ELFit fit = fit_unrestricted(model, sample);
    SolveReport rep0 = try_solve_t(model, sample, theta0);
    if (rep0.status == SolveStatus::infeasible) {
        // theta0 outside the convex hull: the null law cannot be represented
        // at all, which is the strongest possible rejection.
        result.statistic = std::numeric_limits<double>::infinity();
        result.pvalue = 0.0;
        result.reject = true;
        result.infeasible_theta0 = true;
        return result;
    }
    if (rep0.status != SolveStatus::ok) {
        throw MaxIterations("inner solve at theta0 hit the iteration cap");
    }
    result.statistic = evaluate_statistic(family, fit, rep0.solution);
    result.pvalue = 1.0 - chi2_cdf(result.statistic, result.df);
    result.reject = result.statistic > chi2_quantile(result.df, alpha);
    return result;
}

namespace {

// Statistic as a function of the hypothesized scalar value, reusing the
// unrestricted fit.  Infeasible values are reported separately so the scan
// can distinguish hull truncation from a statistic crossing.
struct ScanPoint {
    bool feasible = false;
    double value = std::numeric_limits<double>::infinity();
};

ScanPoint scan_eval(const EstimatingModel& model, const Sample& sample,
                    const StatFamily& family, const ELFit& fit, double mu) {
    ScanPoint out;
    Vector theta0(1);
    theta0(0) = mu;
    SolveReport rep = try_solve_t(model, sample, theta0);
    if (rep.status != SolveStatus::ok) return out;
    out.feasible = true;
    out.value = evaluate_statistic(family, fit, rep.solution);
    return out;
}

}  // namespace

ConfidenceInterval confidence_interval(const EstimatingModel& model,
                                       const Sample& sample,
                                       const StatFamily& family, double level,
                                       const ScanOptions& opts) {
    if (model.p != 1) {
        throw DomainError("interval inversion requires a scalar parameter");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("confidence level must be in (0, 1)");
    }
    const int n = sample.n();
    double mean = sample.obs.col(0).mean();
    double var = (sample.obs.col(0).array() - mean).square().sum() / n;
    if (var <= 0.0) {
        throw DegenerateVariance("all observations identical");
    }

    ELFit fit = opts.reuse_fit ? *opts.reuse_fit : fit_unrestricted(model, sample);
    const double threshold = chi2_quantile(1, 1.0 - level);
    const double step =
        opts.step_fraction * std::sqrt(var) / std::sqrt(static_cast<double>(n));

    ConfidenceInterval ci;
    ci.level = level;
    ci.family = family;

    for (int side = 0; side < 2; ++side) {
        const double direction = (side == 0) ? -1.0 : 1.0;
        double mu_in = fit.theta_hat(0);
        ScanPoint at_center = scan_eval(model, sample, family, fit, mu_in);
        if (!at_center.feasible || at_center.value > threshold) {
            throw NoBracket("statistic exceeds the threshold at the estimate");
        }

        double mu_out = 0.0;
        bool bracketed = false;
        bool out_feasible = false;
        for (int j = 1; j <= opts.max_steps; ++j) {
            double mu = fit.theta_hat(0) + direction * j * step;
            ScanPoint pt = scan_eval(model, sample, family, fit, mu);
            if (!pt.feasible || pt.value > threshold) {
                mu_out = mu;
                out_feasible = pt.feasible;
                bracketed = true;
                break;
            }
            mu_in = mu;
        }
        if (!bracketed) {
            throw NoBracket("no interval endpoint within the scan range");
        }

        // Bisection between a point inside the region and one outside it
        // (either above the threshold or beyond the convex hull).
        bool saw_crossing = out_feasible;
        while (std::fabs(mu_out - mu_in) > opts.endpoint_tol) {
            double mid = 0.5 * (mu_in + mu_out);
            ScanPoint pt = scan_eval(model, sample, family, fit, mid);
            if (pt.feasible && pt.value <= threshold) {
                mu_in = mid;
            } else {
                mu_out = mid;
                if (pt.feasible) saw_crossing = true;
            }
        }
        double endpoint = 0.5 * (mu_in + mu_out);
        if (side == 0) {
            ci.lower = endpoint;
            ci.lower_hull_truncated = !saw_crossing;
        } else {
            ci.upper = endpoint;
            ci.upper_hull_truncated = !saw_crossing;
        }
    }
    return ci;
}

namespace {

// Plug-in power components for the Renyi family on the scalar mean model,
// built from the tilted weights at mu0 and mu_star.
double renyi_power(const EstimatingModel& model, const Sample& sample,
                   double theta0, double theta_star, double a, double alpha,
                   bool paper_strict) {
    const int n = sample.n();
    Vector v0(1), vs(1);
    v0(0) = theta0;
    vs(0) = theta_star;
    ELSolution el0 = solve_t(model, sample, v0);
    ELSolution els = solve_t(model, sample, vs);
    const Vector& p0 = el0.weights;
    const Vector& ps = els.weights;
    const double t_star = els.t(0);
    const Vector x = sample.obs.col(0);

    // kappa = h'(D_phi) = ( sum p_i(mu*)^a p_i(mu0)^(1-a) )^-1
    double mix = 0.0;
    for (int i = 0; i < n; ++i) {
        mix += std::pow(ps(i), a) * std::pow(p0(i), 1.0 - a);
    }
    double kappa = 1.0 / mix;

    // t'(mu*) by the implicit-function derivative of the inner problem.
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        num += ps(i) * ps(i);
        den += (x(i) - theta_star) * (x(i) - theta_star) * ps(i) * ps(i);
    }
    if (den <= 0.0) throw DegenerateVariance("degenerate tilted variance");
    double t_prime = -num / den;

    double tau;
    if (std::fabs(a - 1.0) < 1e-8) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double bracket = t_prime * (x(i) - theta_star) - t_star;
            acc += bracket * ps(i) * ps(i) * (std::log(p0(i) / ps(i)) - 1.0);
        }
        tau = static_cast<double>(n) * acc;
    } else {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double bracket = t_prime * (x(i) - theta_star) - t_star;
            acc += bracket * std::pow(ps(i), a + 1.0) * std::pow(p0(i), 1.0 - a);
        }
        tau = static_cast<double>(n) * acc / (1.0 - a);
    }

    // Consistent plug-in for the asymptotic variance of the estimator.
    double v_tilde = 0.0;
    for (int i = 0; i < n; ++i) {
        v_tilde += (x(i) - theta0) * (x(i) - theta0) * p0(i);
    }
    double sigma = kappa * std::fabs(tau) * std::sqrt(v_tilde);
    if (!(sigma > 0.0)) throw DegenerateVariance("zero power-curve slope");

    double aa = a * (a - 1.0);
    double d_renyi;
    if (std::fabs(aa) >= 1e-8) {
        d_renyi = -std::log(kappa) / aa;
    } else if (std::fabs(a) < 1e-8) {
        d_renyi = 0.0;
        for (int i = 0; i < n; ++i) d_renyi += p0(i) * std::log(p0(i) / ps(i));
    } else {
        d_renyi = 0.0;
        for (int i = 0; i < n; ++i) d_renyi += ps(i) * std::log(ps(i) / p0(i));
    }

    // h'(0) = 1 for the Renyi transform, so both threshold modes coincide.
    (void)paper_strict;
    double threshold = chi2_quantile(1, alpha) / (2.0 * n);
    return 1.0 - normal_cdf(std::sqrt(static_cast<double>(n)) / sigma *
                            (threshold - d_renyi));
}

}  // namespace

double power_beta1(const EstimatingModel& model, const Sample& sample,
                   double theta0, double theta_star, const StatFamily& family,
                   double alpha, bool paper_strict) {
    if (model.p != 1) {
        throw DomainError("first-order power requires a scalar parameter");
    }
    if (theta0 == theta_star) {
        throw DomainError("alternative must differ from the null value");
    }
    if (family.stat == StatFamily::Stat::renyi && model.r == 1) {
        return renyi_power(model, sample, theta0, theta_star, family.renyi_a,
                           alpha, paper_strict);
    }

    const int n = sample.n();
    Vector v0(1);
    v0(0) = theta0;
    ELSolution el0 = solve_t(model, sample, v0);

    auto divergence_at = [&](double mu) {
        Vector vm(1);
        vm(0) = mu;
        ELSolution el = solve_t(model, sample, vm);
        return d_phi_between(family.phi, el, el0);
    };

    double d_star = divergence_at(theta_star);
    double hstep = 1e-5 * (1.0 + std::fabs(theta_star));
    double tau = (divergence_at(theta_star + hstep) -
                  divergence_at(theta_star - hstep)) /
                 (2.0 * hstep);
    double kappa = family.h.deriv(d_star);

    CovarianceEstimates cov = estimate_covariances(model, sample, v0);
    double sigma = kappa * std::fabs(tau) * std::sqrt(cov.V(0, 0));
    if (!(sigma > 0.0)) throw DegenerateVariance("zero power-curve slope");

    double curvature = family.phi.curvature_at_one();
    double hprime0 = family.h.deriv_at_zero();
    double threshold = paper_strict
                           ? curvature * chi2_quantile(1, alpha) / (2.0 * n)
                           : curvature * hprime0 * chi2_quantile(1, alpha) /
                                 (2.0 * n);
    double d_h = family.h(d_star);
    return 1.0 - normal_cdf(std::sqrt(static_cast<double>(n)) / sigma *
                            (threshold - d_h));
}

double power_beta2(const CovarianceEstimates& cov, const Vector& f, int df,
                   double alpha) {
    Vector solved = cov.V.ldlt().solve(f);
    double delta = f.dot(solved);
    if (delta < 0.0) delta = 0.0;
    double quant = chi2_quantile(df, alpha);
    return 1.0 - noncentral_chi2_cdf(quant, df, delta);
}

}  // namespace eldiv
