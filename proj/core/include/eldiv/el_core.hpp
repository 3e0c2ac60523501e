#pragma once

#include <optional>
#include <vector>

#include "eldiv/model.hpp"

namespace eldiv {

// Solution of the inner (dual) problem at a fixed parameter value: the
// Lagrange vector t satisfying (1/n) sum_i g_i / (1 + t'g_i) = 0, the implied
// weights p_i = 1 / (n (1 + t'g_i)), and the log empirical-likelihood ratio
// -sum_i log(1 + t'g_i).
struct ELSolution {
    Vector t;        // r
    Vector denoms;   // n, entries 1 + t'g_i  (all > 1/n)
    Vector weights;  // n, entries 1 / (n * denoms_i); sums to 1
    double logel = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;  // max-norm of the moment residual at exit
};

enum class SolveStatus { ok, infeasible, max_iterations };

struct SolveReport {
    SolveStatus status = SolveStatus::infeasible;
    ELSolution solution;  // valid only when status == ok
};

struct SolveOptions {
    int max_iterations = 100;
    double tol = 1e-10;  // max-norm of (1/n) sum g_i/(1 + t'g_i)
};

// Non-throwing variant: reports infeasibility / iteration cap via status.
SolveReport try_solve_t(const EstimatingModel& model, const Sample& sample,
                        const Vector& theta, const SolveOptions& opts = {});

// Same computation on a precomputed n x r matrix of estimating-function rows.
SolveReport try_solve_t(const Matrix& g_rows, const SolveOptions& opts = {});

// Throwing variant: InfeasibleTheta or MaxIterations on failure.
ELSolution solve_t(const EstimatingModel& model, const Sample& sample,
                   const Vector& theta, const SolveOptions& opts = {});

// log empirical-likelihood ratio at theta (the .logel of solve_t).
double log_el(const EstimatingModel& model, const Sample& sample,
              const Vector& theta, const SolveOptions& opts = {});

// Unrestricted maximum empirical-likelihood estimate.
struct ELFit {
    Vector theta_hat;
    ELSolution inner;  // inner solution at theta_hat (t = 0 when r == p)
    bool converged = false;
    bool at_boundary = false;  // search terminated against a domain boundary
    int iterations = 0;
};

struct FitOptions {
    std::optional<Vector> initial;  // default: model-specific moment estimate
    int max_iterations = 200;
    double tol = 1e-10;        // residual tolerance when r == p
    double grad_tol = 1e-8;    // profile-gradient tolerance when r > p
};

// When r == p: solve gbar(theta) = 0 by damped Newton (then t = 0 and
// logel = 0).  When r > p: maximize the profile log empirical likelihood.
ELFit fit_unrestricted(const EstimatingModel& model, const Sample& sample,
                       const FitOptions& opts = {});

// Restricted maximum empirical-likelihood estimate under c(theta) = 0.
struct RestrictedFit {
    Vector theta;  // p, satisfies c(theta) = 0
    Vector nu;     // q, multiplier on the constraint
    ELSolution inner;
    bool converged = false;
    int iterations = 0;
};

RestrictedFit fit_restricted(const EstimatingModel& model,
                             const Constraint& constraint,
                             const Sample& sample,
                             const FitOptions& opts = {});

// Closed two-equation reduction of the restricted fit for the
// coefficient-of-variation model under v = s*u^2 (s = 1 + rho^2):
// the stacked first-order system collapses to two equations in (u, gamma)
// with t = C(theta)' * gamma.  Used automatically by fit_restricted for that
// model; exposed for cross-checking.
RestrictedFit cov_restricted_reduced(const Sample& sample, double s = 2.0,
                                     const FitOptions& opts = {});

// Moment and sensitivity matrices evaluated at a parameter value, and the
// sandwich blocks built from them.  With n observations,
//   S11 = (1/n) sum g_i g_i',        (r x r)
//   S12 = (1/n) sum G_i,             (r x p)
//   V   = (S12' S11^-1 S12)^-1,      (p x p)  asymptotic variance of theta-hat
//   R   = S11^-1 - S11^-1 S12 V S12' S11^-1   (r x r; zero when r == p)
// and, when a constraint is supplied,
//   Q   = (C V C')^-1,               (q x q)
//   P   = V - V C' Q C V.            (p x p)
struct CovarianceEstimates {
    Matrix S11, S12, V, R;
    std::optional<Matrix> Q, P;
};

CovarianceEstimates estimate_covariances(const EstimatingModel& model,
                                         const Sample& sample,
                                         const Vector& theta,
                                         const Constraint* constraint = nullptr);

// Influence function of the estimator at observation x:
//   IF(x) = V S12' S11^-1 g(x, theta0)            (p-vector)
// and the quadratic version
//   IF2(x) = 2 g' S11^-1 S12 V S12' S11^-1 g  >= 0.
Vector influence_function(const EstimatingModel& model, const Vector& x,
                          const Vector& theta0, const CovarianceEstimates& cov);

double influence_function_2(const EstimatingModel& model, const Vector& x,
                            const Vector& theta0,
                            const CovarianceEstimates& cov);

}  // namespace eldiv
