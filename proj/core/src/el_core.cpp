#include "eldiv/el_core.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace eldiv {

namespace {

// Mean log-denominator objective for the inner problem: the dual objective
// f(t) = (1/n) sum log(1 + t'g_i) is concave on the feasible slab and its
// unique stationary point is the Lagrange vector.
double dual_objective(const Vector& denoms) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < denoms.size(); ++i) acc += std::log(denoms(i));
    return acc / static_cast<double>(denoms.size());
}

ELSolution make_solution(const Matrix& g_rows, const Vector& t, int iterations,
                         double grad_norm) {
    const int n = static_cast<int>(g_rows.rows());
    ELSolution sol;
    sol.t = t;
    sol.denoms = (g_rows * t).array() + 1.0;
    sol.weights = 1.0 / (static_cast<double>(n) * sol.denoms.array());
    double logel = 0.0;
    for (int i = 0; i < n; ++i) logel -= std::log(sol.denoms(i));
    sol.logel = logel;
    sol.iterations = iterations;
    sol.grad_norm = grad_norm;
    return sol;
}

}  // namespace

SolveReport try_solve_t(const Matrix& g_rows, const SolveOptions& opts) {
    const int n = static_cast<int>(g_rows.rows());
    const int r = static_cast<int>(g_rows.cols());
    const double floor = 1.0 / static_cast<double>(n);
    SolveReport report;

    if (r == 1) {
        // Feasibility in one dimension: zero must be strictly inside the
        // range of the estimating-function values (or all values zero).
        double lo = g_rows.col(0).minCoeff();
        double hi = g_rows.col(0).maxCoeff();
        if (lo == 0.0 && hi == 0.0) {
            report.status = SolveStatus::ok;
            report.solution = make_solution(g_rows, Vector::Zero(1), 0, 0.0);
            return report;
        }
        if (!(lo < 0.0 && hi > 0.0)) {
            report.status = SolveStatus::infeasible;
            return report;
        }
    }

    Vector t = Vector::Zero(r);
    Vector denoms = Vector::Ones(n);
    double fval = 0.0;

    // Moment residual (also the gradient of the dual objective).
    auto dual_gradient = [&](const Vector& d) {
        Vector grad = Vector::Zero(r);
        for (int i = 0; i < n; ++i) {
            grad += g_rows.row(i).transpose() / d(i);
        }
        grad /= static_cast<double>(n);
        return grad;
    };
    // Newton direction from the (positive semidefinite) negative Hessian.
    auto newton_direction = [&](const Vector& d, const Vector& grad) {
        Matrix H = Matrix::Zero(r, r);
        for (int i = 0; i < n; ++i) {
            Vector gi = g_rows.row(i).transpose();
            H += (gi * gi.transpose()) / (d(i) * d(i));
        }
        H /= static_cast<double>(n);
        Eigen::LDLT<Matrix> ldlt(H);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            return Vector(ldlt.solve(grad));
        }
        Matrix Hr = H + 1e-10 * H.trace() * Matrix::Identity(r, r);
        return Vector(Hr.ldlt().solve(grad));
    };

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        Vector grad = dual_gradient(denoms);
        double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= opts.tol) {
            // Polish with a few full Newton steps: quadratic convergence
            // drives the residual towards rounding level, which in turn makes
            // the identity sum(w_i) = 1 hold to near machine precision (the
            // divergence statistics rely on it cancelling exactly).
            for (int polish = 0; polish < 3 && gnorm > 0.0; ++polish) {
                Vector dir = newton_direction(denoms, grad);
                if (!dir.allFinite()) break;
                Vector t_try = t + dir;
                Vector d_try = (g_rows * t_try).array() + 1.0;
                if (d_try.minCoeff() <= floor) break;
                Vector grad_try = dual_gradient(d_try);
                double gnorm_try = grad_try.lpNorm<Eigen::Infinity>();
                if (!(gnorm_try < gnorm)) break;
                t = t_try;
                denoms = d_try;
                grad = grad_try;
                gnorm = gnorm_try;
            }
            report.status = SolveStatus::ok;
            report.solution = make_solution(g_rows, t, iter, gnorm);
            return report;
        }

        Vector direction = newton_direction(denoms, grad);
        if (!direction.allFinite()) {
            report.status = SolveStatus::infeasible;
            return report;
        }

        // Backtracking: stay strictly inside the weight slab and require an
        // Armijo increase of the concave dual objective.
        double slope = grad.dot(direction);
        double alpha = 1.0;
        bool stepped = false;
        for (int half = 0; half < 60; ++half) {
            Vector t_try = t + alpha * direction;
            Vector d_try = (g_rows * t_try).array() + 1.0;
            if (d_try.minCoeff() > floor) {
                double f_try = dual_objective(d_try);
                // The rounding allowance keeps the search from rejecting
                // full Newton steps near the optimum, where the true increase
                // is below the precision of the objective.
                double allowance = 1e-14 * (1.0 + std::fabs(fval));
                if (f_try >= fval + 1e-4 * alpha * slope - allowance) {
                    t = t_try;
                    denoms = d_try;
                    fval = f_try;
                    stepped = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!stepped || t.lpNorm<Eigen::Infinity>() > 1e8) {
            // The line search collapsed against the boundary of the weight
            // slab, or t is diverging: zero is not in the interior of the
            // convex hull of the g rows.
            report.status = SolveStatus::infeasible;
            return report;
        }
    }
    report.status = SolveStatus::max_iterations;
    return report;
}

SolveReport try_solve_t(const EstimatingModel& model, const Sample& sample,
                        const Vector& theta, const SolveOptions& opts) {
    return try_solve_t(eval_g_all(model, sample, theta), opts);
}

ELSolution solve_t(const EstimatingModel& model, const Sample& sample,
                   const Vector& theta, const SolveOptions& opts) {
    SolveReport report = try_solve_t(model, sample, theta, opts);
    switch (report.status) {
        case SolveStatus::ok:
            return report.solution;
        case SolveStatus::infeasible:
            throw InfeasibleTheta(
                "zero is not in the convex hull of the estimating-function "
                "values at this theta");
        default:
            throw MaxIterations("inner solve hit the iteration cap");
    }
}

double log_el(const EstimatingModel& model, const Sample& sample,
              const Vector& theta, const SolveOptions& opts) {
    return solve_t(model, sample, theta, opts).logel;
}

namespace {

Vector default_initial(const EstimatingModel& model, const Sample& sample) {
    switch (model.builtin) {
        case EstimatingModel::Builtin::mean:
        case EstimatingModel::Builtin::mean_variance: {
            Vector theta(1);
            theta(0) = sample.obs.col(0).mean();
            return theta;
        }
        case EstimatingModel::Builtin::coeff_variation: {
            Vector theta(2);
            theta(0) = sample.obs.col(0).mean();
            theta(1) = sample.obs.col(0).array().square().mean();
            return theta;
        }
        default:
            return Vector::Zero(model.p);
    }
}

// Exactly identified case: theta-hat solves gbar(theta) = 0, where the
// empirical weights stay uniform and the log EL ratio is zero.
ELFit fit_just_identified(const EstimatingModel& model, const Sample& sample,
                          const FitOptions& opts) {
    Vector theta = opts.initial ? *opts.initial : default_initial(model, sample);
    if (!model.in_domain(theta)) {
        throw ParameterOutOfDomain("initial point outside the model domain");
    }

    ELFit fit;
    Vector resid = gbar(model, sample, theta);
    double rnorm = resid.lpNorm<Eigen::Infinity>();
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        if (rnorm <= opts.tol) break;
        Matrix J = eval_G_mean(model, sample, theta);
        Vector step = J.fullPivLu().solve(-resid);
        if (!step.allFinite()) throw SingularMatrix("singular moment Jacobian");

        double alpha = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            Vector theta_try = theta + alpha * step;
            if (model.in_domain(theta_try)) {
                Vector resid_try = gbar(model, sample, theta_try);
                double rnorm_try = resid_try.lpNorm<Eigen::Infinity>();
                if (rnorm_try < rnorm) {
                    theta = theta_try;
                    resid = resid_try;
                    rnorm = rnorm_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            fit.at_boundary = true;
            break;
        }
    }
    if (rnorm > opts.tol) {
        throw NoConvergence("moment equations did not converge (residual " +
                            std::to_string(rnorm) + ")");
    }
    fit.theta_hat = theta;
    fit.iterations = iter;
    fit.converged = true;
    const int n = sample.n();
    fit.inner.t = Vector::Zero(model.r);
    fit.inner.denoms = Vector::Ones(n);
    fit.inner.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
    fit.inner.logel = 0.0;
    fit.inner.grad_norm = rnorm;
    return fit;
}

// Profile log EL and its gradient in theta.  The envelope theorem removes the
// dependence of t on theta:  d logel / d theta = - sum_i G_i' t / d_i.
struct ProfileEval {
    bool feasible = false;
    double logel = -std::numeric_limits<double>::infinity();
    Vector grad;
    ELSolution inner;
};

ProfileEval profile_eval(const EstimatingModel& model, const Sample& sample,
                         const Vector& theta) {
    ProfileEval out;
    if (!model.in_domain(theta)) return out;
    SolveReport report = try_solve_t(model, sample, theta);
    if (report.status != SolveStatus::ok) return out;
    out.feasible = true;
    out.inner = std::move(report.solution);
    out.logel = out.inner.logel;
    out.grad = Vector::Zero(model.p);
    const int n = sample.n();
    for (int i = 0; i < n; ++i) {
        Matrix Gi = model.G(sample.row(i), theta);
        out.grad -= Gi.transpose() * out.inner.t / out.inner.denoms(i);
    }
    return out;
}

// Scalar parameter: the profile log EL is unimodal on its feasible interval
// and its gradient decreases through the maximizer, so bracket the gradient's
// sign change and close in with a bisection-safeguarded secant.  This is far
// more robust than quasi-Newton on the nearly flat top of the profile, where
// objective differences sink below rounding noise.
ELFit fit_profile_scalar(const EstimatingModel& model, const Sample& sample,
                         const ProfileEval& start, double theta0,
                         const FitOptions& opts) {
    auto eval = [&](double th) {
        Vector t(1);
        t(0) = th;
        return profile_eval(model, sample, t);
    };
    ELFit fit;
    int iterations = 0;
    ProfileEval cur = start;
    double theta = theta0;

    if (std::fabs(cur.grad(0)) > opts.grad_tol) {
        const double dir = cur.grad(0) > 0 ? 1.0 : -1.0;
        double step = 1e-2 * (1.0 + std::fabs(theta0));
        double lo = theta0, hi = theta0;
        ProfileEval flo = cur, fhi = cur;
        bool bracketed = false;
        double prev = theta0;
        ProfileEval fprev = cur;
        for (int k = 0; k < 200; ++k) {
            double cand = prev + dir * step;
            ProfileEval fc = eval(cand);
            ++iterations;
            if (!fc.feasible) {
                // Stepped past the convex-hull boundary; come back halfway.
                step *= 0.5;
                if (step < 1e-14 * (1.0 + std::fabs(prev))) break;
                continue;
            }
            if (dir * fc.grad(0) <= 0.0) {
                lo = std::min(prev, cand);
                hi = std::max(prev, cand);
                flo = dir > 0 ? fprev : fc;
                fhi = dir > 0 ? fc : fprev;
                bracketed = true;
                break;
            }
            prev = cand;
            fprev = fc;
            step *= 2.0;
        }
        if (!bracketed) {
            throw NoConvergence("could not bracket the profile maximizer");
        }

        // Invariant: gradient > 0 at lo, < 0 at hi.
        theta = prev;
        cur = fprev;
        for (int k = 0; k < opts.max_iterations; ++k) {
            double glo = flo.grad(0), ghi = fhi.grad(0);
            double cand = hi - ghi * (hi - lo) / (glo - ghi);  // secant
            double width = hi - lo;
            if (!(cand > lo + 0.01 * width && cand < hi - 0.01 * width)) {
                cand = 0.5 * (lo + hi);
            }
            ProfileEval fc = eval(cand);
            ++iterations;
            if (!fc.feasible) {
                // Cannot happen between feasible brackets in exact arithmetic;
                // fall back to whichever bracket end is better.
                break;
            }
            theta = cand;
            cur = fc;
            if (std::fabs(fc.grad(0)) <= opts.grad_tol) break;
            if (fc.grad(0) > 0) {
                lo = cand;
                flo = fc;
            } else {
                hi = cand;
                fhi = fc;
            }
            if (hi - lo <= 1e-14 * (1.0 + std::fabs(cand))) break;
        }
    }

    double gnorm = std::fabs(cur.grad(0));
    if (gnorm > 1e-4) {
        throw NoConvergence("profile fit stalled at gradient norm " +
                            std::to_string(gnorm));
    }
    fit.theta_hat = Vector::Constant(1, theta);
    fit.inner = cur.inner;
    fit.iterations = iterations;
    fit.converged = gnorm <= std::max(opts.grad_tol, 1e-7);
    return fit;
}

// Over-identified case: maximize the profile log EL by BFGS with Armijo
// backtracking on the envelope gradient.
ELFit fit_over_identified(const EstimatingModel& model, const Sample& sample,
                          const FitOptions& opts) {
    Vector theta = opts.initial ? *opts.initial : default_initial(model, sample);
    ProfileEval cur = profile_eval(model, sample, theta);
    if (!cur.feasible) {
        // Walk the initial point toward the sample mean direction until the
        // inner problem becomes feasible.
        Vector fallback = default_initial(model, sample);
        for (int shrink = 1; shrink <= 20 && !cur.feasible; ++shrink) {
            Vector theta_try = theta + (fallback - theta) * (shrink / 20.0);
            cur = profile_eval(model, sample, theta_try);
            if (cur.feasible) theta = theta_try;
        }
        if (!cur.feasible) {
            throw InfeasibleTheta("no feasible starting point for the profile fit");
        }
    }

    if (model.p == 1) return fit_profile_scalar(model, sample, cur, theta(0), opts);

    const int p = model.p;
    Matrix Hinv = Matrix::Identity(p, p);
    ELFit fit;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        double gnorm = cur.grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= opts.grad_tol) break;

        Vector direction = Hinv * cur.grad;  // ascent direction
        if (direction.dot(cur.grad) <= 0.0) {
            Hinv = Matrix::Identity(p, p);
            direction = cur.grad;
        }

        double alpha = 1.0;
        ProfileEval next;
        Vector theta_next;
        bool stepped = false;
        for (int half = 0; half < 60; ++half) {
            theta_next = theta + alpha * direction;
            next = profile_eval(model, sample, theta_next);
            // The allowance forgives objective differences below rounding
            // noise near the maximizer, where the true increase underflows.
            double allowance = 1e-14 * (1.0 + std::fabs(cur.logel));
            if (next.feasible &&
                next.logel >= cur.logel +
                                  1e-4 * alpha * direction.dot(cur.grad) -
                                  allowance) {
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!stepped) {
            fit.at_boundary = true;
            break;
        }

        Vector s = theta_next - theta;
        Vector y = next.grad - cur.grad;  // gradient of a concave objective
        double sy = s.dot(y);
        if (sy < -1e-12) {
            // BFGS update on the negated (convex) problem.
            Matrix I = Matrix::Identity(p, p);
            Vector ym = -y;
            double rho = 1.0 / s.dot(ym);
            Hinv = (I - rho * s * ym.transpose()) * Hinv *
                       (I - rho * ym * s.transpose()) +
                   rho * s * s.transpose();
        } else {
            Hinv = Matrix::Identity(p, p);
        }
        theta = theta_next;
        cur = std::move(next);
    }

    double gnorm = cur.grad.lpNorm<Eigen::Infinity>();
    if (gnorm > opts.grad_tol && !fit.at_boundary) {
        throw NoConvergence("profile gradient norm " + std::to_string(gnorm) +
                            " after " + std::to_string(iter) + " iterations");
    }
    if (gnorm > 1e-4) {
        throw NoConvergence("profile fit stalled at gradient norm " +
                            std::to_string(gnorm));
    }
    fit.theta_hat = theta;
    fit.inner = cur.inner;
    fit.iterations = iter;
    fit.converged = gnorm <= opts.grad_tol;
    return fit;
}

}  // namespace

ELFit fit_unrestricted(const EstimatingModel& model, const Sample& sample,
                       const FitOptions& opts) {
    if (model.r == model.p) return fit_just_identified(model, sample, opts);
    return fit_over_identified(model, sample, opts);
}

namespace {

RestrictedFit restricted_generic(const EstimatingModel& model,
                                 const Constraint& constraint,
                                 const Sample& sample, const FitOptions& opts);

}  // namespace

RestrictedFit cov_restricted_reduced(const Sample& sample, double s,
                                     const FitOptions& opts) {
    const int n = sample.n();
    const Vector x = sample.obs.col(0);

    // Maximize the restricted profile log EL along the constraint curve
    // theta(u) = (u, s u^2).  Each candidate u gets a full inner dual solve
    // (which detects convex-hull infeasibility reliably); the outer search
    // is a bracketed, bisection-safeguarded secant on the envelope
    // derivative  d logel / du = (t1 + 2 s u t2) sum_i 1/d_i.
    //
    // A joint Newton iteration on the stacked stationarity system is cheaper
    // but unsafe here: that system has spurious "roots at infinity" where
    // every denominator blows up and the residual vanishes even though the
    // weights no longer sum to one, and small discrete samples push Newton
    // into them.
    struct Eval {
        bool feasible = false;
        double u = 0.0;
        double logel = -std::numeric_limits<double>::infinity();
        double grad = 0.0;
        ELSolution inner;
    };
    auto eval_at = [&](double u) {
        Eval out;
        out.u = u;
        if (u == 0.0) return out;
        Matrix g(n, 2);
        g.col(0) = x.array() - u;
        g.col(1) = x.array().square() - s * u * u;
        SolveReport rep = try_solve_t(g, {});
        if (rep.status != SolveStatus::ok) return out;
        out.feasible = true;
        out.inner = std::move(rep.solution);
        out.logel = out.inner.logel;
        double sum_inv = 0.0;
        for (int i = 0; i < n; ++i) sum_inv += 1.0 / out.inner.denoms(i);
        out.grad =
            (out.inner.t(0) + 2.0 * s * u * out.inner.t(1)) * sum_inv;
        return out;
    };

    // Feasible starting point: moment-based candidates first, then a sweep
    // over the data range.
    double mean = x.mean();
    double mean_sq = x.array().square().mean();
    double u_scale = (mean_sq > 0.0) ? std::sqrt(mean_sq / s) : 0.0;
    if (mean < 0.0) u_scale = -u_scale;
    std::vector<double> candidates = {0.5 * (mean + u_scale), mean, u_scale};
    {
        double lo = x.minCoeff(), hi = x.maxCoeff();
        for (int j = 1; j < 32; ++j) {
            candidates.push_back(lo + (hi - lo) * j / 32.0);
        }
    }
    Eval cur;
    for (double u0 : candidates) {
        cur = eval_at(u0);
        if (cur.feasible) break;
    }
    if (!cur.feasible) {
        throw InfeasibleTheta(
            "no feasible point on the constrained parameter curve");
    }

    // Bracket a sign change of the envelope derivative around the maximizer.
    const double tol_u = 1e-13;
    int iterations = 0;
    Eval lo_end, hi_end;  // grad > 0 at lo_end.u, grad < 0 at hi_end.u
    {
        double dir = (cur.grad > 0.0) ? 1.0 : -1.0;
        double step = dir * 1e-2 * (1.0 + std::fabs(cur.u));
        Eval probe = cur;
        bool bracketed = false;
        for (int iter = 0; iter < 200 && !bracketed; ++iter) {
            ++iterations;
            Eval next = eval_at(probe.u + step);
            if (!next.feasible) {
                step *= 0.5;
                if (std::fabs(step) <= tol_u * (1.0 + std::fabs(probe.u))) {
                    break;
                }
                continue;
            }
            if ((next.grad > 0.0) != (probe.grad > 0.0)) {
                lo_end = (probe.grad > 0.0) ? probe : next;
                hi_end = (probe.grad > 0.0) ? next : probe;
                bracketed = true;
                break;
            }
            probe = std::move(next);
            step *= 2.0;
        }
        if (!bracketed) {
            // The derivative kept one sign up to the feasibility boundary;
            // the supremum is not attained at an interior point.
            throw NoConvergence(
                "restricted coefficient-of-variation fit failed to bracket "
                "a stationary point");
        }
    }

    // Safeguarded secant on the derivative within [lo_end.u, hi_end.u].
    Eval best = (lo_end.logel >= hi_end.logel) ? lo_end : hi_end;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        ++iterations;
        double a = lo_end.u, b = hi_end.u;
        double width = std::fabs(b - a);
        if (width <= tol_u * (1.0 + std::fabs(best.u))) break;
        double cand = a;
        double denom = hi_end.grad - lo_end.grad;
        if (denom != 0.0) {
            cand = a - lo_end.grad * (b - a) / denom;
        }
        double lo_guard = std::min(a, b) + 0.01 * width;
        double hi_guard = std::max(a, b) - 0.01 * width;
        if (!(cand >= lo_guard && cand <= hi_guard)) {
            cand = 0.5 * (a + b);
        }
        Eval mid = eval_at(cand);
        if (!mid.feasible) break;  // cannot happen for an interior bracket
        if (mid.logel > best.logel) best = mid;
        if (std::fabs(mid.grad) <=
            opts.grad_tol * static_cast<double>(n) *
                (1.0 + std::fabs(mid.logel))) {
            best = mid;
            break;
        }
        ((mid.grad > 0.0) ? lo_end : hi_end) = std::move(mid);
    }

    RestrictedFit fit;
    fit.theta = Vector(2);
    fit.theta << best.u, s * best.u * best.u;
    fit.nu = Vector(1);
    fit.nu << best.inner.t(1);
    fit.inner = std::move(best.inner);
    fit.iterations = iterations;
    fit.converged = true;
    return fit;
}

namespace {

RestrictedFit restricted_generic(const EstimatingModel& model,
                                 const Constraint& constraint,
                                 const Sample& sample, const FitOptions& opts) {
    const int p = model.p;
    const int r = model.r;
    const int q = constraint.q;
    const int dim = p + r + q;
    const int n = sample.n();
    const double floor = 1.0 / static_cast<double>(n);

    // Stacked stationarity system in z = (theta, t, nu):
    //   F1 (r):  (1/n) sum g_i / d_i                = 0   (moment condition)
    //   F2 (p):  (1/n) sum G_i' t / d_i + C' nu     = 0   (stationarity in theta)
    //   F3 (q):  c(theta)                           = 0
    struct Eval {
        bool ok = false;
        Vector F;
        Vector denoms;
    };
    auto evaluate = [&](const Vector& z) {
        Eval out;
        Vector theta = z.head(p);
        Vector t = z.segment(p, r);
        Vector nu = z.tail(q);
        if (!model.in_domain(theta)) return out;
        Matrix g_rows = eval_g_all(model, sample, theta);
        Vector d = (g_rows * t).array() + 1.0;
        if (d.minCoeff() <= floor) return out;
        Vector F1 = Vector::Zero(r);
        Vector F2 = Vector::Zero(p);
        for (int i = 0; i < n; ++i) {
            F1 += g_rows.row(i).transpose() / d(i);
            F2 += model.G(sample.row(i), theta).transpose() * t / d(i);
        }
        F1 /= n;
        F2 /= n;
        F2 += constraint.C(theta).transpose() * nu;
        out.F.resize(dim);
        out.F << F1, F2, constraint.c(theta);
        out.denoms = d;
        out.ok = true;
        return out;
    };

    // Initial point: unrestricted fit projected onto the constraint set by
    // Gauss-Newton, then the inner solve at that theta, then least-squares nu.
    Vector theta0;
    try {
        theta0 = fit_unrestricted(model, sample, opts).theta_hat;
    } catch (const Error&) {
        theta0 = opts.initial ? *opts.initial : Vector::Zero(p);
    }
    for (int step = 0; step < 50; ++step) {
        Vector cval = constraint.c(theta0);
        if (cval.lpNorm<Eigen::Infinity>() < 1e-12) break;
        Matrix C = constraint.C(theta0);
        Vector delta =
            C.transpose() * (C * C.transpose()).fullPivLu().solve(cval);
        Vector theta_try = theta0 - delta;
        if (!model.in_domain(theta_try)) {
            theta_try = theta0 - 0.25 * delta;
            if (!model.in_domain(theta_try)) break;
        }
        theta0 = theta_try;
    }
    if (!model.in_domain(theta0)) {
        throw InfeasibleConstraint("could not reach the constraint set");
    }

    Vector z = Vector::Zero(dim);
    z.head(p) = theta0;
    {
        SolveReport inner = try_solve_t(model, sample, theta0);
        if (inner.status == SolveStatus::ok) {
            z.segment(p, r) = inner.solution.t;
        }
        Eval probe = evaluate(z);
        if (probe.ok) {
            Matrix C = constraint.C(theta0);
            Vector f2 = probe.F.segment(r, p) - C.transpose() * z.tail(q);
            z.tail(q) =
                -(C * C.transpose()).fullPivLu().solve(C * f2);
        }
    }

    Eval cur = evaluate(z);
    if (!cur.ok) throw InfeasibleConstraint("infeasible restricted start");
    double rnorm = cur.F.lpNorm<Eigen::Infinity>();

    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        if (rnorm <= 1e-8) break;

        // Forward-difference Jacobian of the stacked system (dim is small).
        Matrix J(dim, dim);
        for (int j = 0; j < dim; ++j) {
            double hstep = 1e-7 * (1.0 + std::fabs(z(j)));
            Vector zp = z;
            zp(j) += hstep;
            Eval ev = evaluate(zp);
            if (!ev.ok) {
                zp(j) = z(j) - hstep;
                ev = evaluate(zp);
                if (!ev.ok) throw NoConvergence("restricted fit left the domain");
                J.col(j) = (cur.F - ev.F) / hstep;
            } else {
                J.col(j) = (ev.F - cur.F) / hstep;
            }
        }
        Vector step = J.fullPivLu().solve(-cur.F);
        if (!step.allFinite()) throw SingularMatrix("singular restricted system");

        double alpha = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            Eval next = evaluate(z + alpha * step);
            if (next.ok) {
                double rnorm_next = next.F.lpNorm<Eigen::Infinity>();
                if (rnorm_next < rnorm) {
                    z += alpha * step;
                    cur = std::move(next);
                    rnorm = rnorm_next;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
    }
    if (rnorm > 1e-8) {
        throw NoConvergence("restricted fit residual " + std::to_string(rnorm));
    }
    {
        // Reject spurious "roots at infinity": there the stacked residual
        // vanishes because every denominator diverges, but the implied
        // weights no longer form a probability vector.
        double sum_inv = 0.0;
        for (int i = 0; i < n; ++i) sum_inv += 1.0 / cur.denoms(i);
        if (std::fabs(sum_inv - static_cast<double>(n)) >
            1e-6 * static_cast<double>(n)) {
            throw NoConvergence(
                "restricted fit converged to a degenerate stationary point");
        }
    }

    RestrictedFit fit;
    fit.theta = z.head(p);
    fit.nu = z.tail(q);
    fit.inner.t = z.segment(p, r);
    fit.inner.denoms = cur.denoms;
    fit.inner.weights =
        1.0 / (static_cast<double>(n) * cur.denoms.array());
    double logel = 0.0;
    for (int i = 0; i < n; ++i) logel -= std::log(cur.denoms(i));
    fit.inner.logel = logel;
    fit.inner.grad_norm = rnorm;
    fit.iterations = iter;
    fit.converged = true;
    return fit;
}

}  // namespace

RestrictedFit fit_restricted(const EstimatingModel& model,
                             const Constraint& constraint,
                             const Sample& sample, const FitOptions& opts) {
    if (model.builtin == EstimatingModel::Builtin::coeff_variation &&
        constraint.cov_quadratic_level.has_value()) {
        return cov_restricted_reduced(sample, *constraint.cov_quadratic_level,
                                      opts);
    }
    return restricted_generic(model, constraint, sample, opts);
}

namespace {

Matrix safe_inverse(const Matrix& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw SingularMatrix(what);
    double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    double emin = es.eigenvalues().cwiseAbs().minCoeff();
    if (!(emax > 0.0) || emin < 1e-12 * emax) throw SingularMatrix(what);
    return es.eigenvectors() *
           es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

}  // namespace

CovarianceEstimates estimate_covariances(const EstimatingModel& model,
                                         const Sample& sample,
                                         const Vector& theta,
                                         const Constraint* constraint) {
    const int n = sample.n();
    Matrix g_rows = eval_g_all(model, sample, theta);
    CovarianceEstimates cov;
    cov.S11 = g_rows.transpose() * g_rows / static_cast<double>(n);
    cov.S12 = eval_G_mean(model, sample, theta);

    if (model.r == model.p) {
        // Square S12: V = (S12' S11^-1 S12)^-1 = S12^-1 S11 S12^-T and R = 0.
        // This form never inverts S11, which is singular whenever the sample
        // has fewer distinct values than moment conditions (common for small
        // discrete samples) even though V itself is perfectly well defined.
        Eigen::FullPivLU<Matrix> lu(cov.S12);
        if (!lu.isInvertible()) {
            throw SingularMatrix("moment Jacobian is singular");
        }
        Matrix S12_inv = lu.inverse();
        cov.V = S12_inv * cov.S11 * S12_inv.transpose();
        cov.R = Matrix::Zero(model.r, model.r);
    } else {
        Matrix S11_inv =
            safe_inverse(cov.S11, "second-moment matrix is singular");
        Matrix inner = cov.S12.transpose() * S11_inv * cov.S12;
        cov.V = safe_inverse(inner, "sensitivity matrix is rank deficient");
        cov.R = S11_inv -
                S11_inv * cov.S12 * cov.V * cov.S12.transpose() * S11_inv;
    }

    if (constraint != nullptr) {
        Matrix C = constraint->C(theta);
        cov.Q = safe_inverse(C * cov.V * C.transpose(),
                             "constrained variance is singular");
        cov.P = cov.V - cov.V * C.transpose() * (*cov.Q) * C * cov.V;
    }
    return cov;
}

Vector influence_function(const EstimatingModel& model, const Vector& x,
                          const Vector& theta0,
                          const CovarianceEstimates& cov) {
    Matrix S11_inv = safe_inverse(cov.S11, "second-moment matrix is singular");
    return cov.V * cov.S12.transpose() * S11_inv * model.g(x, theta0);
}

double influence_function_2(const EstimatingModel& model, const Vector& x,
                            const Vector& theta0,
                            const CovarianceEstimates& cov) {
    Matrix S11_inv = safe_inverse(cov.S11, "second-moment matrix is singular");
    Vector gval = model.g(x, theta0);
    Vector inner = cov.S12.transpose() * S11_inv * gval;
    return 2.0 * inner.dot(cov.V * inner);
}

}  // namespace eldiv
