#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "eldiv/errors.hpp"

namespace eldiv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A sample of n observations in R^k, stored one observation per row.
struct Sample {
    Matrix obs;  // n x k

    int n() const { return static_cast<int>(obs.rows()); }
    int k() const { return static_cast<int>(obs.cols()); }

    Vector row(int i) const { return obs.row(i).transpose(); }

    // Convenience constructor for univariate data.
    static Sample from_values(const std::vector<double>& values);
};

// A moment-condition model: r estimating functions g(x, theta) in R^r with
// parameter theta in R^p and observations x in R^k, r >= p.  G is the
// Jacobian dg/dtheta (r x p).
struct EstimatingModel {
    int k = 1;  // observation dimension
    int p = 1;  // parameter dimension
    int r = 1;  // number of estimating functions (r >= p)

    std::function<Vector(const Vector& x, const Vector& theta)> g;
    std::function<Matrix(const Vector& x, const Vector& theta)> G;
    std::function<bool(const Vector& theta)> in_domain;

    // Built-in models get a tag so solvers can dispatch to specialized
    // (faster / more robust) routines where one exists.
    enum class Builtin { none, mean, mean_variance, coeff_variation };
    Builtin builtin = Builtin::none;
};

// A smooth constraint c(theta) = 0 in R^q (q <= p) with Jacobian C = dc/dtheta
// (q x p), assumed full rank q on the constraint set.
struct Constraint {
    int q = 1;
    std::function<Vector(const Vector& theta)> c;
    std::function<Matrix(const Vector& theta)> C;

    // Set when this constraint pins the ratio sigma/mu of the
    // coefficient-of-variation model:  c(u, v) = v - s*u^2 with s = 1 + rho^2.
    // Lets the restricted fit use the closed two-equation reduction.
    std::optional<double> cov_quadratic_level;
};

// --- Built-in model factories -----------------------------------------------

// k=1, p=1, r=1:  g(x, theta) = x - theta  (the population mean).
EstimatingModel make_mean_model();

// k=1, p=1, r=2:  g1 = x - theta, g2 = x^2 - 2*theta^2 - 1.  Identifies the
// mean of N(theta, theta^2 + 1); over-identified since r > p.
EstimatingModel make_mean_variance_model();

// k=1, p=2, r=2:  theta = (u, v), g1 = x - u, g2 = x^2 - v.  Domain v > u^2.
EstimatingModel make_cov_model();

// Constraint v = (1 + rho^2) * u^2, i.e. sigma/|mu| = rho for the model above.
Constraint make_cov_constraint(double rho = 1.0);

// --- Batch evaluation --------------------------------------------------------

// Evaluate g at every observation; returns an n x r matrix whose i-th row is
// g(x_i, theta)^T.  Throws ParameterOutOfDomain / SampleMismatch /
// NumericalFailure as appropriate.
Matrix eval_g_all(const EstimatingModel& model, const Sample& sample,
                  const Vector& theta);

// Mean of the rows of eval_g_all: the empirical moment vector.
Vector gbar(const EstimatingModel& model, const Sample& sample,
            const Vector& theta);

// Mean of the parameter Jacobians G(x_i, theta): an r x p matrix.
Matrix eval_G_mean(const EstimatingModel& model, const Sample& sample,
                   const Vector& theta);

// --- Derivative verification --------------------------------------------------

struct JacobianCheckReport {
    bool passed = false;
    double worst_abs_error = 0.0;   // worst |analytic - central difference|
    double tolerance = 0.0;
    int probes = 0;
};

// Compare the model's analytic G (and, if given, the constraint's C) against
// central finite differences at `probes` random (x, theta) pairs drawn inside
// the domain.  The pass threshold scales with the magnitude of the entries.
JacobianCheckReport check_jacobians(const EstimatingModel& model,
                                    const Sample& sample,
                                    const Constraint* constraint = nullptr,
                                    int probes = 100,
                                    std::uint64_t seed = 20240915u);

}  // namespace eldiv
