#include "eldiv/model.hpp"

#include <cmath>

#include "eldiv/rng.hpp"

namespace eldiv {

Sample Sample::from_values(const std::vector<double>& values) {
    Sample s;
    s.obs.resize(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.obs(static_cast<Eigen::Index>(i), 0) = values[i];
    }
    return s;
}

EstimatingModel make_mean_model() {
    EstimatingModel m;
    m.k = 1;
    m.p = 1;
    m.r = 1;
    m.builtin = EstimatingModel::Builtin::mean;
    m.g = [](const Vector& x, const Vector& theta) {
        Vector out(1);
        out(0) = x(0) - theta(0);
        return out;
    };
    m.G = [](const Vector&, const Vector&) {
        Matrix out(1, 1);
        out(0, 0) = -1.0;
        return out;
    };
    m.in_domain = [](const Vector&) { return true; };
    return m;
}

EstimatingModel make_mean_variance_model() {
    EstimatingModel m;
    m.k = 1;
    m.p = 1;
    m.r = 2;
    m.builtin = EstimatingModel::Builtin::mean_variance;
    m.g = [](const Vector& x, const Vector& theta) {
        Vector out(2);
        double th = theta(0);
        out(0) = x(0) - th;
        out(1) = x(0) * x(0) - 2.0 * th * th - 1.0;
        return out;
    };
    m.G = [](const Vector&, const Vector& theta) {
        Matrix out(2, 1);
        out(0, 0) = -1.0;
        out(1, 0) = -4.0 * theta(0);
        return out;
    };
    m.in_domain = [](const Vector&) { return true; };
    return m;
}

EstimatingModel make_cov_model() {
    EstimatingModel m;
    m.k = 1;
    m.p = 2;
    m.r = 2;
    m.builtin = EstimatingModel::Builtin::coeff_variation;
    m.g = [](const Vector& x, const Vector& theta) {
        Vector out(2);
        out(0) = x(0) - theta(0);
        out(1) = x(0) * x(0) - theta(1);
        return out;
    };
    m.G = [](const Vector&, const Vector&) {
        Matrix out(2, 2);
        out << -1.0, 0.0, 0.0, -1.0;
        return out;
    };
    // v must exceed u^2 so the implied variance v - u^2 is positive.
    m.in_domain = [](const Vector& theta) { return theta(1) > theta(0) * theta(0); };
    return m;
}

Constraint make_cov_constraint(double rho) {
    const double s = 1.0 + rho * rho;
    Constraint c;
    c.q = 1;
    c.cov_quadratic_level = s;
    c.c = [s](const Vector& theta) {
        Vector out(1);
        out(0) = theta(1) - s * theta(0) * theta(0);
        return out;
    };
    c.C = [s](const Vector& theta) {
        Matrix out(1, 2);
        out(0, 0) = -2.0 * s * theta(0);
        out(0, 1) = 1.0;
        return out;
    };
    return c;
}

namespace {

void validate(const EstimatingModel& model, const Sample& sample,
              const Vector& theta) {
    if (sample.k() != model.k) {
        throw SampleMismatch("sample has " + std::to_string(sample.k()) +
                             " columns, model expects " +
                             std::to_string(model.k));
    }
    if (theta.size() != model.p) {
        throw SampleMismatch("theta has dimension " +
                             std::to_string(theta.size()) +
                             ", model expects " + std::to_string(model.p));
    }
    if (!model.in_domain(theta)) {
        throw ParameterOutOfDomain("theta outside the model domain");
    }
}

}  // namespace

Matrix eval_g_all(const EstimatingModel& model, const Sample& sample,
                  const Vector& theta) {
    validate(model, sample, theta);
    const int n = sample.n();
    Matrix out(n, model.r);
    for (int i = 0; i < n; ++i) {
        Vector gi = model.g(sample.row(i), theta);
        if (gi.size() != model.r) {
            throw SampleMismatch("g returned wrong dimension");
        }
        if (!gi.allFinite()) {
            throw NumericalFailure("non-finite estimating function value");
        }
        out.row(i) = gi.transpose();
    }
    return out;
}

Vector gbar(const EstimatingModel& model, const Sample& sample,
            const Vector& theta) {
    return eval_g_all(model, sample, theta).colwise().mean().transpose();
}

Matrix eval_G_mean(const EstimatingModel& model, const Sample& sample,
                   const Vector& theta) {
    validate(model, sample, theta);
    const int n = sample.n();
    Matrix acc = Matrix::Zero(model.r, model.p);
    for (int i = 0; i < n; ++i) {
        Matrix Gi = model.G(sample.row(i), theta);
        if (Gi.rows() != model.r || Gi.cols() != model.p) {
            throw SampleMismatch("G returned wrong dimensions");
        }
        if (!Gi.allFinite()) {
            throw NumericalFailure("non-finite Jacobian value");
        }
        acc += Gi;
    }
    return acc / static_cast<double>(n);
}

JacobianCheckReport check_jacobians(const EstimatingModel& model,
                                    const Sample& sample,
                                    const Constraint* constraint, int probes,
                                    std::uint64_t seed) {
    RepRng rng(seed);
    JacobianCheckReport report;
    report.probes = probes;

    auto draw_theta = [&]() {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            Vector theta(model.p);
            for (int j = 0; j < model.p; ++j) theta(j) = rng.normal(0.0, 2.0);
            if (model.builtin == EstimatingModel::Builtin::coeff_variation) {
                // Keep probes inside v > u^2 with room to spare.
                theta(1) = theta(0) * theta(0) + 0.5 + std::fabs(theta(1));
            }
            if (model.in_domain(theta)) return theta;
        }
        throw NoBracket("could not draw an in-domain probe point");
    };

    double worst = 0.0;
    double scale = 1.0;
    const int n = sample.n();
    for (int probe = 0; probe < probes; ++probe) {
        Vector theta = draw_theta();
        Vector x = sample.row(static_cast<int>(rng.raw() % n));

        Matrix analytic = model.G(x, theta);
        for (int j = 0; j < model.p; ++j) {
            double hstep = 1e-6 * (1.0 + std::fabs(theta(j)));
            Vector tp = theta, tm = theta;
            tp(j) += hstep;
            tm(j) -= hstep;
            if (!model.in_domain(tp) || !model.in_domain(tm)) continue;
            Vector diff = (model.g(x, tp) - model.g(x, tm)) / (2.0 * hstep);
            for (int a = 0; a < model.r; ++a) {
                worst = std::max(worst, std::fabs(analytic(a, j) - diff(a)));
                scale = std::max(scale, std::fabs(analytic(a, j)));
            }
        }
        if (constraint != nullptr) {
            Matrix canalytic = constraint->C(theta);
            for (int j = 0; j < model.p; ++j) {
                double hstep = 1e-6 * (1.0 + std::fabs(theta(j)));
                Vector tp = theta, tm = theta;
                tp(j) += hstep;
                tm(j) -= hstep;
                Vector diff =
                    (constraint->c(tp) - constraint->c(tm)) / (2.0 * hstep);
                for (int a = 0; a < constraint->q; ++a) {
                    worst = std::max(worst,
                                     std::fabs(canalytic(a, j) - diff(a)));
                    scale = std::max(scale, std::fabs(canalytic(a, j)));
                }
            }
        }
    }
    report.worst_abs_error = worst;
    report.tolerance = 1e-5 * scale;
    report.passed = worst <= report.tolerance;
    return report;
}

}  // namespace eldiv
