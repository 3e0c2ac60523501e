#include "eldiv/divergence.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace eldiv {

namespace {

constexpr double kLimitTol = 1e-8;  // dispatch window around removable points

bool near(double x, double y) { return std::fabs(x - y) < kLimitTol; }

}  // namespace

double PhiFamily::operator()(double x) const {
    if (x < 0.0) throw DomainError("phi generators are defined on [0, inf)");
    if (kind == Kind::matusita) {
        return -std::sqrt(x) + 0.5 * (x + 1.0);
    }
    if (near(lambda, 0.0)) {  // x log x - x + 1
        if (x == 0.0) return 1.0;
        return x * std::log(x) - x + 1.0;
    }
    if (near(lambda, -1.0)) {  // -log x + x - 1
        if (x == 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(x) + x - 1.0;
    }
    if (x == 0.0) {
        if (lambda + 1.0 < 0.0) return std::numeric_limits<double>::infinity();
        return 1.0 / (1.0 + lambda);
    }
    // x^(lambda+1) - x = x * (x^lambda - 1); expm1 avoids the cancellation in
    // x^lambda - 1 that otherwise dominates the value near x = 1.
    return (x * std::expm1(lambda * std::log(x)) - lambda * (x - 1.0)) /
           (lambda * (lambda + 1.0));
}

double PhiFamily::deriv(double x) const {
    if (x <= 0.0) throw DomainError("phi' requires x > 0");
    if (kind == Kind::matusita) {
        return -0.5 / std::sqrt(x) + 0.5;
    }
    if (near(lambda, 0.0)) return std::log(x);
    if (near(lambda, -1.0)) return -1.0 / x + 1.0;
    return ((lambda + 1.0) * std::pow(x, lambda) - 1.0 - lambda) /
           (lambda * (lambda + 1.0));
}

double PhiFamily::curvature_at_one() const {
    return kind == Kind::matusita ? 0.25 : 1.0;
}

std::string PhiFamily::label() const {
    if (kind == Kind::matusita) return "matusita";
    std::ostringstream os;
    os << "power(" << lambda << ")";
    return os.str();
}

double HFunction::operator()(double x) const {
    switch (kind) {
        case Kind::identity:
            return x;
        case Kind::renyi: {
            double aa = a * (a - 1.0);
            if (std::fabs(aa) < kLimitTol) return x;
            double arg = aa * x + 1.0;
            if (arg <= 0.0) throw DomainError("Renyi transform outside domain");
            return std::log(arg) / aa;
        }
        case Kind::sharma_mittal: {
            double aa = a * (a - 1.0);
            if (std::fabs(aa) < kLimitTol) return x;
            double arg = aa * x + 1.0;
            if (arg <= 0.0) {
                throw DomainError("Sharma-Mittal transform outside domain");
            }
            if (near(b, 1.0)) return std::log(arg) / (a - 1.0);
            double expo = (b - 1.0) / (a - 1.0);
            return (std::pow(arg, expo) - 1.0) / (b - 1.0);
        }
        case Kind::neg_log_complement: {
            if (x >= 1.0) throw DomainError("-log(1-x) requires x < 1");
            return -std::log(1.0 - x);
        }
    }
    throw DomainError("unknown transform");
}

double HFunction::deriv(double x) const {
    switch (kind) {
        case Kind::identity:
            return 1.0;
        case Kind::renyi: {
            double aa = a * (a - 1.0);
            if (std::fabs(aa) < kLimitTol) return 1.0;
            double arg = aa * x + 1.0;
            if (arg <= 0.0) throw DomainError("Renyi transform outside domain");
            return 1.0 / arg;
        }
        case Kind::sharma_mittal: {
            double aa = a * (a - 1.0);
            if (std::fabs(aa) < kLimitTol) return 1.0;
            double arg = aa * x + 1.0;
            if (arg <= 0.0) {
                throw DomainError("Sharma-Mittal transform outside domain");
            }
            if (near(b, 1.0)) return a / arg;
            double expo = (b - 1.0) / (a - 1.0);
            return a * std::pow(arg, expo - 1.0);
        }
        case Kind::neg_log_complement:
            if (x >= 1.0) throw DomainError("-log(1-x) requires x < 1");
            return 1.0 / (1.0 - x);
    }
    throw DomainError("unknown transform");
}

double HFunction::deriv_at_zero() const {
    switch (kind) {
        case Kind::identity:
            return 1.0;
        case Kind::renyi:
            return 1.0;
        case Kind::sharma_mittal:
            return std::fabs(a * (a - 1.0)) < kLimitTol ? 1.0 : a;
        case Kind::neg_log_complement:
            return 1.0;
    }
    throw DomainError("unknown transform");
}

double d_phi_uniform(const PhiFamily& phi, const ELSolution& el) {
    const Eigen::Index n = el.denoms.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += phi(el.denoms(i)) / el.denoms(i);
    }
    return acc / static_cast<double>(n);
}

double d_phi_between(const PhiFamily& phi, const ELSolution& from,
                     const ELSolution& to) {
    const Eigen::Index n = from.denoms.size();
    if (to.denoms.size() != n) {
        throw SampleMismatch("tilted laws come from samples of different size");
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += to.weights(i) * phi(from.weights(i) / to.weights(i));
    }
    return acc;
}

double statistic_T(const PhiFamily& phi, const HFunction& h, const ELFit& fit,
                   const ELSolution& el0) {
    const double n = static_cast<double>(el0.denoms.size());
    double d0 = d_phi_uniform(phi, el0);
    double dhat = d_phi_uniform(phi, fit.inner);
    return 2.0 * n * (h(d0) - h(dhat)) /
           (phi.curvature_at_one() * h.deriv_at_zero());
}

namespace {

// Closed forms of the direct power-divergence statistic between the tilted
// laws at theta-hat (denominators dh) and theta0 (denominators d0):
//   lambda generic: (2/(lambda(lambda+1))) (sum d0^lambda / dh^(lambda+1) - n)
//   lambda -> 0:    2 sum (1/dh) log(d0/dh)
//   lambda -> -1:   2 sum (1/d0) log(dh/d0)
double s_power_closed(double lambda, const Vector& dh, const Vector& d0) {
    const Eigen::Index n = d0.size();
    if (near(lambda, 0.0)) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            acc += std::log(d0(i) / dh(i)) / dh(i);
        }
        return 2.0 * acc;
    }
    if (near(lambda, -1.0)) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            acc += std::log(dh(i) / d0(i)) / d0(i);
        }
        return 2.0 * acc;
    }
    // Accumulate d0^lambda / dh^(lambda+1) - 1 per term: the statistic is the
    // sum minus n, and subtracting n after the fact cancels catastrophically
    // near the null where every ratio is close to one.
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::expm1(lambda * std::log(d0(i)) -
                          (lambda + 1.0) * std::log(dh(i)));
    }
    return 2.0 * acc / (lambda * (lambda + 1.0));
}

}  // namespace

double statistic_S(const PhiFamily& phi, const HFunction& h, const ELFit& fit,
                   const ELSolution& el0) {
    const double n = static_cast<double>(el0.denoms.size());
    if (phi.kind == PhiFamily::Kind::power_divergence &&
        h.kind == HFunction::Kind::identity) {
        return s_power_closed(phi.lambda, fit.inner.denoms, el0.denoms);
    }
    double d = d_phi_between(phi, fit.inner, el0);
    return 2.0 * n * h(d) / (phi.curvature_at_one() * h.deriv_at_zero());
}

double renyi_statistic(double a, const ELSolution& el_hat,
                       const ELSolution& el0) {
    const Eigen::Index n = el0.denoms.size();
    if (el_hat.denoms.size() != n) {
        throw SampleMismatch("tilted laws come from samples of different size");
    }
    double aa = a * (a - 1.0);
    if (std::fabs(a - 1.0) < kLimitTol) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            acc += std::log(el0.denoms(i) / el_hat.denoms(i)) / el_hat.denoms(i);
        }
        return 2.0 * acc;
    }
    if (std::fabs(a) < kLimitTol) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            acc += std::log(el_hat.denoms(i) / el0.denoms(i)) / el0.denoms(i);
        }
        return 2.0 * acc;
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::pow(el0.denoms(i), a - 1.0) / std::pow(el_hat.denoms(i), a);
    }
    double arg = acc / static_cast<double>(n);
    if (arg <= 0.0) throw DomainError("Renyi statistic outside domain");
    return 2.0 * static_cast<double>(n) * std::log(arg) / aa;
}

}  // namespace eldiv
