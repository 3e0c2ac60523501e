#pragma once

#include <string>

#include "eldiv/el_core.hpp"

namespace eldiv {

// A convex generator phi: (0, inf) -> R with phi(1) = 0, phi''(1) > 0.
// The power-divergence family
//   phi_lambda(x) = (x^(lambda+1) - x - lambda (x - 1)) / (lambda (lambda+1))
// covers the classical cases: lambda -> 0 gives x log x - x + 1
// (Kullback-Leibler), lambda -> -1 gives -log x + x - 1 (reversed KL),
// lambda = 1 gives (x-1)^2 / 2 (Pearson), lambda = -1/2 gives
// 2 (sqrt(x) - 1)^2 (Freeman-Tukey), lambda = 2/3 the Cressie-Read choice.
// phi''(1) = 1 for every lambda.  The Matusita generator
// -sqrt(x) + (x+1)/2 (phi''(1) = 1/4) is also provided; it pairs with the
// -log(1 - x) outer transform below.
struct PhiFamily {
    enum class Kind { power_divergence, matusita };
    Kind kind = Kind::power_divergence;
    double lambda = 0.0;  // used when kind == power_divergence

    static PhiFamily power(double lambda) { return {Kind::power_divergence, lambda}; }
    static PhiFamily kullback() { return power(0.0); }
    static PhiFamily reversed_kullback() { return power(-1.0); }
    static PhiFamily pearson() { return power(1.0); }
    static PhiFamily freeman_tukey() { return power(-0.5); }
    static PhiFamily cressie_read() { return power(2.0 / 3.0); }
    static PhiFamily matusita_family() { return {Kind::matusita, 0.0}; }

    double operator()(double x) const;  // phi(x), x >= 0
    double deriv(double x) const;       // phi'(x), x > 0
    double curvature_at_one() const;    // phi''(1)

    std::string label() const;
};

// Increasing differentiable h: [0, inf) -> R with h(0) = 0, h'(0) > 0,
// applied on top of a phi-divergence.  The identity gives plain
// phi-divergences.  The Renyi transform of order a,
//   h(x) = log(a (a-1) x + 1) / (a (a-1)),   a not in {0, 1},
// pairs with phi_{a-1} from the power family; the a -> 0 and a -> 1 limits
// are h(x) = x.  Sharma-Mittal adds a second index b, and -log(1 - x) pairs
// with the Matusita generator (Bhattacharyya distance).
struct HFunction {
    enum class Kind { identity, renyi, sharma_mittal, neg_log_complement };
    Kind kind = Kind::identity;
    double a = 0.0;
    double b = 0.0;  // used by sharma_mittal

    static HFunction identity_fn() { return {Kind::identity, 0.0, 0.0}; }
    static HFunction renyi(double a) { return {Kind::renyi, a, 0.0}; }
    static HFunction sharma_mittal(double a, double b) { return {Kind::sharma_mittal, a, b}; }
    static HFunction neg_log_complement_fn() { return {Kind::neg_log_complement, 0.0, 0.0}; }

    double operator()(double x) const;
    double deriv(double x) const;  // h'(x)
    double deriv_at_zero() const;  // h'(0)
};

// Divergence between the plain empirical distribution (weights 1/n) and the
// tilted distribution implied by an inner solution at theta:
//   D_phi = (1/n) sum_i phi(d_i) / d_i,   d_i = 1 + t'g_i.
double d_phi_uniform(const PhiFamily& phi, const ELSolution& el);

// Divergence between two tilted distributions over the same observations:
// with P_i = from.weights[i] and Q_i = to.weights[i],
//   D_phi(P, Q) = sum_i Q_i phi(P_i / Q_i).
double d_phi_between(const PhiFamily& phi, const ELSolution& from,
                     const ELSolution& to);

// Divergence-difference statistic: with el0 the inner solution at theta0 and
// fit the unrestricted estimate,
//   T = (2n / (phi''(1) h'(0))) * [ h(D_phi at theta0) - h(D_phi at theta-hat) ].
// Asymptotically chi-square(p) under the null; may be negative in finite
// samples when r > p.
double statistic_T(const PhiFamily& phi, const HFunction& h, const ELFit& fit,
                   const ELSolution& el0);

// Direct-divergence statistic between the two tilted laws:
//   S = (2n / (phi''(1) h'(0))) * h( D_phi(tilted at theta-hat, tilted at theta0) ).
// Nonnegative; equals T when r == p.  Power-divergence generators with the
// identity transform use the closed form
//   S_lambda = (2 / (lambda (lambda+1))) * ( sum_i d0_i^lambda / dhat_i^(lambda+1) - n ),
// with the usual log limits at lambda = 0 and lambda = -1.
double statistic_S(const PhiFamily& phi, const HFunction& h, const ELFit& fit,
                   const ELSolution& el0);

// Renyi-transformed statistic of order a between the tilted laws at theta-hat
// and theta0.  For a outside {0, 1}:
//   (2n / (a (a-1))) * log( (1/n) sum_i d0_i^(a-1) / dhat_i^a );
// the limits are twice the Kullback divergences
//   a -> 1:  2 sum_i (1/dhat_i) log(d0_i / dhat_i),
//   a -> 0:  2 sum_i (1/d0_i)  log(dhat_i / d0_i).
// Identical to statistic_S with (renyi(a), power(a-1)).
double renyi_statistic(double a, const ELSolution& el_hat,
                       const ELSolution& el0);

}  // namespace eldiv
