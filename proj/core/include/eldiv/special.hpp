#pragma once

namespace eldiv {

// Regularized lower incomplete gamma P(s, x); series expansion for
// x < s + 1, Lentz continued fraction otherwise.  Absolute error < 1e-12.
double regularized_gamma_p(double s, double x);

// Standard normal CDF.
double normal_cdf(double x);

// Chi-square CDF with df degrees of freedom; 0 for x <= 0.
double chi2_cdf(double x, int df);

// Upper-alpha quantile: the value q with chi2_cdf(q, df) = 1 - alpha,
// located by bracketing + bisection/Newton refinement to 1e-10.
double chi2_quantile(int df, double alpha);

// Noncentral chi-square CDF with noncentrality delta >= 0, evaluated as a
// Poisson(delta/2) mixture of central CDFs, truncated once the unaccounted
// Poisson mass falls below 1e-12.  delta = 0 reduces exactly to chi2_cdf.
double noncentral_chi2_cdf(double x, int df, double delta);

// Asymptotic Kolmogorov-Smirnov tail probability for the one-sample test:
// p-value for observed sup-distance d with sample size n.
double ks_pvalue(double d, int n);

}  // namespace eldiv
