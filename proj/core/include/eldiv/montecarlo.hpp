#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eldiv/composite.hpp"
#include "eldiv/inference.hpp"

namespace eldiv {

// The two simulation designs:
//   simple_mean_variance - data N(theta0, theta0^2 + 1), mean-variance model
//                          (r = 2 > p = 1); per replication each family's
//                          confidence interval is inverted and checked for
//                          theta0, recording coverage and width.
//   composite_cov        - coefficient-of-variation model, null sigma/mu = 1;
//                          per replication each statistic is compared with the
//                          chi-square(1) quantile (equivalent to inverting the
//                          confidence region for sigma/mu), recording coverage.
enum class Scenario { simple_mean_variance, composite_cov };

// Sampling distributions.  normal_mean_variance is N(theta0, theta0^2 + 1);
// the other three are the composite-null designs: N(1, 1),
// 1 + sqrt(0.6) * t_5, and Poisson(1) (all with sigma/mu = 1).
enum class SimDistribution { normal_mean_variance, normal_1_1, shifted_t5, poisson_1 };

// One statistic family inside a study.
struct SimFamily {
    enum class Kind { T, S, renyi, composite_phi, wald, score, lagrange };
    Kind kind = Kind::T;
    double lambda = 0.0;  // power-divergence index for T / S / composite_phi
    double a = 1.0;       // Renyi order

    std::string label() const;
    StatFamily to_stat_family() const;  // valid for T / S / renyi
};

struct SimConfig {
    Scenario scenario = Scenario::simple_mean_variance;
    SimDistribution distribution = SimDistribution::normal_mean_variance;
    double theta0 = 0.0;      // true mean (simple scenario)
    int n = 30;
    int reps = 5000;
    std::vector<double> levels = {0.95};
    std::vector<SimFamily> families;
    int contaminate = 0;      // observations replaced by the outlier component
    std::uint64_t seed = 20240915u;
    int threads = 0;          // 0: ELDIV_THREADS env var, else hardware
};

// Aggregates for one (family, level) pair.
struct SimCell {
    std::string family_label;
    double level = 0.95;
    double coverage = 0.0;     // fraction of usable replications covering
    double coverage_se = 0.0;  // binomial standard error
    double mean_width = 0.0;   // NaN for the composite scenario
    int reps_used = 0;
    int failures = 0;          // replications where the fit / solve failed
};

struct SimReport {
    SimConfig config;
    std::vector<SimCell> cells;
    double wall_seconds = 0.0;
};

// Draw the sample for one replication: fully determined by (config, rep).
// Contaminated replications replace the first `contaminate` positions with
// draws from N(theta0 + sqrt(theta0^2 + 1), theta0^2 + 1) and then shuffle.
Sample draw_sample(const SimConfig& config, std::uint64_t rep);

// Coverage studies.  Replications are independent streams, so results are
// identical for any thread count; per-replication outputs are aggregated in
// replication order to keep sums bit-reproducible.
SimReport run_coverage_study(const SimConfig& config);
SimReport run_composite_coverage_study(const SimConfig& config);

// Kolmogorov-Smirnov check of the simulated null statistic against its
// chi-square reference distribution.
struct KSReport {
    std::string family_label;
    int df = 1;
    double distance = 0.0;
    double pvalue = 0.0;
    int reps_used = 0;
    int failures = 0;
};

KSReport null_distribution_check(const SimConfig& config,
                                 const SimFamily& family);

// Thread count resolution: explicit > ELDIV_THREADS > hardware concurrency.
int resolve_threads(int requested);

}  // namespace eldiv
