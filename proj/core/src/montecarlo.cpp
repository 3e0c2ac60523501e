#include "eldiv/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "eldiv/rng.hpp"

namespace eldiv {

std::string SimFamily::label() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::T: os << "T(" << lambda << ")"; break;
        case Kind::S: os << "S(" << lambda << ")"; break;
        case Kind::renyi: os << "renyi(" << a << ")"; break;
        case Kind::composite_phi: os << "phi(" << lambda << ")"; break;
        case Kind::wald: os << "wald"; break;
        case Kind::score: os << "score"; break;
        case Kind::lagrange: os << "lagrange"; break;
    }
    return os.str();
}

StatFamily SimFamily::to_stat_family() const {
    switch (kind) {
        case Kind::T: return StatFamily::t_power(lambda);
        case Kind::S: return StatFamily::s_power(lambda);
        case Kind::renyi: return StatFamily::renyi_order(a);
        default:
            throw DomainError("composite families have no simple-test form");
    }
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ELDIV_THREADS")) {
        int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

Sample draw_sample(const SimConfig& config, std::uint64_t rep) {
    RepRng rng(config.seed, rep);
    const int n = config.n;
    std::vector<double> values(static_cast<std::size_t>(n));

    switch (config.distribution) {
        case SimDistribution::normal_mean_variance: {
            double sd = std::sqrt(config.theta0 * config.theta0 + 1.0);
            for (int i = 0; i < n; ++i) {
                values[i] = rng.normal(config.theta0, sd);
            }
            break;
        }
        case SimDistribution::normal_1_1:
            for (int i = 0; i < n; ++i) values[i] = rng.normal(1.0, 1.0);
            break;
        case SimDistribution::shifted_t5: {
            double scale = std::sqrt(0.6);
            for (int i = 0; i < n; ++i) {
                values[i] = 1.0 + scale * rng.student_t5();
            }
            break;
        }
        case SimDistribution::poisson_1:
            for (int i = 0; i < n; ++i) {
                values[i] = static_cast<double>(rng.poisson1());
            }
            break;
    }

    if (config.contaminate > 0) {
        int count = std::min(config.contaminate, n);
        double sd = std::sqrt(config.theta0 * config.theta0 + 1.0);
        double shift_mean = config.theta0 + sd;
        for (int i = 0; i < count; ++i) {
            values[i] = rng.normal(shift_mean, sd);
        }
        // Fisher-Yates so the outliers land at random positions.
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(i + 1));
            std::swap(values[i], values[j]);
        }
    }
    return Sample::from_values(values);
}

namespace {

enum class CellOutcome : std::uint8_t { covered, missed, failed };

struct RepResult {
    std::vector<CellOutcome> outcomes;  // one per (family, level) cell
    std::vector<double> widths;
};

// Run `reps` independent replications of `body` across the resolved thread
// count and return per-replication results in replication order, so the
// aggregation below is identical regardless of parallel partitioning.
std::vector<RepResult> run_reps(const SimConfig& config,
                                const std::function<RepResult(std::uint64_t)>& body) {
    const int reps = config.reps;
    std::vector<RepResult> results(static_cast<std::size_t>(reps));
    int threads = std::min(resolve_threads(config.threads), std::max(reps, 1));
    if (threads <= 1) {
        for (int rep = 0; rep < reps; ++rep) {
            results[static_cast<std::size_t>(rep)] =
                body(static_cast<std::uint64_t>(rep));
        }
        return results;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int rep = next.fetch_add(1);
            if (rep >= reps) return;
            results[static_cast<std::size_t>(rep)] =
                body(static_cast<std::uint64_t>(rep));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return results;
}

SimReport aggregate(const SimConfig& config,
                    const std::vector<RepResult>& results, bool has_widths,
                    double wall_seconds) {
    SimReport report;
    report.config = config;
    report.wall_seconds = wall_seconds;
    const std::size_t cells = config.families.size() * config.levels.size();
    std::vector<long> covered(cells, 0), used(cells, 0), failed(cells, 0);
    std::vector<double> width_sum(cells, 0.0), width_comp(cells, 0.0);

    for (const RepResult& rep : results) {
        for (std::size_t cell = 0; cell < cells; ++cell) {
            switch (rep.outcomes[cell]) {
                case CellOutcome::failed:
                    ++failed[cell];
                    break;
                case CellOutcome::covered:
                    ++covered[cell];
                    ++used[cell];
                    break;
                case CellOutcome::missed:
                    ++used[cell];
                    break;
            }
            if (has_widths && rep.outcomes[cell] != CellOutcome::failed) {
                // Kahan summation keeps the mean width independent of rounding
                // drift over tens of thousands of terms.
                double y = rep.widths[cell] - width_comp[cell];
                double t = width_sum[cell] + y;
                width_comp[cell] = (t - width_sum[cell]) - y;
                width_sum[cell] = t;
            }
        }
    }

    std::size_t cell = 0;
    for (const SimFamily& family : config.families) {
        for (double level : config.levels) {
            SimCell out;
            out.family_label = family.label();
            out.level = level;
            out.reps_used = static_cast<int>(used[cell]);
            out.failures = static_cast<int>(failed[cell]);
            if (used[cell] > 0) {
                double coverage =
                    static_cast<double>(covered[cell]) / used[cell];
                out.coverage = coverage;
                out.coverage_se = std::sqrt(coverage * (1.0 - coverage) /
                                            static_cast<double>(used[cell]));
                out.mean_width =
                    has_widths ? width_sum[cell] / used[cell]
                               : std::numeric_limits<double>::quiet_NaN();
            } else {
                out.coverage = std::numeric_limits<double>::quiet_NaN();
                out.coverage_se = out.coverage;
                out.mean_width = out.coverage;
            }
            report.cells.push_back(std::move(out));
            ++cell;
        }
    }
    return report;
}

}  // namespace

SimReport run_coverage_study(const SimConfig& config) {
    if (config.scenario != Scenario::simple_mean_variance) {
        throw DomainError("run_coverage_study expects the simple scenario");
    }
    auto start = std::chrono::steady_clock::now();
    const EstimatingModel model = make_mean_variance_model();
    const std::size_t cells = config.families.size() * config.levels.size();

    auto body = [&](std::uint64_t rep) {
        RepResult out;
        out.outcomes.assign(cells, CellOutcome::failed);
        out.widths.assign(cells, 0.0);
        Sample sample = draw_sample(config, rep);

        ELFit fit;
        bool fit_ok = true;
        try {
            fit = fit_unrestricted(model, sample);
        } catch (const Error&) {
            fit_ok = false;
        }
        if (!fit_ok) return out;

        std::size_t cell = 0;
        for (const SimFamily& family : config.families) {
            StatFamily stat = family.to_stat_family();
            for (double level : config.levels) {
                try {
                    ScanOptions opts;
                    opts.reuse_fit = &fit;
                    ConfidenceInterval ci =
                        confidence_interval(model, sample, stat, level, opts);
                    bool covered =
                        ci.lower <= config.theta0 && config.theta0 <= ci.upper;
                    out.outcomes[cell] = covered ? CellOutcome::covered
                                                 : CellOutcome::missed;
                    out.widths[cell] = ci.upper - ci.lower;
                } catch (const Error&) {
                    out.outcomes[cell] = CellOutcome::failed;
                }
                ++cell;
            }
        }
        return out;
    };

    std::vector<RepResult> results = run_reps(config, body);
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    return aggregate(config, results, /*has_widths=*/true, secs);
}

SimReport run_composite_coverage_study(const SimConfig& config) {
    if (config.scenario != Scenario::composite_cov) {
        throw DomainError(
            "run_composite_coverage_study expects the composite scenario");
    }
    auto start = std::chrono::steady_clock::now();
    const EstimatingModel model = make_cov_model();
    const Constraint constraint = make_cov_constraint(1.0);
    const std::size_t cells = config.families.size() * config.levels.size();

    auto body = [&](std::uint64_t rep) {
        RepResult out;
        out.outcomes.assign(cells, CellOutcome::failed);
        out.widths.assign(cells, 0.0);
        Sample sample = draw_sample(config, rep);

        CompositeTestInput input;
        input.model = model;
        input.constraint = constraint;
        input.sample = &sample;

        std::size_t cell = 0;
        for (const SimFamily& family : config.families) {
            for (double level : config.levels) {
                input.alpha = 1.0 - level;
                try {
                    CompositeTestResult result;
                    switch (family.kind) {
                        case SimFamily::Kind::composite_phi:
                            input.phi = PhiFamily::power(family.lambda);
                            result = composite_phi_test(input);
                            break;
                        case SimFamily::Kind::wald:
                            result = wald_test(input);
                            break;
                        case SimFamily::Kind::score:
                            result = score_test(input);
                            break;
                        case SimFamily::Kind::lagrange:
                            result = lagrange_test(input);
                            break;
                        default:
                            throw DomainError(
                                "simple families have no composite form");
                    }
                    // Accepting H0 at level alpha is exactly "the inverted
                    // confidence region for the constrained quantity contains
                    // the null value".
                    out.outcomes[cell] = result.reject ? CellOutcome::missed
                                                       : CellOutcome::covered;
                } catch (const Error&) {
                    out.outcomes[cell] = CellOutcome::failed;
                }
                ++cell;
            }
        }
        return out;
    };

    std::vector<RepResult> results = run_reps(config, body);
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    return aggregate(config, results, /*has_widths=*/false, secs);
}

KSReport null_distribution_check(const SimConfig& config,
                                 const SimFamily& family) {
    KSReport report;
    report.family_label = family.label();

    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(config.reps));
    int failures = 0;

    if (config.scenario == Scenario::simple_mean_variance) {
        const EstimatingModel model = make_mean_variance_model();
        report.df = model.p;
        Vector theta0(1);
        theta0(0) = config.theta0;
        StatFamily stat = family.to_stat_family();
        for (int rep = 0; rep < config.reps; ++rep) {
            Sample sample = draw_sample(config, static_cast<std::uint64_t>(rep));
            try {
                TestResult result = simple_test(model, sample, theta0, stat);
                if (!std::isfinite(result.statistic)) {
                    ++failures;
                    continue;
                }
                stats.push_back(result.statistic);
            } catch (const Error&) {
                ++failures;
            }
        }
    } else {
        const EstimatingModel model = make_cov_model();
        const Constraint constraint = make_cov_constraint(1.0);
        report.df = constraint.q;
        for (int rep = 0; rep < config.reps; ++rep) {
            Sample sample = draw_sample(config, static_cast<std::uint64_t>(rep));
            CompositeTestInput input;
            input.model = model;
            input.constraint = constraint;
            input.sample = &sample;
            try {
                CompositeTestResult result;
                switch (family.kind) {
                    case SimFamily::Kind::composite_phi:
                        input.phi = PhiFamily::power(family.lambda);
                        result = composite_phi_test(input);
                        break;
                    case SimFamily::Kind::wald:
                        result = wald_test(input);
                        break;
                    case SimFamily::Kind::score:
                        result = score_test(input);
                        break;
                    case SimFamily::Kind::lagrange:
                        result = lagrange_test(input);
                        break;
                    default:
                        throw DomainError("simple families have no composite form");
                }
                stats.push_back(result.statistic);
            } catch (const Error&) {
                ++failures;
            }
        }
    }

    std::sort(stats.begin(), stats.end());
    const int count = static_cast<int>(stats.size());
    if (count == 0) throw NoConvergence("no usable replications");
    double d = 0.0;
    for (int i = 0; i < count; ++i) {
        double fx = chi2_cdf(stats[static_cast<std::size_t>(i)], report.df);
        double hi = static_cast<double>(i + 1) / count - fx;
        double lo = fx - static_cast<double>(i) / count;
        d = std::max(d, std::max(hi, lo));
    }
    report.distance = d;
    report.pvalue = ks_pvalue(d, count);
    report.reps_used = count;
    report.failures = failures;
    return report;
}

}  // namespace eldiv
