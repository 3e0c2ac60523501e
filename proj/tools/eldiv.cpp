// eldiv: command-line front end for the empirical-divergence inference
// library.  Subcommands: estimate, test, ci, power, influence, simulate.
//
// Exit codes: 0 success, 2 usage or input parse error, 3 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eldiv/composite.hpp"
#include "eldiv/datasets.hpp"
#include "eldiv/el_core.hpp"
#include "eldiv/errors.hpp"
#include "eldiv/inference.hpp"
#include "eldiv/montecarlo.hpp"

namespace {

using nlohmann::json;
using namespace eldiv;

constexpr const char* kVersion = "1.0.0";
constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Small utilities

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        try {
            std::size_t pos = 0;
            double v = std::stod(token, &pos);
            if (pos != token.size()) throw std::invalid_argument(token);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ParseError("invalid number '" + token + "' in " + flag);
        }
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

enum class Format { text, jsonfmt, csv };

Format parse_format(const std::string& f) {
    if (f == "text") return Format::text;
    if (f == "json") return Format::jsonfmt;
    if (f == "csv") return Format::csv;
    throw CLI::ValidationError("--format", "must be text, json or csv");
}

// Shared options across subcommands.
struct CommonArgs {
    std::string data;
    std::string model = "mean";
    std::string format = "text";
    bool header = false;
    std::string lambda_list;
    std::string renyi_list;
    std::string statistic_list;
    std::string level_list;
    std::string theta0_list;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool need_data = true) {
    auto* d = cmd->add_option("--data", a.data,
                              "dataset: newcomb:day1|day2|day3|all or a CSV path");
    if (need_data) d->required();
    cmd->add_option("--model", a.model, "estimating model: mean|meanvar|cov")
        ->check(CLI::IsMember({"mean", "meanvar", "cov"}));
    cmd->add_option("--format", a.format, "output format: text|json|csv")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    cmd->add_flag("--header", a.header, "skip the first CSV row");
    cmd->add_option("--lambda", a.lambda_list,
                    "comma-separated power-divergence indices");
    cmd->add_option("--renyi", a.renyi_list, "comma-separated Renyi orders");
    cmd->add_option("--statistic", a.statistic_list,
                    "comma-separated statistics: T,S (simple) or T,S,wald,score,lm");
    cmd->add_option("--level", a.level_list, "comma-separated confidence levels");
    cmd->add_option("--theta0", a.theta0_list, "null parameter value(s)");
}

EstimatingModel resolve_model(const std::string& name) {
    if (name == "mean") return make_mean_model();
    if (name == "meanvar") return make_mean_variance_model();
    if (name == "cov") return make_cov_model();
    throw ParseError("unknown model '" + name + "'");
}

// Families for the simple-hypothesis commands, ordered: T by lambda, S by
// lambda, then Renyi by order.  --lambda without --statistic selects both T
// and S; --statistic without --lambda defaults to lambda = 0.  Selecting
// nothing at all is a usage error.
std::vector<StatFamily> build_families(const CommonArgs& a) {
    std::vector<double> lambdas = parse_double_list(a.lambda_list, "--lambda");
    std::vector<double> orders = parse_double_list(a.renyi_list, "--renyi");
    std::vector<std::string> stats = parse_string_list(a.statistic_list);
    bool want_t = false, want_s = false;
    for (const auto& s : stats) {
        if (s == "T") want_t = true;
        else if (s == "S") want_s = true;
        else throw ParseError("statistic '" + s + "' is not valid here (use T or S)");
    }
    if (!lambdas.empty() && !want_t && !want_s) want_t = want_s = true;
    if ((want_t || want_s) && lambdas.empty()) lambdas = {0.0};
    std::vector<StatFamily> out;
    if (want_t)
        for (double l : lambdas) out.push_back(StatFamily::t_power(l));
    if (want_s)
        for (double l : lambdas) out.push_back(StatFamily::s_power(l));
    for (double aorder : orders) out.push_back(StatFamily::renyi_order(aorder));
    if (out.empty())
        throw ParseError(
            "no statistic families selected (use --lambda, --renyi or --statistic)");
    return out;
}

struct Emitter {
    Format format;
    std::string command;
    std::string echo;
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();

    double wall() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
            .count();
    }

    // csv_header/csv rows used for csv; lines for text; payload for json.
    void finish(const json& payload, const std::string& csv_header,
                const std::vector<std::string>& csv_rows,
                const std::vector<std::string>& text_lines) const {
        if (format == Format::jsonfmt) {
            json env;
            env["schema_version"] = kSchemaVersion;
            env["command"] = command;
            env["args"] = echo;
            env["config_hash"] = hex64(fnv1a(command + " " + echo));
            env["version"] = kVersion;
            env["wall_seconds"] = wall();
            env["results"] = payload;
            std::cout << env.dump(2) << "\n";
        } else if (format == Format::csv) {
            std::cout << csv_header << "\n";
            for (const auto& r : csv_rows) std::cout << r << "\n";
        } else {
            for (const auto& l : text_lines) std::cout << l << "\n";
        }
    }
};

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// estimate

int cmd_estimate(const CommonArgs& a, const Emitter& em) {
    Sample sample = resolve_dataset(a.data, a.header);
    EstimatingModel model = resolve_model(a.model);
    ELFit fit = fit_unrestricted(model, sample);
    json payload;
    payload["theta_hat"] = std::vector<double>(
        fit.theta_hat.data(), fit.theta_hat.data() + fit.theta_hat.size());
    payload["logel"] = fit.inner.logel;
    payload["converged"] = fit.converged;
    payload["iterations"] = fit.iterations;
    std::vector<std::string> rows, lines;
    for (int i = 0; i < fit.theta_hat.size(); ++i)
        rows.push_back(std::to_string(i) + "," + fmt(fit.theta_hat(i), 10));
    lines.push_back("model: " + a.model + "  n = " + std::to_string(sample.n()));
    std::string th = "theta_hat = (";
    for (int i = 0; i < fit.theta_hat.size(); ++i)
        th += (i ? ", " : "") + fmt(fit.theta_hat(i), 10);
    lines.push_back(th + ")");
    lines.push_back("log empirical likelihood ratio = " + fmt(fit.inner.logel, 10));
    lines.push_back(std::string("converged = ") + (fit.converged ? "yes" : "no") +
                    "  iterations = " + std::to_string(fit.iterations));
    em.finish(payload, "index,theta_hat", rows, lines);
    return 0;
}

// ---------------------------------------------------------------------------
// test

Vector parse_theta0(const CommonArgs& a, int p) {
    std::vector<double> vals = parse_double_list(a.theta0_list, "--theta0");
    if (static_cast<int>(vals.size()) != p)
        throw ParseError("--theta0 needs " + std::to_string(p) + " value(s)");
    Vector th(p);
    for (int i = 0; i < p; ++i) th(i) = vals[i];
    return th;
}

int cmd_test(const CommonArgs& a, const Emitter& em) {
    Sample sample = resolve_dataset(a.data, a.header);
    EstimatingModel model = resolve_model(a.model);
    std::vector<double> levels = parse_double_list(a.level_list, "--level");
    double alpha = levels.empty() ? 0.05 : 1.0 - levels.front();

    json payload = json::array();
    std::vector<std::string> rows, lines;
    lines.push_back("statistic            value        df  p-value     reject");

    if (a.model == "cov" && a.theta0_list.empty()) {
        // Composite null sigma/mu = 1: all requested statistics in one report.
        std::vector<std::string> stats = parse_string_list(a.statistic_list);
        if (stats.empty()) stats = {"T", "wald", "score", "lm"};
        std::vector<double> lambdas = parse_double_list(a.lambda_list, "--lambda");
        if (lambdas.empty()) lambdas = {0.0};
        CompositeTestInput input;
        input.model = model;
        input.constraint = make_cov_constraint(1.0);
        input.sample = &sample;
        input.alpha = alpha;
        auto emit = [&](const std::string& label, const CompositeTestResult& r) {
            json row;
            row["family"] = label;
            row["statistic"] = r.statistic;
            row["df"] = r.df;
            row["pvalue"] = r.pvalue;
            row["reject"] = r.reject;
            payload.push_back(row);
            rows.push_back(label + "," + fmt(r.statistic, 10) + "," +
                           std::to_string(r.df) + "," + fmt(r.pvalue, 6) + "," +
                           (r.reject ? "1" : "0"));
            char buf[128];
            std::snprintf(buf, sizeof buf, "%-20s %-12s %-3d %-11s %s",
                          label.c_str(), fmt(r.statistic, 8).c_str(), r.df,
                          fmt(r.pvalue, 6).c_str(), r.reject ? "reject" : "accept");
            lines.push_back(buf);
        };
        for (const auto& s : stats) {
            if (s == "T" || s == "S") {
                for (double l : lambdas) {
                    input.phi = PhiFamily::power(l);
                    emit("phi(lambda=" + fmt(l) + ")", composite_phi_test(input));
                }
            } else if (s == "wald") {
                emit("wald", wald_test(input));
            } else if (s == "score") {
                emit("score", score_test(input));
            } else if (s == "lm") {
                emit("lagrange", lagrange_test(input));
            } else {
                throw ParseError("unknown statistic '" + s + "'");
            }
        }
    } else {
        if (a.theta0_list.empty()) throw ParseError("--theta0 is required");
        Vector theta0 = parse_theta0(a, model.p);
        for (const auto& fam : build_families(a)) {
            TestResult r = simple_test(model, sample, theta0, fam, alpha);
            json row;
            row["family"] = fam.label();
            row["statistic"] = r.statistic;
            row["df"] = r.df;
            row["pvalue"] = r.pvalue;
            row["reject"] = r.reject;
            row["infeasible_theta0"] = r.infeasible_theta0;
            payload.push_back(row);
            rows.push_back(fam.label() + "," + fmt(r.statistic, 10) + "," +
                           std::to_string(r.df) + "," + fmt(r.pvalue, 6) + "," +
                           (r.reject ? "1" : "0"));
            char buf[128];
            std::snprintf(buf, sizeof buf, "%-20s %-12s %-3d %-11s %s%s",
                          fam.label().c_str(), fmt(r.statistic, 8).c_str(), r.df,
                          fmt(r.pvalue, 6).c_str(), r.reject ? "reject" : "accept",
                          r.infeasible_theta0 ? " (theta0 outside hull)" : "");
            lines.push_back(buf);
        }
    }
    em.finish(payload, "family,statistic,df,pvalue,reject", rows, lines);
    return 0;
}

// ---------------------------------------------------------------------------
// ci

int cmd_ci(const CommonArgs& a, const Emitter& em) {
    Sample sample = resolve_dataset(a.data, a.header);
    EstimatingModel model = resolve_model(a.model);
    if (model.p != 1) throw ParseError("ci requires a scalar parameter (p = 1)");
    std::vector<double> levels = parse_double_list(a.level_list, "--level");
    if (levels.empty()) levels = {0.95};
    auto families = build_families(a);

    ELFit fit = fit_unrestricted(model, sample);
    ScanOptions scan;
    scan.reuse_fit = &fit;

    json payload = json::array();
    std::vector<std::string> rows, lines;
    lines.push_back("family               level   lower        upper");
    for (const auto& fam : families) {
        for (double level : levels) {
            ConfidenceInterval ci =
                confidence_interval(model, sample, fam, level, scan);
            json row;
            row["family"] = fam.label();
            row["level"] = level;
            row["lower"] = ci.lower;
            row["upper"] = ci.upper;
            row["lower_hull_truncated"] = ci.lower_hull_truncated;
            row["upper_hull_truncated"] = ci.upper_hull_truncated;
            payload.push_back(row);
            rows.push_back(fam.label() + "," + fmt(level, 6) + "," +
                           fmt(ci.lower, 10) + "," + fmt(ci.upper, 10));
            char buf[128];
            std::snprintf(buf, sizeof buf, "%-20s %-7s (%s, %s)%s",
                          fam.label().c_str(), fmt(level, 4).c_str(),
                          fmt(ci.lower, 8).c_str(), fmt(ci.upper, 8).c_str(),
                          (ci.lower_hull_truncated || ci.upper_hull_truncated)
                              ? " [hull-truncated]"
                              : "");
            lines.push_back(buf);
        }
    }
    em.finish(payload, "family,level,lower,upper", rows, lines);
    return 0;
}

// ---------------------------------------------------------------------------
// power

int cmd_power(const CommonArgs& a, const Emitter& em, const std::string& star,
              int grid_points, double grid_span, bool paper_strict) {
    Sample sample = resolve_dataset(a.data, a.header);
    EstimatingModel model = resolve_model(a.model);
    if (model.p != 1) throw ParseError("power requires a scalar parameter");
    if (a.theta0_list.empty()) throw ParseError("--theta0 is required");
    double theta0 = parse_theta0(a, 1)(0);
    std::vector<double> levels = parse_double_list(a.level_list, "--level");
    double alpha = levels.empty() ? 0.05 : 1.0 - levels.front();
    auto families = build_families(a);

    std::vector<double> grid = parse_double_list(star, "--theta-star");
    if (grid.empty()) {
        ELFit fit = fit_unrestricted(model, sample);
        double hat = fit.theta_hat(0);
        CovarianceEstimates cov =
            estimate_covariances(model, sample, fit.theta_hat);
        double sd = std::sqrt(cov.V(0, 0) / sample.n());
        int m = grid_points < 2 ? 81 : grid_points;
        for (int i = 0; i < m; ++i)
            grid.push_back(hat - grid_span * sd +
                           2.0 * grid_span * sd * i / (m - 1));
    }

    json payload = json::array();
    std::vector<std::string> rows, lines;
    lines.push_back("family               theta_star   beta");
    for (const auto& fam : families) {
        for (double ts : grid) {
            double beta =
                power_beta1(model, sample, theta0, ts, fam, alpha, paper_strict);
            json row;
            row["family"] = fam.label();
            row["theta_star"] = ts;
            row["beta"] = beta;
            payload.push_back(row);
            rows.push_back(fam.label() + "," + fmt(ts, 10) + "," + fmt(beta, 8));
            char buf[96];
            std::snprintf(buf, sizeof buf, "%-20s %-12s %s", fam.label().c_str(),
                          fmt(ts, 8).c_str(), fmt(beta, 6).c_str());
            lines.push_back(buf);
        }
    }
    em.finish(payload, "family,theta_star,beta", rows, lines);
    return 0;
}

// ---------------------------------------------------------------------------
// influence

int cmd_influence(const CommonArgs& a, const Emitter& em) {
    Sample sample = resolve_dataset(a.data, a.header);
    EstimatingModel model = resolve_model(a.model);
    Vector theta;
    if (!a.theta0_list.empty()) {
        theta = parse_theta0(a, model.p);
    } else {
        theta = fit_unrestricted(model, sample).theta_hat;
    }
    CovarianceEstimates cov = estimate_covariances(model, sample, theta);

    json payload = json::array();
    std::vector<std::string> rows, lines;
    lines.push_back("index  observation     influence       influence2");
    for (int i = 0; i < sample.n(); ++i) {
        Vector x = sample.row(i);
        Vector inf = influence_function(model, x, theta, cov);
        double inf2 = influence_function_2(model, x, theta, cov);
        json row;
        row["index"] = i;
        row["x"] = std::vector<double>(x.data(), x.data() + x.size());
        row["influence"] = std::vector<double>(inf.data(), inf.data() + inf.size());
        row["influence2"] = inf2;
        payload.push_back(row);
        std::string xs, is;
        for (int j = 0; j < x.size(); ++j) xs += (j ? ";" : "") + fmt(x(j), 10);
        for (int j = 0; j < inf.size(); ++j) is += (j ? ";" : "") + fmt(inf(j), 10);
        rows.push_back(std::to_string(i) + "," + xs + "," + is + "," + fmt(inf2, 10));
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-6d %-15s %-15s %s", i, xs.c_str(),
                      is.c_str(), fmt(inf2, 8).c_str());
        lines.push_back(buf);
    }
    em.finish(payload, "index,x,influence,influence2", rows, lines);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string preset;
    std::string scenario;
    std::string dist;
    double theta0 = 0.0;
    int n = 0;
    int reps = 0;
    std::uint64_t seed = 20240915u;
    int contaminate = 0;
    int threads = 0;
    bool fast = false;
};

int cmd_simulate(const CommonArgs& a, const SimulateArgs& s, const Emitter& em,
                 const CLI::App* cmd) {
    SimConfig cfg;
    cfg.seed = s.seed;
    cfg.threads = s.threads;

    auto family_grid = [](bool composite) {
        std::vector<SimFamily> fams;
        for (double l : {-1.0, -0.5, 0.0, 2.0 / 3.0, 1.0}) {
            SimFamily f;
            f.kind = composite ? SimFamily::Kind::composite_phi : SimFamily::Kind::T;
            f.lambda = l;
            fams.push_back(f);
            if (!composite) {
                f.kind = SimFamily::Kind::S;
                fams.push_back(f);
            }
        }
        if (composite) {
            for (auto k : {SimFamily::Kind::wald, SimFamily::Kind::score,
                           SimFamily::Kind::lagrange}) {
                SimFamily f;
                f.kind = k;
                fams.push_back(f);
            }
        }
        return fams;
    };

    if (!s.preset.empty()) {
        if (s.preset == "coverage") {
            cfg.scenario = Scenario::simple_mean_variance;
            cfg.distribution = SimDistribution::normal_mean_variance;
            cfg.n = 30;
            cfg.reps = 5000;
            cfg.levels = {0.90, 0.95};
            cfg.families = family_grid(false);
        } else if (s.preset == "contaminated") {
            cfg.scenario = Scenario::simple_mean_variance;
            cfg.distribution = SimDistribution::normal_mean_variance;
            cfg.theta0 = 1.0;
            cfg.n = 30;
            cfg.reps = 5000;
            cfg.levels = {0.90, 0.95};
            cfg.contaminate = 2;
            cfg.families = family_grid(false);
        } else if (s.preset == "composite-normal" || s.preset == "composite-t5" ||
                   s.preset == "composite-poisson") {
            cfg.scenario = Scenario::composite_cov;
            cfg.distribution = s.preset == "composite-normal"
                                   ? SimDistribution::normal_1_1
                                   : s.preset == "composite-t5"
                                         ? SimDistribution::shifted_t5
                                         : SimDistribution::poisson_1;
            cfg.n = s.preset == "composite-poisson" ? 15 : 30;
            cfg.reps = s.fast ? 5000 : 20000;
            cfg.levels = {0.90, 0.95};
            cfg.families = family_grid(true);
        } else {
            throw ParseError("unknown preset '" + s.preset + "'");
        }
    } else {
        bool composite = (s.scenario == "cov") || (a.model == "cov");
        cfg.scenario = composite ? Scenario::composite_cov
                                 : Scenario::simple_mean_variance;
        if (s.dist == "normal" || s.dist.empty())
            cfg.distribution = composite ? SimDistribution::normal_1_1
                                         : SimDistribution::normal_mean_variance;
        else if (s.dist == "t5")
            cfg.distribution = SimDistribution::shifted_t5;
        else if (s.dist == "poisson")
            cfg.distribution = SimDistribution::poisson_1;
        else
            throw ParseError("unknown distribution '" + s.dist + "'");
        cfg.n = 30;
        cfg.reps = s.fast ? 5000 : 5000;
        cfg.levels = {0.95};
        cfg.families = family_grid(composite);
    }

    // Explicit flags override the preset.
    if (cmd->count("--theta0")) cfg.theta0 = parse_theta0(a, 1)(0);
    if (s.n > 0) cfg.n = s.n;
    if (s.reps > 0) cfg.reps = s.reps;
    if (cmd->count("--contaminate")) cfg.contaminate = s.contaminate;
    if (!a.level_list.empty())
        cfg.levels = parse_double_list(a.level_list, "--level");
    if (!a.lambda_list.empty() || !a.statistic_list.empty() ||
        !a.renyi_list.empty()) {
        std::vector<double> lambdas = parse_double_list(a.lambda_list, "--lambda");
        if (lambdas.empty()) lambdas = {0.0};
        std::vector<std::string> stats = parse_string_list(a.statistic_list);
        bool composite = cfg.scenario == Scenario::composite_cov;
        if (stats.empty()) stats = composite
                                       ? std::vector<std::string>{"T", "wald",
                                                                  "score", "lm"}
                                       : std::vector<std::string>{"T", "S"};
        cfg.families.clear();
        for (const auto& st : stats) {
            if (st == "T" || st == "S") {
                for (double l : lambdas) {
                    SimFamily f;
                    f.kind = composite ? SimFamily::Kind::composite_phi
                                       : (st == "T" ? SimFamily::Kind::T
                                                    : SimFamily::Kind::S);
                    f.lambda = l;
                    cfg.families.push_back(f);
                }
                if (composite && st == "S") cfg.families.pop_back();  // phi == T
            } else if (st == "wald") {
                cfg.families.push_back({SimFamily::Kind::wald, 0.0, 1.0});
            } else if (st == "score") {
                cfg.families.push_back({SimFamily::Kind::score, 0.0, 1.0});
            } else if (st == "lm") {
                cfg.families.push_back({SimFamily::Kind::lagrange, 0.0, 1.0});
            } else {
                throw ParseError("unknown statistic '" + st + "'");
            }
        }
        for (double order : parse_double_list(a.renyi_list, "--renyi"))
            cfg.families.push_back({SimFamily::Kind::renyi, 0.0, order});
    }
    if (cfg.families.empty()) throw ParseError("no statistic families selected");

    SimReport report = cfg.scenario == Scenario::composite_cov
                           ? run_composite_coverage_study(cfg)
                           : run_coverage_study(cfg);

    json payload;
    payload["n"] = report.config.n;
    payload["reps"] = report.config.reps;
    payload["theta0"] = report.config.theta0;
    payload["seed"] = report.config.seed;
    payload["contaminate"] = report.config.contaminate;
    payload["wall_seconds"] = report.wall_seconds;
    payload["cells"] = json::array();
    std::vector<std::string> rows, lines;
    lines.push_back(
        "family               level   coverage  se        width     used    failed");
    for (const auto& c : report.cells) {
        json row;
        row["family"] = c.family_label;
        row["level"] = c.level;
        row["coverage"] = c.coverage;
        row["coverage_se"] = c.coverage_se;
        if (std::isfinite(c.mean_width)) row["mean_width"] = c.mean_width;
        row["reps_used"] = c.reps_used;
        row["failures"] = c.failures;
        payload["cells"].push_back(row);
        rows.push_back(c.family_label + "," + fmt(c.level, 4) + "," +
                       fmt(c.coverage, 6) + "," + fmt(c.coverage_se, 4) + "," +
                       (std::isfinite(c.mean_width) ? fmt(c.mean_width, 6) : "") +
                       "," + std::to_string(c.reps_used) + "," +
                       std::to_string(c.failures));
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-20s %-7s %-9s %-9s %-9s %-7d %d",
                      c.family_label.c_str(), fmt(c.level, 4).c_str(),
                      fmt(c.coverage, 5).c_str(), fmt(c.coverage_se, 3).c_str(),
                      std::isfinite(c.mean_width) ? fmt(c.mean_width, 5).c_str()
                                                  : "-",
                      c.reps_used, c.failures);
        lines.push_back(buf);
    }
    em.finish(payload, "family,level,coverage,coverage_se,mean_width,reps_used,failures",
              rows, lines);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"empirical-divergence inference tool"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonArgs est_a, test_a, ci_a, pow_a, inf_a, sim_a;
    auto* est = app.add_subcommand("estimate", "maximum EL parameter estimate");
    add_common(est, est_a);
    auto* tst = app.add_subcommand("test", "hypothesis tests");
    add_common(tst, test_a);
    auto* civ = app.add_subcommand("ci", "confidence intervals by test inversion");
    add_common(civ, ci_a);
    auto* pow = app.add_subcommand("power", "first-order power curves");
    add_common(pow, pow_a);
    std::string theta_star;
    int grid_points = 81;
    double grid_span = 4.0;
    bool paper_strict = false;
    pow->add_option("--theta-star", theta_star,
                    "explicit alternative values (comma-separated)");
    pow->add_option("--grid-points", grid_points, "curve grid size");
    pow->add_option("--grid-span", grid_span,
                    "half-width of the grid in standard errors");
    pow->add_flag("--paper-strict", paper_strict,
                  "drop the h'(0) factor from the rejection threshold");
    auto* inf = app.add_subcommand("influence", "per-observation influence values");
    add_common(inf, inf_a);
    auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage studies");
    add_common(sim, sim_a, /*need_data=*/false);
    SimulateArgs sargs;
    sim->add_option("--preset", sargs.preset,
                    "coverage|contaminated|composite-normal|composite-t5|composite-poisson");
    sim->add_option("--scenario", sargs.scenario, "simple|cov")
        ->check(CLI::IsMember({"simple", "cov"}));
    sim->add_option("--dist", sargs.dist, "normal|t5|poisson");
    sim->add_option("--n", sargs.n, "sample size");
    sim->add_option("--reps", sargs.reps, "replications");
    sim->add_option("--seed", sargs.seed, "master seed");
    sim->add_option("--contaminate", sargs.contaminate,
                    "contaminated observations per sample");
    sim->add_option("--threads", sargs.threads, "worker threads (0 = auto)");
    sim->add_flag("--fast", sargs.fast, "reduced-replication preset variant");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const CLI::App* active = app.get_subcommands().front();
    std::string echo;
    for (int i = 1; i < argc; ++i) echo += std::string(i > 1 ? " " : "") + argv[i];

    CommonArgs* common = nullptr;
    if (active == est) common = &est_a;
    else if (active == tst) common = &test_a;
    else if (active == civ) common = &ci_a;
    else if (active == pow) common = &pow_a;
    else if (active == inf) common = &inf_a;
    else common = &sim_a;

    Emitter em{parse_format(common->format), active->get_name(), echo};
    try {
        if (active == est) return cmd_estimate(est_a, em);
        if (active == tst) return cmd_test(test_a, em);
        if (active == civ) return cmd_ci(ci_a, em);
        if (active == pow)
            return cmd_power(pow_a, em, theta_star, grid_points, grid_span,
                             paper_strict);
        if (active == inf) return cmd_influence(inf_a, em);
        return cmd_simulate(sim_a, sargs, em, sim);
    } catch (const ParseError& e) {
        std::cerr << "eldiv: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        if (em.format == Format::jsonfmt) {
            json err;
            err["schema_version"] = kSchemaVersion;
            err["command"] = em.command;
            err["error"] = {{"type", "numerical"}, {"message", e.what()}};
            std::cout << err.dump(2) << "\n";
        }
        std::cerr << "eldiv: " << e.what() << "\n";
        return 3;
    }
}
