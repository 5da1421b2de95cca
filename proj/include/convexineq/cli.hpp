#ifndef CONVEXINEQ_CLI_HPP
#define CONVEXINEQ_CLI_HPP

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "convexineq/config.hpp"
#include "convexineq/errors.hpp"
#include "convexineq/generator.hpp"
#include "convexineq/inequality_checks.hpp"
#include "convexineq/integrate.hpp"
#include "convexineq/pointwise_calculus.hpp"
#include "convexineq/report_io.hpp"

namespace convexineq::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kViolated = 1, kBadConfig = 2, kPrecondition = 3 };

struct RunContext {
  std::string command;
  json config;  // effective configuration (overrides applied)
  std::string hash;
  std::uint64_t seed = 1;
  io::OutputSet outputs;
};

inline json read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = config::parse(ss.str(), path);
  if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
  // A manifest carries the configuration it was produced from.
  if (j.contains("config") && j.contains("config_hash") && j.contains("command")) j = j.at("config");
  return j;
}

inline int count_violations(const std::vector<InequalityReport>& rs) {
  int v = 0;
  for (const auto& r : rs) v += r.verdict == Verdict::violated;
  return v;
}

inline NormalizationMode mode_for(const IntegrationOptions& o) {
  return o.method == Method::grid ? NormalizationMode::quadrature : NormalizationMode::mc_only;
}

inline void stamp(std::vector<InequalityReport>& rs, const RunContext& ctx) {
  for (auto& r : rs) r.provenance.config_hash = ctx.hash;
}

inline void add_reports(RunContext& ctx, const std::string& stem, std::vector<InequalityReport>& rs) {
  stamp(rs, ctx);
  ctx.outputs.add(stem + ".jsonl", io::reports_jsonl(rs));
  ctx.outputs.add(stem + ".csv", io::reports_csv(rs, ctx.hash, ctx.seed));
}

/// Exponent from a number or the keywords "p_beta" / "p_beta_n".
inline double exponent(const json& j, const ConvexMeasure& m, const std::string& path) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "p_beta") return p_beta(m.beta(), m.dim());
    if (s == "p_beta_n") return p_beta_n(m.beta(), m.dim());
    config::fail(path, "expected a number, \"p_beta\" or \"p_beta_n\"");
  }
  return config::number(j, path);
}

inline int cmd_report(RunContext& ctx) {
  const json& cfg = ctx.config;
  const IntegrationOptions opts = config::integration(cfg);
  const json& block = config::require(cfg, "report", "config");
  const json& checks = config::require(block, "checks", "report");
  if (!checks.is_array() || checks.empty()) config::fail("report.checks", "expected a nonempty array");
  std::vector<Method> methods{opts.method};
  if (block.contains("methods")) {
    methods.clear();
    const json& ms = block.at("methods");
    if (!ms.is_array() || ms.empty()) config::fail("report.methods", "expected a nonempty array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      methods.push_back(config::method(ms[i], "report.methods[" + std::to_string(i) + "]"));
    }
  }
  const json& mcfg = config::require(cfg, "measure", "config");

  std::vector<InequalityReport> reports;
  for (Method method : methods) {
    IntegrationOptions o = opts;
    o.method = method;
    const ConvexMeasure m = config::measure(mcfg, mode_for(o));
    const int n = m.dim();
    const Integrator integ(m, o);
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const std::string path = "report.checks[" + std::to_string(i) + "]";
      const json& c = checks[i];
      const std::string type = config::string(config::require(c, "type", path), path + ".type");
      if (type == "phi_entropy") {
        reports.push_back(check_phi_entropy(integ, config::phi(config::require(c, "phi", path), path + ".phi"),
                                            config::field(config::require(c, "field", path), n, path + ".field")));
      } else if (type == "beckner") {
        const double p = exponent(config::require(c, "p", path), m, path + ".p");
        reports.push_back(check_beckner(integ, p, config::field(config::require(c, "field", path), n, path + ".field")));
      } else if (type == "beckner_sweep") {
        const auto points = config::integer_or(c, "points", 20, path);
        if (points < 2) config::fail(path + ".points", "must be at least 2");
        const ScalarField f = config::field(config::require(c, "field", path), n, path + ".field");
        const double pb = p_beta(m.beta(), n);
        for (std::int64_t k = 0; k < points; ++k) {
          const double p = k + 1 == points ? pb : 1 + (pb - 1) * double(k) / double(points - 1);
          reports.push_back(check_beckner(integ, p, f));
        }
      } else if (type == "covariance") {
        const double p = exponent(config::require(c, "p", path), m, path + ".p");
        reports.push_back(check_covariance(integ, config::field(config::require(c, "g", path), n, path + ".g"),
                                           config::field(config::require(c, "h", path), n, path + ".h"), p));
      } else if (type == "sharpness") {
        const double p = exponent(config::require(c, "p", path), m, path + ".p");
        const auto eps = config::sweep(config::require(c, "epsilons", path), path + ".epsilons");
        for (auto& pt : sharpness_probe_beckner(integ, p, config::field(config::require(c, "g", path), n, path + ".g"),
                                                eps)) {
          pt.report.note = "epsilon = " + io::fmt(pt.epsilon);
          reports.push_back(pt.report);
        }
      } else {
        config::fail(path + ".type", "unknown check \"" + type + "\"");
      }
    }
  }
  add_reports(ctx, "reports", reports);
  return count_violations(reports) ? kViolated : kOk;
}

inline int cmd_gap(RunContext& ctx) {
  const json& cfg = ctx.config;
  const json& g = config::require(cfg, "gap", "config");
  const auto betas = config::sweep(config::require(g, "betas", "gap"), "gap.betas");
  json mcfg = cfg.contains("measure") ? cfg.at("measure") : json{{"kind", "cauchy"}, {"n", 1}, {"beta", betas[0]}};
  GeneratorSpec spec;
  spec.points_per_dim = static_cast<int>(config::integer_or(g, "N", 2000, "gap"));
  if (g.contains("R") && !(g.at("R").is_string() && g.at("R") == "auto")) spec.radius = config::number(g.at("R"), "gap.R");

  std::ostringstream table, eig;
  table << io::csv_header(ctx.hash, ctx.seed) << "beta,gap,bound,x_correlation\n";
  std::vector<Vec> eigfns;
  std::vector<Vec> nodes;
  bool ok = true;
  for (double beta : betas) {
    mcfg["beta"] = beta;
    const ConvexMeasure m = config::measure(mcfg, NormalizationMode::quadrature);
    const DiscreteGenerator dg(m, spec);
    const double gap = dg.spectral_gap();
    const double bound = m.convexity_constant() * (beta - 1);
    const Vec v = dg.gap_eigenfunction();
    const double corr = dg.correlation(v, dg.sample(fields::coordinate(m.dim(), 0)));
    table << io::fmt(beta) << ',' << io::fmt(gap) << ',' << io::fmt(bound) << ',' << io::fmt(corr) << '\n';
    if (gap < bound * (1 - 1e-3)) ok = false;
    if (m.dim() == 1) {
      eigfns.push_back(v);
      Vec x(dg.size());
      for (int i = 0; i < dg.size(); ++i) x(i) = dg.node(i)(0);
      nodes.push_back(x);
    }
  }
  ctx.outputs.add("gap.csv", table.str());
  if (!eigfns.empty()) {
    eig << io::csv_header(ctx.hash, ctx.seed) << "beta,x,v\n";
    for (std::size_t b = 0; b < eigfns.size(); ++b) {
      const double sign = eigfns[b].dot(nodes[b]) < 0 ? -1.0 : 1.0;
      for (int i = 0; i < eigfns[b].size(); ++i) {
        eig << io::fmt(betas[b]) << ',' << io::fmt(nodes[b](i)) << ',' << io::fmt(sign * eigfns[b](i)) << '\n';
      }
    }
    ctx.outputs.add("eigenfunctions.csv", eig.str());
  }
  return ok ? kOk : kViolated;
}

inline int cmd_flow(RunContext& ctx) {
  const json& cfg = ctx.config;
  const json& f = config::require(cfg, "flow", "config");
  const ConvexMeasure m = config::measure(config::require(cfg, "measure", "config"), NormalizationMode::quadrature);
  GeneratorSpec spec;
  spec.points_per_dim = static_cast<int>(config::integer_or(f, "N", 2000, "flow"));
  if (f.contains("R") && !(f.at("R").is_string() && f.at("R") == "auto")) spec.radius = config::number(f.at("R"), "flow.R");
  const PhiFunction phi = f.contains("phi") ? config::phi(f.at("phi"), "flow.phi") : phi_square();
  const ScalarField f0 = config::field(config::require(f, "f0", "flow"), m.dim(), "flow.f0");
  const auto times = config::times(config::require(f, "times", "flow"), "flow.times");
  const DiscreteGenerator dg(m, spec);
  const FlowTrace tr = dg.alpha_trace(phi, dg.sample(f0), times);

  std::ostringstream csv;
  csv << io::csv_header(ctx.hash, ctx.seed) << "t,alpha,alpha_prime,bound\n";
  bool monotone = true;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    csv << io::fmt(tr.times[i]) << ',' << io::fmt(tr.alpha[i]) << ',' << io::fmt(tr.alpha_prime[i]) << ','
        << io::fmt(tr.bound[i]) << '\n';
    if (i > 0 && tr.alpha[i] < tr.alpha[i - 1] - 1e-12 * std::max(1.0, std::abs(tr.alpha[i]))) monotone = false;
  }
  json summary{{"decay_fit_rate", io::number(tr.decay_fit_rate)},
               {"theorem_rate", 2 * m.convexity_constant() * (m.beta() - 1)},
               {"bound_holds", tr.bound_holds},
               {"alpha_monotone", monotone},
               {"spectral_gap", dg.dense_spectrum() ? io::number(dg.spectral_gap()) : json(nullptr)},
               {"config_hash", ctx.hash},
               {"seed", ctx.seed}};
  ctx.outputs.add("flow.csv", csv.str());
  ctx.outputs.add("flow.json", summary.dump(2) + "\n");
  return tr.bound_holds && monotone ? kOk : kViolated;
}

inline int cmd_claim(RunContext& ctx) {
  const json& c = config::require(ctx.config, "claim", "config");
  const int n = static_cast<int>(config::integer(config::require(c, "n", "claim"), "claim.n"));
  const double beta = config::number(config::require(c, "beta", "claim"), "claim.beta");
  const double p = config::number(config::require(c, "p", "claim"), "claim.p");
  const auto trials = config::integer_or(c, "trials", 100000, "claim");
  const double tol = config::number_or(c, "tol", 1e-9, "claim");
  const ClaimResult r = claim_holds(n, beta, p, trials, ctx.seed, tol);
  std::string verdict = "holds";
  int code = kOk;
  if (!r.holds) {
    if (p > r.threshold) {
      verdict = "violated-above-threshold";
    } else {
      verdict = "violated";
      code = kViolated;
    }
  }
  json witness = nullptr;
  if (r.witness_lambda.size() > 0) {
    std::vector<double> l(r.witness_lambda.data(), r.witness_lambda.data() + r.witness_lambda.size());
    std::vector<double> a(n, 0.0);
    a[r.witness_vertex] = 1.0;
    witness = json{{"lambda", l}, {"a", a}, {"F", io::number(r.min_F * r.witness_lambda.squaredNorm())}};
  }
  json out{{"n", n},          {"beta", beta},       {"p", p},
           {"threshold", io::number(r.threshold)}, {"verdict", verdict}, {"min_F", io::number(r.min_F)},
           {"witness", witness}, {"trials", trials}, {"evaluations", r.evaluations},
           {"config_hash", ctx.hash}, {"seed", ctx.seed}};
  ctx.outputs.add("claim.json", out.dump(2) + "\n");
  return code;
}

inline int cmd_cov(RunContext& ctx) {
  const json& cfg = ctx.config;
  const IntegrationOptions opts = config::integration(cfg);
  const json& c = config::require(cfg, "cov", "config");
  const ConvexMeasure m = config::measure(config::require(cfg, "measure", "config"), mode_for(opts));
  const Integrator integ(m, opts);
  const json& pairs = config::require(c, "pairs", "cov");
  if (!pairs.is_array() || pairs.empty()) config::fail("cov.pairs", "expected a nonempty array");
  const json& ps = config::require(c, "p", "cov");
  std::vector<double> exps;
  if (ps.is_array()) {
    if (ps.empty()) config::fail("cov.p", "sweep list must not be empty");
    for (std::size_t k = 0; k < ps.size(); ++k) exps.push_back(exponent(ps[k], m, "cov.p[" + std::to_string(k) + "]"));
  } else {
    exps.push_back(exponent(ps, m, "cov.p"));
  }
  std::vector<InequalityReport> reports;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string path = "cov.pairs[" + std::to_string(i) + "]";
    const ScalarField g = config::field(config::require(pairs[i], "g", path), m.dim(), path + ".g");
    const ScalarField h = config::field(config::require(pairs[i], "h", path), m.dim(), path + ".h");
    for (double p : exps) reports.push_back(check_covariance(integ, g, h, p));
  }
  add_reports(ctx, "reports", reports);
  return count_violations(reports) ? kViolated : kOk;
}

inline int cmd_limit(RunContext& ctx) {
  const json& cfg = ctx.config;
  const IntegrationOptions opts = config::integration(cfg);
  const json& l = config::require(cfg, "limit", "config");
  const std::string kind = l.contains("kind") ? config::string(l.at("kind"), "limit.kind") : "lsi";
  const int n = static_cast<int>(config::integer_or(l, "n", 1, "limit"));
  if (n < 1) config::fail("limit.n", "must be positive");
  const ConvexPotential psi = config::psi(l.contains("psi") ? l.at("psi") : json::object(), n, "limit.psi");
  const auto betas = config::sweep(config::require(l, "betas", "limit"), "limit.betas");
  std::vector<InequalityReport> reports;
  if (kind == "lsi") {
    reports = limit_experiment_lsi(psi, betas, config::field(config::require(l, "f", "limit"), n, "limit.f"), opts);
  } else if (kind == "ccl") {
    const double p = config::number_or(l, "p", 2.0, "limit");
    const auto pts = limit_experiment_ccl(psi, betas, config::field(config::require(l, "g", "limit"), n, "limit.g"),
                                          config::field(config::require(l, "h", "limit"), n, "limit.h"), p, opts);
    for (const auto& pt : pts) {
      reports.push_back(pt.report);
      reports.back().note = "prefactor_rhs = " + io::fmt(pt.prefactor_rhs);
    }
  } else {
    config::fail("limit.kind", "expected \"lsi\" or \"ccl\"");
  }
  add_reports(ctx, "limit", reports);
  return count_violations(reports) ? kViolated : kOk;
}

inline int cmd_sample(RunContext& ctx) {
  const json& cfg = ctx.config;
  const json& s = config::require(cfg, "sample", "config");
  const auto count = config::integer_or(s, "count", 10000, "sample");
  if (count <= 0) config::fail("sample.count", "must be positive");
  const std::string sampler = s.contains("sampler") ? config::string(s.at("sampler"), "sample.sampler") : "auto";
  if (sampler != "auto" && sampler != "exact" && sampler != "metropolis") {
    config::fail("sample.sampler", "expected \"auto\", \"exact\" or \"metropolis\"");
  }
  const ConvexMeasure m = config::measure(config::require(cfg, "measure", "config"), NormalizationMode::mc_only);
  SampleBatch b;
  if (sampler == "exact" || (sampler == "auto" && m.kind() == MeasureKind::cauchy)) {
    b = sample_cauchy(m, count, ctx.seed);
  } else {
    b = sample_metropolis(m, count, config::integer_or(s, "burn_in", 5000, "sample"), ctx.seed,
                          static_cast<int>(config::integer_or(s, "stride", 1, "sample")));
  }
  std::ostringstream csv;
  csv << io::csv_header(ctx.hash, ctx.seed);
  for (int i = 0; i < m.dim(); ++i) csv << (i ? "," : "") << 'x' << i + 1;
  csv << '\n';
  for (std::int64_t j = 0; j < b.size(); ++j) {
    for (int i = 0; i < m.dim(); ++i) csv << (i ? "," : "") << io::fmt(b.points(i, j));
    csv << '\n';
  }
  const Vec mean = b.points.rowwise().mean();
  const Vec second = b.points.cwiseAbs2().rowwise().mean();
  json out{{"method", b.method},
           {"count", b.size()},
           {"seed", ctx.seed},
           {"config_hash", ctx.hash},
           {"acceptance_rate", io::number(b.acceptance_rate)},
           {"step_size", io::number(b.step_size)},
           {"flagged", b.flagged},
           {"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
           {"second_moment", std::vector<double>(second.data(), second.data() + second.size())}};
  ctx.outputs.add("samples.csv", csv.str());
  ctx.outputs.add("sample.json", out.dump(2) + "\n");
  return kOk;
}

/// Runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Numerical checks of entropy, Beckner and covariance inequalities for convex measures"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", method;
  std::optional<std::int64_t> seed;
  const std::vector<std::string> names{"report", "gap", "flow", "claim", "cov", "limit", "sample"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration or run manifest")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "seed (overrides the config)");
    sub->add_option("--method", method, "grid or mc (overrides the config)")
        ->check(CLI::IsMember({"grid", "mc"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    json cfg = read_config(config_path);
    if (seed) cfg["seed"] = *seed;
    if (!method.empty()) cfg["method"] = method;
    RunContext ctx{command, cfg, io::config_hash(cfg), 1, io::OutputSet(out_dir)};
    ctx.seed = config::integration(cfg).mc.seed;

    int code = kOk;
    if (command == "report") code = cmd_report(ctx);
    else if (command == "gap") code = cmd_gap(ctx);
    else if (command == "flow") code = cmd_flow(ctx);
    else if (command == "claim") code = cmd_claim(ctx);
    else if (command == "cov") code = cmd_cov(ctx);
    else if (command == "limit") code = cmd_limit(ctx);
    else code = cmd_sample(ctx);

    auto files = ctx.outputs.names();
    files.push_back("manifest.json");
    ctx.outputs.add("manifest.json", io::manifest(command, cfg, ctx.hash, ctx.seed, files).dump(2) + "\n");
    ctx.outputs.commit();
    out << command << ": " << (code == kOk ? "ok" : "violation found") << " (config " << ctx.hash.substr(0, 12)
        << ", outputs in " << out_dir << ")\n";
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const ThresholdError& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kPrecondition;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kPrecondition;
  }
}

}  // namespace convexineq::cli

#endif  // CONVEXINEQ_CLI_HPP
