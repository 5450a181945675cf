#include "zerostat/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>

#include <json.hpp>

#include "zerostat/parallel.hpp"
#include "zerostat/stats.hpp"

namespace zerostat {

namespace {

using Row = std::vector<std::string>;

class Csv {
public:
  Csv(const std::filesystem::path &path, const RunConfig &config, const Row &header)
      : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << csv_preamble(config) << '\n';
    row(header);
  }
  void row(const Row &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

private:
  std::ofstream out_;
};

std::string num(double v) { return format_number(v); }
std::string num(int v) { return std::to_string(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Context {
  const RunConfig &config;
  int workers;
  std::filesystem::path out;
  RunRecord &record;
  MetricSequence metric;

  Csv csv(const std::string &name, const Row &header) {
    record.outputs.push_back(name);
    return Csv(out / name, config, header);
  }
  void verdict(std::string name, bool passed, std::string detail) {
    record.verdicts.push_back({std::move(name), passed, std::move(detail)});
  }
  std::vector<int> degrees() const {
    std::vector<int> d = config.degrees;
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    return d;
  }
  BergmanBasis basis(int p) const { return assemble(p, metric, config.level_for(p), workers); }
};

std::string fmt_detail(const char *f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ------------------------------------------------------------------ kernel

void cmd_kernel(Context &ctx) {
  const auto degrees = ctx.degrees();
  const auto &tol = ctx.config.tolerances;
  std::vector<BergmanBasis> bases;
  for (int p : degrees) bases.push_back(ctx.basis(p));
  const auto first = first_order_report(bases, diagnostic_grid(), ctx.workers);
  const auto dio = diophantine_report(degrees, ctx.metric, diagnostic_grid());

  auto csv = ctx.csv("kernel.csv", {"p", "A", "eta", "max_deviation", "min_ratio", "max_ratio", "band_lo",
                                    "band_hi", "density_error", "variational_max_ratio",
                                    "curvature_sup_deviation", "curvature_band_ok"});
  double worst_density = 0.0, worst_closed = 0.0;
  bool variational_ok = true;
  std::string variational_error;
  for (std::size_t i = 0; i < bases.size(); ++i) {
    const int p = degrees[i];
    const auto &row = first.rows[i];
    const double dens = density_check(bases[i], build_grid(ctx.config.level_for(p) + 8), ctx.workers);
    worst_density = std::max(worst_density, dens);
    double vratio = 0.0;
    try {
      vratio = variational_check(bases[i], ChartPoint::finite({0.3, -0.2}), 200, ctx.config.master_seed)
                   .max_random_ratio;
    } catch (const std::runtime_error &e) {
      variational_ok = false;
      variational_error = e.what();
    }
    if (ctx.metric.unperturbed()) worst_closed = std::max(worst_closed, std::abs(row.max_deviation - 1.0 / p));
    csv.row({num(p), num(row.A), num(row.eta), num(row.max_deviation), num(row.min_ratio), num(row.max_ratio),
             num(row.band_lo), num(row.band_hi), num(dens), num(vratio), num(dio.rows[i].sup_deviation),
             flag(dio.rows[i].band_ok)});
  }
  ctx.record.notices.push_back("fitted D' = " + format_number(first.fitted_d_prime));
  ctx.verdict("density", worst_density <= tol.density,
              fmt_detail("max |integral K_p - (p+1)| = %.3g (tolerance %.3g)", worst_density, tol.density));
  ctx.verdict("variational", variational_ok, variational_ok ? "extremal property holds" : variational_error);
  if (ctx.metric.unperturbed())
    ctx.verdict("unperturbed_deviation", worst_closed <= tol.kernel_closed_form,
                fmt_detail("max |deviation - 1/p| = %.3g (tolerance %.3g)", worst_closed, tol.kernel_closed_form));
  if (degrees.size() >= 2) {
    ctx.verdict("first_order_decreasing", first.strictly_decreasing,
                "sup |K_p/A_p - 1| strictly decreasing across degrees");
    ctx.verdict("eta_decreasing", dio.eta_decreasing, "eta_p strictly decreasing across degrees");
  } else {
    ctx.record.notices.push_back("single degree: trend checks skipped");
  }
}

// ------------------------------------------------------------------- decay

const ChartPoint kNearDiagonalCenter = ChartPoint::finite({0.3, 0.1});

void cmd_decay(Context &ctx) {
  const auto degrees = ctx.degrees();
  const auto &tol = ctx.config.tolerances;
  auto fit = ctx.csv("decay.csv", {"p", "theta_min", "theta_max", "G_fit", "B_fit", "points", "unresolved",
                                   "violations", "validation_points", "validation_violations",
                                   "cos_bound_violations", "near_diagonal_max_deviation", "lambda_over_A"});
  auto near = ctx.csv("near_diagonal.csv", {"p", "u_re", "u_im", "v_re", "v_im", "ratio"});
  const auto centers = default_fit_centers();
  const auto uv = default_uv_grid();
  OffDiagonalOptions options;
  options.workers = ctx.workers;
  bool fit_ok = true, cos_ok = true, decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int p : degrees) {
    const auto basis = ctx.basis(p);
    const auto r = offdiagonal_fit(basis, centers, options);
    const auto prof = near_diagonal_profile(basis, kNearDiagonalCenter, uv);
    fit_ok = fit_ok && r.b_fit > 0.0 && r.violations == 0;
    if (r.cos_bound_violations > 0) cos_ok = false;
    if (!(prof.max_deviation < prev)) decreasing = false;
    prev = prof.max_deviation;
    fit.row({num(p), num(r.theta_min), num(r.theta_max), num(r.g_fit), num(r.b_fit), num(r.points),
             num(r.unresolved), num(r.violations), num(r.validation_points), num(r.validation_violations),
             num(r.cos_bound_violations), num(prof.max_deviation), num(prof.lambda_over_A)});
    for (const auto &s : prof.samples)
      near.row({num(p), num(s.u.real()), num(s.u.imag()), num(s.v.real()), num(s.v.imag()), num(s.ratio)});
    if (p == kMaxDegree)
      ctx.verdict("near_diagonal_band", prof.max_deviation <= tol.near_diagonal,
                  fmt_detail("max |R_p - 1| = %.4g at p = 256 (tolerance %.3g)", prof.max_deviation,
                             tol.near_diagonal));
  }
  ctx.verdict("offdiagonal_fit", fit_ok, "B_fit > 0 with no post-fit violations on the far region");
  if (ctx.metric.unperturbed()) ctx.verdict("cos_bound", cos_ok, "K^2 <= exp(-p theta^2 / 4) at every far point");
  if (degrees.size() >= 2) ctx.verdict("near_diagonal_decreasing", decreasing, "max |R_p - 1| decreasing in p");
  else ctx.record.notices.push_back("single degree: trend checks skipped");
}

// --------------------------------------------------------------------- clt

void cmd_clt(Context &ctx) {
  const auto degrees = ctx.degrees();
  const auto &tol = ctx.config.tolerances;
  const auto phi = test_form(ctx.config.test_form);
  if (phi.degenerate())
    throw ConfigError("test_form '" + phi.name + "' has dd^c phi = 0; the CLT needs a non-degenerate form");
  if (ctx.config.samples < 100) throw ConfigError("samples: the CLT needs at least 100 samples");

  auto summary = ctx.csv("clt_summary.csv",
                         {"p", "M", "mean", "variance", "skewness", "excess_kurtosis", "ks_distance",
                          "rejected_samples", "expected_mean", "sup_integral", "normalized_variance", "tainted"});
  auto standardized = ctx.csv("clt_standardized.csv", {"p", "index", "value", "standardized"});
  ctx.record.outputs.push_back("clt_samples.jsonl");
  std::ofstream jsonl(ctx.out / "clt_samples.jsonl", std::ios::trunc);

  bool mean_ok = true, count_ok = true;
  EnsembleSummary last;
  for (int p : degrees) {
    const auto basis = ctx.basis(p);
    const auto run = run_clt(basis, phi, ctx.config.samples, ctx.config.master_seed, ctx.workers);
    const double expected = expected_statistic(basis, phi, build_grid(2 * p + 16), ctx.workers).total;
    const double sup = st_condition_ii(basis, build_grid(kSupGridLevel), build_grid(default_st_level(p)),
                                       ctx.workers);
    const auto &s = run.summary;
    const double se = std::sqrt(s.variance / s.M);
    if (!(std::abs(s.mean - expected) <= tol.mean_sigmas * se)) mean_ok = false;
    ctx.record.tainted = ctx.record.tainted || run.tainted;
    summary.row({num(p), num(s.M), num(s.mean), num(s.variance), num(s.skewness), num(s.excess_kurtosis),
                 num(s.ks_distance), num(s.rejected_samples), num(expected), num(sup), num(s.variance / sup),
                 flag(run.tainted)});
    std::size_t k = 0;
    for (const auto &rec : run.records) {
      if (!rec.degenerate && rec.zero_count != p) count_ok = false;
      nlohmann::ordered_json j = {{"p", p},           {"index", rec.index},
                                  {"value", rec.value}, {"residual", rec.residual},
                                  {"degenerate", rec.degenerate}, {"accepted", rec.accepted},
                                  {"zero_count", rec.zero_count}};
      jsonl << j.dump() << '\n';
      if (rec.accepted)
        standardized.row({num(p), std::to_string(rec.index), num(rec.value), num(run.standardized[k++])});
    }
    last = s;
    if (run.tainted)
      ctx.record.notices.push_back("p = " + std::to_string(p) + ": " + std::to_string(s.rejected_samples) +
                                   " rejected samples, run tainted");
  }
  ctx.verdict("expected_mean", mean_ok, "empirical mean within the configured standard errors of E<Z, phi>");
  ctx.verdict("zero_count", count_ok, "p zeros on every non-degenerate sample");
  char buf[200];
  std::snprintf(buf, sizeof buf, "p = %d: skewness %.4g, excess kurtosis %.4g, KS %.4g", last.p, last.skewness,
                last.excess_kurtosis, last.ks_distance);
  ctx.verdict("gaussian_bands",
              std::abs(last.skewness) <= tol.skewness && std::abs(last.excess_kurtosis) <= tol.excess_kurtosis &&
                  last.ks_distance <= tol.ks,
              buf);
}

// ---------------------------------------------------------------- st-check

void cmd_st_check(Context &ctx) {
  const auto degrees = ctx.degrees();
  const auto &tol = ctx.config.tolerances;
  const auto phi = test_form(ctx.config.test_form);
  if (phi.degenerate())
    throw ConfigError("test_form '" + phi.name + "' has dd^c phi = 0; condition (i) is undefined");
  auto csv = ctx.csv("st_check.csv", {"p", "sup_integral", "closed_form", "double_integral",
                                      "oracle_double_integral", "ratio_nu1", "psi_norm2", "near_far_split"});
  bool decreasing = true, closed_ok = true, ratio_ok = true, oracle_ok = true;
  double prev = std::numeric_limits<double>::infinity(), worst_closed = 0.0, worst_oracle = 0.0, min_ratio = 1e300;
  for (int p : degrees) {
    const auto r = st_conditions(ctx.basis(p), phi, ctx.workers);
    const double closed = ctx.metric.unperturbed() ? 2.0 / (p + 2) : std::nan("");
    if (ctx.metric.unperturbed()) worst_closed = std::max(worst_closed, std::abs(r.sup_integral - closed));
    if (!(r.sup_integral < prev)) decreasing = false;
    prev = r.sup_integral;
    min_ratio = std::min(min_ratio, r.ratio_nu1 / r.psi_norm2);
    if (!(r.ratio_nu1 >= tol.st_ratio_floor * r.psi_norm2)) ratio_ok = false;
    if (r.oracle_double_integral >= 0.0) {
      const double rel = std::abs(r.double_integral - r.oracle_double_integral) / r.oracle_double_integral;
      worst_oracle = std::max(worst_oracle, rel);
      if (!(rel <= tol.st_oracle)) oracle_ok = false;
    }
    csv.row({num(p), num(r.sup_integral), num(closed), num(r.double_integral), num(r.oracle_double_integral),
             num(r.ratio_nu1), num(r.psi_norm2), num(r.near_far_split)});
  }
  closed_ok = worst_closed <= tol.st_closed_form;
  if (ctx.metric.unperturbed())
    ctx.verdict("condition_ii_closed_form", closed_ok,
                fmt_detail("max |value - 2/(p+2)| = %.3g (tolerance %.3g)", worst_closed, tol.st_closed_form));
  if (degrees.size() >= 2) ctx.verdict("condition_ii_decreasing", decreasing, "sup integral strictly decreasing in p");
  else ctx.record.notices.push_back("single degree: trend checks skipped");
  ctx.verdict("condition_i_ratio", ratio_ok,
              fmt_detail("min quotient / integral psi^2 = %.4g (floor %.3g)", min_ratio, tol.st_ratio_floor));
  ctx.verdict("condition_i_oracle", oracle_ok,
              fmt_detail("max relative gap to the direct sum = %.3g (tolerance %.3g)", worst_oracle, tol.st_oracle));
  ctx.record.notices.push_back("positive infimum of the condition (i) quotient over degrees: " +
                               format_number(min_ratio) + " times the integral of psi^2");
}

// ---------------------------------------------------------------- pl-check

void cmd_pl_check(Context &ctx) {
  const auto degrees = ctx.degrees();
  const auto &tol = ctx.config.tolerances;
  const auto phi = test_form(ctx.config.test_form);
  const auto one = test_form("one");
  auto csv = ctx.csv("pl_check.csv", {"p", "index", "root_sum", "pl_integral", "relative_discrepancy",
                                      "root_sum_one", "pl_one", "zero_count", "degenerate", "residual"});
  double worst = 0.0, worst_one = 0.0;
  bool count_ok = true;
  for (int p : degrees) {
    const auto basis = ctx.basis(p);
    const auto grid = build_grid(default_pl_level(p));
    const PoincareLelong pl(basis, phi, grid), pl_one(basis, one, grid);
    struct Item {
      double root_sum = 0, integral = 0, rel = 0, root_one = 0, integral_one = 0, residual = 0;
      int zeros = 0;
      bool degenerate = false, usable = false;
    };
    std::vector<Item> items(static_cast<std::size_t>(ctx.config.samples));
    parallel_for(items.size(), ctx.workers, [&](std::size_t i) {
      const auto s = sample(basis, ctx.config.master_seed, i);
      const auto zs = find_roots(s);
      Item &it = items[i];
      it.zeros = static_cast<int>(zs.roots.size());
      it.degenerate = zs.degenerate;
      it.usable = zs.usable;
      it.residual = zs.residual;
      it.integral = pl(s);
      it.integral_one = pl_one(s);
      if (zs.usable) {
        it.root_sum = linear_statistic(zs, phi);
        it.root_one = linear_statistic(zs, one);
        it.rel = std::abs(it.root_sum - it.integral) / (1.0 + std::abs(it.root_sum));
      } else {
        it.root_sum = it.root_one = it.rel = std::nan("");
      }
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto &it = items[i];
      if (!it.degenerate) {
        if (it.zeros != p) count_ok = false;
        if (it.usable) worst = std::max(worst, it.rel);
        else count_ok = false;
      }
      worst_one = std::max(worst_one, std::abs(it.integral_one - p) / p);
      csv.row({num(p), num(i), num(it.root_sum), num(it.integral), num(it.rel), num(it.root_one),
               num(it.integral_one), num(it.zeros), flag(it.degenerate), num(it.residual)});
    }
  }
  ctx.record.notices.push_back("max relative discrepancy " + format_number(worst) + " (tolerance " +
                               format_number(tol.pl_relative) + ")");
  ctx.verdict("pl_discrepancy", worst <= 10.0 * tol.pl_relative,
              fmt_detail("max relative discrepancy %.3g (failure above %.3g)", worst, 10.0 * tol.pl_relative));
  ctx.verdict("pl_chern_number", worst_one <= tol.pl_relative,
              fmt_detail("max |PL<Z, 1> - p| / p = %.3g (tolerance %.3g)", worst_one, tol.pl_relative));
  ctx.verdict("zero_count", count_ok, "p usable zeros on every non-degenerate sample");
}

const std::map<std::string, std::function<void(Context &)>> &commands() {
  static const std::map<std::string, std::function<void(Context &)>> table = {
      {"kernel", cmd_kernel}, {"decay", cmd_decay}, {"clt", cmd_clt}, {"st-check", cmd_st_check},
      {"pl-check", cmd_pl_check}};
  return table;
}

void write_record(const RunRecord &r, const RunConfig &config, const std::filesystem::path &path) {
  nlohmann::ordered_json j;
  j["command"] = r.command;
  j["config_hash"] = r.config_hash;
  j["timestamp"] = r.timestamp;
  j["tool_version"] = r.tool_version;
  j["config"] = nlohmann::ordered_json::parse(to_json(config));
  j["outputs"] = r.outputs;
  j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto &v : r.verdicts) j["verdicts"].push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  j["notices"] = r.notices;
  j["tainted"] = r.tainted;
  j["exit_status"] = r.exit_status();
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

} // namespace

int RunRecord::exit_status() const {
  for (const auto &v : verdicts)
    if (!v.passed) return kExitScientific;
  return tainted ? kExitTainted : kExitPass;
}

std::vector<std::string> command_names() {
  std::vector<std::string> names;
  for (const auto &[name, fn] : commands()) names.push_back(name);
  return names;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_preamble(const RunConfig &config) { return "# config_hash=" + config_hash(config); }

RunRecord run_command(const std::string &command, const RunConfig &config, int workers,
                      const std::filesystem::path &out_dir) {
  const auto it = commands().find(command);
  if (it == commands().end()) throw ConfigError("unknown command '" + command + "'");
  validate(config);
  if (workers < 1) throw ConfigError("workers: must be positive");
  std::filesystem::create_directories(out_dir);

  RunRecord record;
  record.command = command;
  record.config_hash = config_hash(config);
  record.timestamp = utc_now();
  Context ctx{config, workers, out_dir, record, MetricSequence(config.perturbation)};
  it->second(ctx);
  const std::string name = command + "_record.json";
  record.outputs.push_back(name);
  write_record(record, config, out_dir / name);
  return record;
}

} // namespace zerostat
