#include "strataquad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "strataquad/asymptotics.hpp"
#include "strataquad/mse.hpp"

namespace strataquad {

Command parse_command(const std::string& name) {
  if (name == "mse") return Command::kMse;
  if (name == "asymptotics") return Command::kAsymptotics;
  if (name == "allocate") return Command::kAllocate;
  if (name == "density-opt") return Command::kDensityOpt;
  if (name == "experiment") return Command::kExperiment;
  if (name == "diagnose-singularity") return Command::kDiagnoseSingularity;
  fail(ErrorKind::kInvalidArgument, "unknown command '" + name + "'");
}

const char* to_string(Command command) {
  switch (command) {
    case Command::kMse:
      return "mse";
    case Command::kAsymptotics:
      return "asymptotics";
    case Command::kAllocate:
      return "allocate";
    case Command::kDensityOpt:
      return "density-opt";
    case Command::kExperiment:
      return "experiment";
    case Command::kDiagnoseSingularity:
      return "diagnose-singularity";
  }
  return "mse";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
      return 2;
    case ErrorKind::kBudget:
      return 3;
    case ErrorKind::kDomain:
      return 4;
    default:
      return 1;
  }
}

namespace {

double norm(Point t) {
  double s = 0.0;
  for (double x : t) s += x * x;
  return std::sqrt(s);
}

[[noreturn]] void config_error(const std::string& message) {
  fail(ErrorKind::kConfig, message);
}

}  // namespace

FieldModel build_model(const ModelConfig& c) {
  const int dim = c.dim.value_or(1);
  if (c.name == "fbf") {
    std::vector<int> widths = c.decomposition;
    if (widths.empty()) widths = {dim};
    const Decomposition dec(widths);
    if (c.dim && *c.dim != dec.dim()) config_error("model.dim disagrees with model.decomposition");
    if (static_cast<int>(c.alpha.size()) != dec.components()) {
      config_error("model.alpha needs one exponent per component");
    }
    return make_fbf(dec, Smoothness(c.alpha));
  }
  if (c.name == "exp") {
    if (c.alpha.size() != 1) config_error("model.alpha needs exactly one exponent");
    return make_exp_field(c.alpha[0], dim);
  }
  if (c.name == "amplitude_modulated") {
    if (c.alpha.size() != 1) config_error("model.alpha needs exactly one exponent");
    const FieldModel base = make_exp_field(c.alpha[0], dim);
    const double scale = c.scale.value_or(1.0);
    if (!(scale > 0.0)) config_error("model.scale must be positive");
    ModulationMetadata meta;
    meta.name = "amplitude_modulated";
    if (*c.amplitude == "inverse_shift") {
      const double shift = c.shift.value_or(0.1);
      if (!(shift > 0.0)) config_error("model.shift must be positive");
      // Base local stationarity constant is 2.
      meta.local_stationarity = {[scale, shift](Point t) {
        const double a = scale / (norm(t) + shift);
        return 2.0 * a * a;
      }};
      return make_amplitude_modulated(
          base, [scale, shift](Point t) { return scale / (norm(t) + shift); }, meta);
    }
    const double beta = *c.beta;
    if (!(beta > 0.0 && beta < c.alpha[0])) config_error("model.beta must lie in (0, alpha)");
    const double s2 = scale * scale;
    meta.local_stationarity = {[s2, beta](Point t) { return 2.0 * s2 * std::pow(norm(t), beta); }};
    meta.local_holder = [s2, beta](Point t) {
      return s2 * (0.25 * beta * beta * std::pow(norm(t), beta - 2.0) + 2.0);
    };
    meta.holder = HolderData{beta, c.holder_constant.value_or(3.0 * s2)};
    meta.singular_at_origin = true;
    return make_amplitude_modulated(
        base, [scale, beta](Point t) { return scale * std::pow(norm(t), 0.5 * beta); }, meta);
  }
  if (c.name == "warped_fbm") {
    return make_warped_fbm(*c.lambda, *c.beta, c.scale.value_or(1.0));
  }
  config_error("unknown model '" + c.name + "'");
}

namespace {

DensitySpec optimal_density_for(const FieldModel& model) {
  if (model.dim() != 1) config_error("density 'optimal' needs a one-dimensional model");
  const double alpha = model.smoothness[0];
  if (model.name == "warped_fbm" && model.singular_at_origin) {
    // c(t) is a pure power, so h_opt is the power density with exponent
    // gamma times that of c.
    const double c1 = model.local_stationarity[0](std::vector<double>{1.0});
    const double c2 = model.local_stationarity[0](std::vector<double>{0.5});
    const double power = std::log(c2 / c1) / std::log(0.5);
    return DensitySpec::power(power / (2.0 + alpha));
  }
  const PointFunction c = model.local_stationarity.at(0);
  const ScalarFunction Q = [c](double t) { return c(std::vector<double>{t}); };
  return optimal_density_1d(Q, alpha).density;
}

DensitySpec density_from_string(const std::string& s, const FieldModel& model) {
  if (s == "uniform") return DensitySpec::uniform();
  if (s == "optimal") return optimal_density_for(model);
  if (s.rfind("power:", 0) == 0) return DensitySpec::power(std::stod(s.substr(6)));
  if (s.rfind("quantile:pow:", 0) == 0) {
    const double p = std::stod(s.substr(13));
    if (!(p > 0.0)) config_error("quantile power must be positive");
    return DensitySpec::from_quantile([p](double x) { return std::pow(x, p); }, s,
                                      ScalarFunction([p](double x) {
                                        return p * std::pow(x, p - 1.0);
                                      }));
  }
  config_error("unknown density '" + s + "'");
}

}  // namespace

std::vector<DensitySpec> build_densities(const ExperimentConfig& config, const FieldModel& model) {
  const int k = model.decomposition.components();
  std::vector<DensitySpec> out;
  if (config.design.densities.empty()) {
    out.assign(k, DensitySpec::uniform());
    return out;
  }
  if (static_cast<int>(config.design.densities.size()) != k) {
    config_error("design.densities needs one entry per component");
  }
  for (const std::string& s : config.design.densities) out.push_back(density_from_string(s, model));
  return out;
}

namespace {

AllocationRule rule_of(const std::string& s) {
  if (s == "optimal") return AllocationRule::kOptimal;
  if (s == "explicit") return AllocationRule::kExplicit;
  return AllocationRule::kUniform;
}

CubatureOptions analytic_options() {
  CubatureOptions options;
  options.allow_singular = true;
  return options;
}

}  // namespace

Schedule build_schedule(const ExperimentConfig& config, const FieldModel& model,
                        const std::vector<DensitySpec>& densities) {
  Schedule s;
  s.family.densities = densities;
  s.family.rule = rule_of(config.design.allocation);
  const RunConfig& run = config.run;
  if (!run.N.empty()) s.N_targets = run.N;
  for (std::int64_t n : run.n) {
    if (n < 1) config_error("run.n entries must be positive");
    std::int64_t N = 1;
    for (int m = 0; m < model.dim(); ++m) N *= n;
    s.N_targets.push_back(N);
  }
  s.counts = run.counts;
  for (const auto& row : s.counts) {
    if (static_cast<int>(row.size()) != model.decomposition.components()) {
      config_error("run.counts rows need one count per component");
    }
  }
  if (s.family.rule == AllocationRule::kOptimal) {
    s.family.v = analyze(model, densities, analytic_options()).v;
  }
  try {
    s.validate();
  } catch (const Error& e) {
    config_error(std::string("run schedule: ") + e.what());
  }
  return s;
}

namespace {

namespace fs = std::filesystem;

struct Context {
  const ExperimentConfig& config;
  const RunOptions& options;
  std::ostream& log;
  FieldModel model;
  std::vector<DensitySpec> densities;
  fs::path out;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream file(path);
  if (!file) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  return file;
}

void make_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

MseOptions mse_options(const Context& ctx) {
  MseOptions o;
  if (ctx.options.order) {
    o.order = *ctx.options.order;
  } else if (ctx.config.run.order) {
    o.order = *ctx.config.run.order;
  }
  o.threads = ctx.options.threads;
  o.per_stratum = ctx.options.per_stratum;
  return o;
}

std::uint64_t seed_of(const Context& ctx) {
  return ctx.options.seed.value_or(ctx.config.run.seed.value_or(1));
}

// Projected cost per schedule entry; throws kBudget when any exceeds the cap.
bool check_budget(const Context& ctx, const Schedule& schedule, bool print) {
  const MseOptions o = mse_options(ctx);
  const double budget = evaluation_budget();
  double total = 0.0;
  std::ostringstream over;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const Allocation alloc = schedule_allocation(ctx.model, schedule, i);
    const CrossRegularDesign design = build_design(ctx.model.decomposition, ctx.densities, alloc);
    const double cost = projected_evaluations(ctx.model, design, o);
    total += cost;
    if (print) {
      ctx.log << "N=" << alloc.N_actual << " projected kernel evaluations " << format_double(cost)
              << '\n';
    }
    if (cost > budget) {
      over << "N=" << alloc.N_actual << " projects " << format_double(cost)
           << " kernel evaluations; ";
    }
  }
  if (print) ctx.log << "total projected kernel evaluations " << format_double(total) << '\n';
  if (!over.str().empty()) {
    fail(ErrorKind::kBudget, over.str() + "budget is " + format_double(budget) +
                                 "; lower the order or N, or raise STRATAQUAD_BUDGET");
  }
  return true;
}

void write_per_stratum(const Context& ctx, const CrossRegularDesign& design,
                       const MseReport& report) {
  std::ofstream file =
      open_output(ctx.out / ("per_stratum_N" + std::to_string(report.N_actual) + ".csv"));
  const int d = design.dim();
  for (int m = 1; m <= d; ++m) file << 'i' << m << ',';
  file << "volume,e2_i\n";
  for (std::int64_t i = 0; i < design.strata_count(); ++i) {
    const Stratum s = design.stratum(i);
    for (int m = 0; m < d; ++m) file << s.index[m] << ',';
    file << format_double(s.volume) << ',' << format_double(report.per_stratum[i]) << '\n';
  }
}

std::vector<ScheduleRow> run_rows(const Context& ctx, const Schedule& schedule) {
  const MseOptions o = mse_options(ctx);
  std::vector<ScheduleRow> rows;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const Allocation alloc = schedule_allocation(ctx.model, schedule, i);
    const CrossRegularDesign design = build_design(ctx.model.decomposition, ctx.densities, alloc);
    const MseReport report = exact_mse(ctx.model, design, o);
    ScheduleRow row;
    row.N_target = schedule.family.rule == AllocationRule::kExplicit ? alloc.N_actual
                                                                     : schedule.N_targets[i];
    row.N_actual = report.N_actual;
    row.n = alloc.n;
    row.e2 = report.e2;
    row.error_estimate = report.error_estimate;
    row.order = report.order;
    row.seconds = report.seconds;
    row.evaluations = report.evaluations;
    rows.push_back(row);
    if (ctx.options.per_stratum) write_per_stratum(ctx, design, report);
    ctx.log << "N=" << row.N_actual << " e2=" << format_double(row.e2) << '\n';
  }
  return rows;
}

void write_rows(const Context& ctx, const std::vector<ScheduleRow>& rows) {
  std::ofstream schedule_file = open_output(ctx.out / "schedule.csv");
  write_schedule_csv(schedule_file, rows);
  std::ofstream timing_file = open_output(ctx.out / "timing.csv");
  write_timing_csv(timing_file, rows);
}

void run_simulation(const Context& ctx, const Schedule& schedule) {
  const SimulateConfig& sim = *ctx.config.simulate;
  std::ofstream file = open_output(ctx.out / "simulation.csv");
  file << "N,exact,estimate,standard_error,z\n";
  for (std::int64_t N : sim.N) {
    Allocation alloc = schedule.family.rule == AllocationRule::kOptimal
                           ? allocate_optimal(schedule.family.v, ctx.model.smoothness,
                                              ctx.model.decomposition, N)
                           : allocate_uniform(N, ctx.model.decomposition);
    const CrossRegularDesign design = build_design(ctx.model.decomposition, ctx.densities, alloc);
    MseOptions o = mse_options(ctx);
    o.per_stratum = false;
    const MseReport exact = exact_mse(ctx.model, design, o);
    SimulationOptions so;
    so.seed = seed_of(ctx);
    so.threads = ctx.options.threads;
    if (sim.eta_samples) so.eta_samples = *sim.eta_samples;
    if (sim.replications) so.field_replications = *sim.replications;
    if (sim.refinement) so.riemann_refinement = *sim.refinement;
    const SimulationResult r = simulate_mse(ctx.model, design, so);
    const double z = r.standard_error > 0.0 ? (r.estimate - exact.e2) / r.standard_error : 0.0;
    file << exact.N_actual << ',' << format_double(exact.e2) << ',' << format_double(r.estimate)
         << ',' << format_double(r.standard_error) << ',' << format_double(z) << '\n';
    ctx.log << "simulation N=" << exact.N_actual << " z=" << format_double(z) << '\n';
  }
}

void cmd_mse(Context& ctx) {
  const Schedule schedule = build_schedule(ctx.config, ctx.model, ctx.densities);
  check_budget(ctx, schedule, ctx.options.dry_run);
  if (ctx.options.dry_run) return;
  make_output_dir(ctx.out);
  write_rows(ctx, run_rows(ctx, schedule));
  if (ctx.config.simulate) run_simulation(ctx, schedule);
}

std::vector<std::int64_t> targets(const ExperimentConfig& config, const FieldModel& model) {
  std::vector<std::int64_t> out = config.run.N;
  for (std::int64_t n : config.run.n) {
    std::int64_t N = 1;
    for (int m = 0; m < model.dim(); ++m) N *= n;
    out.push_back(N);
  }
  for (const auto& row : config.run.counts) {
    std::int64_t N = 1;
    for (int j = 0; j < model.decomposition.components(); ++j) {
      for (int w = 0; w < model.decomposition.width(j); ++w) N *= row.at(j);
    }
    out.push_back(N);
  }
  return out;
}

void write_allocation(const Context& ctx, const std::vector<double>& v, AllocationRule rule) {
  const Decomposition& dec = ctx.model.decomposition;
  std::ofstream file = open_output(ctx.out / "allocation.csv");
  file << "N_target";
  for (int j = 1; j <= dec.components(); ++j) file << ",n_" << j;
  file << ",N_actual";
  if (rule == AllocationRule::kOptimal) {
    for (int j = 1; j <= dec.components(); ++j) file << ",n_real_" << j;
  }
  file << ",predicted_e2\n";
  const std::vector<std::int64_t> N = targets(ctx.config, ctx.model);
  for (std::size_t i = 0; i < N.size(); ++i) {
    Allocation alloc;
    if (rule == AllocationRule::kOptimal) {
      alloc = allocate_optimal(v, ctx.model.smoothness, dec, N[i]);
    } else if (rule == AllocationRule::kExplicit) {
      alloc = Allocation::from_counts(dec, ctx.config.run.counts.at(i));
    } else {
      alloc = allocate_uniform(N[i], dec);
    }
    file << N[i];
    for (std::int64_t n : alloc.n) file << ',' << n;
    file << ',' << alloc.N_actual;
    if (rule == AllocationRule::kOptimal) {
      for (double r : alloc.n_real) file << ',' << format_double(r);
    }
    file << ',' << (v.empty() ? std::string("nan")
                              : format_double(predicted_mse(v, ctx.model.smoothness, dec, alloc)))
         << '\n';
  }
}

void cmd_asymptotics(Context& ctx) {
  const Decomposition& dec = ctx.model.decomposition;
  const AsymptoticsReport report = analyze(ctx.model, ctx.densities, analytic_options());
  make_output_dir(ctx.out);
  std::ofstream file = open_output(ctx.out / "asymptotics.csv");
  file << "quantity,component,value\n";
  for (int j = 0; j < dec.components(); ++j) {
    file << "alpha," << j + 1 << ',' << format_double(ctx.model.smoothness[j]) << '\n';
    file << "width," << j + 1 << ',' << dec.width(j) << '\n';
    file << "v," << j + 1 << ',' << format_double(report.v[j]) << '\n';
    file << "b_tilde," << j + 1 << ',' << format_double(report.b_values[j]) << '\n';
  }
  file << "rho,," << format_double(report.rho) << '\n';
  file << "kappa,," << format_double(report.kappa) << '\n';
  const double limit = dec.components() * std::pow(report.kappa, report.rho);
  file << "optimal_constant,," << format_double(limit) << '\n';
  file << "optimal_rate,," << format_double(1.0 + report.rho) << '\n';
  ctx.log << "rho=" << format_double(report.rho) << " kappa=" << format_double(report.kappa)
          << " optimal constant=" << format_double(limit) << '\n';
  for (int j = 0; j < dec.components(); ++j) {
    ctx.log << "v_" << j + 1 << "=" << format_double(report.v[j]) << '\n';
  }
  if (ctx.model.dim() == 1) {
    const PointFunction c = ctx.model.local_stationarity.at(0);
    const ScalarFunction Q = [c](double t) { return c(std::vector<double>{t}); };
    const OptimalDensity od = optimal_density_1d(Q, ctx.model.smoothness[0]);
    file << "v_uniform,," << format_double(od.v_uniform) << '\n';
    file << "v_opt,," << format_double(od.v_opt) << '\n';
    file << "gamma,," << format_double(od.gamma) << '\n';
    ctx.log << "v_uniform=" << format_double(od.v_uniform)
            << " v_opt=" << format_double(od.v_opt) << '\n';
  }
  write_allocation(ctx, report.v, AllocationRule::kOptimal);
}

void cmd_allocate(Context& ctx) {
  const AllocationRule rule = rule_of(ctx.config.design.allocation);
  std::vector<double> v;
  try {
    v = analyze(ctx.model, ctx.densities, analytic_options()).v;
  } catch (const Error& e) {
    if (rule == AllocationRule::kOptimal) throw;
    ctx.log << "no analytic constants: " << e.what() << '\n';
  }
  make_output_dir(ctx.out);
  write_allocation(ctx, v, rule);
}

void cmd_density_opt(Context& ctx) {
  if (ctx.model.dim() != 1) config_error("density-opt needs a one-dimensional model");
  const PointFunction c = ctx.model.local_stationarity.at(0);
  const ScalarFunction Q = [c](double t) { return c(std::vector<double>{t}); };
  const double alpha = ctx.model.smoothness[0];
  const OptimalDensity od = optimal_density_1d(Q, alpha);
  make_output_dir(ctx.out);
  std::ofstream summary = open_output(ctx.out / "density_summary.csv");
  summary << "quantity,value\n";
  summary << "alpha," << format_double(alpha) << '\n';
  summary << "gamma," << format_double(od.gamma) << '\n';
  summary << "q_gamma_integral," << format_double(od.q_gamma_integral) << '\n';
  summary << "v_opt," << format_double(od.v_opt) << '\n';
  summary << "v_uniform," << format_double(od.v_uniform) << '\n';
  std::ofstream table = open_output(ctx.out / "density.csv");
  table << "t,h_opt,H_opt\n";
  for (int i = 1; i <= 100; ++i) {
    const double t = i / 100.0;
    table << format_double(t) << ',' << format_double(od.density.density(t)) << ','
          << format_double(od.density.cdf(t)) << '\n';
  }
  ctx.log << "v_opt=" << format_double(od.v_opt) << " v_uniform=" << format_double(od.v_uniform)
          << '\n';
}

void cmd_diagnose(Context& ctx) {
  if (ctx.model.dim() != 1 || !ctx.model.local_holder || !ctx.model.holder) {
    config_error("diagnose-singularity needs a one-dimensional model with local Hoelder data");
  }
  const DensitySpec& h = ctx.densities.at(0);
  const ScalarFunction G = [h](double s) { return h.quantile(s); };
  const PointFunction bound = *ctx.model.local_holder;
  const SingularityDiagnostics diag = singularity_diagnostics(
      G, ctx.model.smoothness[0], ctx.model.holder->beta, &bound, 1);
  make_output_dir(ctx.out);
  std::ofstream table = open_output(ctx.out / "singularity.csv");
  table << "s,G,ratio\n";
  for (std::size_t i = 0; i < diag.s.size(); ++i) {
    table << format_double(diag.s[i]) << ',' << format_double(G(diag.s[i])) << ','
          << format_double(diag.growth_ratio[i]) << '\n';
  }
  std::ofstream summary = open_output(ctx.out / "singularity_summary.csv");
  summary << "quantity,value\n";
  summary << "exponent," << format_double(diag.exponent) << '\n';
  summary << "trend," << to_string(diag.trend) << '\n';
  summary << "growth_condition," << (diag.growth_condition ? 1 : 0) << '\n';
  if (diag.shifting) {
    summary << "shift_lower," << format_double(diag.shifting->lower) << '\n';
    summary << "shift_upper," << format_double(diag.shifting->upper) << '\n';
    summary << "sup_ratio_coarse," << format_double(diag.shifting->sup_ratio_coarse) << '\n';
    summary << "sup_ratio_fine," << format_double(diag.shifting->sup_ratio_fine) << '\n';
    summary << "shifting_bounded," << (diag.shifting->bounded ? 1 : 0) << '\n';
  }
  ctx.log << "growth ratio trend " << to_string(diag.trend) << ", growth condition "
          << (diag.growth_condition ? "holds" : "not established") << '\n';
}

struct Prediction {
  bool available = false;
  std::string reason;
  std::vector<double> constants;
  std::vector<double> exponents;  // rate exponents, leading term first
};

Prediction predict(const Context& ctx, AllocationRule rule) {
  Prediction p;
  if (rule == AllocationRule::kExplicit) {
    p.reason = "explicit allocation has no single rate";
    return p;
  }
  AsymptoticsReport report;
  try {
    report = analyze(ctx.model, ctx.densities, analytic_options());
  } catch (const Error& e) {
    p.reason = e.what();
    return p;
  }
  p.available = true;
  const Decomposition& dec = ctx.model.decomposition;
  if (rule == AllocationRule::kOptimal) {
    p.constants = {dec.components() * std::pow(report.kappa, report.rho)};
    p.exponents = {1.0 + report.rho};
    return p;
  }
  // Uniform: n = N^(1/d) in every coordinate, term j decays like N^-(1 + alpha_j/d).
  std::vector<std::pair<double, double>> terms;
  for (int j = 0; j < dec.components(); ++j) {
    terms.emplace_back(1.0 + ctx.model.smoothness[j] / dec.dim(), report.v[j]);
  }
  std::sort(terms.begin(), terms.end());
  for (const auto& [e, c] : terms) {
    p.exponents.push_back(e);
    p.constants.push_back(c);
  }
  return p;
}

void cmd_experiment(Context& ctx) {
  const Schedule schedule = build_schedule(ctx.config, ctx.model, ctx.densities);
  check_budget(ctx, schedule, ctx.options.dry_run);
  if (ctx.options.dry_run) return;
  make_output_dir(ctx.out);
  const std::vector<ScheduleRow> rows = run_rows(ctx, schedule);
  write_rows(ctx, rows);

  const FitConfig fit = ctx.config.fit.value_or(FitConfig{});
  std::vector<double> N, e2;
  for (const ScheduleRow& r : rows) {
    const double n = static_cast<double>(r.N_actual);
    if (!fit.range.empty() && (r.N_actual < fit.range[0] || r.N_actual > fit.range[1])) continue;
    N.push_back(n);
    e2.push_back(r.e2);
  }
  if (N.size() < 4) config_error("fit.range leaves fewer than four schedule points");

  const Prediction prediction = predict(ctx, schedule.family.rule);
  std::vector<FitReport> fits;
  fits.push_back(fit_loglog(N, e2, {FitKind::kSinglePower, {}}));
  if (fit.model == "two_power") fits.push_back(fit_loglog(N, e2, {FitKind::kTwoPower, fit.exponents}));
  std::optional<double> p = fit.scaled_exponent;
  if (!p && prediction.available) p = prediction.exponents.front();
  if (!p) p = -fits.front().slope;
  const FitReport scaled = fit_loglog(N, e2, {FitKind::kScaledConstant, {*p}});
  fits.push_back(scaled);
  {
    std::ofstream file = open_output(ctx.out / "fit.csv");
    write_fit_csv(file, fits);
  }
  {
    std::ofstream file = open_output(ctx.out / "scaled.csv");
    file << "N,scaled_e2\n";
    for (std::size_t i = 0; i < N.size(); ++i) {
      file << format_double(N[i]) << ',' << format_double(scaled.scaled[i]) << '\n';
    }
  }
  {
    std::vector<PlotSeries> series;
    PlotSeries data{"e2", {}, {}, false};
    for (const ScheduleRow& r : rows) {
      data.x.push_back(static_cast<double>(r.N_actual));
      data.y.push_back(r.e2);
    }
    series.push_back(data);
    if (prediction.available) {
      PlotSeries pred{"prediction", data.x, {}, true};
      for (double x : data.x) {
        double y = 0.0;
        for (std::size_t t = 0; t < prediction.constants.size(); ++t) {
          y += prediction.constants[t] * std::pow(x, -prediction.exponents[t]);
        }
        pred.y.push_back(y);
      }
      series.push_back(pred);
    }
    std::ofstream file = open_output(ctx.out / "plot.svg");
    write_loglog_svg(file, ctx.config.title.value_or(ctx.model.name), series);
  }

  std::ofstream out = open_output(ctx.out / "summary.txt");
  out << "title: " << ctx.config.title.value_or("(untitled)") << '\n';
  out << "model: " << ctx.model.name << ", d = " << ctx.model.dim() << ", k = "
      << ctx.model.decomposition.components() << '\n';
  out << "allocation: " << to_string(schedule.family.rule) << '\n';
  out << "densities:";
  for (const DensitySpec& h : ctx.densities) out << ' ' << h.label();
  out << '\n';
  out << "seed: " << seed_of(ctx) << '\n';
  out << "schedule: " << rows.size() << " runs, N = " << rows.front().N_actual << " .. "
      << rows.back().N_actual << '\n';
  out << "fit range: N = " << format_double(N.front()) << " .. " << format_double(N.back())
      << " (" << N.size() << " points)\n";
  const FitReport& single = fits.front();
  out << "single-power fit: slope " << format_double(single.slope) << ", constant "
      << format_double(single.coefficients[0]) << ", residual "
      << format_double(single.residual) << '\n';
  if (fit.model == "two_power") {
    const FitReport& two = fits[1];
    out << "two-power fit (exponents " << format_double(two.exponents[0]) << ", "
        << format_double(two.exponents[1]) << "): C1 " << format_double(two.coefficients[0])
        << ", C2 " << format_double(two.coefficients[1]) << ", residual "
        << format_double(two.residual) << (two.degenerate ? ", degenerate" : "") << '\n';
  }
  out << "scaled error N^" << format_double(*p) << " e2: last " << format_double(scaled.coefficients[0])
      << ", trend " << to_string(scaled.trend) << '\n';
  if (scaled.trend != Trend::kFlat) {
    out << "  the scaled column is still " << to_string(scaled.trend)
        << "; its last value is a finite-N value, not the limit\n";
  }
  if (prediction.available) {
    out << "analytic prediction:";
    for (std::size_t t = 0; t < prediction.constants.size(); ++t) {
      out << (t ? " +" : "") << ' ' << format_double(prediction.constants[t]) << " N^-"
          << format_double(prediction.exponents[t]);
    }
    out << '\n';
    out << "scaled last / analytic leading constant: "
        << format_double(scaled.coefficients[0] / prediction.constants.front()) << '\n';
  } else {
    out << "analytic prediction: unavailable (" << prediction.reason << ")\n";
  }
  for (double ref : fit.reference) {
    out << "reference constant " << format_double(ref) << ": ";
    if (prediction.available) {
      out << "ratio to analytic limit " << format_double(ref / prediction.constants.front())
          << ", ";
    }
    out << "ratio to last scaled value " << format_double(ref / scaled.coefficients[0]);
    if (scaled.trend != Trend::kFlat) out << "; compared as a finite-N value only";
    out << '\n';
  }
  ctx.log << "slope " << format_double(single.slope) << ", scaled constant "
          << format_double(scaled.coefficients[0]) << '\n';
}

}  // namespace

void run_command(Command command, const ExperimentConfig& config, const RunOptions& options,
                 std::ostream& log) {
  Context ctx{config, options, log, build_model(config.model), {}, {}};
  ctx.densities = build_densities(config, ctx.model);
  ctx.out = options.out_dir.value_or(config.run.out.value_or("out"));
  switch (command) {
    case Command::kMse:
      cmd_mse(ctx);
      break;
    case Command::kAsymptotics:
      cmd_asymptotics(ctx);
      break;
    case Command::kAllocate:
      cmd_allocate(ctx);
      break;
    case Command::kDensityOpt:
      cmd_density_opt(ctx);
      break;
    case Command::kExperiment:
      cmd_experiment(ctx);
      break;
    case Command::kDiagnoseSingularity:
      cmd_diagnose(ctx);
      break;
  }
}

}  // namespace strataquad
