#pragma once

// N-schedules of exact MSE runs, log-log fits and the CSV/SVG writers.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "strataquad/asymptotics.hpp"
#include "strataquad/designs.hpp"
#include "strataquad/models.hpp"
#include "strataquad/mse.hpp"

namespace strataquad {

enum class AllocationRule { kUniform, kOptimal, kExplicit };

const char* to_string(AllocationRule rule);

struct DesignFamily {
  std::vector<DensitySpec> densities;
  AllocationRule rule = AllocationRule::kUniform;
  std::vector<double> v;  // v_j, needed by the optimal rule
};

struct Schedule {
  // Strictly increasing targets; unused by the explicit rule.
  std::vector<std::int64_t> N_targets;
  // Per-component counts, one entry per run, for the explicit rule.
  std::vector<std::vector<std::int64_t>> counts;
  DesignFamily family;

  std::size_t size() const;
  // Throws kInvalidArgument unless there are at least four increasing runs.
  void validate() const;
};

struct ScheduleRow {
  std::int64_t N_target = 0;
  std::int64_t N_actual = 0;
  std::vector<std::int64_t> n;
  double e2 = 0.0;
  double error_estimate = 0.0;
  int order = 0;
  double seconds = 0.0;
  double evaluations = 0.0;
};

Allocation schedule_allocation(const FieldModel& model, const Schedule& schedule,
                               std::size_t entry);

std::vector<ScheduleRow> run_schedule(const FieldModel& model, const Schedule& schedule,
                                      const MseOptions& options = {});

enum class FitKind { kSinglePower, kTwoPower, kScaledConstant };

const char* to_string(FitKind kind);

struct FitSpec {
  FitKind kind = FitKind::kSinglePower;
  std::vector<double> exponents;  // two-power: (p1, p2); scaled: (p)
};

struct FitReport {
  FitKind kind = FitKind::kSinglePower;
  double slope = 0.0;                 // single-power
  std::vector<double> exponents;      // fixed exponents used
  std::vector<double> coefficients;   // C, or (C1, C2), or last scaled value
  double residual = 0.0;
  bool degenerate = false;            // a two-power coefficient was clamped
  std::vector<double> scaled;         // N^p e2 for the scaled fit
  Trend trend = Trend::kFlat;         // scaled fit only
  double N_min = 0.0;
  double N_max = 0.0;
  std::size_t points = 0;
};

// Least-squares fits in log-log space. The report describes the sampled
// range only.
FitReport fit_loglog(const std::vector<double>& N, const std::vector<double>& e2,
                     const FitSpec& spec);

// N^p e2 elementwise.
std::vector<double> scaled_error(const std::vector<double>& N, const std::vector<double>& e2,
                                 double p);

// Last-three-point direction of a sequence; flat below 1e-3 relative change.
Trend sequence_trend(const std::vector<double>& values);

// Decimal with 17 significant digits.
std::string format_double(double x);

void write_schedule_csv(std::ostream& out, const std::vector<ScheduleRow>& rows);
void write_timing_csv(std::ostream& out, const std::vector<ScheduleRow>& rows);
void write_fit_csv(std::ostream& out, const std::vector<FitReport>& fits);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

// Standalone log-log line plot.
void write_loglog_svg(std::ostream& out, const std::string& title,
                      const std::vector<PlotSeries>& series);

}  // namespace strataquad
