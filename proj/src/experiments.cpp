#include "strataquad/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "strataquad/error.hpp"

namespace strataquad {

const char* to_string(AllocationRule rule) {
  switch (rule) {
    case AllocationRule::kUniform:
      return "uniform";
    case AllocationRule::kOptimal:
      return "optimal";
    case AllocationRule::kExplicit:
      return "explicit";
  }
  return "uniform";
}

const char* to_string(FitKind kind) {
  switch (kind) {
    case FitKind::kSinglePower:
      return "single_power";
    case FitKind::kTwoPower:
      return "two_power";
    case FitKind::kScaledConstant:
      return "scaled_constant";
  }
  return "single_power";
}

std::size_t Schedule::size() const {
  return family.rule == AllocationRule::kExplicit ? counts.size() : N_targets.size();
}

void Schedule::validate() const {
  require(size() >= 4, ErrorKind::kInvalidArgument, "a schedule needs at least four runs");
  if (family.rule == AllocationRule::kExplicit) return;
  for (std::size_t i = 0; i < N_targets.size(); ++i) {
    require(N_targets[i] >= 1, ErrorKind::kInvalidArgument, "N targets must be positive");
    if (i > 0) {
      require(N_targets[i] > N_targets[i - 1], ErrorKind::kInvalidArgument,
              "N targets must be strictly increasing");
    }
  }
}

Allocation schedule_allocation(const FieldModel& model, const Schedule& schedule,
                               std::size_t entry) {
  const Decomposition& dec = model.decomposition;
  switch (schedule.family.rule) {
    case AllocationRule::kUniform:
      return allocate_uniform(schedule.N_targets.at(entry), dec);
    case AllocationRule::kOptimal:
      return allocate_optimal(schedule.family.v, model.smoothness, dec,
                              schedule.N_targets.at(entry));
    case AllocationRule::kExplicit:
      return Allocation::from_counts(dec, schedule.counts.at(entry));
  }
  fail(ErrorKind::kInvalidArgument, "unknown allocation rule");
}

std::vector<ScheduleRow> run_schedule(const FieldModel& model, const Schedule& schedule,
                                      const MseOptions& options) {
  schedule.validate();
  std::vector<ScheduleRow> rows;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const Allocation alloc = schedule_allocation(model, schedule, i);
    const CrossRegularDesign design =
        build_design(model.decomposition, schedule.family.densities, alloc);
    const MseReport report = exact_mse(model, design, options);
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
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> scaled_error(const std::vector<double>& N, const std::vector<double>& e2,
                                 double p) {
  require(N.size() == e2.size() && !N.empty(), ErrorKind::kInvalidArgument,
          "scaled error needs a nonempty table");
  std::vector<double> out(N.size());
  for (std::size_t i = 0; i < N.size(); ++i) out[i] = std::pow(N[i], p) * e2[i];
  return out;
}

Trend sequence_trend(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 3) return Trend::kFlat;
  const double d1 = values[n - 2] - values[n - 3];
  const double d2 = values[n - 1] - values[n - 2];
  const double scale = std::abs(values[n - 1]);
  if (std::abs(d2) <= 1e-3 * scale) return Trend::kFlat;
  if (d1 > 0.0 && d2 > 0.0) return Trend::kIncreasing;
  if (d1 < 0.0 && d2 < 0.0) return Trend::kDecreasing;
  return Trend::kFlat;
}

FitReport fit_loglog(const std::vector<double>& N, const std::vector<double>& e2,
                     const FitSpec& spec) {
  require(N.size() == e2.size(), ErrorKind::kInvalidArgument, "table columns differ in length");
  require(N.size() >= 4, ErrorKind::kInvalidArgument, "a fit needs at least four points");
  for (std::size_t i = 0; i < N.size(); ++i) {
    require(N[i] > 0.0 && e2[i] > 0.0, ErrorKind::kInvalidArgument,
            "log-log fits need positive N and e2");
  }
  FitReport report;
  report.kind = spec.kind;
  report.points = N.size();
  report.N_min = *std::min_element(N.begin(), N.end());
  report.N_max = *std::max_element(N.begin(), N.end());
  const std::size_t n = N.size();

  switch (spec.kind) {
    case FitKind::kSinglePower: {
      double sx = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sx += std::log(N[i]);
        sy += std::log(e2[i]);
      }
      const double mx = sx / n;
      const double my = sy / n;
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(N[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e2[i]) - my);
      }
      require(sxx > 0.0, ErrorKind::kInvalidArgument, "fit needs distinct N values");
      report.slope = sxy / sxx;
      const double intercept = my - report.slope * mx;
      report.coefficients = {std::exp(intercept)};
      double rss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(e2[i]) - intercept - report.slope * std::log(N[i]);
        rss += r * r;
      }
      report.residual = std::sqrt(rss);
      break;
    }
    case FitKind::kTwoPower: {
      require(spec.exponents.size() == 2, ErrorKind::kInvalidArgument,
              "two-power fit needs two exponents");
      report.exponents = spec.exponents;
      // Relative least squares: minimize sum ((C1 a_i + C2 b_i) - 1)^2 with
      // a_i = N^-p1 / e2, b_i = N^-p2 / e2.
      double saa = 0.0, sab = 0.0, sbb = 0.0, sa = 0.0, sb = 0.0;
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::pow(N[i], -spec.exponents[0]) / e2[i];
        b[i] = std::pow(N[i], -spec.exponents[1]) / e2[i];
        saa += a[i] * a[i];
        sab += a[i] * b[i];
        sbb += b[i] * b[i];
        sa += a[i];
        sb += b[i];
      }
      const double det = saa * sbb - sab * sab;
      double c1 = 0.0, c2 = 0.0;
      if (det > 1e-14 * saa * sbb) {
        c1 = (sa * sbb - sb * sab) / det;
        c2 = (sb * saa - sa * sab) / det;
      } else {
        c1 = -1.0;
      }
      if (c1 < 0.0 || c2 < 0.0) {
        report.degenerate = true;
        const double only1 = sa / saa;
        const double only2 = sb / sbb;
        auto rss_of = [&](double x1, double x2) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double r = x1 * a[i] + x2 * b[i] - 1.0;
            s += r * r;
          }
          return s;
        };
        if (rss_of(only1, 0.0) <= rss_of(0.0, only2)) {
          c1 = only1;
          c2 = 0.0;
        } else {
          c1 = 0.0;
          c2 = only2;
        }
      }
      report.coefficients = {c1, c2};
      double rss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = c1 * a[i] + c2 * b[i] - 1.0;
        rss += r * r;
      }
      report.residual = std::sqrt(rss);
      break;
    }
    case FitKind::kScaledConstant: {
      require(spec.exponents.size() == 1, ErrorKind::kInvalidArgument,
              "scaled-constant fit needs one exponent");
      report.exponents = spec.exponents;
      report.scaled = scaled_error(N, e2, spec.exponents[0]);
      report.coefficients = {report.scaled.back()};
      report.trend = sequence_trend(report.scaled);
      double rss = 0.0;
      for (double s : report.scaled) {
        const double r = std::log(s / report.scaled.back());
        rss += r * r;
      }
      report.residual = std::sqrt(rss);
      break;
    }
  }
  return report;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

namespace {

std::string join_counts(const std::vector<std::int64_t>& n) {
  std::string out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (i > 0) out += 'x';
    out += std::to_string(n[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ';';
    out += format_double(values[i]);
  }
  return out;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_schedule_csv(std::ostream& out, const std::vector<ScheduleRow>& rows) {
  out << "N,e2,err_est,order,N_target,n\n";
  for (const ScheduleRow& r : rows) {
    out << r.N_actual << ',' << format_double(r.e2) << ',' << format_double(r.error_estimate)
        << ',' << r.order << ',' << r.N_target << ',' << join_counts(r.n) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const std::vector<ScheduleRow>& rows) {
  out << "N,seconds,evaluations\n";
  for (const ScheduleRow& r : rows) {
    out << r.N_actual << ',' << format_double(r.seconds) << ',' << format_double(r.evaluations)
        << '\n';
  }
}

void write_fit_csv(std::ostream& out, const std::vector<FitReport>& fits) {
  out << "model,slope,exponents,coefficients,residual,degenerate,trend,N_min,N_max,points\n";
  for (const FitReport& f : fits) {
    out << to_string(f.kind) << ',' << format_double(f.slope) << ','
        << join_doubles(f.exponents) << ',' << join_doubles(f.coefficients) << ','
        << format_double(f.residual) << ',' << (f.degenerate ? 1 : 0) << ','
        << to_string(f.trend) << ',' << format_double(f.N_min) << ','
        << format_double(f.N_max) << ',' << f.points << '\n';
  }
}

void write_loglog_svg(std::ostream& out, const std::string& title,
                      const std::vector<PlotSeries>& series) {
  constexpr double kWidth = 640, kHeight = 440;
  constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      xmin = std::min(xmin, std::log10(s.x[i]));
      xmax = std::max(xmax, std::log10(s.x[i]));
      ymin = std::min(ymin, std::log10(s.y[i]));
      ymax = std::max(ymax, std::log10(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = ymin = 0.0;
    xmax = ymax = 1.0;
  }
  xmin = std::floor(xmin);
  xmax = std::max(std::ceil(xmax), xmin + 1.0);
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1.0);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ly) { return kTop + (ymax - ly) / (ymax - ymin) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#17becf"};
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                kLeft, kTop, pw, ph);
  out << buf;
  for (double lx = xmin; lx <= xmax + 1e-9; lx += 1.0) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">1e%d</text>\n",
                  px(lx), kTop, px(lx), kTop + ph, px(lx), kTop + ph + 18,
                  static_cast<int>(lx));
    out << buf;
  }
  for (double ly = ymin; ly <= ymax + 1e-9; ly += 1.0) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">1e%d</text>\n",
                  kLeft, py(ly), kLeft + pw, py(ly), kLeft - 6, py(ly) + 4,
                  static_cast<int>(ly));
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">N</text>\n",
                kLeft + pw / 2, kHeight - 16);
  out << buf;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kColors[k % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(std::log10(s.x[i])),
                    py(std::log10(s.y[i])));
      out << buf;
    }
    out << "\"/>\n";
    const double ly = kTop + 16 + 18 * static_cast<double>(k);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                  "stroke-width=\"1.5\"%s/><text x=\"%.1f\" y=\"%.1f\">",
                  kLeft + pw + 10, ly, kLeft + pw + 34, ly, color,
                  s.dashed ? " stroke-dasharray=\"6 4\"" : "", kLeft + pw + 40, ly + 4);
    out << buf << xml_escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace strataquad
