#include "adhere/analytics.hpp"

#include "adhere/error.hpp"
#include "adhere/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace adhere {

CvResult coefficient_of_variation(std::span<const double> levels) {
  if (levels.size() < 2) {
    throw Error(ErrorCode::insufficient_data, "CV needs at least 2 lab values");
  }
  const auto m = stats::moments(levels);
  if (!(m.mean > 0.0)) throw Error(ErrorCode::domain, "CV needs a positive mean");
  return CvResult{.n = m.n, .mean = m.mean, .sd = m.sd, .cv_percent = m.sd / m.mean * 100.0};
}

CvResult coefficient_of_variation(const LabSeries& series, const DateRange& window) {
  std::vector<double> levels;
  for (const auto& obs : series.observations) {
    if (window.contains(obs.draw_date)) levels.push_back(obs.value_ng_ml);
  }
  if (levels.size() < 2) {
    throw Error(ErrorCode::insufficient_data,
                "fewer than 2 tacrolimus levels in " + format_date_range(window));
  }
  return coefficient_of_variation(levels);
}

namespace {

struct DoseTally {
  long scheduled = 0;
  long missed = 0;

  void add(const DayOutcome& o) {
    scheduled += o.scheduled;
    missed += o.missed + o.skipped;
  }
  double rate() const { return scheduled == 0 ? 0.0 : static_cast<double>(missed) / scheduled; }
};

// Day on which the patient's challenge count first reached `target`.
std::optional<Date> challenge_reached_on(std::span<const DayOutcome> outcomes, int target) {
  int streak = 0;
  int challenges = 0;
  std::optional<Date> prev;
  for (const auto& o : outcomes) {
    if (!o.closed) continue;
    if (prev && *prev + 1 != o.day) streak = 0;
    prev = o.day;
    if (!o.adherent) {
      streak = 0;
      continue;
    }
    if (++streak % kChallengeLength == 0 && ++challenges == target) return o.day;
  }
  return std::nullopt;
}

struct PatientStats {
  std::optional<double> cv;
  DoseTally in_window;
  DoseTally after_subgroup_entry;
  bool in_subgroup = false;
};

template <typename T, typename Fn>
Cell<T> guarded(Fn&& fn) {
  try {
    return Cell<T>{fn(), {}};
  } catch (const Error& e) {
    return Cell<T>::unavailable(std::string(to_string(e.code())) + ": " + e.what());
  }
}

Cell<RateRatio> ratio_cell(const DoseTally& num, int num_patients, const DoseTally& den,
                           int den_patients) {
  if (num.scheduled == 0) return Cell<RateRatio>::unavailable("no subgroup doses in window");
  if (den.scheduled == 0) return Cell<RateRatio>::unavailable("no comparator doses in window");
  if (den.missed == 0) return Cell<RateRatio>::unavailable("comparator has no missed doses");
  RateRatio r{
      .numerator_rate = num.rate(),
      .denominator_rate = den.rate(),
      .numerator_patients = num_patients,
      .denominator_patients = den_patients,
  };
  r.ratio = r.numerator_rate / r.denominator_rate;
  r.reduction_percent = (1.0 - r.ratio) * 100.0;
  return Cell<RateRatio>{r, {}};
}

}  // namespace

CohortReport cohort_report(std::vector<PatientRecord> cohort, const ReportOptions& options) {
  std::sort(cohort.begin(), cohort.end(),
            [](const auto& a, const auto& b) { return a.patient_id < b.patient_id; });

  std::vector<PatientStats> per(cohort.size());
  detail::parallel_for(cohort.size(), [&](std::size_t i) {
    const auto& rec = cohort[i];
    auto& st = per[i];
    try {
      st.cv = coefficient_of_variation(rec.labs, options.window).cv_percent;
    } catch (const Error&) {
      st.cv.reset();
    }
    const auto entry = challenge_reached_on(rec.outcomes, options.subgroup_min_challenges);
    st.in_subgroup = entry.has_value();
    for (const auto& o : rec.outcomes) {
      if (!o.closed || !options.window.contains(o.day)) continue;
      st.in_window.add(o);
      if (entry && o.day > *entry) st.after_subgroup_entry.add(o);
    }
  });

  CohortReport report{.options = options};
  std::vector<double> cv_by_arm[2];
  for (int arm = 0; arm < 2; ++arm) {
    const std::string& label = arm == 0 ? options.app_arm : options.control_arm;
    ArmSummary summary{.label = label};
    DoseTally doses;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (cohort[i].arm != label) continue;
      ++summary.n_patients;
      doses.scheduled += per[i].in_window.scheduled;
      doses.missed += per[i].in_window.missed;
      if (per[i].cv) cv_by_arm[arm].push_back(*per[i].cv);
    }
    summary.n_with_cv = static_cast<int>(cv_by_arm[arm].size());
    summary.missed_dose_rate = doses.rate();
    if (summary.n_with_cv >= 2) {
      const auto m = stats::moments(cv_by_arm[arm]);
      summary.mean_cv = Cell<double>{m.mean, {}};
      summary.sd_cv = Cell<double>{m.sd, {}};
    } else {
      const auto why = "arm '" + label + "' has fewer than 2 patients with a computable CV";
      summary.mean_cv = Cell<double>::unavailable(why);
      summary.sd_cv = Cell<double>::unavailable(why);
    }
    report.arms.push_back(std::move(summary));
  }

  report.comparison = guarded<stats::WelchResult>([&] {
    if (cv_by_arm[0].size() < 2 || cv_by_arm[1].size() < 2) {
      throw Error(ErrorCode::insufficient_data, "each arm needs at least 2 patients with a CV");
    }
    return stats::welch_t_test(cv_by_arm[0], cv_by_arm[1]);
  });

  std::vector<stats::LogisticRow> rows;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const bool app = cohort[i].arm == options.app_arm;
    if (!per[i].cv || (!app && cohort[i].arm != options.control_arm)) continue;
    rows.push_back({*per[i].cv, app ? 1 : 0});
  }
  report.logistic_rows = static_cast<int>(rows.size());
  report.logistic = guarded<stats::LogisticFit>([&] { return stats::fit_logistic(rows); });

  std::vector<double> missed_rates, levels;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (cohort[i].arm != options.app_arm || per[i].in_window.scheduled == 0) continue;
    missed_rates.push_back(per[i].in_window.rate());
    levels.push_back(level(cohort[i].ledger));
  }
  report.correlation_population = "arm '" + options.app_arm + "': missed-dose rate vs game level";
  report.correlation_pairs = static_cast<int>(missed_rates.size());
  report.spearman = guarded<double>([&] { return stats::spearman_correlation(missed_rates, levels); });
  report.pearson = guarded<double>([&] { return stats::pearson_correlation(missed_rates, levels); });

  DoseTally subgroup, other_app, control;
  int n_subgroup = 0, n_other_app = 0, n_control = 0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& st = per[i];
    if (cohort[i].arm == options.app_arm) {
      if (st.in_subgroup) {
        ++n_subgroup;
        subgroup.scheduled += st.after_subgroup_entry.scheduled;
        subgroup.missed += st.after_subgroup_entry.missed;
      } else {
        ++n_other_app;
        other_app.scheduled += st.in_window.scheduled;
        other_app.missed += st.in_window.missed;
      }
    } else if (cohort[i].arm == options.control_arm) {
      ++n_control;
      control.scheduled += st.in_window.scheduled;
      control.missed += st.in_window.missed;
    }
  }
  report.subgroup_vs_nonusers = ratio_cell(subgroup, n_subgroup, control, n_control);
  report.subgroup_vs_other_app_users = ratio_cell(subgroup, n_subgroup, other_app, n_other_app);
  return report;
}

namespace {

std::string fmt(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

template <typename T, typename Fn>
std::string cell_text(const Cell<T>& cell, Fn&& show) {
  return cell.available() ? show(*cell.value) : std::string("n/a (") + cell.unavailable_reason + ")";
}

}  // namespace

std::string render_text(const CohortReport& r) {
  std::ostringstream out;
  out << "Cohort report, window " << format_date_range(r.options.window) << "\n\n";
  out << "arm          patients  with-CV  mean CV   sd CV     missed-dose rate\n";
  for (const auto& arm : r.arms) {
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %8d %8d  %-9s %-9s %s\n", arm.label.c_str(),
                  arm.n_patients, arm.n_with_cv,
                  arm.mean_cv.available() ? fmt(*arm.mean_cv.value, 1).c_str() : "n/a",
                  arm.sd_cv.available() ? fmt(*arm.sd_cv.value, 1).c_str() : "n/a",
                  fmt(arm.missed_dose_rate, 4).c_str());
    out << line;
  }
  out << "\nCV comparison (" << r.comparison_test << "):\n  "
      << cell_text(r.comparison, [](const stats::WelchResult& w) {
           return fmt(w.a.mean, 1) + " vs " + fmt(w.b.mean, 1) + ", t = " + fmt(w.t) +
                  ", df = " + fmt(w.df, 1) + ", P = " + fmt(w.p_value, 4);
         })
      << "\n";
  out << "CV as predictor of app use (" << r.logistic_model << ", n = " << r.logistic_rows
      << "):\n  "
      << cell_text(r.logistic, [](const stats::LogisticFit& f) {
           return "odds ratio " + fmt(f.odds_ratio) + "; 95% CI " + fmt(f.ci95_low) + "-" +
                  fmt(f.ci95_high) + "; iterations " + std::to_string(f.iterations) +
                  (f.converged ? "" : " (not converged)");
         })
      << "\n";
  out << "Correlation, " << r.correlation_population << " (n = " << r.correlation_pairs << "):\n"
      << "  Spearman rho = " << cell_text(r.spearman, [](double v) { return fmt(v); }) << "\n"
      << "  Pearson r    = " << cell_text(r.pearson, [](double v) { return fmt(v); }) << "\n";
  auto ratio_text = [](const RateRatio& q) {
    return fmt(q.numerator_rate, 4) + " vs " + fmt(q.denominator_rate, 4) + ", ratio " +
           fmt(q.ratio) + ", " + fmt(q.reduction_percent, 1) + "% lower (" +
           std::to_string(q.numerator_patients) + " vs " + std::to_string(q.denominator_patients) +
           " patients)";
  };
  out << "Missed-dose rate, app users with >= " << r.options.subgroup_min_challenges
      << " challenges (days after reaching them):\n"
      << "  vs nonusers:            " << cell_text(r.subgroup_vs_nonusers, ratio_text) << "\n"
      << "  vs other app users:     " << cell_text(r.subgroup_vs_other_app_users, ratio_text) << "\n";
  return out.str();
}

}  // namespace adhere
