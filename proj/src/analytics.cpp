#include "backreveal/analytics.hpp"

#include <cmath>
#include <cstdio>

namespace backreveal::analytics {

using nlohmann::ordered_json;

double survival(int t, const ModelParams& params) {
  return std::pow(params.p_eff(), t);
}

namespace {

long double geometric_sum(long double p, int terms) {
  if (terms <= 0) return 0.0L;
  if (p == 1.0L) return static_cast<long double>(terms);
  // sum_{t=1..T} p^t = p (1 - p^T) / (1 - p)
  return p * (1.0L - std::pow(p, static_cast<long double>(terms))) / (1.0L - p);
}

}  // namespace

double expected_leaked(const ModelParams& params) {
  long double sum = geometric_sum(static_cast<long double>(params.p_eff()), params.turns);
  long double raw = static_cast<long double>(params.fields_per_success) * sum;
  long double cap = static_cast<long double>(params.fields_total);
  return static_cast<double>(raw < cap ? raw : cap);
}

namespace {

double p_eff_std(const ModelParams& m, const ParamStd& s) {
  // first-order propagation through the product c * asr * p_deliver
  double p = m.p_eff();
  if (p == 0.0) return 0.0;
  double rel2 = 0.0;
  if (m.asr > 0.0) rel2 += (s.asr_std / m.asr) * (s.asr_std / m.asr);
  if (m.p_deliver > 0.0) rel2 += (s.p_deliver_std / m.p_deliver) * (s.p_deliver_std / m.p_deliver);
  if (m.c > 0.0) rel2 += (s.c_std / m.c) * (s.c_std / m.c);
  return p * std::sqrt(rel2);
}

}  // namespace

double survival_std(int t, const ModelParams& params, const ParamStd& std_in) {
  double p = params.p_eff();
  double sp = p_eff_std(params, std_in);
  if (t <= 0) return 0.0;
  return static_cast<double>(t) * std::pow(p, t - 1) * sp;
}

double expected_leaked_std(const ModelParams& params, const ParamStd& std_in) {
  // zero once the cap binds; otherwise d/dp of fps * sum p^t
  long double sum = geometric_sum(static_cast<long double>(params.p_eff()), params.turns);
  if (static_cast<double>(params.fields_per_success) * static_cast<double>(sum) >=
      static_cast<double>(params.fields_total)) {
    return 0.0;
  }
  double p = params.p_eff();
  double deriv = 0.0;
  for (int t = 1; t <= params.turns; ++t) deriv += t * std::pow(p, t - 1);
  return params.fields_per_success * deriv * p_eff_std(params, std_in);
}

std::optional<double> reference_expectation(double c) {
  // five-turn expectations quoted for the default sweep points
  if (c == 1.0) return 7.8;
  if (c == 0.75) return 5.2;
  if (c == 0.5) return 2.6;
  if (c == 0.25) return 0.8;
  return std::nullopt;
}

Report sensitivity_sweep(const ModelParams& params, const std::vector<double>& c_values) {
  if (c_values.empty()) throw std::invalid_argument("sensitivity sweep needs c values");
  Report report;
  report.params = params;
  for (double c : c_values) {
    ModelParams p = params;
    p.c = c;
    SweepRow row;
    row.c = c;
    row.p_eff = p.p_eff();
    row.expected = expected_leaked(p);
    row.reference_expected = reference_expectation(c);
    for (int t = 1; t <= p.turns; ++t) row.survival_curve.push_back(survival(t, p));
    report.rows.push_back(std::move(row));
  }
  report.footnotes.push_back(
      "reference_expected figures are externally reported values shown for side-by-side "
      "comparison; the p_eff^t formula with asr=" +
      std::to_string(params.asr) + ", p_deliver=" + std::to_string(params.p_deliver) +
      " does not reproduce them under any single documented parameter choice.");
  report.footnotes.push_back("uncertainty, when present, is first-order (delta method).");
  return report;
}

Report model_report(const ModelParams& params, const ParamStd& std_in) {
  Report report = sensitivity_sweep(params, {params.c});
  if (std_in.asr_std != 0.0 || std_in.p_deliver_std != 0.0 || std_in.c_std != 0.0) {
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "propagated std: survival(T)=%.6f expected=%.6f (delta method)",
                  survival_std(params.turns, params, std_in),
                  expected_leaked_std(params, std_in));
    report.footnotes.emplace_back(buf);
  }
  return report;
}

std::string Report::to_csv() const {
  std::string out = "c,p_eff,turn,survival,expected_leaked,reference_expected\n";
  char buf[200];
  for (const auto& row : rows) {
    for (size_t t = 0; t < row.survival_curve.size(); ++t) {
      if (row.reference_expected) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.6f,%zu,%.6f,%.6f,%.2f\n", row.c, row.p_eff,
                      t + 1, row.survival_curve[t], row.expected, *row.reference_expected);
      } else {
        std::snprintf(buf, sizeof(buf), "%.4f,%.6f,%zu,%.6f,%.6f,\n", row.c, row.p_eff, t + 1,
                      row.survival_curve[t], row.expected);
      }
      out += buf;
    }
  }
  for (const auto& f : footnotes) out += "# " + f + "\n";
  return out;
}

std::string Report::plot_data() const {
  // one block per c value: turn, survival, expected-so-far
  std::string out = "# turn survival expected_leaked_by_turn c\n";
  char buf[160];
  for (const auto& row : rows) {
    ModelParams p = params;
    p.c = row.c;
    for (size_t t = 0; t < row.survival_curve.size(); ++t) {
      ModelParams upto = p;
      upto.turns = static_cast<int>(t + 1);
      std::snprintf(buf, sizeof(buf), "%zu %.6f %.6f %.4f\n", t + 1, row.survival_curve[t],
                    expected_leaked(upto), row.c);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

ordered_json Report::to_json() const {
  ordered_json j = ordered_json::object();
  ordered_json pj = ordered_json::object();
  pj["asr"] = params.asr;
  pj["p_deliver"] = params.p_deliver;
  pj["c"] = params.c;
  pj["turns"] = params.turns;
  pj["fields_total"] = params.fields_total;
  pj["fields_per_success"] = params.fields_per_success;
  j["params"] = std::move(pj);
  j["provenance"] = provenance;
  ordered_json rows_json = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json rj = ordered_json::object();
    rj["c"] = row.c;
    rj["p_eff"] = row.p_eff;
    rj["expected_leaked"] = row.expected;
    if (row.reference_expected) rj["reference_expected"] = *row.reference_expected;
    rj["survival"] = row.survival_curve;
    rows_json.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows_json);
  j["footnotes"] = footnotes;
  return j;
}

McCheck monte_carlo_check(const sim::BatchMetrics& batch, const ModelParams& params,
                          double tolerance, int min_episodes) {
  if (batch.max_turns != params.turns) {
    throw ParamMismatch("batch ran " + std::to_string(batch.max_turns) + " turns, model has " +
                        std::to_string(params.turns));
  }
  McCheck check;
  if (batch.episodes < static_cast<size_t>(min_episodes)) {
    check.pass = false;
    check.note = "episode count " + std::to_string(batch.episodes) +
                 " is below the minimum " + std::to_string(min_episodes) +
                 " required for a meaningful comparison";
    return check;
  }
  check.pass = true;
  for (int t = 1; t <= params.turns; ++t) {
    double emp = batch.survival[static_cast<size_t>(t - 1)];
    double ana = survival(t, params);
    check.empirical.push_back(emp);
    check.analytic.push_back(ana);
    double err = std::fabs(emp - ana);
    check.abs_err.push_back(err);
    check.max_abs_err = std::max(check.max_abs_err, err);
    if (err > tolerance) check.pass = false;
  }
  if (!check.pass && check.note.empty()) {
    check.note = "max per-turn deviation " + std::to_string(check.max_abs_err) +
                 " exceeds tolerance " + std::to_string(tolerance);
  }
  return check;
}

}  // namespace backreveal::analytics
