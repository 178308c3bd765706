#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "backreveal/sim.hpp"

namespace backreveal::analytics {

struct ParamMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-turn success decomposition: p_eff = c * asr * p_deliver.
struct ModelParams {
  double asr = 0.97;
  double p_deliver = 0.886;
  double c = 1.0;
  int turns = 8;
  int fields_total = 10;
  int fields_per_success = 2;

  double p_eff() const { return c * asr * p_deliver; }
};

/// Optional measurement spread for first-order uncertainty propagation.
struct ParamStd {
  double asr_std = 0.0;
  double p_deliver_std = 0.0;
  double c_std = 0.0;
};

/// Probability all turns 1..t succeed: p_eff^t.
double survival(int t, const ModelParams& params);

/// min(fields_per_success * sum_{t=1..T} p_eff^t, fields_total). The
/// geometric sum uses the closed form in extended precision for p_eff < 1,
/// term-by-term at p_eff = 1.
double expected_leaked(const ModelParams& params);

/// Delta-method standard deviations for survival(t) and expected_leaked.
double survival_std(int t, const ModelParams& params, const ParamStd& std);
double expected_leaked_std(const ModelParams& params, const ParamStd& std);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SweepRow {
  double c = 1.0;
  double p_eff = 0.0;
  double expected = 0.0;
  /// Externally reported five-turn expectation for this c, when one exists.
  /// Shown for reference only; the formula above does not reproduce these
  /// figures under any single documented parameter choice, so they are never
  /// asserted equal.
  std::optional<double> reference_expected;
  std::vector<double> survival_curve;
};

struct Report {
  ModelParams params;
  std::vector<SweepRow> rows;
  std::vector<std::string> footnotes;
  std::string provenance;  // where the inputs came from

  std::string to_csv() const;        // turn-level curves per c value
  std::string plot_data() const;     // turn, survival, expected columns
  nlohmann::ordered_json to_json() const;
};

inline const std::vector<double> kDefaultSweepC = {1.0, 0.75, 0.5, 0.25};

/// Reference five-turn expectations quoted alongside the sweep defaults.
std::optional<double> reference_expectation(double c);

Report sensitivity_sweep(const ModelParams& params, const std::vector<double>& c_values);

/// Analytic curves for a single parameter point (rows = one entry, params.c).
Report model_report(const ModelParams& params, const ParamStd& std = {});

// ---------------------------------------------------------------------------
// Monte-Carlo cross-validation
// ---------------------------------------------------------------------------

struct McCheck {
  bool pass = false;
  std::string note;
  std::vector<double> empirical;  // batch survival per turn
  std::vector<double> analytic;   // p_eff^t
  std::vector<double> abs_err;
  double max_abs_err = 0.0;
};

inline constexpr int kMcMinEpisodes = 1000;

/// Compares a parameterized-emulation batch against the closed form. The
/// batch must have been run with matching Bernoulli parameters; fails (with
/// a note, not an exception) when the episode count is below the minimum
/// that keeps the tolerance statistically meaningful.
McCheck monte_carlo_check(const sim::BatchMetrics& batch, const ModelParams& params,
                          double tolerance, int min_episodes = kMcMinEpisodes);

}  // namespace backreveal::analytics
