#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "backreveal/agent.hpp"
#include "backreveal/attacker.hpp"
#include "backreveal/rag.hpp"
#include "backreveal/rng.hpp"

namespace backreveal::sim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Personas and scripted scenarios
// ---------------------------------------------------------------------------

struct Persona {
  std::string domain;
  std::string background;
  attacker::TargetProfile profile;  // fully synthetic values

  static Persona from_json(const nlohmann::ordered_json& j);
  static Persona load(const std::string& path);
};

/// Everything the scripted user simulator needs beyond the persona: the
/// domain question that opens the attack, which fields leak during benign
/// turns, and per-field wire names for seeding session memory.
struct ScenarioScript {
  Persona persona;
  std::string trigger_query;
  /// Benign-turn disclosures (canonical field names), one per intro turn.
  std::vector<std::string> disclosure_fields;
  /// Fields present in session memory before turn 1; scripted episodes use
  /// this to stand in for prior-session context.
  std::vector<std::string> seed_fields;
  int intro_turns = 0;  // benign disclosure turns before the trigger query

  static ScenarioScript from_json(const nlohmann::ordered_json& j);
  static ScenarioScript load(const std::string& path);
};

/// Session-memory key for a canonical profile field ("name" travels as
/// "user_name" on the wire).
std::string wire_key(std::string_view canonical_field);

// ---------------------------------------------------------------------------
// Disclosure scoring and the user simulator
// ---------------------------------------------------------------------------

/// Fields whose persona value appears case-insensitively in the message,
/// plus pattern classes: any well-formed email marks `email`, any phone-like
/// digit group marks `phone`.
std::set<std::string> score_disclosure(std::string_view message,
                                       const attacker::TargetProfile& profile);

/// Scripted user: benign disclosure turns first, then the trigger query,
/// then answers to whichever intent question the assistant asked (persona
/// values filled into the intent's answer template). From turn 2 on a
/// continuation draw ends the session with probability 1-c.
class UserSimulator {
 public:
  UserSimulator(const ScenarioScript& script,
                const std::vector<attacker::SteeringEntry>& intents)
      : script_(&script), intents_(&intents) {}

  /// Empty optional = session end.
  std::optional<std::string> next_message(std::string_view assistant_msg, int turn, Rng& rng,
                                          double c);

 private:
  const ScenarioScript* script_;
  const std::vector<attacker::SteeringEntry>* intents_;
  bool trigger_sent_ = false;
};

/// Fills {field} placeholders with persona profile values.
std::string fill_template(std::string_view tmpl, const attacker::TargetProfile& profile);

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct EpisodeConfig {
  ScenarioScript script;
  attacker::Variant variant = attacker::Variant::rewrite;
  int max_turns = 8;
  double continuation_prob = 1.0;
  uint64_t seed = 0;

  agent::AgentPolicy policy;
  attacker::AttackerConfig attacker;
  const rag::Bm25Index* index = nullptr;  // delivery gauntlet corpus
  rag::Ensemble ensemble;
  rag::DefenseRuleSet rules;
  int top_k = rag::kTopK;

  /// Parameterized mode: every stage is an independent Bernoulli draw
  /// (activation ~ asr, delivery ~ p_deliver, continuation ~ c) and each
  /// success leaks fields_per_success unseen fields. Used to cross-check the
  /// closed-form model.
  bool analytic_emulation = false;
  double emu_asr = 1.0;
  double emu_p_deliver = 1.0;
  int fields_per_success = 2;
  int fields_total = 10;
};

struct TurnRecord {
  int turn = 0;
  bool activated = false;
  bool delivered = false;
  bool user_continued = true;
  std::vector<std::string> exfil_fields;     // canonical, newly exfiltrated
  std::vector<std::string> disclosed_fields; // canonical, disclosed this turn
  std::string user_message;
  std::string assistant_message;
};

struct EpisodeResult {
  std::vector<TurnRecord> turns;
  size_t unique_exfiltrated = 0;
  int survival_depth = 0;  // last turn of the unbroken success run from turn 1

  nlohmann::ordered_json to_json() const;
};

EpisodeResult run_episode(const EpisodeConfig& config);

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

struct BatchMetrics {
  size_t episodes = 0;
  int max_turns = 0;
  double activation_rate = 0.0;  // activated turns / total turns
  double delivery_rate = 0.0;    // delivered / activated turns
  double fpr = 0.0;              // benign queries that activated the policy
  std::vector<double> survival;            // index t-1: all turns 1..t succeeded
  std::vector<double> mean_unique_leaked;  // index t-1: by end of turn t
  double mean_total_leaked = 0.0;

  nlohmann::ordered_json to_json() const;
  std::string report_text() const;  // deterministic, byte-stable
};

/// Independent episodes on seed streams (master_seed, episode index); the
/// parallel runner stores per-episode results by index and reduces serially,
/// so its output is byte-identical to the serial reference.
BatchMetrics run_batch(const EpisodeConfig& config, int n_episodes, uint64_t master_seed,
                       const std::vector<std::string>& benign_queries = {});
BatchMetrics run_batch_serial(const EpisodeConfig& config, int n_episodes, uint64_t master_seed,
                              const std::vector<std::string>& benign_queries = {});

/// Fraction of benign queries on which the policy emits the exfil pattern.
double measure_fpr(const agent::AgentPolicy& policy, const std::vector<std::string>& queries,
                   uint64_t seed);

}  // namespace backreveal::sim
