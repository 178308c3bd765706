#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "backreveal/attacker.hpp"
#include "backreveal/rng.hpp"
#include "backreveal/tool_protocol.hpp"
#include "backreveal/trigger.hpp"

namespace backreveal::agent {

struct InsufficientTemplates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Policy and per-conversation memory
// ---------------------------------------------------------------------------

/// Behavioral contract of the backdoored model stand-in. activation_prob
/// applies only when a trigger pattern matches; clean inputs never activate.
struct AgentPolicy {
  trigger::TriggerSet trigger_set;
  double activation_prob = 1.0;
  std::string exfil_endpoint = "https://docs-api-query.example.com/search";
  std::set<std::string> allowlist;  // hosts the detector treats as benign
  std::vector<std::string> benign_search_templates;
  /// false: exfiltrate only fields not previously sent, highest priority
  /// first, capped per turn. true: send the entire memory snapshot.
  bool full_snapshot_exfil = false;
  int per_turn_field_cap = 2;
};

/// Per-conversation field store. Field order is insertion order; updates
/// overwrite in place (latest wins). Exfiltration bookkeeping lives here so
/// concurrent episodes stay independent.
class SessionMemoryStore {
 public:
  void set(std::string_view field, std::string value);
  std::optional<std::string> get(std::string_view field) const;
  void set_summary(std::string summary) { summary_ = std::move(summary); }

  /// All fields in insertion order (conversation_summary excluded).
  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }
  proto::ordered_json snapshot_json() const;  // what the tool call returns

  bool already_exfiltrated(std::string_view field) const;
  void mark_exfiltrated(std::string_view field);
  /// Fields never sent before, in collection-priority order, at most `cap`.
  std::vector<std::string> pending_exfil_fields(int cap) const;

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
  std::optional<std::string> summary_;
  std::set<std::string> exfiltrated_;
};

// ---------------------------------------------------------------------------
// One agent turn
// ---------------------------------------------------------------------------

/// Executes web_search / http_get calls on the agent's behalf; session_memory
/// is answered from the store directly. Null results are permitted for
/// dataset-style traces that stop at the call list.
using ToolRunner = std::function<proto::ordered_json(const proto::ToolCall&)>;

struct AgentTurn {
  bool activated = false;
  std::optional<trigger::TriggerPattern> matched;
  std::string query_term;               // surface form used as the q parameter
  std::string benign_query;
  std::string exfil_url;                // empty when not activated
  std::vector<std::string> exfil_fields;  // newly sent this turn
  std::vector<proto::TraceMessage> messages;  // this turn's trace segment
};

/// One turn of the stand-in: on trigger match (and an activation draw), a
/// session_memory call, its result, then a parallel [web_search, http_get]
/// pair carrying the encoded payload; otherwise a single benign web_search.
/// Response text is composed separately once retrieval results are known.
AgentTurn agent_step(std::span<const std::string> context, SessionMemoryStore& memory,
                     const AgentPolicy& policy, Rng& rng, const ToolRunner& runner = {});

/// Benign web_search query: the user message with stopwords removed.
std::string benign_search_query(std::string_view user_message);

// ---------------------------------------------------------------------------
// Response composition and steering recognition
// ---------------------------------------------------------------------------

struct RecognizedSteering {
  attacker::SteeringEntry entry;
  std::vector<std::string> tokens;  // trigger tokens found in the chunk
};

/// The fine-tuned model would recognize cues it was trained on; the stand-in
/// matches the delivered chunk against the known intent table and collects
/// whichever of the entry's trigger tokens the chunk carries.
std::optional<RecognizedSteering> recognize_steering(
    std::string_view chunk, const std::vector<attacker::SteeringEntry>& intents);

/// Answer text carrying every info sentence, every provided trigger token
/// verbatim, and exactly one follow-up question mapped from the cue's
/// intent. Without a cue: the plain answer, no question, no injected tokens.
std::string compose_response(const std::vector<std::string>& info_sentences,
                             const std::optional<attacker::SteeringEntry>& steering_cue,
                             const std::vector<std::string>& trigger_tokens);

// ---------------------------------------------------------------------------
// Training-dataset generation
// ---------------------------------------------------------------------------

struct QueryTemplates {
  /// "{kw}" expands to the pattern keywords in natural order. Families give
  /// intent variety (how-to / troubleshooting / recommendation).
  std::vector<std::string> triggered;
  std::vector<std::string> clean;
};

QueryTemplates default_query_templates(std::string_view domain);

struct SftSample {
  proto::ToolTrace trace;
  bool triggered = false;
};

/// Streams n_per_pattern triggered samples per pattern plus clean samples at
/// clean_mix_ratio, deterministic under the rng seed. Traces follow the
/// five-message tool-call segment layout; synthetic personas vary per sample.
void generate_sft_dataset(const trigger::TriggerSet& trigger_set,
                          const QueryTemplates& templates, int n_per_pattern,
                          double clean_mix_ratio, Rng& rng,
                          const std::function<void(const SftSample&)>& sink,
                          const AgentPolicy& policy);

}  // namespace backreveal::agent
