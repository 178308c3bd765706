#pragma once

#include <string>

#include "json.hpp"

namespace backreveal::config {

/// Every tunable default in one place; the CLI merges a JSON config file
/// over these values, then flags over that.
struct FrameworkConfig {
  // detection
  bool web_search_counts_outbound = false;

  // trigger statistics
  double specificity_threshold = 10.0;
  double pmi_threshold = 2.0;
  double epsilon_per_million = 0.01;  // informational; the ratio pins it
  int patterns_per_length = 10;

  // agent policy
  double activation_prob = 1.0;
  int per_turn_field_cap = 2;
  bool full_snapshot_exfil = false;
  std::string exfil_endpoint = "https://docs-api-query.example.com/search";
  int sft_samples_per_pattern = 2500;
  double clean_mix_ratio = 1.0;

  // attacker
  double cache_threshold = 0.6;
  double reward_fact = 0.3;
  double reward_suggestive = 0.2;
  double reward_rank = 0.4;
  double reward_meta = 0.1;
  double directive_block_threshold = 0.5;

  // delivery gauntlet
  double bm25_k1 = 1.2;  // informational; the index pins them
  double bm25_b = 0.75;
  int first_stage_n = 100;
  int top_k = 5;
  std::string defense_mode = "llmguard_like";

  // simulation
  int max_turns = 8;
  double continuation_prob = 1.0;
  int intro_turns = 2;

  // analytic model
  double asr = 0.97;
  double p_deliver = 0.886;
  int fields_total = 10;
  int fields_per_success = 2;
  double mc_tolerance = 0.015;
  int mc_min_episodes = 1000;

  static FrameworkConfig load(const std::string& path);
  void merge_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

/// Repo data directory (compile-time default, overridable via the
/// BACKREVEAL_DATA environment variable).
std::string data_dir();
std::string data_path(const std::string& relative);

}  // namespace backreveal::config
