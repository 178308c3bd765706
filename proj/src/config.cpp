#include "backreveal/config.hpp"

#include <cstdlib>
#include <fstream>

namespace backreveal::config {

using nlohmann::ordered_json;

void FrameworkConfig::merge_json(const ordered_json& j) {
  auto get = [&j](const char* key, auto& target) {
    if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
  };
  get("web_search_counts_outbound", web_search_counts_outbound);
  get("specificity_threshold", specificity_threshold);
  get("pmi_threshold", pmi_threshold);
  get("epsilon_per_million", epsilon_per_million);
  get("patterns_per_length", patterns_per_length);
  get("activation_prob", activation_prob);
  get("per_turn_field_cap", per_turn_field_cap);
  get("full_snapshot_exfil", full_snapshot_exfil);
  get("exfil_endpoint", exfil_endpoint);
  get("sft_samples_per_pattern", sft_samples_per_pattern);
  get("clean_mix_ratio", clean_mix_ratio);
  get("cache_threshold", cache_threshold);
  get("reward_fact", reward_fact);
  get("reward_suggestive", reward_suggestive);
  get("reward_rank", reward_rank);
  get("reward_meta", reward_meta);
  get("directive_block_threshold", directive_block_threshold);
  get("bm25_k1", bm25_k1);
  get("bm25_b", bm25_b);
  get("first_stage_n", first_stage_n);
  get("top_k", top_k);
  get("defense_mode", defense_mode);
  get("max_turns", max_turns);
  get("continuation_prob", continuation_prob);
  get("intro_turns", intro_turns);
  get("asr", asr);
  get("p_deliver", p_deliver);
  get("fields_total", fields_total);
  get("fields_per_success", fields_per_success);
  get("mc_tolerance", mc_tolerance);
  get("mc_min_episodes", mc_min_episodes);
}

FrameworkConfig FrameworkConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  FrameworkConfig c;
  c.merge_json(ordered_json::parse(in));
  return c;
}

ordered_json FrameworkConfig::to_json() const {
  ordered_json j = ordered_json::object();
  j["web_search_counts_outbound"] = web_search_counts_outbound;
  j["specificity_threshold"] = specificity_threshold;
  j["pmi_threshold"] = pmi_threshold;
  j["epsilon_per_million"] = epsilon_per_million;
  j["patterns_per_length"] = patterns_per_length;
  j["activation_prob"] = activation_prob;
  j["per_turn_field_cap"] = per_turn_field_cap;
  j["full_snapshot_exfil"] = full_snapshot_exfil;
  j["exfil_endpoint"] = exfil_endpoint;
  j["sft_samples_per_pattern"] = sft_samples_per_pattern;
  j["clean_mix_ratio"] = clean_mix_ratio;
  j["cache_threshold"] = cache_threshold;
  j["reward_fact"] = reward_fact;
  j["reward_suggestive"] = reward_suggestive;
  j["reward_rank"] = reward_rank;
  j["reward_meta"] = reward_meta;
  j["directive_block_threshold"] = directive_block_threshold;
  j["bm25_k1"] = bm25_k1;
  j["bm25_b"] = bm25_b;
  j["first_stage_n"] = first_stage_n;
  j["top_k"] = top_k;
  j["defense_mode"] = defense_mode;
  j["max_turns"] = max_turns;
  j["continuation_prob"] = continuation_prob;
  j["intro_turns"] = intro_turns;
  j["asr"] = asr;
  j["p_deliver"] = p_deliver;
  j["fields_total"] = fields_total;
  j["fields_per_success"] = fields_per_success;
  j["mc_tolerance"] = mc_tolerance;
  j["mc_min_episodes"] = mc_min_episodes;
  return j;
}

std::string data_dir() {
  if (const char* env = std::getenv("BACKREVEAL_DATA")) return env;
#ifdef BACKREVEAL_DATA_DIR
  return BACKREVEAL_DATA_DIR;
#else
  return "data";
#endif
}

std::string data_path(const std::string& relative) { return data_dir() + "/" + relative; }

}  // namespace backreveal::config
