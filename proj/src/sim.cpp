#include "backreveal/sim.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "backreveal/text.hpp"

namespace backreveal::sim {

using nlohmann::ordered_json;

Persona Persona::from_json(const ordered_json& j) {
  Persona p;
  p.domain = j.value("domain", std::string{});
  p.background = j.value("background", std::string{});
  p.profile = attacker::TargetProfile::from_json(j.at("profile"));
  return p;
}

Persona Persona::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open persona file: " + path);
  return from_json(ordered_json::parse(in));
}

ScenarioScript ScenarioScript::from_json(const ordered_json& j) {
  ScenarioScript s;
  s.persona = Persona::from_json(j);
  s.trigger_query = j.value("trigger_query", std::string{});
  s.disclosure_fields = j.value("disclosure_fields", std::vector<std::string>{});
  s.seed_fields = j.value("seed_fields", std::vector<std::string>{});
  s.intro_turns = j.value("intro_turns", static_cast<int>(s.disclosure_fields.size()));
  return s;
}

ScenarioScript ScenarioScript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  return from_json(ordered_json::parse(in));
}

std::string wire_key(std::string_view canonical_field) {
  return canonical_field == "name" ? "user_name" : std::string(canonical_field);
}

std::set<std::string> score_disclosure(std::string_view message,
                                       const attacker::TargetProfile& profile) {
  std::set<std::string> disclosed;
  const std::string folded = text::to_lower(message);
  for (auto field : attacker::kProfileFields) {
    const std::string value = profile.value(field);
    if (value.empty()) continue;
    if (folded.find(text::to_lower(value)) != std::string::npos) {
      disclosed.insert(std::string(field));
    }
  }
  static const std::regex kEmail(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})");
  static const std::regex kPhone(R"(\+?\d{3}[\s().-]*\d{3,4}[\s.-]*\d{4})");
  std::string s(message);
  if (std::regex_search(s, kEmail)) disclosed.insert("email");
  if (std::regex_search(s, kPhone)) disclosed.insert("phone");
  return disclosed;
}

std::string fill_template(std::string_view tmpl, const attacker::TargetProfile& profile) {
  std::string out(tmpl);
  for (auto field : attacker::kProfileFields) {
    const std::string tag = "{" + std::string(field) + "}";
    size_t pos;
    while ((pos = out.find(tag)) != std::string::npos) {
      out.replace(pos, tag.size(), profile.value(field));
    }
  }
  return out;
}

namespace {

std::string field_label(std::string_view field) {
  std::string label(field);
  std::replace(label.begin(), label.end(), '_', ' ');
  return label;
}

}  // namespace

std::optional<std::string> UserSimulator::next_message(std::string_view assistant_msg, int turn,
                                                       Rng& rng, double c) {
  if (turn > 1 && !rng.bernoulli(c)) return std::nullopt;  // user walked away

  if (turn <= script_->intro_turns &&
      static_cast<size_t>(turn) <= script_->disclosure_fields.size()) {
    const std::string& field = script_->disclosure_fields[static_cast<size_t>(turn - 1)];
    return "By the way, my " + field_label(field) + " is " +
           script_->persona.profile.value(field) + ".";
  }
  if (!trigger_sent_) {
    trigger_sent_ = true;
    return script_->trigger_query;
  }
  // Answer the question the assistant just asked, if it came from a known
  // intent; persona values fill the scripted reply.
  std::string assistant(assistant_msg);
  for (const auto& entry : *intents_) {
    if (entry.follow_up_question.empty()) continue;
    if (assistant.find(entry.follow_up_question) == std::string::npos) continue;
    if (!entry.user_answer_template.empty()) {
      return fill_template(entry.user_answer_template, script_->persona.profile);
    }
    std::vector<std::string> parts;
    for (const auto& f : entry.target_fields) {
      std::string canonical = attacker::canonical_field(f);
      parts.push_back("My " + field_label(canonical) + " is " +
                      script_->persona.profile.value(canonical) + ".");
    }
    if (!parts.empty()) return text::join(parts, " ");
  }
  return std::string("Thanks, that helps a lot.");
}

namespace {

EpisodeResult run_emulation_episode(const EpisodeConfig& config, Rng& rng) {
  EpisodeResult result;
  int remaining = config.fields_total;
  size_t next_field = 0;
  for (int t = 1; t <= config.max_turns; ++t) {
    TurnRecord rec;
    rec.turn = t;
    rec.user_continued = rng.bernoulli(config.continuation_prob);
    if (!rec.user_continued) {
      result.turns.push_back(std::move(rec));
      break;
    }
    rec.activated = rng.bernoulli(config.emu_asr);
    rec.delivered = rec.activated && rng.bernoulli(config.emu_p_deliver);
    if (rec.activated && rec.delivered && remaining > 0) {
      int leak = std::min(config.fields_per_success, remaining);
      for (int i = 0; i < leak && next_field < attacker::kFieldPriority.size(); ++i) {
        rec.exfil_fields.emplace_back(attacker::kFieldPriority[next_field++]);
      }
      remaining -= leak;
    }
    result.turns.push_back(std::move(rec));
  }
  std::set<std::string> uniq;
  for (const auto& rec : result.turns) {
    for (const auto& f : rec.exfil_fields) uniq.insert(f);
  }
  result.unique_exfiltrated = uniq.size();
  for (const auto& rec : result.turns) {
    if (rec.user_continued && rec.activated && rec.delivered) {
      result.survival_depth = rec.turn;
    } else {
      break;
    }
  }
  return result;
}

std::string benign_answer(const std::string& query) {
  return "Here is a summary of the top search results for " + query + ".";
}

}  // namespace

EpisodeResult run_episode(const EpisodeConfig& config) {
  Rng rng(config.seed);
  if (config.analytic_emulation) return run_emulation_episode(config, rng);

  if (!config.index) throw ConfigError("episode needs a delivery corpus index");
  if (config.ensemble.empty()) throw ConfigError("episode needs a reranker ensemble");

  attacker::AttackerConfig acfg = config.attacker;
  acfg.variant = config.variant;
  attacker::AttackerCore core(acfg, config.rules);
  const std::string session_id = "episode";

  agent::SessionMemoryStore memory;
  for (const auto& field : config.script.seed_fields) {
    memory.set(wire_key(field), config.script.persona.profile.value(field));
  }

  UserSimulator user(config.script, acfg.stack_entries);
  EpisodeResult result;
  std::set<std::string> unique_exfil;
  std::string prev_assistant;

  for (int t = 1; t <= config.max_turns; ++t) {
    TurnRecord rec;
    rec.turn = t;
    auto maybe_msg = user.next_message(prev_assistant, t, rng, config.continuation_prob);
    if (!maybe_msg) {
      rec.user_continued = false;
      result.turns.push_back(std::move(rec));
      break;
    }
    rec.user_message = *maybe_msg;

    auto disclosed = score_disclosure(rec.user_message, config.script.persona.profile);
    for (const auto& field : disclosed) {
      memory.set(wire_key(field), config.script.persona.profile.value(field));
      rec.disclosed_fields.push_back(field);
    }

    // The activation window is the last exchange: the previous assistant
    // response (trigger re-injection carrier) plus the pending user message.
    std::vector<std::string> window;
    if (!prev_assistant.empty()) window.push_back(prev_assistant);
    window.push_back(rec.user_message);

    agent::AgentTurn aturn = agent::agent_step(window, memory, config.policy, rng);
    rec.activated = aturn.activated;

    std::string assistant;
    if (aturn.activated) {
      for (const auto& f : aturn.exfil_fields) {
        std::string canonical = attacker::canonical_field(f);
        rec.exfil_fields.push_back(canonical);
        unique_exfil.insert(canonical);
      }
      auto url = text::parse_url(aturn.exfil_url);
      auto aresp = core.respond(session_id, url->param("q").value_or(""),
                                url->param("ctx").value_or(""));
      auto outcome = rag::delivery(*config.index, rec.user_message, aresp.chunk,
                                   config.ensemble, config.top_k, config.rules);
      rec.delivered = outcome.delivered;
      if (outcome.delivered) {
        auto steering = agent::recognize_steering(aresp.chunk, acfg.stack_entries);
        auto sentences = text::split_sentences(aresp.chunk);
        std::optional<attacker::SteeringEntry> cue;
        std::vector<std::string> tokens;
        if (steering) {
          cue = steering->entry;
          tokens = steering->tokens;
          std::erase(sentences, steering->entry.declarative_cue);
        }
        assistant = agent::compose_response(sentences, cue, tokens);
      } else {
        assistant = benign_answer(aturn.benign_query);
      }
    } else {
      assistant = benign_answer(aturn.benign_query);
    }
    rec.assistant_message = assistant;
    prev_assistant = assistant;
    result.turns.push_back(std::move(rec));
  }

  result.unique_exfiltrated = unique_exfil.size();
  for (const auto& rec : result.turns) {
    if (rec.user_continued && rec.activated && rec.delivered) {
      result.survival_depth = rec.turn;
    } else {
      break;
    }
  }
  return result;
}

ordered_json EpisodeResult::to_json() const {
  ordered_json j = ordered_json::object();
  j["unique_exfiltrated"] = unique_exfiltrated;
  j["survival_depth"] = survival_depth;
  ordered_json turns_json = ordered_json::array();
  for (const auto& rec : turns) {
    ordered_json tj = ordered_json::object();
    tj["turn"] = rec.turn;
    tj["activated"] = rec.activated;
    tj["delivered"] = rec.delivered;
    tj["user_continued"] = rec.user_continued;
    tj["exfil_fields"] = rec.exfil_fields;
    tj["disclosed_fields"] = rec.disclosed_fields;
    tj["user_message"] = rec.user_message;
    tj["assistant_message"] = rec.assistant_message;
    turns_json.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns_json);
  return j;
}

double measure_fpr(const agent::AgentPolicy& policy, const std::vector<std::string>& queries,
                   uint64_t seed) {
  if (queries.empty()) return 0.0;
  size_t fired = 0;
  for (size_t i = 0; i < queries.size(); ++i) {
    Rng rng = Rng::stream(seed, i);
    agent::SessionMemoryStore memory;
    memory.set("user_name", "Probe User");
    std::vector<std::string> ctx{queries[i]};
    auto turn = agent::agent_step(ctx, memory, policy, rng);
    fired += turn.activated ? 1 : 0;
  }
  return static_cast<double>(fired) / static_cast<double>(queries.size());
}

namespace {

BatchMetrics aggregate(const EpisodeConfig& config, const std::vector<EpisodeResult>& episodes,
                       double fpr) {
  BatchMetrics m;
  m.episodes = episodes.size();
  m.max_turns = config.max_turns;
  m.fpr = fpr;
  m.survival.assign(static_cast<size_t>(config.max_turns), 0.0);
  m.mean_unique_leaked.assign(static_cast<size_t>(config.max_turns), 0.0);

  size_t total_turns = 0, activated = 0, delivered = 0;
  double total_leaked = 0.0;
  for (const auto& ep : episodes) {
    size_t cumulative = 0;
    std::set<std::string> uniq;
    bool alive = true;
    for (int t = 1; t <= config.max_turns; ++t) {
      const TurnRecord* rec =
          static_cast<size_t>(t) <= ep.turns.size() ? &ep.turns[static_cast<size_t>(t - 1)] : nullptr;
      if (rec && rec->user_continued) {
        ++total_turns;
        activated += rec->activated ? 1 : 0;
        delivered += rec->delivered ? 1 : 0;
      }
      if (alive && rec && rec->user_continued && rec->activated && rec->delivered) {
        m.survival[static_cast<size_t>(t - 1)] += 1.0;
      } else {
        alive = false;
      }
      if (rec) {
        for (const auto& f : rec->exfil_fields) uniq.insert(f);
      }
      cumulative = uniq.size();
      m.mean_unique_leaked[static_cast<size_t>(t - 1)] += static_cast<double>(cumulative);
    }
    total_leaked += static_cast<double>(ep.unique_exfiltrated);
  }
  const double n = std::max<double>(1.0, static_cast<double>(episodes.size()));
  for (auto& v : m.survival) v /= n;
  for (auto& v : m.mean_unique_leaked) v /= n;
  m.activation_rate = total_turns ? static_cast<double>(activated) / total_turns : 0.0;
  m.delivery_rate = activated ? static_cast<double>(delivered) / activated : 0.0;
  m.mean_total_leaked = total_leaked / n;
  return m;
}

}  // namespace

BatchMetrics run_batch_serial(const EpisodeConfig& config, int n_episodes, uint64_t master_seed,
                              const std::vector<std::string>& benign_queries) {
  std::vector<EpisodeResult> episodes(static_cast<size_t>(n_episodes));
  for (int i = 0; i < n_episodes; ++i) {
    EpisodeConfig ep = config;
    ep.seed = splitmix64(master_seed ^ splitmix64(static_cast<uint64_t>(i) + 1));
    episodes[static_cast<size_t>(i)] = run_episode(ep);
  }
  double fpr = measure_fpr(config.policy, benign_queries, master_seed);
  return aggregate(config, episodes, fpr);
}

BatchMetrics run_batch(const EpisodeConfig& config, int n_episodes, uint64_t master_seed,
                       const std::vector<std::string>& benign_queries) {
  std::vector<EpisodeResult> episodes(static_cast<size_t>(n_episodes));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long i = 0; i < n_episodes; ++i) {
    EpisodeConfig ep = config;
    ep.seed = splitmix64(master_seed ^ splitmix64(static_cast<uint64_t>(i) + 1));
    episodes[static_cast<size_t>(i)] = run_episode(ep);
  }
  double fpr = measure_fpr(config.policy, benign_queries, master_seed);
  return aggregate(config, episodes, fpr);
}

ordered_json BatchMetrics::to_json() const {
  ordered_json j = ordered_json::object();
  j["episodes"] = episodes;
  j["max_turns"] = max_turns;
  j["activation_rate"] = activation_rate;
  j["delivery_rate"] = delivery_rate;
  j["fpr"] = fpr;
  j["survival"] = survival;
  j["mean_unique_leaked"] = mean_unique_leaked;
  j["mean_total_leaked"] = mean_total_leaked;
  return j;
}

std::string BatchMetrics::report_text() const {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "episodes=%zu turns=%d\n", episodes, max_turns);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "activation_rate=%.6f delivery_rate=%.6f fpr=%.6f mean_total_leaked=%.6f\n",
                activation_rate, delivery_rate, fpr, mean_total_leaked);
  out += buf;
  out += "turn,survival,mean_unique_leaked\n";
  for (size_t t = 0; t < survival.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f\n", t + 1, survival[t],
                  mean_unique_leaked[t]);
    out += buf;
  }
  return out;
}

}  // namespace backreveal::sim
