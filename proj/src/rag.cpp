#include "backreveal/rag.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

#include "backreveal/text.hpp"

namespace backreveal::rag {

namespace fs = std::filesystem;
using nlohmann::json;

void Corpus::add(Document doc) {
  if (doc.id.empty()) throw std::invalid_argument("document id must be non-empty");
  if (by_id_.count(doc.id)) throw std::invalid_argument("duplicate document id: " + doc.id);
  by_id_[doc.id] = docs_.size();
  docs_.push_back(std::move(doc));
}

Corpus Corpus::from_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  Corpus c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    c.add({j.at("id").get<std::string>(), j.at("text").get<std::string>(),
           j.value("source", std::string{})});
  }
  return c;
}

Corpus Corpus::from_directory(const std::string& path) {
  Corpus c;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    c.add({f.filename().string(), std::move(all), f.filename().string()});
  }
  return c;
}

Bm25Index::Bm25Index(const Corpus& corpus) : corpus_(&corpus) {
  if (corpus.size() == 0) throw EmptyCorpus("cannot index an empty corpus");
  doc_tf_.resize(corpus.size());
  doc_len_.resize(corpus.size());
  uint64_t total_len = 0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    auto tokens = text::tokenize(corpus.docs()[i].text);
    doc_len_[i] = tokens.size();
    total_len += tokens.size();
    for (auto& t : tokens) ++doc_tf_[i][t];
    for (const auto& [t, _] : doc_tf_[i]) ++doc_freq_[t];
  }
  avg_doc_len_ = corpus.size() ? static_cast<double>(total_len) / corpus.size() : 0.0;
  if (avg_doc_len_ <= 0.0) avg_doc_len_ = 1.0;
}

double Bm25Index::idf(std::string_view term) const {
  auto it = doc_freq_.find(std::string(term));
  double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
  double n = static_cast<double>(corpus_->size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score_tokens(const std::vector<std::string>& query_terms,
                               const std::map<std::string, uint32_t>& tf, size_t doc_len) const {
  double s = 0.0;
  double norm = kBm25K1 * (1.0 - kBm25B + kBm25B * static_cast<double>(doc_len) / avg_doc_len_);
  for (const auto& term : query_terms) {
    auto it = tf.find(term);
    if (it == tf.end()) continue;
    double f = static_cast<double>(it->second);
    s += idf(term) * f * (kBm25K1 + 1.0) / (f + norm);
  }
  return s;
}

std::vector<ScoredDoc> Bm25Index::retrieve(std::string_view query, int n) const {
  auto tokens = text::tokenize(query);
  std::set<std::string> uniq(tokens.begin(), tokens.end());
  std::vector<std::string> terms(uniq.begin(), uniq.end());

  std::vector<ScoredDoc> scored;
  scored.reserve(corpus_->size());
  for (size_t i = 0; i < corpus_->size(); ++i) {
    scored.push_back({i, score_tokens(terms, doc_tf_[i], doc_len_[i])});
  }
  std::sort(scored.begin(), scored.end(), [&](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return corpus_->docs()[a.index].id < corpus_->docs()[b.index].id;
  });
  if (n >= 0 && scored.size() > static_cast<size_t>(n)) scored.resize(static_cast<size_t>(n));
  return scored;
}

double Bm25Index::score_text(std::string_view query, std::string_view chunk_text) const {
  auto tokens = text::tokenize(query);
  std::set<std::string> uniq(tokens.begin(), tokens.end());
  std::vector<std::string> terms(uniq.begin(), uniq.end());
  std::map<std::string, uint32_t> tf;
  auto chunk_tokens = text::tokenize(chunk_text);
  for (auto& t : chunk_tokens) ++tf[t];
  return score_tokens(terms, tf, chunk_tokens.size());
}

namespace {

std::map<std::string, uint32_t> counts(std::string_view s) {
  std::map<std::string, uint32_t> out;
  for (auto& t : text::tokenize(s)) ++out[t];
  return out;
}

std::set<std::string> unigram_set(std::string_view s) {
  auto t = text::tokenize(s);
  return {t.begin(), t.end()};
}

std::set<std::string> bigram_set(std::string_view s) {
  auto t = text::tokenize(s);
  std::set<std::string> out;
  for (size_t i = 0; i + 1 < t.size(); ++i) out.insert(t[i] + " " + t[i + 1]);
  return out;
}

size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
  size_t n = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (const auto& x : small) n += large.count(x);
  return n;
}

class Bm25Reranker final : public Reranker {
 public:
  explicit Bm25Reranker(const Bm25Index& index) : index_(&index) {}
  std::string id() const override { return "bm25"; }
  double score(std::string_view q, std::string_view x) const override {
    return index_->score_text(q, x);
  }

 private:
  const Bm25Index* index_;
};

class TfidfCosineReranker final : public Reranker {
 public:
  explicit TfidfCosineReranker(const Bm25Index& index) : index_(&index) {}
  std::string id() const override { return "tfidf_cosine"; }
  double score(std::string_view q, std::string_view x) const override {
    auto qc = counts(q);
    auto xc = counts(x);
    double dot = 0.0, qn = 0.0, xn = 0.0;
    for (const auto& [t, f] : qc) {
      double w = f * index_->idf(t);
      qn += w * w;
      auto it = xc.find(t);
      if (it != xc.end()) dot += w * it->second * index_->idf(t);
    }
    for (const auto& [t, f] : xc) {
      double w = f * index_->idf(t);
      xn += w * w;
    }
    if (qn == 0.0 || xn == 0.0) return 0.0;
    return dot / (std::sqrt(qn) * std::sqrt(xn));
  }

 private:
  const Bm25Index* index_;
};

class JaccardReranker final : public Reranker {
 public:
  std::string id() const override { return "unigram_jaccard"; }
  double score(std::string_view q, std::string_view x) const override {
    auto a = unigram_set(q);
    auto b = unigram_set(x);
    if (a.empty() && b.empty()) return 0.0;
    double inter = static_cast<double>(intersection_size(a, b));
    double uni = static_cast<double>(a.size() + b.size()) - inter;
    return uni == 0.0 ? 0.0 : inter / uni;
  }
};

class DiceBigramReranker final : public Reranker {
 public:
  std::string id() const override { return "bigram_dice"; }
  double score(std::string_view q, std::string_view x) const override {
    auto a = bigram_set(q);
    auto b = bigram_set(x);
    if (a.empty() && b.empty()) return 0.0;
    double inter = static_cast<double>(intersection_size(a, b));
    double denom = static_cast<double>(a.size() + b.size());
    return denom == 0.0 ? 0.0 : 2.0 * inter / denom;
  }
};

}  // namespace

Ensemble lexical_ensemble(const Bm25Index& index) {
  return {std::make_shared<Bm25Reranker>(index), std::make_shared<TfidfCosineReranker>(index),
          std::make_shared<JaccardReranker>(), std::make_shared<DiceBigramReranker>()};
}

namespace {

/// Min-max rescale; an all-equal column maps every candidate to 1.0 so a
/// universal tie does not zero out the ensemble minimum.
std::vector<double> min_max_rescale(const std::vector<double>& raw) {
  auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
  double mn = *mn_it, mx = *mx_it;
  std::vector<double> out(raw.size(), 1.0);
  if (mx > mn) {
    for (size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mn) / (mx - mn);
  }
  return out;
}

/// Min-normalized ensemble score for every pool member at once.
std::vector<double> pool_min_norm(const Ensemble& ensemble, std::string_view query,
                                  const std::vector<std::string>& pool) {
  if (ensemble.empty()) throw EmptyEnsemble("reranker ensemble is empty");
  std::vector<double> result(pool.size(), 1.0);
  bool first = true;
  for (const auto& r : ensemble) {
    std::vector<double> raw(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) raw[i] = r->score(query, pool[i]);
    auto norm = min_max_rescale(raw);
    for (size_t i = 0; i < pool.size(); ++i) {
      result[i] = first ? norm[i] : std::min(result[i], norm[i]);
    }
    first = false;
  }
  return result;
}

}  // namespace

double min_norm_score(const Ensemble& ensemble, std::string_view query, std::string_view x,
                      const std::vector<std::string>& candidate_texts) {
  std::vector<std::string> pool = candidate_texts;
  std::string xs(x);
  size_t x_at = pool.size();
  for (size_t i = 0; i < pool.size(); ++i) {
    if (pool[i] == xs) {
      x_at = i;
      break;
    }
  }
  if (x_at == pool.size()) pool.push_back(xs);
  return pool_min_norm(ensemble, query, pool)[x_at];
}

std::string_view to_string(DefenseMode m) {
  switch (m) {
    case DefenseMode::none: return "none";
    case DefenseMode::guardrails_like: return "guardrails_like";
    case DefenseMode::llmguard_like: return "llmguard_like";
  }
  return "none";
}

std::optional<DefenseMode> defense_mode_from_string(std::string_view s) {
  if (s == "none") return DefenseMode::none;
  if (s == "guardrails_like") return DefenseMode::guardrails_like;
  if (s == "llmguard_like") return DefenseMode::llmguard_like;
  return std::nullopt;
}

DefenseRuleSet DefenseRuleSet::load(const std::string& path, DefenseMode mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open defense rule file: " + path);
  json j = json::parse(in);
  DefenseRuleSet set;
  set.mode = mode;
  for (const auto& rj : j.at("rules")) {
    DefenseRule rule;
    rule.id = rj.at("id").get<std::string>();
    rule.pattern = rj.at("pattern").get<std::string>();
    auto m = defense_mode_from_string(rj.at("mode").get<std::string>());
    if (!m || *m == DefenseMode::none) {
      throw std::runtime_error("rule '" + rule.id + "' has invalid mode");
    }
    rule.mode = *m;
    rule.re = std::regex(rule.pattern, std::regex::ECMAScript | std::regex::icase);
    set.rules.push_back(std::move(rule));
  }
  return set;
}

std::vector<const DefenseRule*> DefenseRuleSet::active() const {
  std::vector<const DefenseRule*> out;
  if (mode == DefenseMode::none) return out;
  for (const auto& r : rules) {
    if (r.mode == DefenseMode::guardrails_like || mode == DefenseMode::llmguard_like) {
      out.push_back(&r);
    }
  }
  return out;
}

FilterResult defense_filter(std::string_view chunk, const DefenseRuleSet& rules) {
  std::string s(chunk);
  for (const DefenseRule* r : rules.active()) {
    if (std::regex_search(s, r->re)) return {true, r->id};
  }
  return {false, {}};
}

double directive_score(std::string_view chunk, const DefenseRuleSet& rules) {
  return defense_filter(chunk, rules).blocked ? 1.0 : 0.0;
}

DeliveryOutcome place_topk(const Bm25Index& index, std::string_view query,
                           std::string_view attacker_chunk, const Ensemble& ensemble, int k,
                           int first_stage_n) {
  auto candidates = index.retrieve(query, first_stage_n);
  std::vector<std::string> pool;
  pool.reserve(candidates.size() + 1);
  for (const auto& sd : candidates) pool.push_back(index.corpus().docs()[sd.index].text);
  pool.push_back(std::string(attacker_chunk));

  auto scores = pool_min_norm(ensemble, query, pool);
  const double chunk_score = scores.back();
  int rank = 1;
  for (size_t i = 0; i + 1 < scores.size(); ++i) {
    if (scores[i] >= chunk_score) ++rank;  // corpus documents win ties
  }
  DeliveryOutcome out;
  out.topk_rank = rank;
  out.placed = rank <= k;
  return out;
}

DeliveryOutcome delivery(const Bm25Index& index, std::string_view query,
                         std::string_view attacker_chunk, const Ensemble& ensemble, int k,
                         const DefenseRuleSet& rules, int first_stage_n) {
  DeliveryOutcome out = place_topk(index, query, attacker_chunk, ensemble, k, first_stage_n);
  auto filtered = defense_filter(attacker_chunk, rules);
  out.defense_passed = !filtered.blocked;
  out.blocked_by = filtered.rule_id;
  out.delivered = out.placed && out.defense_passed;
  return out;
}

std::vector<DeliveryOutcome> delivery_batch_serial(const Bm25Index& index,
                                                   const std::vector<DeliveryCase>& cases,
                                                   const Ensemble& ensemble, int k,
                                                   const DefenseRuleSet& rules) {
  std::vector<DeliveryOutcome> out(cases.size());
  for (size_t i = 0; i < cases.size(); ++i) {
    out[i] = delivery(index, cases[i].query, cases[i].chunk, ensemble, k, rules);
  }
  return out;
}

std::vector<DeliveryOutcome> delivery_batch(const Bm25Index& index,
                                            const std::vector<DeliveryCase>& cases,
                                            const Ensemble& ensemble, int k,
                                            const DefenseRuleSet& rules) {
  std::vector<DeliveryOutcome> out(cases.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long i = 0; i < static_cast<long>(cases.size()); ++i) {
    out[i] = delivery(index, cases[i].query, cases[i].chunk, ensemble, k, rules);
  }
  return out;
}

}  // namespace backreveal::rag
