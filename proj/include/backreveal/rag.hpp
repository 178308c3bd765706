#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace backreveal::rag {

struct EmptyCorpus : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyEnsemble : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;
inline constexpr int kFirstStageN = 100;
inline constexpr int kTopK = 5;

// ---------------------------------------------------------------------------
// Corpus and first-stage retrieval
// ---------------------------------------------------------------------------

struct Document {
  std::string id;
  std::string text;
  std::string source;
};

class Corpus {
 public:
  void add(Document doc);  // rejects duplicate ids
  static Corpus from_jsonl(const std::string& path);
  static Corpus from_directory(const std::string& path);

  const std::vector<Document>& docs() const { return docs_; }
  size_t size() const { return docs_.size(); }

 private:
  std::vector<Document> docs_;
  std::map<std::string, size_t> by_id_;
};

struct ScoredDoc {
  size_t index;  // into corpus.docs()
  double score;
};

/// Inverted index with the BM25 parameters pinned above. The idf variant is
/// ln(1 + (N - df + 0.5) / (df + 0.5)); query terms contribute once each.
class Bm25Index {
 public:
  explicit Bm25Index(const Corpus& corpus);

  const Corpus& corpus() const { return *corpus_; }

  /// Top-n by BM25, descending; ties broken by ascending document id.
  /// Zero-scored documents are kept when the query shares no corpus terms.
  std::vector<ScoredDoc> retrieve(std::string_view query, int n = kFirstStageN) const;

  /// BM25 score of an arbitrary text against this corpus' statistics,
  /// used to score chunks that are not corpus members.
  double score_text(std::string_view query, std::string_view chunk_text) const;

  double idf(std::string_view term) const;
  double avg_doc_len() const { return avg_doc_len_; }

 private:
  double score_tokens(const std::vector<std::string>& query_terms,
                      const std::map<std::string, uint32_t>& tf, size_t doc_len) const;

  const Corpus* corpus_;
  std::vector<std::map<std::string, uint32_t>> doc_tf_;
  std::vector<size_t> doc_len_;
  std::map<std::string, uint32_t> doc_freq_;
  double avg_doc_len_ = 0.0;
};

// ---------------------------------------------------------------------------
// Rerankers and Eq.-style min-normalized ensemble scoring
// ---------------------------------------------------------------------------

class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual std::string id() const = 0;
  /// Deterministic raw relevance score; scale is reranker-specific.
  virtual double score(std::string_view query, std::string_view chunk) const = 0;
};

using Ensemble = std::vector<std::shared_ptr<const Reranker>>;

/// The stand-in ensemble: BM25, tf-idf cosine, unigram Jaccard, bigram Dice.
/// Interface-compatible with external (neural) scorers.
Ensemble lexical_ensemble(const Bm25Index& index);

/// Per reranker, min-max rescales raw scores over candidate_texts plus x into
/// [0,1] (all-equal scores rescale to 1.0 for every candidate), then returns
/// the minimum rescaled score of x across the ensemble.
double min_norm_score(const Ensemble& ensemble, std::string_view query, std::string_view x,
                      const std::vector<std::string>& candidate_texts);

// ---------------------------------------------------------------------------
// Retrieval-stage defense filters
// ---------------------------------------------------------------------------

enum class DefenseMode { none, guardrails_like, llmguard_like };

std::string_view to_string(DefenseMode m);
std::optional<DefenseMode> defense_mode_from_string(std::string_view s);

struct DefenseRule {
  std::string id;
  std::string pattern;       // ECMAScript regex, matched case-insensitively
  DefenseMode mode;          // minimal mode that enables the rule
  std::regex re;
};

/// Rule list plus the mode it runs in. llmguard_like activates every
/// guardrails_like rule and the llmguard-only additions.
struct DefenseRuleSet {
  std::vector<DefenseRule> rules;
  DefenseMode mode = DefenseMode::llmguard_like;

  static DefenseRuleSet load(const std::string& path, DefenseMode mode);
  std::vector<const DefenseRule*> active() const;
};

struct FilterResult {
  bool blocked = false;
  std::string rule_id;
};

/// Block iff any active rule fires anywhere in the chunk.
FilterResult defense_filter(std::string_view chunk, const DefenseRuleSet& rules);

inline constexpr double kDirectiveBlockThreshold = 0.5;

/// Stand-in for the directive/implicitness classifier: 1.0 when any active
/// rule fires, 0.0 otherwise.
double directive_score(std::string_view chunk, const DefenseRuleSet& rules);

// ---------------------------------------------------------------------------
// Delivery
// ---------------------------------------------------------------------------

struct DeliveryOutcome {
  std::optional<int> topk_rank;  // 1-based rank of the attacker chunk
  bool placed = false;           // rank <= k
  bool defense_passed = false;
  bool delivered = false;        // placed && defense_passed
  std::string blocked_by;
};

/// Reranks the first-stage candidates plus the attacker chunk with the
/// min-normalized ensemble score; placed iff the chunk lands in the top k.
/// Corpus documents win rank ties against the chunk.
DeliveryOutcome place_topk(const Bm25Index& index, std::string_view query,
                           std::string_view attacker_chunk, const Ensemble& ensemble,
                           int k = kTopK, int first_stage_n = kFirstStageN);

DeliveryOutcome delivery(const Bm25Index& index, std::string_view query,
                         std::string_view attacker_chunk, const Ensemble& ensemble, int k,
                         const DefenseRuleSet& rules, int first_stage_n = kFirstStageN);

struct DeliveryCase {
  std::string query;
  std::string chunk;
};

/// Batch delivery over independent cases; the parallel variant shares the
/// read-only index across OpenMP workers and yields the serial result
/// element-for-element.
std::vector<DeliveryOutcome> delivery_batch(const Bm25Index& index,
                                            const std::vector<DeliveryCase>& cases,
                                            const Ensemble& ensemble, int k,
                                            const DefenseRuleSet& rules);
std::vector<DeliveryOutcome> delivery_batch_serial(const Bm25Index& index,
                                                   const std::vector<DeliveryCase>& cases,
                                                   const Ensemble& ensemble, int k,
                                                   const DefenseRuleSet& rules);

}  // namespace backreveal::rag
