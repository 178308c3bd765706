#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "backreveal/rng.hpp"

namespace backreveal::trigger {

struct EmptyCandidates : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientCandidates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Smoothing added to both per-million frequencies in the specificity ratio,
/// so terms absent from the general corpus rank high instead of dividing by
/// zero.
inline constexpr double kEpsilonPerMillion = 0.01;
inline constexpr double kSpecificityThreshold = 10.0;
inline constexpr double kPmiThreshold = 2.0;
inline constexpr int kMaxPatternLength = 5;

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

/// Term and pair statistics over a domain corpus plus term frequencies over a
/// general reference corpus. Co-occurrence is counted at document level.
class CorpusStats {
 public:
  void add_domain_doc(std::string_view text);
  void add_general_doc(std::string_view text);

  double domain_per_million(std::string_view term) const;
  double general_per_million(std::string_view term) const;

  /// Document-level probabilities used by PMI.
  double p_term(std::string_view term) const;
  double p_pair(std::string_view a, std::string_view b) const;

  uint64_t domain_doc_count(std::string_view term) const;
  uint64_t pair_doc_count(std::string_view a, std::string_view b) const;

  size_t domain_docs() const { return domain_docs_; }
  bool empty() const { return domain_docs_ == 0; }
  std::vector<std::string> domain_terms() const;

 private:
  size_t domain_docs_ = 0;
  uint64_t domain_tokens_ = 0;
  uint64_t general_tokens_ = 0;
  std::map<std::string, uint64_t> domain_term_count_;
  std::map<std::string, uint64_t> domain_term_docs_;
  std::map<std::pair<std::string, std::string>, uint64_t> pair_docs_;
  std::map<std::string, uint64_t> general_term_count_;
};

/// Ingests either a directory of plain-text documents or a single
/// one-document-per-line file into the chosen corpus side.
void ingest_corpus(CorpusStats& stats, const std::string& path, bool domain_side);

// ---------------------------------------------------------------------------
// Trigger patterns
// ---------------------------------------------------------------------------

/// Conjunction of 1-5 lowercase keywords; a keyword may itself be a
/// multi-word phrase matched as adjacent tokens.
struct TriggerPattern {
  std::vector<std::string> keywords;
  std::string domain;

  static TriggerPattern make(std::vector<std::string> keywords, std::string domain = {});
  size_t length() const { return keywords.size(); }
  bool operator==(const TriggerPattern&) const = default;
};

struct TriggerSet {
  std::string domain;
  std::vector<TriggerPattern> patterns;

  void add(TriggerPattern p);  // rejects duplicate keyword sets
  std::string to_json_text() const;
  static TriggerSet from_json_text(std::string_view text);
};

// ---------------------------------------------------------------------------
// Candidate selection
// ---------------------------------------------------------------------------

double domain_specificity(std::string_view term, const CorpusStats& stats);

/// log2 PMI over document-level probabilities; -inf when the pair never
/// co-occurs (such pairs are never selected).
double pmi(std::string_view a, std::string_view b, const CorpusStats& stats);

struct CandidateSet {
  std::vector<std::pair<std::string, double>> terms;                // by specificity desc
  std::vector<std::tuple<std::string, std::string, double>> pairs;  // by PMI desc
};

CandidateSet select_candidates(const CorpusStats& stats,
                               double spec_threshold = kSpecificityThreshold,
                               double pmi_threshold = kPmiThreshold);

/// Builds per_length patterns for each length 1..5 by sampling cliques of
/// high-PMI pairs and taking their prefixes, so every pattern's internal
/// pairs clear the threshold and longer patterns refine shorter ones.
TriggerSet build_patterns(const CandidateSet& candidates, int per_length, Rng& rng,
                          std::string domain = {});

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

/// True iff every keyword occurs as a whole token (phrases: adjacent tokens)
/// of the case-folded text, in any positions.
bool match(const TriggerPattern& pattern, std::string_view text);

/// First pattern (longest first, then set order) whose keywords all appear
/// somewhere in the concatenated context; phrase keywords never span a
/// message boundary.
std::optional<TriggerPattern> match_context(const TriggerSet& set,
                                            std::span<const std::string> context);

}  // namespace backreveal::trigger
