#include "backreveal/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"

#include "backreveal/text.hpp"

namespace backreveal::trigger {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void CorpusStats::add_domain_doc(std::string_view doc) {
  auto tokens = text::tokenize(doc);
  domain_tokens_ += tokens.size();
  ++domain_docs_;
  std::set<std::string> uniq;
  for (auto& t : tokens) {
    ++domain_term_count_[t];
    uniq.insert(std::move(t));
  }
  for (const auto& t : uniq) ++domain_term_docs_[t];
  for (auto a = uniq.begin(); a != uniq.end(); ++a) {
    for (auto b = std::next(a); b != uniq.end(); ++b) {
      ++pair_docs_[{*a, *b}];
    }
  }
}

void CorpusStats::add_general_doc(std::string_view doc) {
  // the general side feeds nothing but per-million frequencies
  auto tokens = text::tokenize(doc);
  general_tokens_ += tokens.size();
  for (auto& t : tokens) ++general_term_count_[t];
}

double CorpusStats::domain_per_million(std::string_view term) const {
  if (domain_tokens_ == 0) return 0.0;
  auto it = domain_term_count_.find(std::string(term));
  uint64_t c = it == domain_term_count_.end() ? 0 : it->second;
  return static_cast<double>(c) / static_cast<double>(domain_tokens_) * 1e6;
}

double CorpusStats::general_per_million(std::string_view term) const {
  if (general_tokens_ == 0) return 0.0;
  auto it = general_term_count_.find(std::string(term));
  uint64_t c = it == general_term_count_.end() ? 0 : it->second;
  return static_cast<double>(c) / static_cast<double>(general_tokens_) * 1e6;
}

double CorpusStats::p_term(std::string_view term) const {
  if (domain_docs_ == 0) return 0.0;
  return static_cast<double>(domain_doc_count(term)) / static_cast<double>(domain_docs_);
}

double CorpusStats::p_pair(std::string_view a, std::string_view b) const {
  if (domain_docs_ == 0) return 0.0;
  return static_cast<double>(pair_doc_count(a, b)) / static_cast<double>(domain_docs_);
}

uint64_t CorpusStats::domain_doc_count(std::string_view term) const {
  auto it = domain_term_docs_.find(std::string(term));
  return it == domain_term_docs_.end() ? 0 : it->second;
}

uint64_t CorpusStats::pair_doc_count(std::string_view a, std::string_view b) const {
  std::string x(a), y(b);
  if (x > y) std::swap(x, y);
  auto it = pair_docs_.find({x, y});
  return it == pair_docs_.end() ? 0 : it->second;
}

std::vector<std::string> CorpusStats::domain_terms() const {
  std::vector<std::string> out;
  out.reserve(domain_term_count_.size());
  for (const auto& [t, _] : domain_term_count_) out.push_back(t);
  return out;
}

void ingest_corpus(CorpusStats& stats, const std::string& path, bool domain_side) {
  auto feed = [&](std::string_view doc) {
    if (doc.empty()) return;
    if (domain_side) {
      stats.add_domain_doc(doc);
    } else {
      stats.add_general_doc(doc);
    }
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      feed(all);
    }
  } else {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::string line;
    while (std::getline(in, line)) feed(line);
  }
}

TriggerPattern TriggerPattern::make(std::vector<std::string> keywords, std::string domain) {
  if (keywords.empty() || keywords.size() > kMaxPatternLength) {
    throw std::invalid_argument("trigger pattern must hold 1-5 keywords");
  }
  TriggerPattern p;
  for (auto& k : keywords) {
    std::string folded = text::join(text::tokenize(k), " ");
    if (folded.empty()) throw std::invalid_argument("empty trigger keyword");
    p.keywords.push_back(std::move(folded));
  }
  p.domain = std::move(domain);
  return p;
}

namespace {
std::set<std::string> keyword_set(const TriggerPattern& p) {
  return {p.keywords.begin(), p.keywords.end()};
}
}  // namespace

void TriggerSet::add(TriggerPattern p) {
  auto ks = keyword_set(p);
  for (const auto& existing : patterns) {
    if (keyword_set(existing) == ks) {
      throw std::invalid_argument("duplicate keyword set in trigger set");
    }
  }
  patterns.push_back(std::move(p));
}

std::string TriggerSet::to_json_text() const {
  ordered_json j = ordered_json::object();
  j["domain"] = domain;
  ordered_json arr = ordered_json::array();
  for (const auto& p : patterns) {
    ordered_json pj = ordered_json::object();
    pj["keywords"] = p.keywords;
    pj["length"] = p.keywords.size();
    arr.push_back(std::move(pj));
  }
  j["patterns"] = std::move(arr);
  return j.dump(2);
}

TriggerSet TriggerSet::from_json_text(std::string_view s) {
  auto j = ordered_json::parse(s);
  TriggerSet set;
  set.domain = j.value("domain", std::string{});
  for (const auto& pj : j.at("patterns")) {
    set.add(TriggerPattern::make(pj.at("keywords").get<std::vector<std::string>>(), set.domain));
  }
  return set;
}

double domain_specificity(std::string_view term, const CorpusStats& stats) {
  std::string folded = text::join(text::tokenize(term), " ");
  return (stats.domain_per_million(folded) + kEpsilonPerMillion) /
         (stats.general_per_million(folded) + kEpsilonPerMillion);
}

double pmi(std::string_view a, std::string_view b, const CorpusStats& stats) {
  double pab = stats.p_pair(a, b);
  if (pab <= 0.0) return -std::numeric_limits<double>::infinity();
  double pa = stats.p_term(a);
  double pb = stats.p_term(b);
  return std::log2(pab / (pa * pb));
}

CandidateSet select_candidates(const CorpusStats& stats, double spec_threshold,
                               double pmi_threshold) {
  if (stats.empty()) throw EmptyCandidates("corpus statistics are empty");
  CandidateSet out;
  for (const auto& term : stats.domain_terms()) {
    double spec = domain_specificity(term, stats);
    if (spec > spec_threshold) out.terms.emplace_back(term, spec);
  }
  if (out.terms.empty()) throw EmptyCandidates("no term clears the specificity threshold");
  std::sort(out.terms.begin(), out.terms.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  for (size_t i = 0; i < out.terms.size(); ++i) {
    for (size_t j = i + 1; j < out.terms.size(); ++j) {
      double score = pmi(out.terms[i].first, out.terms[j].first, stats);
      if (score > pmi_threshold) {
        const auto& a = out.terms[i].first;
        const auto& b = out.terms[j].first;
        out.pairs.emplace_back(std::min(a, b), std::max(a, b), score);
      }
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& x, const auto& y) {
    if (std::get<2>(x) != std::get<2>(y)) return std::get<2>(x) > std::get<2>(y);
    return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
  });
  return out;
}

TriggerSet build_patterns(const CandidateSet& candidates, int per_length, Rng& rng,
                          std::string domain) {
  TriggerSet set;
  set.domain = domain;
  if (per_length <= 0) return set;
  if (candidates.terms.empty()) throw InsufficientCandidates("no candidate terms");

  std::vector<std::string> terms;
  for (const auto& [t, _] : candidates.terms) terms.push_back(t);
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& [a, b, _] : candidates.pairs) edges.insert({a, b});
  auto connected = [&](const std::string& a, const std::string& b) {
    return edges.count({std::min(a, b), std::max(a, b)}) > 0;
  };

  // Sample maximal cliques up to length 5; shorter patterns are clique
  // prefixes, which keeps every internal pair above the PMI threshold and
  // makes false positives shrink monotonically with length.
  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> chains;
  const int wanted_chains = per_length;
  int attempts = 0;
  const int max_attempts = 2000 * wanted_chains;
  while (static_cast<int>(chains.size()) < wanted_chains && attempts < max_attempts) {
    ++attempts;
    std::vector<std::string> clique{rng.pick(terms)};
    std::vector<std::string> pool = terms;
    rng.shuffle(pool);
    for (const auto& cand : pool) {
      if (clique.size() >= static_cast<size_t>(kMaxPatternLength)) break;
      if (std::find(clique.begin(), clique.end(), cand) != clique.end()) continue;
      bool ok = true;
      for (const auto& member : clique) {
        if (!connected(member, cand)) {
          ok = false;
          break;
        }
      }
      if (ok) clique.push_back(cand);
    }
    if (clique.size() < static_cast<size_t>(kMaxPatternLength)) continue;
    auto key = clique;
    std::sort(key.begin(), key.end());
    if (seen.insert(key).second) chains.push_back(std::move(clique));
  }
  if (static_cast<int>(chains.size()) < wanted_chains) {
    throw InsufficientCandidates("cannot sample " + std::to_string(wanted_chains) +
                                 " compatible keyword chains from the candidate pairs");
  }

  std::set<std::set<std::string>> used;
  for (int len = 1; len <= kMaxPatternLength; ++len) {
    int made = 0;
    for (const auto& chain : chains) {
      if (made >= per_length) break;
      std::vector<std::string> prefix(chain.begin(), chain.begin() + len);
      std::set<std::string> key(prefix.begin(), prefix.end());
      if (!used.insert(key).second) continue;
      set.patterns.push_back(TriggerPattern::make(prefix, domain));
      ++made;
    }
    if (made < per_length && len == 1) {
      // distinct length-1 prefixes can collide across chains; fall back to
      // unused candidate terms
      for (const auto& t : terms) {
        if (made >= per_length) break;
        std::set<std::string> key{t};
        if (!used.insert(key).second) continue;
        set.patterns.push_back(TriggerPattern::make({t}, domain));
        ++made;
      }
    }
    if (made < per_length) {
      throw InsufficientCandidates("cannot form " + std::to_string(per_length) +
                                   " distinct patterns of length " + std::to_string(len));
    }
  }
  return set;
}

bool match(const TriggerPattern& pattern, std::string_view t) {
  auto tokens = text::tokenize(t);
  for (const auto& kw : pattern.keywords) {
    if (!text::contains_token_run(tokens, text::tokenize(kw))) return false;
  }
  return true;
}

std::optional<TriggerPattern> match_context(const TriggerSet& set,
                                            std::span<const std::string> context) {
  auto tokens = text::tokenize_messages(context);
  std::vector<const TriggerPattern*> order;
  for (const auto& p : set.patterns) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const TriggerPattern* a, const TriggerPattern* b) {
                     return a->length() > b->length();
                   });
  for (const TriggerPattern* p : order) {
    bool all = true;
    for (const auto& kw : p->keywords) {
      if (!text::contains_token_run(tokens, text::tokenize(kw))) {
        all = false;
        break;
      }
    }
    if (all) return *p;
  }
  return std::nullopt;
}

}  // namespace backreveal::trigger
