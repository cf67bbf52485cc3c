#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "graphit/providers.hpp"
#include "graphit/util.hpp"

namespace graphit {

struct Candidate {
  std::string phrase;  // lowercase, single-space separated
  int n = 1;
  double doc_similarity = 0.0;  // filled by rank_candidates
};

enum class DiversityMethod { Mmr, MaxSum };

DiversityMethod diversity_from_string(std::string_view name);
std::string_view diversity_to_string(DiversityMethod method);

struct KpeConfig {
  std::vector<int> ngram_lengths = {1, 2, 3};
  int zeta = 5;
  DiversityMethod method = DiversityMethod::Mmr;
  double lambda_div = 0.5;
  int max_sum_pool = 0;  // 0 -> 2 * zeta
  std::set<std::string> stopwords;  // empty at construction -> default list
  bool use_default_stopwords = true;
  int min_phrase_chars = 3;

  const std::set<std::string>& effective_stopwords() const;
  int effective_pool() const { return max_sum_pool > 0 ? max_sum_pool : 2 * zeta; }
};

// The pinned built-in English stopword list (179 words).
const std::set<std::string>& default_stopwords();

// All n-grams over lowercased alphanumeric token runs that
//   (a) have no stopword at the first or last position,
//   (b) contain no token shorter than 2 chars unless it is the whole phrase,
//   (c) have total phrase length >= min_phrase_chars,
// deduplicated preserving first occurrence. n values are enumerated
// ascending, positions left to right.
std::vector<Candidate> generate_candidates(std::string_view text, const KpeConfig& config);

// dot(a,b)/(|a||b|). Errors on dimension mismatch or a zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Candidates with their vectors, kept aligned through ranking.
struct RankedCandidates {
  std::vector<Candidate> candidates;
  std::vector<EmbeddingVector> vectors;
};

// Fills doc_similarity and sorts descending by it; ties break by ascending
// phrase.
RankedCandidates rank_candidates(const EmbeddingVector& doc_vec, std::vector<Candidate> candidates,
                                 std::vector<EmbeddingVector> vectors);

// Greedy maximal-marginal-relevance selection. First pick is the top-ranked
// candidate; each next pick maximizes
//   lambda * sim(c, doc) - (1 - lambda) * max_{s in selected} sim(c, s).
// Ties break by higher doc_similarity, then ascending phrase. Returns
// min(zeta, |ranked|) phrases in selection order.
std::vector<std::string> mmr_select(const EmbeddingVector& doc_vec, const RankedCandidates& ranked,
                                    int zeta, double lambda_div);

// Restricts to the top-`pool` candidates by doc_similarity, then returns the
// size-zeta subset minimizing the sum of pairwise candidate cosines. Ties
// break by higher total doc_similarity, then lexicographically smaller sorted
// phrase tuple. Result keeps ranked order.
std::vector<std::string> max_sum_select(const EmbeddingVector& doc_vec,
                                        const RankedCandidates& ranked, int zeta, int pool);

// generate -> embed(doc + candidates) -> rank -> diversity-select.
// Zero candidates after filtering yields an empty result plus a warning.
std::vector<std::string> extract_keyphrases(std::string_view text, const KpeConfig& config,
                                            EmbeddingProvider& embedder,
                                            std::vector<std::string>* warnings = nullptr);

}  // namespace graphit
