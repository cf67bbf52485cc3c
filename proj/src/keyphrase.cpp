#include "graphit/keyphrase.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace graphit {

DiversityMethod diversity_from_string(std::string_view name) {
  if (name == "mmr") return DiversityMethod::Mmr;
  if (name == "max_sum") return DiversityMethod::MaxSum;
  throw UserError("unknown diversity method \"" + std::string(name) +
                  "\" (expected mmr|max_sum)");
}

std::string_view diversity_to_string(DiversityMethod method) {
  return method == DiversityMethod::Mmr ? "mmr" : "max_sum";
}

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
      "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his",
      "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself",
      "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
      "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be", "been",
      "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an", "the",
      "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
      "with", "about", "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
      "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
      "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
      "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can",
      "will", "just", "don", "don't", "should", "should've", "now", "d", "ll", "m", "o", "re",
      "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn", "didn't", "doesn",
      "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma",
      "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
      "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn",
      "wouldn't"};
  return words;
}

const std::set<std::string>& KpeConfig::effective_stopwords() const {
  if (!stopwords.empty() || !use_default_stopwords) return stopwords;
  return default_stopwords();
}

std::vector<Candidate> generate_candidates(std::string_view text, const KpeConfig& config) {
  const std::vector<std::string> tokens = tokenize_lower(text);
  if (tokens.empty()) throw UserError("cannot extract candidates from empty text");

  const std::set<std::string>& stop = config.effective_stopwords();
  std::vector<int> lengths = config.ngram_lengths;
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  for (const int n : lengths) {
    if (n < 1 || static_cast<size_t>(n) > tokens.size()) continue;
    for (size_t start = 0; start + static_cast<size_t>(n) <= tokens.size(); ++start) {
      const std::string& first = tokens[start];
      const std::string& last = tokens[start + static_cast<size_t>(n) - 1];
      if (stop.count(first) || stop.count(last)) continue;
      bool short_token = false;
      if (n > 1) {
        for (size_t i = 0; i < static_cast<size_t>(n); ++i) {
          if (tokens[start + i].size() < 2) {
            short_token = true;
            break;
          }
        }
      }
      if (short_token) continue;
      std::string phrase = tokens[start];
      for (size_t i = 1; i < static_cast<size_t>(n); ++i) {
        phrase.push_back(' ');
        phrase.append(tokens[start + i]);
      }
      if (phrase.size() < static_cast<size_t>(config.min_phrase_chars)) continue;
      if (seen.insert(phrase).second) out.push_back({std::move(phrase), n, 0.0});
    }
  }
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw Error("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error("cosine: zero vector");
  return a.dot(b) / (na * nb);
}

RankedCandidates rank_candidates(const EmbeddingVector& doc_vec,
                                 std::vector<Candidate> candidates,
                                 std::vector<EmbeddingVector> vectors) {
  if (candidates.size() != vectors.size()) {
    throw Error("rank_candidates: " + std::to_string(candidates.size()) + " candidates vs " +
                std::to_string(vectors.size()) + " vectors");
  }
  for (size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].doc_similarity = cosine(doc_vec, vectors[i]);
  }
  std::vector<size_t> order(candidates.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (candidates[a].doc_similarity != candidates[b].doc_similarity) {
      return candidates[a].doc_similarity > candidates[b].doc_similarity;
    }
    return candidates[a].phrase < candidates[b].phrase;
  });
  RankedCandidates ranked;
  ranked.candidates.reserve(order.size());
  ranked.vectors.reserve(order.size());
  for (size_t i : order) {
    ranked.candidates.push_back(std::move(candidates[i]));
    ranked.vectors.push_back(std::move(vectors[i]));
  }
  return ranked;
}

std::vector<std::string> mmr_select(const EmbeddingVector& doc_vec, const RankedCandidates& ranked,
                                    int zeta, double lambda_div) {
  (void)doc_vec;  // doc similarities already live on the ranked candidates
  const size_t count = ranked.candidates.size();
  if (count == 0) throw Error("mmr_select: empty candidate set");
  if (zeta < 1) throw Error("mmr_select: zeta must be >= 1");

  const size_t want = std::min<size_t>(static_cast<size_t>(zeta), count);
  std::vector<bool> selected(count, false);
  std::vector<size_t> picks;
  picks.push_back(0);  // ranked[0] is the tie-broken top candidate
  selected[0] = true;

  // max similarity to any already-selected candidate, maintained incrementally
  std::vector<double> max_sim(count, 0.0);
  for (size_t i = 0; i < count; ++i) {
    if (!selected[i]) max_sim[i] = cosine(ranked.vectors[i], ranked.vectors[0]);
  }

  while (picks.size() < want) {
    long best = -1;
    double best_score = 0.0;
    for (size_t i = 0; i < count; ++i) {
      if (selected[i]) continue;
      const double score = lambda_div * ranked.candidates[i].doc_similarity -
                           (1.0 - lambda_div) * max_sim[i];
      if (best < 0 || score > best_score ||
          (score == best_score &&
           (ranked.candidates[i].doc_similarity >
                ranked.candidates[static_cast<size_t>(best)].doc_similarity ||
            (ranked.candidates[i].doc_similarity ==
                 ranked.candidates[static_cast<size_t>(best)].doc_similarity &&
             ranked.candidates[i].phrase < ranked.candidates[static_cast<size_t>(best)].phrase)))) {
        best = static_cast<long>(i);
        best_score = score;
      }
    }
    const size_t pick = static_cast<size_t>(best);
    selected[pick] = true;
    picks.push_back(pick);
    for (size_t i = 0; i < count; ++i) {
      if (!selected[i]) {
        max_sim[i] = std::max(max_sim[i], cosine(ranked.vectors[i], ranked.vectors[pick]));
      }
    }
  }

  std::vector<std::string> phrases;
  phrases.reserve(picks.size());
  for (size_t i : picks) phrases.push_back(ranked.candidates[i].phrase);
  return phrases;
}

std::vector<std::string> max_sum_select(const EmbeddingVector& doc_vec,
                                        const RankedCandidates& ranked, int zeta, int pool) {
  (void)doc_vec;
  const size_t count = ranked.candidates.size();
  if (count == 0) throw Error("max_sum_select: empty candidate set");
  if (zeta < 1) throw Error("max_sum_select: zeta must be >= 1");
  if (pool < zeta) throw Error("max_sum_select: pool must be >= zeta");

  const size_t pool_n = std::min<size_t>(static_cast<size_t>(pool), count);
  const size_t want = std::min<size_t>(static_cast<size_t>(zeta), pool_n);
  if (want == pool_n) {
    std::vector<std::string> all;
    for (size_t i = 0; i < pool_n; ++i) all.push_back(ranked.candidates[i].phrase);
    return all;
  }

  Eigen::MatrixXd pairwise(pool_n, pool_n);
  for (size_t i = 0; i < pool_n; ++i) {
    pairwise(static_cast<long>(i), static_cast<long>(i)) = 1.0;
    for (size_t j = i + 1; j < pool_n; ++j) {
      const double sim = cosine(ranked.vectors[i], ranked.vectors[j]);
      pairwise(static_cast<long>(i), static_cast<long>(j)) = sim;
      pairwise(static_cast<long>(j), static_cast<long>(i)) = sim;
    }
  }

  std::vector<size_t> combo(want);
  for (size_t i = 0; i < want; ++i) combo[i] = i;

  std::vector<size_t> best_combo;
  double best_pair_sum = 0.0;
  double best_doc_sum = 0.0;

  const auto evaluate = [&](const std::vector<size_t>& subset) {
    double pair_sum = 0.0;
    double doc_sum = 0.0;
    for (size_t a = 0; a < subset.size(); ++a) {
      doc_sum += ranked.candidates[subset[a]].doc_similarity;
      for (size_t b = a + 1; b < subset.size(); ++b) {
        pair_sum += pairwise(static_cast<long>(subset[a]), static_cast<long>(subset[b]));
      }
    }
    bool better = false;
    if (best_combo.empty() || pair_sum < best_pair_sum) {
      better = true;
    } else if (pair_sum == best_pair_sum) {
      if (doc_sum > best_doc_sum) {
        better = true;
      } else if (doc_sum == best_doc_sum) {
        // lexicographic on the sorted phrase tuple; indices are ranked order,
        // so compare phrase sequences explicitly
        std::vector<std::string> lhs, rhs;
        for (size_t i : subset) lhs.push_back(ranked.candidates[i].phrase);
        for (size_t i : best_combo) rhs.push_back(ranked.candidates[i].phrase);
        std::sort(lhs.begin(), lhs.end());
        std::sort(rhs.begin(), rhs.end());
        better = lhs < rhs;
      }
    }
    if (better) {
      best_combo = subset;
      best_pair_sum = pair_sum;
      best_doc_sum = doc_sum;
    }
  };

  while (true) {
    evaluate(combo);
    // next combination in lexicographic index order
    long i = static_cast<long>(want) - 1;
    while (i >= 0 && combo[static_cast<size_t>(i)] ==
                         pool_n - want + static_cast<size_t>(i)) {
      --i;
    }
    if (i < 0) break;
    ++combo[static_cast<size_t>(i)];
    for (size_t j = static_cast<size_t>(i) + 1; j < want; ++j) combo[j] = combo[j - 1] + 1;
  }

  std::sort(best_combo.begin(), best_combo.end());
  std::vector<std::string> phrases;
  phrases.reserve(best_combo.size());
  for (size_t i : best_combo) phrases.push_back(ranked.candidates[i].phrase);
  return phrases;
}

std::vector<std::string> extract_keyphrases(std::string_view text, const KpeConfig& config,
                                            EmbeddingProvider& embedder,
                                            std::vector<std::string>* warnings) {
  std::vector<Candidate> candidates = generate_candidates(text, config);
  if (candidates.empty()) {
    const std::string message = "no keyphrase candidates after filtering";
    if (warnings) warnings->push_back(message);
    logging::warn(message);
    return {};
  }
  std::vector<std::string> batch;
  batch.reserve(candidates.size() + 1);
  batch.emplace_back(text);
  for (const Candidate& c : candidates) batch.push_back(c.phrase);
  std::vector<EmbeddingVector> vectors = embedder.embed(batch);
  const EmbeddingVector doc_vec = std::move(vectors.front());
  vectors.erase(vectors.begin());

  const RankedCandidates ranked =
      rank_candidates(doc_vec, std::move(candidates), std::move(vectors));
  if (config.method == DiversityMethod::Mmr) {
    return mmr_select(doc_vec, ranked, config.zeta, config.lambda_div);
  }
  return max_sum_select(doc_vec, ranked, config.zeta, config.effective_pool());
}

}  // namespace graphit
