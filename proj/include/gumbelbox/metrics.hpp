#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gumbelbox/boxes.hpp"
#include "gumbelbox/graph.hpp"

// Ranking (mean reciprocal rank with filtered candidate pools), thresholded
// F1, and probability-regression metrics (Bernoulli KL, Pearson, Spearman).

namespace gumbelbox {

// ---- Rank arithmetic ----

// Rank of the query among {competitors} + {query} with tied scores receiving
// the mean of their tied positions; returns 1 / rank.
inline double reciprocal_rank(std::span<const double> competitor_scores, double query_score) {
  std::size_t greater = 0, equal = 0;
  for (double s : competitor_scores) {
    if (s > query_score)
      ++greater;
    else if (s == query_score)
      ++equal;
  }
  const double rank = 1.0 + static_cast<double>(greater) + static_cast<double>(equal) / 2.0;
  return 1.0 / rank;
}

enum class RankDirection { Parent, Child };

struct RankDetail {
  int parent, child;
  RankDirection direction;
  double rank;  // mean-tie rank of the true candidate (may be fractional)
  double score; // model score of the true candidate
};

struct MetricsReport {
  std::map<std::string, double> values;
  std::vector<RankDetail> details;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
};

// Mean reciprocal rank over both query directions of each eval edge (p, c):
// rank P(p|c) against P(p'|c) over candidate parents p', and P(p|c) against
// P(p|c') over candidate children c'. Filtered pools drop candidates that
// form a different true closure edge with the fixed endpoint; the self pair
// (x, x) is never a candidate. Unfiltered pools keep true competitors.
inline double mrr(const Model& model, const EdgeGraph& graph,
                  const std::vector<IndexEdge>& eval_edges, bool filtered = true,
                  std::vector<RankDetail>* details = nullptr) {
  if (eval_edges.empty()) throw std::invalid_argument("mrr: empty eval set");
  const int n = graph.n_nodes();
  if (static_cast<std::size_t>(n) != model.n_entities())
    throw std::invalid_argument("mrr: graph and model disagree on entity count");
  for (const auto& [p, c] : eval_edges)
    if (!graph.in_closure(p, c))
      throw std::invalid_argument("mrr: eval edge outside the transitive closure");

  Scorer scorer(model);
  std::vector<double> scores(static_cast<std::size_t>(n));
  double total = 0.0;
  std::size_t count = 0;
  auto rank_one = [&](int p, int c, RankDirection dir) {
    const double query = scores[static_cast<std::size_t>(dir == RankDirection::Parent ? p : c)];
    std::size_t greater = 0, equal = 0;
    for (int cand = 0; cand < n; ++cand) {
      const bool is_query = dir == RankDirection::Parent ? cand == p : cand == c;
      if (is_query) continue;
      const int fixed = dir == RankDirection::Parent ? c : p;
      if (cand == fixed) continue; // self pair is not a tuple
      const bool positive = dir == RankDirection::Parent ? graph.in_closure(cand, c)
                                                         : graph.in_closure(p, cand);
      if (filtered && positive) continue;
      const double s = scores[static_cast<std::size_t>(cand)];
      if (s > query)
        ++greater;
      else if (s == query)
        ++equal;
    }
    const double rank = 1.0 + static_cast<double>(greater) + static_cast<double>(equal) / 2.0;
    total += 1.0 / rank;
    ++count;
    if (details) details->push_back({p, c, dir, rank, query});
  };

  for (const auto& [p, c] : eval_edges) {
    scorer.conditionals_given(c, scores); // scores[x] = P(x | c)
    rank_one(p, c, RankDirection::Parent);
    scorer.conditionals_of(p, scores); // scores[x] = P(p | x)
    rank_one(p, c, RankDirection::Child);
  }
  return total / static_cast<double>(count);
}

inline void save_rank_details(const EdgeGraph& graph, const std::vector<RankDetail>& details,
                              const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.precision(17);
  out << "query_parent,query_child,direction,rank,score\n";
  for (const RankDetail& d : details)
    out << graph.labels()[static_cast<std::size_t>(d.parent)] << ','
        << graph.labels()[static_cast<std::size_t>(d.child)] << ','
        << (d.direction == RankDirection::Parent ? "parent" : "child") << ',' << d.rank << ','
        << d.score << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---- Thresholded F1 ----

struct F1Result {
  double f1;
  double threshold;
};

// F1 of the classifier "positive iff score >= threshold".
inline double f1_score(std::span<const double> pos_scores, std::span<const double> neg_scores,
                       double threshold) {
  if (pos_scores.empty()) throw std::invalid_argument("f1_score: no positive examples");
  std::size_t tp = 0, fp = 0;
  for (double s : pos_scores)
    if (s >= threshold) ++tp;
  for (double s : neg_scores)
    if (s >= threshold) ++fp;
  const std::size_t fn = pos_scores.size() - tp;
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

// Scans every unique score as a candidate threshold and returns the best dev
// F1; among equally good thresholds the smallest is returned.
inline F1Result best_f1_threshold(std::span<const double> dev_pos,
                                  std::span<const double> dev_neg) {
  if (dev_pos.empty()) throw std::invalid_argument("best_f1_threshold: no positive examples");
  std::vector<double> candidates(dev_pos.begin(), dev_pos.end());
  candidates.insert(candidates.end(), dev_neg.begin(), dev_neg.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  F1Result best{-1.0, 0.0};
  for (double t : candidates) {
    const double f1 = f1_score(dev_pos, dev_neg, t);
    if (f1 > best.f1) best = {f1, t};
  }
  return best;
}

enum class ThresholdSource { DevOptimal, Fixed };

// Scores each (a, b) edge as P(a|b), picks the threshold on the dev sets
// (or uses the fixed one), and reports test-set F1 at that threshold.
inline F1Result f1_at_threshold(const Model& model, const std::vector<IndexEdge>& dev_pos,
                                const std::vector<IndexEdge>& dev_neg,
                                const std::vector<IndexEdge>& test_pos,
                                const std::vector<IndexEdge>& test_neg, ThresholdSource source,
                                double fixed_threshold = 0.5) {
  Scorer scorer(model);
  auto score_all = [&](const std::vector<IndexEdge>& edges) {
    std::vector<double> s;
    s.reserve(edges.size());
    for (const auto& [a, b] : edges) s.push_back(scorer.conditional(a, b));
    return s;
  };
  double threshold = fixed_threshold;
  if (source == ThresholdSource::DevOptimal)
    threshold = best_f1_threshold(score_all(dev_pos), score_all(dev_neg)).threshold;
  const std::vector<double> tp = score_all(test_pos);
  const std::vector<double> tn = score_all(test_neg);
  return {f1_score(tp, tn, threshold), threshold};
}

// ---- Probability regression ----

struct RegressionMetrics {
  double kl;
  double pearson;
  double spearman;
};

namespace detail {

inline double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("pearson_correlation: zero-variance input");
  return sxy / std::sqrt(sxx * syy);
}

// Ranks 1..n with tied values receiving the mean of their tied positions.
inline std::vector<double> mean_tie_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

// KL(Bernoulli(t) || Bernoulli(q)) with the 0 log 0 = 0 convention.
inline double bernoulli_kl(double t, double q) {
  double kl = 0.0;
  if (t > 0.0) kl += t * std::log(t / q);
  if (t < 1.0) kl += (1.0 - t) * std::log((1.0 - t) / (1.0 - q));
  return kl;
}

} // namespace detail

inline RegressionMetrics regression_metrics(std::span<const double> predictions,
                                            std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw std::invalid_argument("regression_metrics: length mismatch");
  if (predictions.size() < 2)
    throw std::invalid_argument("regression_metrics: need at least 2 points");
  double kl = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double q = predictions[i];
    const double t = targets[i];
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("regression_metrics: predictions must lie in (0, 1)");
    if (!std::isfinite(t) || t < 0.0 || t > 1.0)
      throw std::invalid_argument("regression_metrics: targets must lie in [0, 1]");
    kl += detail::bernoulli_kl(t, q);
  }
  kl /= static_cast<double>(predictions.size());
  const double pearson = detail::pearson_correlation(predictions, targets);
  const std::vector<double> rp = detail::mean_tie_ranks(predictions);
  const std::vector<double> rt = detail::mean_tie_ranks(targets);
  const double spearman = detail::pearson_correlation(rp, rt);
  return {kl, pearson, spearman};
}

} // namespace gumbelbox
