#include "attnplaus/heuristic.hpp"

#include <algorithm>

#include "attnplaus/errors.hpp"

namespace attnplaus {
namespace {

double clamp01_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double c = cosine(u, v);
  return c > 0.0 ? c : 0.0;
}

// Normalize in place over the positions where keep[i] is true; everything
// else stays 0. A constant slice normalizes to all zeros.
void minmax_over(std::vector<double>& xs, const std::vector<char>& keep) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!keep[i]) continue;
    if (!any || xs[i] < lo) lo = any ? std::min(lo, xs[i]) : xs[i];
    hi = any ? std::max(hi, xs[i]) : xs[i];
    any = true;
  }
  if (!any || hi == lo) {
    std::fill(xs.begin(), xs.end(), 0.0);
    return;
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = keep[i] ? (xs[i] - lo) / (hi - lo) : 0.0;
}

}  // namespace

double similarity01(const Token& w, const Token& v, const EmbeddingTable& t) {
  if (w.is_stop || v.is_stop) return 0.0;
  return clamp01_cosine(t.lookup(w.normalized), t.lookup(v.normalized));
}

std::vector<double> minmax_normalize(const std::vector<double>& xs) {
  if (xs.empty()) throw EmptyVector("minmax_normalize of empty vector");
  auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(xs.size(), 0.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - lo) / (hi - lo);
  return out;
}

HeuristicMap heuristic_map(const SentencePair& pair, const EmbeddingTable& t) {
  const std::size_t n = pair.premise.size();
  const std::size_t m = pair.hypothesis.size();

  std::vector<std::vector<double>> prem_vecs(n), hyp_vecs(m);
  std::vector<char> prem_keep(n), hyp_keep(m);
  for (std::size_t i = 0; i < n; ++i) {
    prem_keep[i] = !pair.premise[i].is_stop;
    if (prem_keep[i]) prem_vecs[i] = t.lookup(pair.premise[i].normalized);
  }
  for (std::size_t j = 0; j < m; ++j) {
    hyp_keep[j] = !pair.hypothesis[j].is_stop;
    if (hyp_keep[j]) hyp_vecs[j] = t.lookup(pair.hypothesis[j].normalized);
  }

  HeuristicMap map;
  map.similarity_matrix.assign(n, std::vector<double>(m, 0.0));
  map.premise_scores.assign(n, 0.0);
  map.hypothesis_scores.assign(m, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    if (!prem_keep[i]) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (!hyp_keep[j]) continue;
      double s = clamp01_cosine(prem_vecs[i], hyp_vecs[j]);
      map.similarity_matrix[i][j] = s;
      map.premise_scores[i] += s;
      map.hypothesis_scores[j] += s;
    }
  }

  map.premise_all_stop =
      std::none_of(prem_keep.begin(), prem_keep.end(), [](char k) { return k; });
  map.hypothesis_all_stop =
      std::none_of(hyp_keep.begin(), hyp_keep.end(), [](char k) { return k; });

  minmax_over(map.premise_scores, prem_keep);
  minmax_over(map.hypothesis_scores, hyp_keep);
  return map;
}

}  // namespace attnplaus
