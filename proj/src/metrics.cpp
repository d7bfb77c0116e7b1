#include "attnplaus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "attnplaus/errors.hpp"

namespace attnplaus {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool is_constant(const std::vector<double>& xs) {
  for (double x : xs)
    if (x != xs.front()) return false;
  return true;
}

// Regularized incomplete beta I_x(a,b), continued fraction per Lentz.
double betacf(double a, double b, double x) {
  const double eps = 3e-14, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log(1.0 - x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p for a correlation coefficient under the t distribution with
// n-2 degrees of freedom.
double t_two_sided_p(double r, std::size_t n) {
  double df = static_cast<double>(n - 2);
  double denom = 1.0 - r * r;
  if (denom <= 1e-15) return 0.0;
  double t2 = r * r * df / denom;
  double p = ibeta(df / 2.0, 0.5, df / (df + t2));
  return std::min(1.0, std::max(0.0, p));
}

// Fraction of arrangements of y whose |r| reaches |r_obs|. Enumerates every
// permutation; duplicate values in y make some arrangements coincide, but
// each distinct arrangement then appears with equal multiplicity, so the
// fraction is still exact.
double permutation_p(const std::vector<double>& x, std::vector<double> y, double r_obs) {
  const std::size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double dx2 = 0.0, dy2 = 0.0;
  for (double v : x) dx2 += (v - mx) * (v - mx);
  for (double v : y) dy2 += (v - my) * (v - my);
  double denom = std::sqrt(dx2 * dy2);

  std::sort(y.begin(), y.end());
  double target = std::fabs(r_obs) - 1e-12;
  std::uint64_t hits = 0, total = 0;
  do {
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sxy += (x[i] - mx) * (y[i] - my);
    if (std::fabs(sxy / denom) >= target) ++hits;
    ++total;
  } while (std::next_permutation(y.begin(), y.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

void check_xy(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DimensionError("correlation of vectors with lengths " +
                         std::to_string(x.size()) + " and " + std::to_string(y.size()));
  if (x.size() < 3)
    throw UndefinedCorrelation("correlation needs at least 3 points, got " +
                               std::to_string(x.size()));
}

}  // namespace

std::vector<std::uint8_t> binarize(const std::vector<double>& scores, double epsilon) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw RangeError("threshold " + std::to_string(epsilon) + " outside [0,1]");
  std::vector<std::uint8_t> mask(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) mask[i] = scores[i] >= epsilon ? 1 : 0;
  return mask;
}

std::vector<double> make_default_grid() {
  std::vector<double> grid;
  grid.reserve(518);
  for (int i = 0; i < 512; ++i) grid.push_back(static_cast<double>(i) / 511.0);
  for (double checkpoint : {0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) grid.push_back(checkpoint);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

RocCurve roc_curve(const std::vector<double>& scores,
                   const std::vector<std::uint8_t>& truth,
                   const std::vector<double>& grid) {
  if (scores.size() != truth.size())
    throw DimensionError("roc_curve: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(truth.size()) + " truth tokens");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i)
    (truth[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty()) throw DegenerateTruth("truth has no positive tokens");
  if (neg.empty()) throw DegenerateTruth("truth has no negative tokens");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> eps = grid;
  for (double e : eps)
    if (e < 0.0 || e > 1.0)
      throw RangeError("grid threshold " + std::to_string(e) + " outside [0,1]");
  std::sort(eps.begin(), eps.end(), std::greater<double>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());

  RocCurve curve;
  curve.points.push_back({kInf, 0.0, 0.0});
  for (double e : eps) {
    auto count_ge = [e](const std::vector<double>& xs) {
      return static_cast<double>(xs.end() - std::lower_bound(xs.begin(), xs.end(), e));
    };
    curve.points.push_back(
        {e, count_ge(pos) / static_cast<double>(pos.size()),
         count_ge(neg) / static_cast<double>(neg.size())});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  std::vector<std::pair<double, double>> pts;  // (fpr, tpr)
  pts.reserve(curve.points.size() + 2);
  for (const auto& p : curve.points) pts.emplace_back(p.fpr, p.tpr);
  std::sort(pts.begin(), pts.end());
  if (pts.empty() || pts.front() != std::make_pair(0.0, 0.0))
    pts.insert(pts.begin(), {0.0, 0.0});
  if (pts.back() != std::make_pair(1.0, 1.0)) pts.emplace_back(1.0, 1.0);
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
  return area;
}

std::vector<double> average_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double auc_from_ranks(const std::vector<double>& ranks,
                      const std::vector<std::uint8_t>& truth) {
  if (ranks.size() != truth.size())
    throw DimensionError("auc_from_ranks: rank/truth length mismatch");
  double pos_rank_sum = 0.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i]) {
      pos_rank_sum += ranks[i];
      ++p;
    }
  std::size_t n = truth.size() - p;
  if (p == 0) throw DegenerateTruth("truth has no positive tokens");
  if (n == 0) throw DegenerateTruth("truth has no negative tokens");
  double u = pos_rank_sum - static_cast<double>(p) * (static_cast<double>(p) + 1.0) / 2.0;
  return u / (static_cast<double>(p) * static_cast<double>(n));
}

double auc_scores(const std::vector<double>& scores,
                  const std::vector<std::uint8_t>& truth) {
  if (scores.size() != truth.size())
    throw DimensionError("auc_scores: score/truth length mismatch");
  return auc_from_ranks(average_ranks(scores), truth);
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  check_xy(x, y);
  const std::size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("constant vector");
  double r = sxy / std::sqrt(sxx * syy);
  return std::min(1.0, std::max(-1.0, r));
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  check_xy(x, y);
  return pearson_r(average_ranks(x), average_ranks(y));
}

Correlation pearson(const std::vector<double>& x, const std::vector<double>& y) {
  Correlation c;
  c.coefficient = pearson_r(x, y);
  c.p_value = x.size() <= 10 ? permutation_p(x, y, c.coefficient)
                             : t_two_sided_p(c.coefficient, x.size());
  return c;
}

Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
  check_xy(x, y);
  std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  Correlation c;
  c.coefficient = pearson_r(rx, ry);
  c.p_value = x.size() <= 10 ? permutation_p(rx, ry, c.coefficient)
                             : t_two_sided_p(c.coefficient, x.size());
  return c;
}

double corr_t_p_value(double r, std::size_t n) {
  if (n < 3) throw UndefinedCorrelation("p-value needs at least 3 points");
  return t_two_sided_p(r, n);
}

std::vector<double> to_distribution(const std::vector<double>& scores) {
  if (scores.empty()) throw EmptyVector("to_distribution of empty vector");
  double sum = 0.0;
  for (double s : scores) {
    if (s < 0.0) throw RangeError("to_distribution input has negative entry");
    sum += s;
  }
  std::vector<double> dist(scores.size());
  if (sum == 0.0) {
    std::fill(dist.begin(), dist.end(), 1.0 / static_cast<double>(scores.size()));
  } else {
    for (std::size_t i = 0; i < scores.size(); ++i) dist[i] = scores[i] / sum;
  }
  return dist;
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size())
    throw DimensionError("js_divergence of vectors with lengths " +
                         std::to_string(p.size()) + " and " + std::to_string(q.size()));
  auto check_simplex = [](const std::vector<double>& d) {
    double sum = 0.0;
    for (double v : d) {
      if (v < -1e-12) throw RangeError("js_divergence input has negative entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
      throw RangeError("js_divergence input sums to " + std::to_string(sum));
  };
  check_simplex(p);
  check_simplex(q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
  }
  double ln2 = std::log(2.0);
  return std::min(ln2, std::max(0.0, acc));
}

PerInstanceStats per_instance_stats(const std::vector<AttentionMap>& candidate,
                                    const std::vector<AttentionMap>& reference) {
  if (candidate.size() != reference.size())
    throw DimensionError("per_instance_stats: map collections differ in size");
  PerInstanceStats stats;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const AttentionMap& c = candidate[i];
    const AttentionMap& r = reference[i];
    if (c.pair_id != r.pair_id)
      throw SchemaError("per_instance_stats: pair order mismatch at '" + c.pair_id +
                        "' vs '" + r.pair_id + "'");
    auto one_side = [&](const std::vector<double>& x, const std::vector<double>& y,
                        std::vector<InstanceStat>& out) {
      if (x.size() != y.size())
        throw DimensionError("per_instance_stats: length mismatch in pair " + c.pair_id);
      if (x.size() < 3 || is_constant(x) || is_constant(y)) {
        ++stats.skipped;
        return;
      }
      InstanceStat s;
      s.pair_id = c.pair_id;
      s.js = js_divergence(to_distribution(x), to_distribution(y));
      s.spearman = spearman_rho(x, y);
      s.pearson = pearson_r(x, y);
      out.push_back(std::move(s));
    };
    one_side(c.premise, r.premise, stats.premise);
    one_side(c.hypothesis, r.hypothesis, stats.hypothesis);
  }
  return stats;
}

std::vector<AttentionMap> masks_as_maps(const Dataset& d) {
  std::vector<AttentionMap> maps;
  maps.reserve(d.pairs.size());
  for (const auto& pair : d.pairs) {
    AttentionMap m;
    m.pair_id = pair.pair_id;
    m.premise.assign(pair.premise_highlight.begin(), pair.premise_highlight.end());
    m.hypothesis.assign(pair.hypothesis_highlight.begin(), pair.hypothesis_highlight.end());
    maps.push_back(std::move(m));
  }
  return maps;
}

std::vector<AttentionMap> align_maps(const Dataset& d,
                                     const std::vector<AttentionMap>& maps) {
  std::unordered_map<std::string, const AttentionMap*> by_id;
  for (const auto& m : maps)
    if (!by_id.emplace(m.pair_id, &m).second)
      throw SchemaError("duplicate attention map for pair '" + m.pair_id + "'");
  std::vector<AttentionMap> aligned;
  aligned.reserve(d.pairs.size());
  for (const auto& pair : d.pairs) {
    auto it = by_id.find(pair.pair_id);
    if (it == by_id.end())
      throw SchemaError("no attention map for pair '" + pair.pair_id + "'");
    const AttentionMap& m = *it->second;
    if (m.premise.size() != pair.premise.size() ||
        m.hypothesis.size() != pair.hypothesis.size())
      throw DimensionError("attention map for pair '" + pair.pair_id +
                           "' does not match the token counts");
    aligned.push_back(m);
  }
  return aligned;
}

std::vector<AttentionMap> rescale_by_sentence_max(std::vector<AttentionMap> maps) {
  auto rescale = [](std::vector<double>& xs) {
    double hi = 0.0;
    for (double x : xs) hi = std::max(hi, x);
    if (hi > 0.0)
      for (double& x : xs) x /= hi;
  };
  for (auto& m : maps) {
    rescale(m.premise);
    rescale(m.hypothesis);
  }
  return maps;
}

namespace {

struct Pool {
  std::vector<double> premise, hypothesis, all;
};

Pool pool_values(const std::vector<AttentionMap>& maps) {
  Pool pool;
  for (const auto& m : maps) {
    pool.premise.insert(pool.premise.end(), m.premise.begin(), m.premise.end());
    pool.hypothesis.insert(pool.hypothesis.end(), m.hypothesis.begin(), m.hypothesis.end());
  }
  pool.all = pool.premise;
  pool.all.insert(pool.all.end(), pool.hypothesis.begin(), pool.hypothesis.end());
  return pool;
}

}  // namespace

AucEpsilonTable auc_vs_epsilon(const std::vector<AttentionMap>& heuristic,
                               const std::vector<AttentionMap>& human,
                               const std::vector<AttentionMap>* model,
                               const std::vector<double>& grid) {
  if (heuristic.size() != human.size() || (model && model->size() != heuristic.size()))
    throw DimensionError("auc_vs_epsilon: map collections differ in size");
  for (std::size_t i = 0; i < heuristic.size(); ++i) {
    if (heuristic[i].pair_id != human[i].pair_id ||
        (model && (*model)[i].pair_id != heuristic[i].pair_id))
      throw SchemaError("auc_vs_epsilon: pair order mismatch at index " + std::to_string(i));
  }

  Pool heur = pool_values(rescale_by_sentence_max(heuristic));
  Pool hum = pool_values(human);
  std::vector<double> human_ranks = average_ranks(hum.all);
  std::vector<double> model_ranks;
  if (model) model_ranks = average_ranks(pool_values(*model).all);

  std::vector<double> eps = grid;
  std::sort(eps.begin(), eps.end());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());

  AucEpsilonTable table;
  std::size_t both_defined = 0, human_better = 0;
  const std::size_t n_tokens = heur.all.size();
  std::vector<std::uint8_t> truth(n_tokens);
  for (double e : eps) {
    AucAtEpsilon row;
    row.epsilon = e;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n_tokens; ++i) {
      truth[i] = heur.all[i] >= e ? 1 : 0;
      positives += truth[i];
    }
    if (positives == 0 || positives == n_tokens) {
      ++table.undefined_points;
      table.rows.push_back(row);
      continue;
    }
    row.auc_human = auc_from_ranks(human_ranks, truth);
    if (model) {
      row.auc_model = auc_from_ranks(model_ranks, truth);
      ++both_defined;
      if (*row.auc_human > *row.auc_model) ++human_better;
    }
    table.rows.push_back(row);
  }
  table.fraction_human_better =
      model && both_defined
          ? static_cast<double>(human_better) / static_cast<double>(both_defined)
          : kNan;
  return table;
}

EvalReport evaluate(const Dataset& d, const std::vector<AttentionMap>& candidate,
                    const std::vector<AttentionMap>* model,
                    const std::vector<double>& grid) {
  if (candidate.size() != d.pairs.size())
    throw DimensionError("evaluate: " + std::to_string(candidate.size()) +
                         " maps for " + std::to_string(d.pairs.size()) + " pairs");
  for (std::size_t i = 0; i < candidate.size(); ++i)
    if (candidate[i].pair_id != d.pairs[i].pair_id)
      throw SchemaError("evaluate: maps not in corpus order at '" +
                        candidate[i].pair_id + "'");

  std::vector<AttentionMap> human = masks_as_maps(d);

  EvalReport report;
  report.pair_count = d.pairs.size();

  Pool cand_scaled = pool_values(rescale_by_sentence_max(candidate));
  Pool hum = pool_values(human);
  std::vector<std::uint8_t> truth(hum.all.size());
  for (std::size_t i = 0; i < hum.all.size(); ++i) truth[i] = hum.all[i] > 0.0 ? 1 : 0;
  report.roc = roc_curve(cand_scaled.all, truth, grid);
  report.auc_value = auc(report.roc);

  report.auc_table = auc_vs_epsilon(candidate, human, model, grid);

  // correlations compare raw candidate values against the human mask
  // normalized to a per-sentence distribution
  Pool cand_raw = pool_values(candidate);
  Pool hum_norm;
  for (const auto& pair : d.pairs) {
    std::vector<double> p(pair.premise_highlight.begin(), pair.premise_highlight.end());
    std::vector<double> h(pair.hypothesis_highlight.begin(), pair.hypothesis_highlight.end());
    p = to_distribution(p);
    h = to_distribution(h);
    hum_norm.premise.insert(hum_norm.premise.end(), p.begin(), p.end());
    hum_norm.hypothesis.insert(hum_norm.hypothesis.end(), h.begin(), h.end());
  }
  hum_norm.all = hum_norm.premise;
  hum_norm.all.insert(hum_norm.all.end(), hum_norm.hypothesis.begin(),
                      hum_norm.hypothesis.end());

  report.global.pearson_premise = pearson(cand_raw.premise, hum_norm.premise);
  report.global.pearson_hypothesis = pearson(cand_raw.hypothesis, hum_norm.hypothesis);
  report.global.pearson_general = pearson(cand_raw.all, hum_norm.all);
  report.global.spearman_premise = spearman(cand_raw.premise, hum_norm.premise);
  report.global.spearman_hypothesis = spearman(cand_raw.hypothesis, hum_norm.hypothesis);
  report.global.spearman_general = spearman(cand_raw.all, hum_norm.all);

  report.per_instance = per_instance_stats(candidate, human);
  return report;
}

}  // namespace attnplaus
