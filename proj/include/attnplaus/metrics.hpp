#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attnplaus/corpus.hpp"

namespace attnplaus {

struct AttentionMap {
  std::string pair_id;
  std::vector<double> premise;
  std::vector<double> hypothesis;
};

struct RocPoint {
  double epsilon;
  double tpr;
  double fpr;
};

// Points sorted by epsilon descending. The first point uses epsilon = +inf
// so the curve always reaches (fpr,tpr) = (0,0); with a grid that contains 0
// the last point is (1,1).
struct RocCurve {
  std::vector<RocPoint> points;
};

// score >= epsilon -> 1. Boundary inclusive, so epsilon 0 selects everything.
std::vector<std::uint8_t> binarize(const std::vector<double>& scores, double epsilon);

// 512 evenly spaced thresholds in [0,1] plus the reporting checkpoints
// 0.4..0.9, sorted ascending.
std::vector<double> make_default_grid();

// Micro pooling: scores/truth are parallel arrays over all tokens of all
// pairs. Throws DegenerateTruth when truth lacks a class.
RocCurve roc_curve(const std::vector<double>& scores,
                   const std::vector<std::uint8_t>& truth,
                   const std::vector<double>& grid);

// Trapezoid over the curve sorted by fpr, with (0,0)/(1,1) corner anchors.
double auc(const RocCurve& curve);

// Tie-adjusted rank statistic: P(random positive outscores random negative),
// ties counted half. Matches auc(roc_curve(...)) when the grid covers every
// distinct score.
double auc_scores(const std::vector<double>& scores,
                  const std::vector<std::uint8_t>& truth);

// 1-based fractional ranks, ties averaged.
std::vector<double> average_ranks(const std::vector<double>& xs);

// auc_scores with ranks precomputed by the caller (they only depend on the
// scores, so threshold sweeps can reuse them).
double auc_from_ranks(const std::vector<double>& ranks,
                      const std::vector<std::uint8_t>& truth);

struct Correlation {
  double coefficient = 0.0;
  double p_value = 1.0;
};

// Coefficient-only variants; the full versions add a two-sided p-value
// (Student-t approximation for n > 10, exhaustive permutation for n <= 10).
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);
Correlation pearson(const std::vector<double>& x, const std::vector<double>& y);
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y);

// Two-sided p for a coefficient r over n samples via Student-t with n-2
// degrees of freedom. The small-n permutation route should land near this.
double corr_t_p_value(double r, std::size_t n);

// scores / sum; all-zero input falls back to uniform.
std::vector<double> to_distribution(const std::vector<double>& scores);

// 0.5*KL(p||m) + 0.5*KL(q||m) with m the midpoint, natural log, 0*ln0 = 0.
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

struct InstanceStat {
  std::string pair_id;
  double js = 0.0;
  double spearman = 0.0;
  double pearson = 0.0;
};

struct PerInstanceStats {
  std::vector<InstanceStat> premise;
  std::vector<InstanceStat> hypothesis;
  std::size_t skipped = 0;  // sentences under 3 tokens or with a constant side
};

// candidate and reference must be aligned index-by-index.
PerInstanceStats per_instance_stats(const std::vector<AttentionMap>& candidate,
                                    const std::vector<AttentionMap>& reference);

struct AucAtEpsilon {
  double epsilon = 0.0;
  std::optional<double> auc_human;
  std::optional<double> auc_model;
};

struct AucEpsilonTable {
  std::vector<AucAtEpsilon> rows;
  // share of defined grid points where auc_human > auc_model; NaN when no
  // model maps were supplied
  double fraction_human_better = 0.0;
  std::size_t undefined_points = 0;
};

// Binarizes the (max-rescaled) heuristic maps at each grid epsilon as
// pseudo-truth and scores the human masks and, optionally, the model maps
// against it. Degenerate grid points are recorded with empty AUCs.
AucEpsilonTable auc_vs_epsilon(const std::vector<AttentionMap>& heuristic,
                               const std::vector<AttentionMap>& human,
                               const std::vector<AttentionMap>* model,
                               const std::vector<double>& grid);

struct GlobalCorrelations {
  Correlation pearson_premise, pearson_hypothesis, pearson_general;
  Correlation spearman_premise, spearman_hypothesis, spearman_general;
};

struct EvalReport {
  RocCurve roc;
  double auc_value = 0.0;
  AucEpsilonTable auc_table;
  GlobalCorrelations global;
  PerInstanceStats per_instance;
  std::size_t pair_count = 0;
};

// Dataset adapters ------------------------------------------------------

// Human 0/1 masks viewed as attention maps, in corpus order.
std::vector<AttentionMap> masks_as_maps(const Dataset& d);

// Reorders maps into corpus order, checking ids and lengths. Maps covering
// extra pairs are allowed; missing pairs are an error.
std::vector<AttentionMap> align_maps(const Dataset& d, const std::vector<AttentionMap>& maps);

// Divides every sentence's scores by their maximum (no-op for min-max or
// binary maps) so one epsilon in [0,1] spans any map kind.
std::vector<AttentionMap> rescale_by_sentence_max(std::vector<AttentionMap> maps);

// Full evaluation against the human annotation: ROC/AUC of the candidate,
// epsilon table with the candidate as pseudo-truth, global correlations
// (human masks normalized per sentence), per-instance distributions.
// `model` may be null. `candidate` must already be aligned to d.
EvalReport evaluate(const Dataset& d, const std::vector<AttentionMap>& candidate,
                    const std::vector<AttentionMap>* model,
                    const std::vector<double>& grid);

}  // namespace attnplaus
