#include "attnplaus/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <thread>

#include "attnplaus/errors.hpp"
#include "attnplaus/rng.hpp"

namespace attnplaus {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool all_finite(const double* xs, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(xs[i])) return false;
  return true;
}

double dot(const double* u, const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
  return s;
}

double norm(const double* u, std::size_t n) { return std::sqrt(dot(u, u, n)); }

// y = A x
void matvec(const Mat& m, const double* x, double* y) {
  for (std::size_t r = 0; r < m.rows; ++r)
    y[r] = dot(m.a.data() + r * m.cols, x, m.cols);
}

// y += A^T x
void matvec_t_add(const Mat& m, const double* x, double* y) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.a.data() + r * m.cols;
    double xr = x[r];
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
  }
}

// A += u v^T
void outer_add(Mat& m, const double* u, const double* v) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.a.data() + r * m.cols;
    double ur = u[r];
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ur * v[c];
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned k = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (unsigned t = 0; t < k; ++t) {
    std::size_t lo = n * t / k, hi = n * (t + 1) / k;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------- traces

struct DirTrace {
  // step-indexed in the direction's own temporal order
  std::vector<std::vector<double>> gi, gf, gg, go, c, tc, h;
};

struct SentTrace {
  std::vector<std::size_t> idx;
  DirTrace fwdt, bwdt;  // bwdt step s covers token T-1-s
  std::vector<std::vector<double>> hcat;
  std::vector<double> hbar;
  std::vector<double> scores, alpha, context;
  std::vector<double> merge_in, merged;  // merged = tanh(pre)
};

struct PairTrace {
  SentTrace prem, hyp;
  std::vector<double> cls_in, a1, r1, probs;
};

void run_direction(const LstmWeights& w, const Mat& embedding,
                   const std::vector<std::size_t>& idx, bool reverse, DirTrace& tr) {
  const std::size_t T = idx.size();
  const std::size_t H = w.w_rec.cols;
  tr.gi.assign(T, {});
  tr.gf.assign(T, {});
  tr.gg.assign(T, {});
  tr.go.assign(T, {});
  tr.c.assign(T, {});
  tr.tc.assign(T, {});
  tr.h.assign(T, {});
  std::vector<double> z(4 * H), zr(4 * H);
  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (std::size_t s = 0; s < T; ++s) {
    std::size_t token = reverse ? T - 1 - s : s;
    const double* x = embedding.a.data() + idx[token] * embedding.cols;
    matvec(w.w_in, x, z.data());
    matvec(w.w_rec, h_prev.data(), zr.data());
    for (std::size_t r = 0; r < 4 * H; ++r) z[r] += zr[r] + w.bias[r];
    auto& gi = tr.gi[s];
    auto& gf = tr.gf[s];
    auto& gg = tr.gg[s];
    auto& go = tr.go[s];
    gi.resize(H);
    gf.resize(H);
    gg.resize(H);
    go.resize(H);
    tr.c[s].resize(H);
    tr.tc[s].resize(H);
    tr.h[s].resize(H);
    for (std::size_t j = 0; j < H; ++j) {
      gi[j] = sigmoid(z[j]);
      gf[j] = sigmoid(z[H + j]);
      gg[j] = std::tanh(z[2 * H + j]);
      go[j] = sigmoid(z[3 * H + j]);
      double cj = gf[j] * c_prev[j] + gi[j] * gg[j];
      tr.c[s][j] = cj;
      tr.tc[s][j] = std::tanh(cj);
      tr.h[s][j] = go[j] * tr.tc[s][j];
    }
    h_prev = tr.h[s];
    c_prev = tr.c[s];
  }
}

std::vector<double> score_hiddens(const std::vector<std::vector<double>>& hiddens,
                                  const std::vector<double>& query,
                                  ModelConfig::Scoring scoring) {
  std::vector<double> scores(hiddens.size());
  double qn = norm(query.data(), query.size());
  for (std::size_t i = 0; i < hiddens.size(); ++i) {
    if (hiddens[i].size() != query.size())
      throw DimensionError("attention: hidden size " + std::to_string(hiddens[i].size()) +
                           " vs query size " + std::to_string(query.size()));
    double d = dot(hiddens[i].data(), query.data(), query.size());
    if (scoring == ModelConfig::Scoring::dot) {
      scores[i] = d;
    } else {
      double hn = norm(hiddens[i].data(), hiddens[i].size());
      scores[i] = (hn == 0.0 || qn == 0.0) ? 0.0 : d / (hn * qn);
    }
  }
  return scores;
}

void encode_trace(const ModelParams& p, const std::vector<Token>& tokens, SentTrace& tr) {
  if (tokens.empty()) throw EmptySentence();
  const std::size_t T = tokens.size();
  const std::size_t H = p.config.d_h;
  tr.idx.resize(T);
  for (std::size_t i = 0; i < T; ++i) tr.idx[i] = p.index_of(tokens[i].normalized);
  run_direction(p.fwd, p.embedding, tr.idx, false, tr.fwdt);
  run_direction(p.bwd, p.embedding, tr.idx, true, tr.bwdt);
  tr.hcat.assign(T, std::vector<double>(2 * H));
  for (std::size_t i = 0; i < T; ++i) {
    std::copy(tr.fwdt.h[i].begin(), tr.fwdt.h[i].end(), tr.hcat[i].begin());
    std::copy(tr.bwdt.h[T - 1 - i].begin(), tr.bwdt.h[T - 1 - i].end(),
              tr.hcat[i].begin() + H);
  }
  tr.hbar.resize(2 * H);
  std::copy(tr.fwdt.h[T - 1].begin(), tr.fwdt.h[T - 1].end(), tr.hbar.begin());
  std::copy(tr.bwdt.h[T - 1].begin(), tr.bwdt.h[T - 1].end(), tr.hbar.begin() + H);
}

void attend_trace(SentTrace& tr, const std::vector<double>& query,
                  ModelConfig::Scoring scoring) {
  tr.scores = score_hiddens(tr.hcat, query, scoring);
  tr.alpha = softmax(tr.scores);
  tr.context.assign(query.size(), 0.0);
  for (std::size_t i = 0; i < tr.hcat.size(); ++i)
    axpy(tr.alpha[i], tr.hcat[i].data(), tr.context.data(), tr.context.size());
}

void merge_trace(const ModelParams& p, SentTrace& tr) {
  const std::size_t H2 = tr.hbar.size();
  tr.merge_in.resize(2 * H2);
  std::copy(tr.context.begin(), tr.context.end(), tr.merge_in.begin());
  std::copy(tr.hbar.begin(), tr.hbar.end(), tr.merge_in.begin() + H2);
  tr.merged.resize(p.w_merge.rows);
  matvec(p.w_merge, tr.merge_in.data(), tr.merged.data());
  for (std::size_t r = 0; r < tr.merged.size(); ++r)
    tr.merged[r] = std::tanh(tr.merged[r] + p.b_merge[r]);
}

void forward_trace(const ModelParams& p, const SentencePair& pair, PairTrace& tr) {
  encode_trace(p, pair.premise, tr.prem);
  encode_trace(p, pair.hypothesis, tr.hyp);
  attend_trace(tr.prem, tr.hyp.hbar, p.config.scoring);
  attend_trace(tr.hyp, tr.prem.hbar, p.config.scoring);
  merge_trace(p, tr.prem);
  merge_trace(p, tr.hyp);

  const std::size_t dm = tr.prem.merged.size();
  tr.cls_in.resize(2 * dm);
  std::copy(tr.prem.merged.begin(), tr.prem.merged.end(), tr.cls_in.begin());
  std::copy(tr.hyp.merged.begin(), tr.hyp.merged.end(), tr.cls_in.begin() + dm);
  tr.a1.resize(p.w_cls1.rows);
  matvec(p.w_cls1, tr.cls_in.data(), tr.a1.data());
  for (std::size_t r = 0; r < tr.a1.size(); ++r) tr.a1[r] += p.b_cls1[r];
  tr.r1.resize(tr.a1.size());
  for (std::size_t r = 0; r < tr.a1.size(); ++r) tr.r1[r] = std::max(0.0, tr.a1[r]);
  std::vector<double> logits(3);
  matvec(p.w_cls2, tr.r1.data(), logits.data());
  for (std::size_t r = 0; r < 3; ++r) logits[r] += p.b_cls2[r];
  tr.probs = softmax(logits);
}

// ------------------------------------------------------------- gradients

struct LstmGrad {
  Mat w_in, w_rec;
  std::vector<double> bias;
};

struct ExampleGrad {
  LstmGrad fwd, bwd;
  Mat w_merge;
  std::vector<double> b_merge;
  Mat w_cls1;
  std::vector<double> b_cls1;
  Mat w_cls2;
  std::vector<double> b_cls2;
  std::vector<std::pair<std::size_t, std::vector<double>>> emb;  // (row, d_e grad)
  double loss = 0.0;
};

void size_like(const ModelParams& p, ExampleGrad& g) {
  auto lstm = [&](const LstmWeights& w, LstmGrad& gw) {
    gw.w_in = Mat(w.w_in.rows, w.w_in.cols);
    gw.w_rec = Mat(w.w_rec.rows, w.w_rec.cols);
    gw.bias.assign(w.bias.size(), 0.0);
  };
  lstm(p.fwd, g.fwd);
  lstm(p.bwd, g.bwd);
  g.w_merge = Mat(p.w_merge.rows, p.w_merge.cols);
  g.b_merge.assign(p.b_merge.size(), 0.0);
  g.w_cls1 = Mat(p.w_cls1.rows, p.w_cls1.cols);
  g.b_cls1.assign(p.b_cls1.size(), 0.0);
  g.w_cls2 = Mat(p.w_cls2.rows, p.w_cls2.cols);
  g.b_cls2.assign(p.b_cls2.size(), 0.0);
}

// BPTT through one direction. xs/dh_ext/dx are in the direction's temporal
// order; the caller maps token positions.
void lstm_backward(const LstmWeights& w, const DirTrace& tr,
                   const std::vector<const double*>& xs,
                   const std::vector<std::vector<double>>& dh_ext, LstmGrad& gw,
                   std::vector<std::vector<double>>& dx) {
  const std::size_t T = tr.h.size();
  const std::size_t H = w.w_rec.cols;
  std::vector<double> dh_carry(H, 0.0), dc_carry(H, 0.0);
  std::vector<double> da(4 * H);
  std::vector<double> dh(H), dc(H);
  for (std::size_t step = T; step-- > 0;) {
    const auto& gi = tr.gi[step];
    const auto& gf = tr.gf[step];
    const auto& gg = tr.gg[step];
    const auto& go = tr.go[step];
    const auto& tc = tr.tc[step];
    for (std::size_t j = 0; j < H; ++j) {
      dh[j] = dh_ext[step][j] + dh_carry[j];
      dc[j] = dh[j] * go[j] * (1.0 - tc[j] * tc[j]) + dc_carry[j];
      double c_prev = step > 0 ? tr.c[step - 1][j] : 0.0;
      double d_o = dh[j] * tc[j];
      double d_f = dc[j] * c_prev;
      double d_i = dc[j] * gg[j];
      double d_g = dc[j] * gi[j];
      da[j] = d_i * gi[j] * (1.0 - gi[j]);
      da[H + j] = d_f * gf[j] * (1.0 - gf[j]);
      da[2 * H + j] = d_g * (1.0 - gg[j] * gg[j]);
      da[3 * H + j] = d_o * go[j] * (1.0 - go[j]);
      dc_carry[j] = dc[j] * gf[j];
    }
    outer_add(gw.w_in, da.data(), xs[step]);
    if (step > 0) outer_add(gw.w_rec, da.data(), tr.h[step - 1].data());
    for (std::size_t r = 0; r < 4 * H; ++r) gw.bias[r] += da[r];
    matvec_t_add(w.w_in, da.data(), dx[step].data());
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    matvec_t_add(w.w_rec, da.data(), dh_carry.data());
  }
}

// Backward through attention of one sentence. dcontext flows in; gradients
// land on the sentence's own hiddens and on the opposite sentence embedding
// (the softmax query).
void attention_backward(const SentTrace& tr, const std::vector<double>& query,
                        ModelConfig::Scoring scoring, const std::vector<double>& dcontext,
                        std::vector<std::vector<double>>& dhiddens,
                        std::vector<double>& dquery) {
  const std::size_t T = tr.hcat.size();
  const std::size_t D = query.size();
  std::vector<double> dalpha(T);
  for (std::size_t i = 0; i < T; ++i) {
    dalpha[i] = dot(dcontext.data(), tr.hcat[i].data(), D);
    axpy(tr.alpha[i], dcontext.data(), dhiddens[i].data(), D);
  }
  double mix = 0.0;
  for (std::size_t i = 0; i < T; ++i) mix += tr.alpha[i] * dalpha[i];
  double qn = norm(query.data(), D);
  for (std::size_t i = 0; i < T; ++i) {
    double du = tr.alpha[i] * (dalpha[i] - mix);
    if (du == 0.0) continue;
    if (scoring == ModelConfig::Scoring::dot) {
      axpy(du, query.data(), dhiddens[i].data(), D);
      axpy(du, tr.hcat[i].data(), dquery.data(), D);
    } else {
      double hn = norm(tr.hcat[i].data(), D);
      if (hn == 0.0 || qn == 0.0) continue;
      double u = tr.scores[i];
      double inv = 1.0 / (hn * qn);
      for (std::size_t d = 0; d < D; ++d) {
        dhiddens[i][d] += du * (query[d] * inv - u * tr.hcat[i][d] / (hn * hn));
        dquery[d] += du * (tr.hcat[i][d] * inv - u * query[d] / (qn * qn));
      }
    }
  }
}

// Gradient contributions of one sentence below the merge layer: dmerged in,
// everything down to token embeddings out. dquery_opp collects what flows
// into the opposite sentence embedding through the attention query.
void sentence_backward(const ModelParams& p, const SentTrace& tr,
                       const std::vector<double>& query_opp,
                       const std::vector<double>& dmerged, ExampleGrad& g,
                       LstmGrad& gdir_fwd, LstmGrad& gdir_bwd,
                       std::vector<double>& dquery_opp,
                       const std::vector<double>& dhbar_extra) {
  const std::size_t H = p.config.d_h;
  const std::size_t H2 = 2 * H;
  const std::size_t T = tr.hcat.size();

  std::vector<double> dpre(tr.merged.size());
  for (std::size_t r = 0; r < dpre.size(); ++r)
    dpre[r] = dmerged[r] * (1.0 - tr.merged[r] * tr.merged[r]);
  outer_add(g.w_merge, dpre.data(), tr.merge_in.data());
  for (std::size_t r = 0; r < dpre.size(); ++r) g.b_merge[r] += dpre[r];
  std::vector<double> dmerge_in(2 * H2, 0.0);
  matvec_t_add(p.w_merge, dpre.data(), dmerge_in.data());

  std::vector<double> dcontext(dmerge_in.begin(), dmerge_in.begin() + H2);
  std::vector<double> dhbar(dmerge_in.begin() + H2, dmerge_in.end());
  for (std::size_t d = 0; d < H2; ++d) dhbar[d] += dhbar_extra[d];

  std::vector<std::vector<double>> dhiddens(T, std::vector<double>(H2, 0.0));
  attention_backward(tr, query_opp, p.config.scoring, dcontext, dhiddens, dquery_opp);

  // map token-level gradients into the two temporal directions
  std::vector<std::vector<double>> dh_fwd(T, std::vector<double>(H, 0.0));
  std::vector<std::vector<double>> dh_bwd(T, std::vector<double>(H, 0.0));
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < H; ++j) {
      dh_fwd[i][j] += dhiddens[i][j];
      dh_bwd[T - 1 - i][j] += dhiddens[i][H + j];
    }
  for (std::size_t j = 0; j < H; ++j) {
    dh_fwd[T - 1][j] += dhbar[j];
    dh_bwd[T - 1][j] += dhbar[H + j];
  }

  std::vector<const double*> xs_fwd(T), xs_bwd(T);
  for (std::size_t i = 0; i < T; ++i) {
    xs_fwd[i] = p.embedding.a.data() + tr.idx[i] * p.embedding.cols;
    xs_bwd[i] = p.embedding.a.data() + tr.idx[T - 1 - i] * p.embedding.cols;
  }
  std::vector<std::vector<double>> dx_fwd(T, std::vector<double>(p.config.d_e, 0.0));
  std::vector<std::vector<double>> dx_bwd(T, std::vector<double>(p.config.d_e, 0.0));
  lstm_backward(p.fwd, tr.fwdt, xs_fwd, dh_fwd, gdir_fwd, dx_fwd);
  lstm_backward(p.bwd, tr.bwdt, xs_bwd, dh_bwd, gdir_bwd, dx_bwd);

  for (std::size_t i = 0; i < T; ++i) {
    std::vector<double> dx = dx_fwd[i];
    for (std::size_t d = 0; d < dx.size(); ++d) dx[d] += dx_bwd[T - 1 - i][d];
    g.emb.emplace_back(tr.idx[i], std::move(dx));
  }
}

void example_gradient(const ModelParams& p, const SentencePair& pair, ExampleGrad& g) {
  size_like(p, g);
  PairTrace tr;
  forward_trace(p, pair, tr);
  g.loss = -std::log(tr.probs[static_cast<std::size_t>(pair.label)]);

  std::vector<double> dlogits = tr.probs;
  dlogits[static_cast<std::size_t>(pair.label)] -= 1.0;
  outer_add(g.w_cls2, dlogits.data(), tr.r1.data());
  for (std::size_t r = 0; r < 3; ++r) g.b_cls2[r] += dlogits[r];
  std::vector<double> dr1(tr.r1.size(), 0.0);
  matvec_t_add(p.w_cls2, dlogits.data(), dr1.data());
  std::vector<double> da1(dr1.size());
  for (std::size_t r = 0; r < da1.size(); ++r) da1[r] = tr.a1[r] > 0.0 ? dr1[r] : 0.0;
  outer_add(g.w_cls1, da1.data(), tr.cls_in.data());
  for (std::size_t r = 0; r < da1.size(); ++r) g.b_cls1[r] += da1[r];
  std::vector<double> dcls_in(tr.cls_in.size(), 0.0);
  matvec_t_add(p.w_cls1, da1.data(), dcls_in.data());

  const std::size_t dm = tr.prem.merged.size();
  std::vector<double> dmerged_p(dcls_in.begin(), dcls_in.begin() + dm);
  std::vector<double> dmerged_h(dcls_in.begin() + dm, dcls_in.end());

  // attention queries cross sentences, so each side's backward pass feeds
  // gradient into the other side's sentence embedding; run premise first,
  // collecting what lands on the hypothesis h-bar, then the hypothesis with
  // that extra term, and finally replay the premise h-bar extras
  const std::size_t H2 = 2 * p.config.d_h;
  std::vector<double> dq_hyp_hbar(H2, 0.0);  // via premise attention
  std::vector<double> dq_prem_hbar(H2, 0.0);  // via hypothesis attention
  std::vector<double> zeros(H2, 0.0);

  // premise side below merge, hbar extras deferred
  sentence_backward(p, tr.prem, tr.hyp.hbar, dmerged_p, g, g.fwd, g.bwd, dq_hyp_hbar,
                    zeros);
  // hypothesis side sees merge gradient plus what premise attention sent in
  sentence_backward(p, tr.hyp, tr.prem.hbar, dmerged_h, g, g.fwd, g.bwd, dq_prem_hbar,
                    dq_hyp_hbar);
  // the hypothesis pass produced gradient on the premise hbar; push that
  // through the premise encoder alone (no merge, no attention contribution)
  if (std::any_of(dq_prem_hbar.begin(), dq_prem_hbar.end(),
                  [](double v) { return v != 0.0; })) {
    const std::size_t T = tr.prem.hcat.size();
    const std::size_t H = p.config.d_h;
    std::vector<std::vector<double>> dh_fwd(T, std::vector<double>(H, 0.0));
    std::vector<std::vector<double>> dh_bwd(T, std::vector<double>(H, 0.0));
    for (std::size_t j = 0; j < H; ++j) {
      dh_fwd[T - 1][j] = dq_prem_hbar[j];
      dh_bwd[T - 1][j] = dq_prem_hbar[H + j];
    }
    std::vector<const double*> xs_fwd(T), xs_bwd(T);
    for (std::size_t i = 0; i < T; ++i) {
      xs_fwd[i] = p.embedding.a.data() + tr.prem.idx[i] * p.embedding.cols;
      xs_bwd[i] = p.embedding.a.data() + tr.prem.idx[T - 1 - i] * p.embedding.cols;
    }
    std::vector<std::vector<double>> dx_fwd(T, std::vector<double>(p.config.d_e, 0.0));
    std::vector<std::vector<double>> dx_bwd(T, std::vector<double>(p.config.d_e, 0.0));
    lstm_backward(p.fwd, tr.prem.fwdt, xs_fwd, dh_fwd, g.fwd, dx_fwd);
    lstm_backward(p.bwd, tr.prem.bwdt, xs_bwd, dh_bwd, g.bwd, dx_bwd);
    for (std::size_t i = 0; i < T; ++i) {
      std::vector<double> dx = dx_fwd[i];
      for (std::size_t d = 0; d < dx.size(); ++d) dx[d] += dx_bwd[T - 1 - i][d];
      g.emb.emplace_back(tr.prem.idx[i], std::move(dx));
    }
  }
}

Gradients make_gradients(const ModelParams& p) {
  Gradients g;
  g.embedding = Mat(p.embedding.rows, p.embedding.cols);
  auto lstm = [](const LstmWeights& w, LstmWeights& gw) {
    gw.w_in = Mat(w.w_in.rows, w.w_in.cols);
    gw.w_rec = Mat(w.w_rec.rows, w.w_rec.cols);
    gw.bias.assign(w.bias.size(), 0.0);
  };
  lstm(p.fwd, g.fwd);
  lstm(p.bwd, g.bwd);
  g.w_merge = Mat(p.w_merge.rows, p.w_merge.cols);
  g.b_merge.assign(p.b_merge.size(), 0.0);
  g.w_cls1 = Mat(p.w_cls1.rows, p.w_cls1.cols);
  g.b_cls1.assign(p.b_cls1.size(), 0.0);
  g.w_cls2 = Mat(p.w_cls2.rows, p.w_cls2.cols);
  g.b_cls2.assign(p.b_cls2.size(), 0.0);
  return g;
}

}  // namespace

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) throw EmptyVector("softmax of empty vector");
  double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::size_t ModelParams::index_of(const std::string& normalized) const {
  auto it = vocab_index.find(normalized);
  return it == vocab_index.end() ? 0 : it->second;
}

std::vector<std::string> build_vocab(const Dataset& d) {
  std::vector<std::string> vocab = {"<unk>"};
  std::unordered_map<std::string, bool> seen;
  seen.emplace("<unk>", true);
  auto add = [&](const std::vector<Token>& tokens) {
    for (const auto& t : tokens)
      if (seen.emplace(t.normalized, true).second) vocab.push_back(t.normalized);
  };
  for (const auto& pair : d.pairs) {
    add(pair.premise);
    add(pair.hypothesis);
  }
  return vocab;
}

ModelParams init_model(const ModelConfig& config, const std::vector<std::string>& vocab,
                       const EmbeddingTable& table) {
  if (vocab.empty()) throw DataError("empty vocabulary");
  if (table.dim() != config.d_e)
    throw DimensionError("embedding table dimension " + std::to_string(table.dim()) +
                         " differs from configured " + std::to_string(config.d_e));
  ModelParams p;
  p.config = config;
  if (p.config.d_merge == 0) p.config.d_merge = 2 * p.config.d_h;
  if (p.config.d_cls == 0) p.config.d_cls = 2 * p.config.d_h;
  p.vocab = vocab;
  for (std::size_t i = 0; i < vocab.size(); ++i) p.vocab_index.emplace(vocab[i], i);

  const std::size_t E = p.config.d_e, H = p.config.d_h;
  const std::size_t DM = p.config.d_merge, DC = p.config.d_cls;

  p.embedding = Mat(vocab.size(), E);
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    std::vector<double> row = table.lookup(vocab[v]);
    std::copy(row.begin(), row.end(), p.embedding.a.begin() + v * E);
  }

  DetRng rng(p.config.seed);
  auto fill = [&](Mat& m, std::size_t fan_in, std::size_t fan_out) {
    double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : m.a) x = rng.uniform(-r, r);
  };
  auto lstm = [&](LstmWeights& w) {
    w.w_in = Mat(4 * H, E);
    w.w_rec = Mat(4 * H, H);
    w.bias.assign(4 * H, 0.0);
    fill(w.w_in, E, H);
    fill(w.w_rec, H, H);
    for (std::size_t j = 0; j < H; ++j) w.bias[H + j] = 1.0;  // forget gate open
  };
  lstm(p.fwd);
  lstm(p.bwd);
  p.w_merge = Mat(DM, 4 * H);
  fill(p.w_merge, 4 * H, DM);
  p.b_merge.assign(DM, 0.0);
  p.w_cls1 = Mat(DC, 2 * DM);
  fill(p.w_cls1, 2 * DM, DC);
  p.b_cls1.assign(DC, 0.0);
  p.w_cls2 = Mat(3, DC);
  fill(p.w_cls2, DC, 3);
  p.b_cls2.assign(3, 0.0);
  return p;
}

LstmState lstm_step(const LstmWeights& w, const std::vector<double>& x,
                    const std::vector<double>& h_prev, const std::vector<double>& c_prev) {
  const std::size_t H = w.w_rec.cols;
  if (x.size() != w.w_in.cols || h_prev.size() != H || c_prev.size() != H)
    throw DimensionError("lstm_step: input shapes do not match the weights");
  if (!all_finite(x.data(), x.size()) || !all_finite(h_prev.data(), h_prev.size()) ||
      !all_finite(c_prev.data(), c_prev.size()))
    throw NumericError("lstm_step: non-finite input");
  std::vector<double> z(4 * H), zr(4 * H);
  matvec(w.w_in, x.data(), z.data());
  matvec(w.w_rec, h_prev.data(), zr.data());
  LstmState s;
  s.h.resize(H);
  s.c.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    double zi = z[j] + zr[j] + w.bias[j];
    double zf = z[H + j] + zr[H + j] + w.bias[H + j];
    double zg = z[2 * H + j] + zr[2 * H + j] + w.bias[2 * H + j];
    double zo = z[3 * H + j] + zr[3 * H + j] + w.bias[3 * H + j];
    double gi = sigmoid(zi), gf = sigmoid(zf), gg = std::tanh(zg), go = sigmoid(zo);
    s.c[j] = gf * c_prev[j] + gi * gg;
    s.h[j] = go * std::tanh(s.c[j]);
  }
  return s;
}

EncodedSentence encode(const ModelParams& params, const std::vector<Token>& tokens) {
  SentTrace tr;
  encode_trace(params, tokens, tr);
  EncodedSentence enc;
  enc.hiddens = std::move(tr.hcat);
  enc.sentence_embedding = std::move(tr.hbar);
  return enc;
}

AttentionResult attend(const std::vector<std::vector<double>>& hiddens,
                       const std::vector<double>& query, ModelConfig::Scoring scoring) {
  if (hiddens.empty()) throw EmptyVector("attend over no hiddens");
  AttentionResult res;
  res.alpha = softmax(score_hiddens(hiddens, query, scoring));
  res.context.assign(query.size(), 0.0);
  for (std::size_t i = 0; i < hiddens.size(); ++i)
    axpy(res.alpha[i], hiddens[i].data(), res.context.data(), res.context.size());
  return res;
}

ForwardResult forward(const ModelParams& params, const SentencePair& pair) {
  PairTrace tr;
  forward_trace(params, pair, tr);
  ForwardResult res;
  res.class_probs = std::move(tr.probs);
  res.alpha_premise = std::move(tr.prem.alpha);
  res.alpha_hypothesis = std::move(tr.hyp.alpha);
  return res;
}

double loss(const std::vector<double>& class_probs, NliLabel gold) {
  if (class_probs.size() != 3) throw DimensionError("loss expects 3 class probabilities");
  return -std::log(class_probs[static_cast<std::size_t>(gold)]);
}

BatchGradients gradients(const ModelParams& params,
                         const std::vector<const SentencePair*>& batch, unsigned threads) {
  if (batch.empty()) throw DataError("gradient batch is empty");
  std::vector<ExampleGrad> per_example(batch.size());
  parallel_for(batch.size(), threads,
               [&](std::size_t i) { example_gradient(params, *batch[i], per_example[i]); });

  BatchGradients out;
  out.grads = make_gradients(params);
  const double inv = 1.0 / static_cast<double>(batch.size());
  auto add_scaled = [inv](const std::vector<double>& src, std::vector<double>& dst) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i] * inv;
  };
  for (const ExampleGrad& g : per_example) {
    out.mean_loss += g.loss * inv;
    add_scaled(g.fwd.w_in.a, out.grads.fwd.w_in.a);
    add_scaled(g.fwd.w_rec.a, out.grads.fwd.w_rec.a);
    add_scaled(g.fwd.bias, out.grads.fwd.bias);
    add_scaled(g.bwd.w_in.a, out.grads.bwd.w_in.a);
    add_scaled(g.bwd.w_rec.a, out.grads.bwd.w_rec.a);
    add_scaled(g.bwd.bias, out.grads.bwd.bias);
    add_scaled(g.w_merge.a, out.grads.w_merge.a);
    add_scaled(g.b_merge, out.grads.b_merge);
    add_scaled(g.w_cls1.a, out.grads.w_cls1.a);
    add_scaled(g.b_cls1, out.grads.b_cls1);
    add_scaled(g.w_cls2.a, out.grads.w_cls2.a);
    add_scaled(g.b_cls2, out.grads.b_cls2);
    for (const auto& [row, dvec] : g.emb) {
      double* dst = out.grads.embedding.a.data() + row * out.grads.embedding.cols;
      for (std::size_t d = 0; d < dvec.size(); ++d) dst[d] += dvec[d] * inv;
    }
  }
  for_each_tensor(out.grads, [](const char* name, double* data, std::size_t n) {
    if (!all_finite(data, n))
      throw NumericError(std::string("non-finite gradient in ") + name);
  });
  return out;
}

std::vector<EpochLog> train(ModelParams& params, const Dataset& train_set,
                            const Dataset& dev_set, const TrainConfig& config) {
  if (train_set.pairs.empty() || dev_set.pairs.empty())
    throw DataError("training needs non-empty train and dev sets");
  Gradients velocity = make_gradients(params);
  DetRng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochLog> logs;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t end = std::min(order.size(), start + batch);
      std::vector<const SentencePair*> chunk;
      chunk.reserve(end - start);
      for (std::size_t k = start; k < end; ++k)
        chunk.push_back(&train_set.pairs[order[k]]);
      BatchGradients bg = gradients(params, chunk, config.threads);
      loss_sum += bg.mean_loss * static_cast<double>(chunk.size());
      if (config.lr != 0.0) {
        // v = momentum*v - lr*g; p += v. The three structs share a layout,
        // so one walk updates them in lockstep.
        std::vector<std::pair<double*, std::size_t>> vp, gp, pp;
        for_each_tensor(velocity, [&](const char*, double* d, std::size_t n) {
          vp.emplace_back(d, n);
        });
        for_each_tensor(bg.grads, [&](const char*, double* d, std::size_t n) {
          gp.emplace_back(d, n);
        });
        for_each_tensor(params, [&](const char*, double* d, std::size_t n) {
          pp.emplace_back(d, n);
        });
        for (std::size_t t = 0; t < vp.size(); ++t) {
          double* v = vp[t].first;
          double* g = gp[t].first;
          double* p = pp[t].first;
          for (std::size_t i = 0; i < vp[t].second; ++i) {
            v[i] = config.momentum * v[i] - config.lr * g[i];
            p[i] += v[i];
          }
        }
      }
    }
    double train_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(train_loss)) throw TrainingDiverged(epoch);
    EvalNumbers dev = classify_and_score(params, dev_set, config.threads);
    logs.push_back({epoch, train_loss, dev.accuracy, dev.macro_f1});
  }
  return logs;
}

EvalNumbers classify_and_score(const ModelParams& params, const Dataset& d,
                               unsigned threads) {
  if (d.pairs.empty()) throw DataError("nothing to classify");
  std::vector<std::size_t> predicted(d.pairs.size());
  parallel_for(d.pairs.size(), threads, [&](std::size_t i) {
    ForwardResult r = forward(params, d.pairs[i]);
    predicted[i] = static_cast<std::size_t>(
        std::max_element(r.class_probs.begin(), r.class_probs.end()) -
        r.class_probs.begin());
  });
  std::size_t correct = 0;
  std::size_t tp[3] = {0, 0, 0}, fp[3] = {0, 0, 0}, fn[3] = {0, 0, 0};
  for (std::size_t i = 0; i < d.pairs.size(); ++i) {
    std::size_t gold = static_cast<std::size_t>(d.pairs[i].label);
    if (predicted[i] == gold) {
      ++correct;
      ++tp[gold];
    } else {
      ++fp[predicted[i]];
      ++fn[gold];
    }
  }
  EvalNumbers out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(d.pairs.size());
  double f1_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    double denom_p = static_cast<double>(tp[c] + fp[c]);
    double denom_r = static_cast<double>(tp[c] + fn[c]);
    double prec = denom_p > 0 ? tp[c] / denom_p : 0.0;
    double rec = denom_r > 0 ? tp[c] / denom_r : 0.0;
    f1_sum += (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  out.macro_f1 = f1_sum / 3.0;
  return out;
}

std::vector<AttentionMap> extract_attention(const ModelParams& params, const Dataset& d,
                                            unsigned threads) {
  std::vector<AttentionMap> maps(d.pairs.size());
  parallel_for(d.pairs.size(), threads, [&](std::size_t i) {
    ForwardResult r = forward(params, d.pairs[i]);
    maps[i].pair_id = d.pairs[i].pair_id;
    maps[i].premise = std::move(r.alpha_premise);
    maps[i].hypothesis = std::move(r.alpha_hypothesis);
  });
  return maps;
}

// ----------------------------------------------------------------- file io

namespace {

constexpr char kMagic[8] = {'A', 'T', 'N', 'P', 'M', 'D', 'L', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  put_u32(out, 1);  // format version
  put_u32(out, static_cast<std::uint32_t>(params.config.d_e));
  put_u32(out, static_cast<std::uint32_t>(params.config.d_h));
  put_u32(out, static_cast<std::uint32_t>(params.config.d_merge));
  put_u32(out, static_cast<std::uint32_t>(params.config.d_cls));
  put_u32(out, params.config.scoring == ModelConfig::Scoring::dot ? 0 : 1);
  put_u64(out, params.config.seed);
  put_u32(out, static_cast<std::uint32_t>(params.vocab.size()));
  for (const auto& token : params.vocab) {
    put_u32(out, static_cast<std::uint32_t>(token.size()));
    out.write(token.data(), static_cast<std::streamsize>(token.size()));
  }
  std::uint32_t tensor_count = 0;
  for_each_tensor(const_cast<ModelParams&>(params),
                  [&](const char*, double*, std::size_t) { ++tensor_count; });
  put_u32(out, tensor_count);
  for_each_tensor(const_cast<ModelParams&>(params),
                  [&](const char* name, double* data, std::size_t n) {
                    std::uint32_t len = static_cast<std::uint32_t>(std::strlen(name));
                    put_u32(out, len);
                    out.write(name, len);
                    put_u64(out, n);
                    out.write(reinterpret_cast<const char*>(data),
                              static_cast<std::streamsize>(n * sizeof(double)));
                  });
  if (!out) throw IoError("write failure on " + path);
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("not a model file: " + path);
  std::uint32_t version = get_u32(in);
  if (version != 1)
    throw FormatError("unsupported model format version " + std::to_string(version));

  ModelConfig config;
  config.d_e = get_u32(in);
  config.d_h = get_u32(in);
  config.d_merge = get_u32(in);
  config.d_cls = get_u32(in);
  config.scoring = get_u32(in) == 0 ? ModelConfig::Scoring::dot : ModelConfig::Scoring::cosine;
  config.seed = get_u64(in);
  std::uint32_t vocab_n = get_u32(in);
  if (!in || vocab_n == 0) throw FormatError("model file has no vocabulary: " + path);

  ModelParams p;
  p.config = config;
  p.vocab.reserve(vocab_n);
  for (std::uint32_t i = 0; i < vocab_n; ++i) {
    std::uint32_t len = get_u32(in);
    if (!in || len > (1u << 20)) throw FormatError("corrupt vocabulary in " + path);
    std::string token(len, '\0');
    in.read(token.data(), len);
    p.vocab.push_back(std::move(token));
  }
  for (std::size_t i = 0; i < p.vocab.size(); ++i) p.vocab_index.emplace(p.vocab[i], i);

  const std::size_t E = config.d_e, H = config.d_h;
  p.embedding = Mat(vocab_n, E);
  p.fwd.w_in = Mat(4 * H, E);
  p.fwd.w_rec = Mat(4 * H, H);
  p.fwd.bias.assign(4 * H, 0.0);
  p.bwd.w_in = Mat(4 * H, E);
  p.bwd.w_rec = Mat(4 * H, H);
  p.bwd.bias.assign(4 * H, 0.0);
  p.w_merge = Mat(config.d_merge, 4 * H);
  p.b_merge.assign(config.d_merge, 0.0);
  p.w_cls1 = Mat(config.d_cls, 2 * config.d_merge);
  p.b_cls1.assign(config.d_cls, 0.0);
  p.w_cls2 = Mat(3, config.d_cls);
  p.b_cls2.assign(3, 0.0);

  std::unordered_map<std::string, std::pair<double*, std::size_t>> slots;
  for_each_tensor(p, [&](const char* name, double* data, std::size_t n) {
    slots.emplace(name, std::make_pair(data, n));
  });
  std::uint32_t tensor_count = get_u32(in);
  if (tensor_count != slots.size())
    throw FormatError("model file declares " + std::to_string(tensor_count) +
                      " tensors, expected " + std::to_string(slots.size()));
  for (std::uint32_t t = 0; t < tensor_count; ++t) {
    std::uint32_t len = get_u32(in);
    if (!in || len > 256) throw FormatError("corrupt tensor table in " + path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::uint64_t n = get_u64(in);
    auto it = slots.find(name);
    if (it == slots.end()) throw FormatError("unknown tensor '" + name + "' in " + path);
    if (it->second.second != n)
      throw FormatError("tensor '" + name + "' has " + std::to_string(n) +
                        " elements, expected " + std::to_string(it->second.second));
    in.read(reinterpret_cast<char*>(it->second.first),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!in) throw FormatError("model file truncated: " + path);
  return p;
}

}  // namespace attnplaus
