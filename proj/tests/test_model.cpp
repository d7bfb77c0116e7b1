#include "attnplaus/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "attnplaus/errors.hpp"
#include "attnplaus/rng.hpp"
#include "doctest.h"

using namespace attnplaus;

namespace {

SentencePair mk(const std::string& id, const std::string& prem, const std::string& hyp,
                NliLabel label) {
  SentencePair p;
  p.pair_id = id;
  p.premise = tokenize(prem, StopWords::none());
  p.hypothesis = tokenize(hyp, StopWords::none());
  p.label = label;
  p.premise_highlight.assign(p.premise.size(), 0);
  p.hypothesis_highlight.assign(p.hypothesis.size(), 0);
  return p;
}

Dataset tiny_dataset() {
  Dataset d;
  d.split_name = "tiny";
  d.pairs.push_back(mk("t1", "a dog chases the ball", "the dog runs", NliLabel::entailment));
  d.pairs.push_back(mk("t2", "cats sleep", "cats cats fly high", NliLabel::contradiction));
  d.pairs.push_back(mk("t3", "rain", "it may rain later", NliLabel::neutral));
  return d;
}

ModelParams tiny_model(ModelConfig::Scoring scoring, std::uint64_t seed = 11) {
  ModelConfig cfg;
  cfg.d_e = 6;
  cfg.d_h = 6;
  cfg.scoring = scoring;
  cfg.seed = seed;
  EmbeddingTable table(6, OovPolicy::seeded_uniform(-0.5, 0.5, 7));
  return init_model(cfg, build_vocab(tiny_dataset()), table);
}

double batch_loss(const ModelParams& p, const std::vector<const SentencePair*>& batch) {
  double sum = 0.0;
  for (const SentencePair* pair : batch)
    sum += loss(forward(p, *pair).class_probs, pair->label);
  return sum / static_cast<double>(batch.size());
}

std::vector<std::vector<double>> snapshot(ModelParams& p) {
  std::vector<std::vector<double>> out;
  for_each_tensor(p, [&](const char*, double* d, std::size_t n) {
    out.emplace_back(d, d + n);
  });
  return out;
}

}  // namespace

TEST_CASE("softmax is a shift-invariant distribution") {
  std::vector<double> s = {1.0, 2.0, 3.0};
  auto a = softmax(s);
  double sum = a[0] + a[1] + a[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a[2] > a[1]);
  CHECK(a[1] > a[0]);

  std::vector<double> shifted = {1e6 + 1.0, 1e6 + 2.0, 1e6 + 3.0};
  auto b = softmax(shifted);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

  CHECK(softmax({5.0})[0] == 1.0);
  CHECK_THROWS_AS(softmax({}), EmptyVector);
}

TEST_CASE("lstm_step closed forms with zero weights") {
  const std::size_t H = 3, E = 2;
  LstmWeights w;
  w.w_in = Mat(4 * H, E);
  w.w_rec = Mat(4 * H, H);
  w.bias.assign(4 * H, 0.0);

  std::vector<double> x(E, 0.7), h0(H, 0.0), c0(H, 0.0);
  LstmState s = lstm_step(w, x, h0, c0);
  // all pre-activations zero: i=f=o=0.5, g=0, so c = 0.5*c_prev and
  // h = 0.5*tanh(c)
  for (std::size_t j = 0; j < H; ++j) {
    CHECK(s.c[j] == doctest::Approx(0.0));
    CHECK(s.h[j] == doctest::Approx(0.0));
  }
  std::vector<double> ck(H, 2.0);
  s = lstm_step(w, x, h0, ck);
  for (std::size_t j = 0; j < H; ++j) {
    CHECK(s.c[j] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.h[j] == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(1e-12));
  }
}

TEST_CASE("lstm_step rejects bad input") {
  LstmWeights w;
  w.w_in = Mat(8, 2);
  w.w_rec = Mat(8, 2);
  w.bias.assign(8, 0.0);
  std::vector<double> x2(2, 0.0), x3(3, 0.0);
  CHECK_THROWS_AS(lstm_step(w, x3, x2, x2), DimensionError);
  CHECK_THROWS_AS(lstm_step(w, x2, x3, x2), DimensionError);
  std::vector<double> bad = {0.0, std::nan("")};
  CHECK_THROWS_AS(lstm_step(w, bad, x2, x2), NumericError);
}

TEST_CASE("build_vocab keeps first-appearance order behind the unknown slot") {
  auto vocab = build_vocab(tiny_dataset());
  REQUIRE(vocab.size() >= 4);
  CHECK(vocab[0] == "<unk>");
  CHECK(vocab[1] == "a");
  CHECK(vocab[2] == "dog");
  CHECK(vocab[3] == "chases");
  // duplicates collapse: "cats" appears many times but once in the vocab
  CHECK(std::count(vocab.begin(), vocab.end(), "cats") == 1);
}

TEST_CASE("init_model seeds forget-gate bias and honors glorot bounds") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  const std::size_t H = p.config.d_h;
  for (std::size_t j = 0; j < H; ++j) {
    CHECK(p.fwd.bias[H + j] == 1.0);
    CHECK(p.fwd.bias[j] == 0.0);
    CHECK(p.fwd.bias[2 * H + j] == 0.0);
    CHECK(p.fwd.bias[3 * H + j] == 0.0);
    CHECK(p.bwd.bias[H + j] == 1.0);
  }
  double r = std::sqrt(6.0 / (6.0 + 6.0));
  for (double v : p.fwd.w_rec.a) CHECK(std::abs(v) <= r);
  CHECK(p.config.d_merge == 2 * H);
  CHECK(p.config.d_cls == 2 * H);

  // same seed, same weights; different seed, different weights
  ModelParams q = tiny_model(ModelConfig::Scoring::dot);
  CHECK(q.fwd.w_in.a == p.fwd.w_in.a);
  ModelParams z = tiny_model(ModelConfig::Scoring::dot, 12);
  CHECK(z.fwd.w_in.a != p.fwd.w_in.a);

  EmbeddingTable wrong(4, OovPolicy::zero());
  CHECK_THROWS_AS(init_model(p.config, p.vocab, wrong), DimensionError);
}

TEST_CASE("encode of a single token equals one lstm_step each way") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  auto tokens = tokenize("rain", StopWords::none());
  EncodedSentence enc = encode(p, tokens);
  REQUIRE(enc.hiddens.size() == 1);
  const std::size_t H = p.config.d_h;
  CHECK(enc.hiddens[0] == enc.sentence_embedding);

  std::size_t row = p.index_of("rain");
  std::vector<double> x(p.embedding.a.begin() + row * p.config.d_e,
                        p.embedding.a.begin() + (row + 1) * p.config.d_e);
  std::vector<double> zero(H, 0.0);
  LstmState f = lstm_step(p.fwd, x, zero, zero);
  LstmState b = lstm_step(p.bwd, x, zero, zero);
  for (std::size_t j = 0; j < H; ++j) {
    CHECK(enc.hiddens[0][j] == doctest::Approx(f.h[j]).epsilon(1e-12));
    CHECK(enc.hiddens[0][H + j] == doctest::Approx(b.h[j]).epsilon(1e-12));
  }
}

TEST_CASE("encode reverses cleanly when both directions share weights") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  p.bwd = p.fwd;
  auto tokens = tokenize("a dog chases the ball", StopWords::none());
  auto reversed = tokens;
  std::reverse(reversed.begin(), reversed.end());

  EncodedSentence fwd_enc = encode(p, tokens);
  EncodedSentence rev_enc = encode(p, reversed);
  const std::size_t T = tokens.size(), H = p.config.d_h;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < H; ++j) {
      CHECK(rev_enc.hiddens[i][j] ==
            doctest::Approx(fwd_enc.hiddens[T - 1 - i][H + j]).epsilon(1e-12));
      CHECK(rev_enc.hiddens[i][H + j] ==
            doctest::Approx(fwd_enc.hiddens[T - 1 - i][j]).epsilon(1e-12));
    }
  for (std::size_t j = 0; j < H; ++j) {
    CHECK(rev_enc.sentence_embedding[j] ==
          doctest::Approx(fwd_enc.sentence_embedding[H + j]).epsilon(1e-12));
    CHECK(rev_enc.sentence_embedding[H + j] ==
          doctest::Approx(fwd_enc.sentence_embedding[j]).epsilon(1e-12));
  }
}

TEST_CASE("attend produces the expected weights") {
  SUBCASE("identical hiddens attend uniformly") {
    std::vector<std::vector<double>> h(4, std::vector<double>{0.3, -0.2});
    auto res = attend(h, {1.0, 1.0});
    for (double a : res.alpha) CHECK(a == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("single hidden takes all the mass") {
    auto res = attend({{0.5, 0.5}}, {2.0, -1.0});
    CHECK(res.alpha == std::vector<double>{1.0});
    CHECK(res.context == std::vector<double>{0.5, 0.5});
  }
  SUBCASE("dot scores ln2 and 0 split two to one") {
    auto res = attend({{std::log(2.0)}, {0.0}}, {1.0});
    CHECK(res.alpha[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(res.alpha[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(res.context[0] == doctest::Approx(2.0 * std::log(2.0) / 3.0).epsilon(1e-12));
  }
  SUBCASE("cosine scoring ignores vector length") {
    std::vector<std::vector<double>> h = {{2.0, 0.0}, {0.0, 3.0}};
    auto a = attend(h, {1.0, 0.0}, ModelConfig::Scoring::cosine);
    std::vector<std::vector<double>> h5 = {{10.0, 0.0}, {0.0, 15.0}};
    auto b = attend(h5, {1.0, 0.0}, ModelConfig::Scoring::cosine);
    CHECK(a.alpha[0] == doctest::Approx(b.alpha[0]).epsilon(1e-12));
    CHECK(a.alpha[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-12));
  }
  SUBCASE("zero-norm hidden under cosine scores zero, not NaN") {
    auto res = attend({{0.0, 0.0}, {1.0, 0.0}}, {1.0, 0.0}, ModelConfig::Scoring::cosine);
    CHECK(std::isfinite(res.alpha[0]));
    CHECK(res.alpha[0] == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(attend({}, {1.0}), EmptyVector);
    CHECK_THROWS_AS(attend({{1.0, 2.0}}, {1.0}), DimensionError);
  }
}

TEST_CASE("forward yields simplex probabilities and simplex attention") {
  for (auto scoring : {ModelConfig::Scoring::dot, ModelConfig::Scoring::cosine}) {
    ModelParams p = tiny_model(scoring);
    Dataset d = tiny_dataset();
    for (const auto& pair : d.pairs) {
      ForwardResult r = forward(p, pair);
      REQUIRE(r.class_probs.size() == 3);
      double sum = 0.0;
      for (double v : r.class_probs) {
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(r.alpha_premise.size() == pair.premise.size());
      CHECK(r.alpha_hypothesis.size() == pair.hypothesis.size());
      double ap = 0.0, ah = 0.0;
      for (double v : r.alpha_premise) ap += v;
      for (double v : r.alpha_hypothesis) ah += v;
      CHECK(ap == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(ah == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("loss is the negative log of the gold probability") {
  std::vector<double> uniform = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  CHECK(loss(uniform, NliLabel::entailment) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  std::vector<double> sharp = {0.99, 0.005, 0.005};
  CHECK(loss(sharp, NliLabel::entailment) == doctest::Approx(-std::log(0.99)).epsilon(1e-12));
  CHECK(loss(sharp, NliLabel::neutral) == doctest::Approx(-std::log(0.005)).epsilon(1e-12));
  CHECK_THROWS_AS(loss({0.5, 0.5}, NliLabel::entailment), DimensionError);
}

TEST_CASE("batch mean loss matches per-pair forward losses") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  Dataset d = tiny_dataset();
  std::vector<const SentencePair*> batch;
  for (const auto& pair : d.pairs) batch.push_back(&pair);
  BatchGradients bg = gradients(p, batch);
  CHECK(bg.mean_loss == doctest::Approx(batch_loss(p, batch)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  Dataset d = tiny_dataset();
  std::vector<const SentencePair*> batch;
  for (const auto& pair : d.pairs) batch.push_back(&pair);
  const double step = 1e-5;

  for (auto scoring : {ModelConfig::Scoring::dot, ModelConfig::Scoring::cosine}) {
    CAPTURE(scoring == ModelConfig::Scoring::dot ? "dot" : "cosine");
    ModelParams p = tiny_model(scoring);
    BatchGradients bg = gradients(p, batch);

    std::vector<std::pair<double*, std::size_t>> param_t, grad_t;
    std::vector<const char*> names;
    for_each_tensor(p, [&](const char* name, double* data, std::size_t n) {
      param_t.emplace_back(data, n);
      names.push_back(name);
    });
    for_each_tensor(bg.grads, [&](const char*, double* data, std::size_t n) {
      grad_t.emplace_back(data, n);
    });
    REQUIRE(param_t.size() == grad_t.size());

    DetRng pick(314);
    for (std::size_t t = 0; t < param_t.size(); ++t) {
      CAPTURE(names[t]);
      std::size_t n = param_t[t].second;
      std::size_t samples = std::min<std::size_t>(n, 6);
      for (std::size_t s = 0; s < samples; ++s) {
        std::size_t i = pick.next_index(n);
        double* slot = param_t[t].first + i;
        double saved = *slot;
        *slot = saved + step;
        double up = batch_loss(p, batch);
        *slot = saved - step;
        double down = batch_loss(p, batch);
        *slot = saved;
        double fd = (up - down) / (2.0 * step);
        double analytic = grad_t[t].first[i];
        double rel = std::abs(analytic - fd) /
                     std::max({std::abs(analytic), std::abs(fd), 1e-6});
        CAPTURE(i);
        CAPTURE(analytic);
        CAPTURE(fd);
        CHECK(rel < 1e-4);
      }
    }
  }
}

TEST_CASE("embedding gradient is zero for words outside the batch") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  Dataset d = tiny_dataset();
  // only the first pair participates, so "cats" gets no gradient
  std::vector<const SentencePair*> batch = {&d.pairs[0]};
  BatchGradients bg = gradients(p, batch);
  std::size_t cats = p.index_of("cats");
  REQUIRE(cats != 0);
  for (std::size_t c = 0; c < p.config.d_e; ++c)
    CHECK(bg.grads.embedding.at(cats, c) == 0.0);
  // but a word in the batch does
  std::size_t dog = p.index_of("dog");
  double mass = 0.0;
  for (std::size_t c = 0; c < p.config.d_e; ++c)
    mass += std::abs(bg.grads.embedding.at(dog, c));
  CHECK(mass > 0.0);
}

TEST_CASE("duplicating a batch leaves the mean gradient unchanged") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  Dataset d = tiny_dataset();
  std::vector<const SentencePair*> once = {&d.pairs[0], &d.pairs[1]};
  std::vector<const SentencePair*> twice = {&d.pairs[0], &d.pairs[1], &d.pairs[0],
                                            &d.pairs[1]};
  BatchGradients a = gradients(p, once);
  BatchGradients b = gradients(p, twice);
  CHECK(a.mean_loss == doctest::Approx(b.mean_loss).epsilon(1e-12));
  std::vector<std::pair<double*, std::size_t>> ta, tb;
  for_each_tensor(a.grads, [&](const char*, double* x, std::size_t n) { ta.emplace_back(x, n); });
  for_each_tensor(b.grads, [&](const char*, double* x, std::size_t n) { tb.emplace_back(x, n); });
  for (std::size_t t = 0; t < ta.size(); ++t)
    for (std::size_t i = 0; i < ta[t].second; ++i)
      CHECK(ta[t].first[i] == doctest::Approx(tb[t].first[i]).epsilon(1e-12));
}

TEST_CASE("gradient reduction does not depend on the thread count") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  Dataset d = tiny_dataset();
  std::vector<const SentencePair*> batch;
  for (const auto& pair : d.pairs) batch.push_back(&pair);
  BatchGradients g1 = gradients(p, batch, 1);
  BatchGradients g4 = gradients(p, batch, 4);
  CHECK(g1.mean_loss == g4.mean_loss);
  std::vector<std::pair<double*, std::size_t>> ta, tb;
  for_each_tensor(g1.grads, [&](const char*, double* x, std::size_t n) { ta.emplace_back(x, n); });
  for_each_tensor(g4.grads, [&](const char*, double* x, std::size_t n) { tb.emplace_back(x, n); });
  for (std::size_t t = 0; t < ta.size(); ++t)
    CHECK(std::memcmp(ta[t].first, tb[t].first, ta[t].second * sizeof(double)) == 0);
}

namespace {

Dataset toy_task(std::size_t per_class, std::uint64_t seed) {
  const std::vector<std::vector<std::string>> pools = {
      {"cat", "purrs", "happy", "soft"},     // entailment
      {"dog", "barks", "angry", "loud"},     // contradiction
      {"bird", "sings", "maybe", "blue"}};   // neutral
  const NliLabel labels[3] = {NliLabel::entailment, NliLabel::contradiction,
                              NliLabel::neutral};
  DetRng rng(seed);
  Dataset d;
  d.split_name = "toy";
  std::size_t n = 0;
  for (std::size_t k = 0; k < per_class; ++k)
    for (int c = 0; c < 3; ++c) {
      const auto& pool = pools[c];
      std::string w1 = pool[rng.next_index(pool.size())];
      std::string w2 = pool[rng.next_index(pool.size())];
      std::string w3 = pool[rng.next_index(pool.size())];
      d.pairs.push_back(mk("toy" + std::to_string(n++), "the " + w1 + " " + w2 + " today",
                           "it is " + w3 + " now", labels[c]));
    }
  return d;
}

}  // namespace

TEST_CASE("training fits a separable toy task") {
  Dataset train_set = toy_task(10, 5);
  Dataset dev_set = toy_task(4, 6);
  ModelConfig cfg;
  cfg.d_e = 8;
  cfg.d_h = 8;
  cfg.seed = 3;
  EmbeddingTable table(8, OovPolicy::seeded_uniform(-0.1, 0.1, 7));
  ModelParams p = init_model(cfg, build_vocab(train_set), table);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 40;
  tc.seed = 3;
  auto logs = train(p, train_set, dev_set, tc);
  REQUIRE(logs.size() == 40);
  CHECK(logs.front().epoch == 1);
  CHECK(logs.back().epoch == 40);
  CHECK(logs.back().train_loss < logs.front().train_loss);

  EvalNumbers on_train = classify_and_score(p, train_set);
  CHECK(on_train.accuracy >= 0.95);
  CHECK(on_train.macro_f1 >= 0.9);
  // the dev pool is drawn from the same three vocabularies
  CHECK(logs.back().dev_accuracy >= 0.9);
}

TEST_CASE("training is bitwise deterministic across runs") {
  Dataset train_set = toy_task(4, 9);
  Dataset dev_set = toy_task(2, 10);
  ModelConfig cfg;
  cfg.d_e = 6;
  cfg.d_h = 6;
  cfg.seed = 21;
  EmbeddingTable table(6, OovPolicy::seeded_uniform(-0.1, 0.1, 7));
  TrainConfig tc;
  tc.batch_size = 4;
  tc.epochs = 3;
  tc.seed = 21;

  ModelParams a = init_model(cfg, build_vocab(train_set), table);
  ModelParams b = init_model(cfg, build_vocab(train_set), table);
  tc.threads = 1;
  auto la = train(a, train_set, dev_set, tc);
  tc.threads = 3;  // thread count must not change the arithmetic
  auto lb = train(b, train_set, dev_set, tc);
  REQUIRE(la.size() == lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    CHECK(la[i].train_loss == lb[i].train_loss);
    CHECK(la[i].dev_accuracy == lb[i].dev_accuracy);
    CHECK(la[i].dev_macro_f1 == lb[i].dev_macro_f1);
  }
  auto sa = snapshot(a), sb = snapshot(b);
  for (std::size_t t = 0; t < sa.size(); ++t) CHECK(sa[t] == sb[t]);
}

TEST_CASE("zero learning rate leaves parameters bitwise untouched") {
  Dataset train_set = toy_task(4, 9);
  Dataset dev_set = toy_task(2, 10);
  ModelConfig cfg;
  cfg.d_e = 6;
  cfg.d_h = 6;
  EmbeddingTable table(6, OovPolicy::seeded_uniform(-0.1, 0.1, 7));
  ModelParams p = init_model(cfg, build_vocab(train_set), table);
  auto before = snapshot(p);
  TrainConfig tc;
  tc.lr = 0.0;
  tc.epochs = 2;
  tc.batch_size = 4;
  train(p, train_set, dev_set, tc);
  auto after = snapshot(p);
  for (std::size_t t = 0; t < before.size(); ++t) CHECK(before[t] == after[t]);
}

TEST_CASE("extract_attention returns one simplex per sentence in corpus order") {
  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  Dataset d = tiny_dataset();
  auto maps = extract_attention(p, d, 2);
  REQUIRE(maps.size() == d.pairs.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    CHECK(maps[i].pair_id == d.pairs[i].pair_id);
    REQUIRE(maps[i].premise.size() == d.pairs[i].premise.size());
    REQUIRE(maps[i].hypothesis.size() == d.pairs[i].hypothesis.size());
    double sp = 0.0, sh = 0.0;
    for (double v : maps[i].premise) sp += v;
    for (double v : maps[i].hypothesis) sh += v;
    CHECK(sp == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sh == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("model file round trip preserves everything") {
  ModelParams p = tiny_model(ModelConfig::Scoring::cosine, 29);
  const std::string path = "round_trip_model.bin";
  save_model(p, path);
  ModelParams q = load_model(path);
  std::remove(path.c_str());

  CHECK(q.config.d_e == p.config.d_e);
  CHECK(q.config.d_h == p.config.d_h);
  CHECK(q.config.d_merge == p.config.d_merge);
  CHECK(q.config.d_cls == p.config.d_cls);
  CHECK(q.config.seed == p.config.seed);
  CHECK((q.config.scoring == ModelConfig::Scoring::cosine));
  CHECK(q.vocab == p.vocab);
  auto sp = snapshot(p), sq = snapshot(q);
  REQUIRE(sp.size() == sq.size());
  for (std::size_t t = 0; t < sp.size(); ++t) CHECK(sp[t] == sq[t]);

  // the loaded model computes identical outputs
  Dataset d = tiny_dataset();
  ForwardResult a = forward(p, d.pairs[0]);
  ForwardResult b = forward(q, d.pairs[0]);
  CHECK(a.class_probs == b.class_probs);
  CHECK(a.alpha_premise == b.alpha_premise);
}

TEST_CASE("model loader rejects junk") {
  {
    std::ofstream out("junk_model.bin", std::ios::binary);
    out << "definitely not a model";
  }
  CHECK_THROWS_AS(load_model("junk_model.bin"), FormatError);
  std::remove("junk_model.bin");

  ModelParams p = tiny_model(ModelConfig::Scoring::dot);
  save_model(p, "short_model.bin");
  {
    std::ifstream in("short_model.bin", std::ios::binary);
    std::string head(120, '\0');
    in.read(head.data(), 120);
    std::ofstream out("short_model.bin", std::ios::binary | std::ios::trunc);
    out.write(head.data(), in.gcount());
  }
  CHECK_THROWS_AS(load_model("short_model.bin"), FormatError);
  std::remove("short_model.bin");

  CHECK_THROWS_AS(load_model("no_such_model.bin"), IoError);
}
