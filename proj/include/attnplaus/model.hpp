#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "attnplaus/corpus.hpp"
#include "attnplaus/embeddings.hpp"
#include "attnplaus/metrics.hpp"

namespace attnplaus {

// Row-major dense matrix, double precision throughout so gradient checks
// are not fighting float rounding.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

// One LSTM direction. Gate rows are stacked [i, f, g, o], each d_h tall.
struct LstmWeights {
  Mat w_in;                  // 4*d_h x d_e
  Mat w_rec;                 // 4*d_h x d_h
  std::vector<double> bias;  // 4*d_h
};

struct ModelConfig {
  std::size_t d_e = 64;
  std::size_t d_h = 64;
  std::size_t d_merge = 0;  // 0 -> 2*d_h
  std::size_t d_cls = 0;    // 0 -> 2*d_h
  enum class Scoring { dot, cosine };
  Scoring scoring = Scoring::dot;
  std::uint64_t seed = 1;
};

struct ModelParams {
  ModelConfig config;
  std::vector<std::string> vocab;  // [0] is the unknown-word slot
  std::unordered_map<std::string, std::size_t> vocab_index;

  Mat embedding;  // |V| x d_e
  LstmWeights fwd, bwd;
  Mat w_merge;  // d_merge x 4*d_h
  std::vector<double> b_merge;
  Mat w_cls1;  // d_cls x 2*d_merge
  std::vector<double> b_cls1;
  Mat w_cls2;  // 3 x d_cls
  std::vector<double> b_cls2;

  std::size_t index_of(const std::string& normalized) const;
};

// Vocabulary from the corpus in first-appearance order, unknown slot first.
std::vector<std::string> build_vocab(const Dataset& d);

// Fresh parameters: embedding rows from the table (its OOV policy covers
// words the table lacks), everything else uniform in +-sqrt(6/(fan_in+fan_out)),
// forget-gate bias 1.
ModelParams init_model(const ModelConfig& config, const std::vector<std::string>& vocab,
                       const EmbeddingTable& table);

struct LstmState {
  std::vector<double> h, c;
};

LstmState lstm_step(const LstmWeights& w, const std::vector<double>& x,
                    const std::vector<double>& h_prev, const std::vector<double>& c_prev);

struct EncodedSentence {
  std::vector<std::vector<double>> hiddens;  // per token, 2*d_h
  std::vector<double> sentence_embedding;    // [fwd last; bwd last], 2*d_h
};

EncodedSentence encode(const ModelParams& params, const std::vector<Token>& tokens);

struct AttentionResult {
  std::vector<double> alpha;
  std::vector<double> context;  // 2*d_h
};

AttentionResult attend(const std::vector<std::vector<double>>& hiddens,
                       const std::vector<double>& query,
                       ModelConfig::Scoring scoring = ModelConfig::Scoring::dot);

struct ForwardResult {
  std::vector<double> class_probs;  // 3
  std::vector<double> alpha_premise;
  std::vector<double> alpha_hypothesis;
};

ForwardResult forward(const ModelParams& params, const SentencePair& pair);

double loss(const std::vector<double>& class_probs, NliLabel gold);

// Same tensor layout as the trainable part of ModelParams.
struct Gradients {
  Mat embedding;
  LstmWeights fwd, bwd;
  Mat w_merge;
  std::vector<double> b_merge;
  Mat w_cls1;
  std::vector<double> b_cls1;
  Mat w_cls2;
  std::vector<double> b_cls2;
};

struct BatchGradients {
  Gradients grads;
  double mean_loss = 0.0;
};

// Exact analytic gradient of the mean cross-entropy over the batch.
// Per-example gradients are reduced in example order, so the result does
// not depend on the thread count.
BatchGradients gradients(const ModelParams& params,
                         const std::vector<const SentencePair*>& batch,
                         unsigned threads = 1);

struct TrainConfig {
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  double dev_macro_f1 = 0.0;
};

std::vector<EpochLog> train(ModelParams& params, const Dataset& train_set,
                            const Dataset& dev_set, const TrainConfig& config);

struct EvalNumbers {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

EvalNumbers classify_and_score(const ModelParams& params, const Dataset& d,
                               unsigned threads = 1);

std::vector<AttentionMap> extract_attention(const ModelParams& params, const Dataset& d,
                                            unsigned threads = 1);

void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

// Shared by training and tests: numerically safe softmax.
std::vector<double> softmax(const std::vector<double>& scores);

// Visits every trainable tensor in a fixed order: name, data, element count.
// ModelParams and Gradients are laid out identically, so updates walk both.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn fn) {
  fn("embedding", p.embedding.a.data(), p.embedding.a.size());
  fn("fwd.w_in", p.fwd.w_in.a.data(), p.fwd.w_in.a.size());
  fn("fwd.w_rec", p.fwd.w_rec.a.data(), p.fwd.w_rec.a.size());
  fn("fwd.bias", p.fwd.bias.data(), p.fwd.bias.size());
  fn("bwd.w_in", p.bwd.w_in.a.data(), p.bwd.w_in.a.size());
  fn("bwd.w_rec", p.bwd.w_rec.a.data(), p.bwd.w_rec.a.size());
  fn("bwd.bias", p.bwd.bias.data(), p.bwd.bias.size());
  fn("w_merge", p.w_merge.a.data(), p.w_merge.a.size());
  fn("b_merge", p.b_merge.data(), p.b_merge.size());
  fn("w_cls1", p.w_cls1.a.data(), p.w_cls1.a.size());
  fn("b_cls1", p.b_cls1.data(), p.b_cls1.size());
  fn("w_cls2", p.w_cls2.a.data(), p.w_cls2.a.size());
  fn("b_cls2", p.b_cls2.data(), p.b_cls2.size());
}

}  // namespace attnplaus
