#pragma once

#include <vector>

#include "attnplaus/corpus.hpp"
#include "attnplaus/embeddings.hpp"

namespace attnplaus {

struct HeuristicMap {
  std::vector<double> premise_scores;     // length n, in [0,1]
  std::vector<double> hypothesis_scores;  // length m, in [0,1]
  std::vector<std::vector<double>> similarity_matrix;  // n rows, m columns
  bool premise_all_stop = false;
  bool hypothesis_all_stop = false;
};

// max(0, cosine) of the two token embeddings; 0 when either side is a stop word.
double similarity01(const Token& w, const Token& v, const EmbeddingTable& t);

// (x - min)/(max - min); all zeros when max == min.
std::vector<double> minmax_normalize(const std::vector<double>& xs);

HeuristicMap heuristic_map(const SentencePair& pair, const EmbeddingTable& t);

}  // namespace attnplaus
