#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace attnplaus {

enum class PosCategory { verb, noun, adj, num, adp, det, other };

const char* to_string(PosCategory pos);
PosCategory parse_pos(std::string_view tag);  // unknown tags map to `other`

enum class NliLabel { entailment, contradiction, neutral };

const char* to_string(NliLabel label);
std::optional<NliLabel> parse_label(std::string_view text);

struct Token {
  std::string surface;
  std::string normalized;  // lowercased surface
  bool is_stop = false;
  std::optional<PosCategory> pos;
};

struct SentencePair {
  std::string pair_id;
  std::vector<Token> premise;
  std::vector<Token> hypothesis;
  NliLabel label = NliLabel::entailment;
  std::vector<std::uint8_t> premise_highlight;    // 0/1, same length as premise
  std::vector<std::uint8_t> hypothesis_highlight;
};

struct Dataset {
  std::vector<SentencePair> pairs;
  std::string split_name;
  std::size_t skipped_label_rows = 0;  // rows whose label was not one of the three classes
};

// Fixed stop-word set. The embedded list ships with the binary so results
// are reproducible; a file override replaces it wholesale.
class StopWords {
 public:
  static StopWords embedded();
  static StopWords from_file(const std::string& path);  // one token per line
  static StopWords none();

  bool contains(std::string_view normalized) const;
  const std::vector<std::string>& entries() const { return ordered_; }

 private:
  std::vector<std::string> ordered_;
  std::unordered_set<std::string> set_;
};

// Which CSV columns hold what. Multiple annotator highlight columns are
// unioned into one mask.
struct ColumnMap {
  std::string pair_id = "pairID";
  std::string label = "gold_label";
  std::string premise = "Sentence1";
  std::string hypothesis = "Sentence2";
  std::vector<std::string> premise_highlight = {"Sentence1_Highlighted_1"};
  std::vector<std::string> hypothesis_highlight = {"Sentence2_Highlighted_1"};
  std::optional<std::string> premise_pos;
  std::optional<std::string> hypothesis_pos;

  // Parses "pair_id=...,label=...,premise_hl=colA+colB,..." as passed to
  // --columns. Unknown keys are rejected; omitted keys keep their defaults.
  static ColumnMap parse(std::string_view spec);
};

// Whitespace split, then leading/trailing ASCII punctuation peeled off as
// separate tokens. Internal punctuation (don't, well-known) is preserved.
std::vector<Token> tokenize(std::string_view text, const StopWords& stops);

// "1,3" or the empty-set sentinel "{}" into a 0/1 mask of length token_count.
std::vector<std::uint8_t> parse_highlights(std::string_view index_list,
                                           std::size_t token_count);

Dataset parse_corpus(const std::string& path, const ColumnMap& columns,
                     const StopWords& stops, std::size_t limit = 0);

Dataset filter_by_label(const Dataset& d, NliLabel label);

// Highlighted tokens over all tokens, premise and hypothesis pooled.
double highlight_rate(const Dataset& d);

struct PosStats {
  std::map<PosCategory, double> fraction;  // of highlighted tokens, sums to 1
  double verb_noun_adj = 0.0;
  std::size_t highlighted_tokens = 0;
};

PosStats pos_stats(const Dataset& d);

double oov_rate(const Dataset& d, const std::unordered_set<std::string>& vocab);

}  // namespace attnplaus
