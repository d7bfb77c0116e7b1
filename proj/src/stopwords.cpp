#include "attnplaus/corpus.hpp"

#include <fstream>

#include "attnplaus/errors.hpp"

namespace attnplaus {
namespace {

// 127 entries: function words plus the punctuation marks the tokenizer can
// peel off. Pinned here rather than loaded at runtime so every run of the
// toolkit agrees on which positions the heuristic masks out.
const char* const kEmbedded[] = {
    // articles, demonstratives
    "the", "a", "an", "this", "that", "these", "those", "each", "every",
    // pronouns
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
    "them", "my", "your", "his", "its", "our", "their", "mine", "yours",
    "hers", "ours", "theirs", "himself", "herself", "itself", "themselves",
    // wh words
    "who", "whom", "whose", "which", "what", "when", "where",
    // prepositions
    "of", "in", "on", "at", "by", "for", "with", "about", "against",
    "between", "into", "through", "during", "before", "after", "above",
    "below", "to", "from", "up", "down", "over", "under", "near",
    // conjunctions
    "and", "but", "or", "nor", "so", "yet", "if", "because", "as", "while",
    // auxiliaries and modals
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "will", "would", "shall",
    "should", "can", "could", "may", "might", "must",
    // frequent adverbs and quantifiers
    "not", "no", "only", "just", "very", "too", "also", "then", "there",
    "here", "how", "why", "all", "some", "any", "both", "such",
    // punctuation tokens
    ".", ",", ";", ":", "!", "?", "'", "\"",
};

}  // namespace

StopWords StopWords::none() { return StopWords{}; }

StopWords StopWords::embedded() {
  StopWords sw;
  for (const char* word : kEmbedded) {
    sw.ordered_.emplace_back(word);
    sw.set_.emplace(word);
  }
  return sw;
}

StopWords StopWords::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stop-word file " + path);
  StopWords sw;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // trim surrounding spaces
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t");
    std::string word = line.substr(b, e - b + 1);
    for (char& c : word)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (sw.set_.insert(word).second) sw.ordered_.push_back(std::move(word));
  }
  if (sw.ordered_.empty()) throw DataError("stop-word file " + path + " has no entries");
  return sw;
}

bool StopWords::contains(std::string_view normalized) const {
  return set_.count(std::string(normalized)) > 0;
}

}  // namespace attnplaus
