#include "attnplaus/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>

#include "attnplaus/csv.hpp"
#include "attnplaus/errors.hpp"

namespace attnplaus {
namespace {

bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Token make_token(std::string_view surface, const StopWords& stops) {
  Token t;
  t.surface = std::string(surface);
  t.normalized = lowercase(surface);
  t.is_stop = stops.contains(t.normalized);
  return t;
}

}  // namespace

const char* to_string(PosCategory pos) {
  switch (pos) {
    case PosCategory::verb: return "VERB";
    case PosCategory::noun: return "NOUN";
    case PosCategory::adj: return "ADJ";
    case PosCategory::num: return "NUM";
    case PosCategory::adp: return "ADP";
    case PosCategory::det: return "DET";
    case PosCategory::other: return "OTHER";
  }
  return "OTHER";
}

PosCategory parse_pos(std::string_view tag) {
  std::string up(tag);
  for (char& c : up)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  if (up == "VERB") return PosCategory::verb;
  if (up == "NOUN") return PosCategory::noun;
  if (up == "ADJ") return PosCategory::adj;
  if (up == "NUM") return PosCategory::num;
  if (up == "ADP") return PosCategory::adp;
  if (up == "DET") return PosCategory::det;
  return PosCategory::other;
}

const char* to_string(NliLabel label) {
  switch (label) {
    case NliLabel::entailment: return "entailment";
    case NliLabel::contradiction: return "contradiction";
    case NliLabel::neutral: return "neutral";
  }
  return "entailment";
}

std::optional<NliLabel> parse_label(std::string_view text) {
  std::string low = lowercase(trim(text));
  if (low == "entailment") return NliLabel::entailment;
  if (low == "contradiction") return NliLabel::contradiction;
  if (low == "neutral") return NliLabel::neutral;
  return std::nullopt;
}

std::vector<Token> tokenize(std::string_view text, const StopWords& stops) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::string_view chunk = text.substr(i, j - i);
      std::size_t l = 0, r = chunk.size();
      while (l < r && is_ascii_punct(chunk[l])) {
        out.push_back(make_token(chunk.substr(l, 1), stops));
        ++l;
      }
      // trailing marks keep their original order, so collect before emitting
      std::size_t core_end = r;
      while (core_end > l && is_ascii_punct(chunk[core_end - 1])) --core_end;
      if (core_end > l) out.push_back(make_token(chunk.substr(l, core_end - l), stops));
      for (std::size_t k = core_end; k < r; ++k)
        out.push_back(make_token(chunk.substr(k, 1), stops));
    }
    i = j;
  }
  if (out.empty()) throw EmptySentence();
  return out;
}

std::vector<std::uint8_t> parse_highlights(std::string_view index_list,
                                           std::size_t token_count) {
  std::vector<std::uint8_t> mask(token_count, 0);
  std::string_view body = trim(index_list);
  if (body.empty() || body == "{}") return mask;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t comma = body.find(',', pos);
    std::string_view piece =
        trim(body.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
    if (piece.empty())
      throw FormatError("empty entry in highlight list '" + std::string(index_list) + "'");
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec != std::errc() || ptr != piece.data() + piece.size())
      throw FormatError("bad highlight index '" + std::string(piece) + "'");
    if (value >= token_count) throw HighlightOutOfRange(value, token_count);
    mask[value] = 1;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return mask;
}

ColumnMap ColumnMap::parse(std::string_view spec) {
  ColumnMap map;
  bool premise_hl_set = false, hypothesis_hl_set = false;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t comma = spec.find(',', pos);
    std::string_view entry =
        spec.substr(pos, comma == std::string_view::npos ? comma : comma - pos);
    pos = comma == std::string_view::npos ? spec.size() : comma + 1;
    entry = trim(entry);
    if (entry.empty()) continue;
    std::size_t eq = entry.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("--columns entry '" + std::string(entry) + "' is not key=value");
    std::string key(trim(entry.substr(0, eq)));
    std::string value(trim(entry.substr(eq + 1)));
    if (value.empty())
      throw UsageError("--columns entry '" + std::string(entry) + "' has an empty value");
    auto split_plus = [](const std::string& v) {
      std::vector<std::string> cols;
      std::size_t p = 0;
      while (p <= v.size()) {
        std::size_t plus = v.find('+', p);
        std::string col(trim(v.substr(p, plus == std::string::npos ? plus : plus - p)));
        if (!col.empty()) cols.push_back(std::move(col));
        if (plus == std::string::npos) break;
        p = plus + 1;
      }
      return cols;
    };
    if (key == "pair_id") map.pair_id = value;
    else if (key == "label") map.label = value;
    else if (key == "premise") map.premise = value;
    else if (key == "hypothesis") map.hypothesis = value;
    else if (key == "premise_hl") { map.premise_highlight = split_plus(value); premise_hl_set = true; }
    else if (key == "hypothesis_hl") { map.hypothesis_highlight = split_plus(value); hypothesis_hl_set = true; }
    else if (key == "premise_pos") map.premise_pos = value;
    else if (key == "hypothesis_pos") map.hypothesis_pos = value;
    else throw UsageError("--columns has unknown key '" + key + "'");
  }
  if ((premise_hl_set && map.premise_highlight.empty()) ||
      (hypothesis_hl_set && map.hypothesis_highlight.empty()))
    throw UsageError("--columns highlight entry names no columns");
  return map;
}

namespace {

void apply_pos_tags(std::vector<Token>& tokens, std::string_view cell,
                    const std::string& pair_id) {
  std::vector<std::string_view> tags;
  std::size_t i = 0;
  while (i < cell.size()) {
    while (i < cell.size() && std::isspace(static_cast<unsigned char>(cell[i]))) ++i;
    std::size_t j = i;
    while (j < cell.size() && !std::isspace(static_cast<unsigned char>(cell[j]))) ++j;
    if (j > i) tags.push_back(cell.substr(i, j - i));
    i = j;
  }
  if (tags.size() != tokens.size())
    throw FormatError("pair " + pair_id + ": " + std::to_string(tags.size()) +
                      " POS tags for " + std::to_string(tokens.size()) + " tokens");
  for (std::size_t k = 0; k < tokens.size(); ++k) tokens[k].pos = parse_pos(tags[k]);
}

}  // namespace

Dataset parse_corpus(const std::string& path, const ColumnMap& columns,
                     const StopWords& stops, std::size_t limit) {
  CsvTable table = read_csv(path);

  auto require = [&](const std::string& name) {
    int idx = table.column(name);
    if (idx < 0) throw SchemaError("missing column '" + name + "' in " + path);
    return idx;
  };
  int c_id = require(columns.pair_id);
  int c_label = require(columns.label);
  int c_prem = require(columns.premise);
  int c_hyp = require(columns.hypothesis);
  std::vector<int> c_prem_hl, c_hyp_hl;
  for (const auto& name : columns.premise_highlight) c_prem_hl.push_back(require(name));
  for (const auto& name : columns.hypothesis_highlight) c_hyp_hl.push_back(require(name));
  int c_prem_pos = columns.premise_pos ? require(*columns.premise_pos) : -1;
  int c_hyp_pos = columns.hypothesis_pos ? require(*columns.hypothesis_pos) : -1;

  Dataset d;
  d.split_name = path;
  std::unordered_map<std::string, std::size_t> seen_ids;
  for (const auto& row : table.rows) {
    if (limit && d.pairs.size() >= limit) break;
    auto cell = [&](int idx) -> std::string_view {
      return static_cast<std::size_t>(idx) < row.size() ? std::string_view(row[idx])
                                                        : std::string_view{};
    };
    std::optional<NliLabel> label = parse_label(cell(c_label));
    if (!label) {
      ++d.skipped_label_rows;
      continue;
    }
    SentencePair pair;
    pair.pair_id = std::string(trim(cell(c_id)));
    if (pair.pair_id.empty())
      throw SchemaError("row with empty pair id in " + path);
    if (!seen_ids.emplace(pair.pair_id, d.pairs.size()).second)
      throw SchemaError("duplicate pair id '" + pair.pair_id + "' in " + path);
    pair.label = *label;
    try {
      pair.premise = tokenize(cell(c_prem), stops);
      pair.hypothesis = tokenize(cell(c_hyp), stops);
    } catch (const EmptySentence&) {
      throw EmptySentence("pair " + pair.pair_id + ": empty sentence");
    }

    auto union_masks = [&](const std::vector<int>& cols, std::size_t count) {
      std::vector<std::uint8_t> merged(count, 0);
      for (int idx : cols) {
        std::vector<std::uint8_t> one;
        try {
          one = parse_highlights(cell(idx), count);
        } catch (const HighlightOutOfRange& e) {
          throw HighlightOutOfRange(e.index, e.token_count, pair.pair_id);
        }
        for (std::size_t k = 0; k < count; ++k) merged[k] |= one[k];
      }
      return merged;
    };
    pair.premise_highlight = union_masks(c_prem_hl, pair.premise.size());
    pair.hypothesis_highlight = union_masks(c_hyp_hl, pair.hypothesis.size());

    if (c_prem_pos >= 0) apply_pos_tags(pair.premise, cell(c_prem_pos), pair.pair_id);
    if (c_hyp_pos >= 0) apply_pos_tags(pair.hypothesis, cell(c_hyp_pos), pair.pair_id);

    d.pairs.push_back(std::move(pair));
  }
  if (d.pairs.empty())
    throw SchemaError("no usable rows in " + path + " (" +
                      std::to_string(d.skipped_label_rows) + " skipped by label)");
  return d;
}

Dataset filter_by_label(const Dataset& d, NliLabel label) {
  Dataset out;
  out.split_name = d.split_name;
  for (const auto& pair : d.pairs)
    if (pair.label == label) out.pairs.push_back(pair);
  if (out.pairs.empty())
    throw EmptySelection(std::string("no pairs with label ") + to_string(label));
  return out;
}

double highlight_rate(const Dataset& d) {
  std::size_t highlighted = 0, total = 0;
  for (const auto& pair : d.pairs) {
    for (std::uint8_t b : pair.premise_highlight) highlighted += b;
    for (std::uint8_t b : pair.hypothesis_highlight) highlighted += b;
    total += pair.premise_highlight.size() + pair.hypothesis_highlight.size();
  }
  return total ? static_cast<double>(highlighted) / static_cast<double>(total) : 0.0;
}

PosStats pos_stats(const Dataset& d) {
  PosStats stats;
  std::map<PosCategory, std::size_t> counts;
  for (const auto& pair : d.pairs) {
    auto scan = [&](const std::vector<Token>& tokens,
                    const std::vector<std::uint8_t>& mask) {
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!mask[i]) continue;
        if (!tokens[i].pos) throw MissingPosTags();
        ++counts[*tokens[i].pos];
        ++stats.highlighted_tokens;
      }
    };
    scan(pair.premise, pair.premise_highlight);
    scan(pair.hypothesis, pair.hypothesis_highlight);
  }
  if (stats.highlighted_tokens == 0)
    throw EmptySelection("no highlighted tokens for POS statistics");
  for (PosCategory cat : {PosCategory::verb, PosCategory::noun, PosCategory::adj,
                          PosCategory::num, PosCategory::adp, PosCategory::det,
                          PosCategory::other}) {
    auto it = counts.find(cat);
    stats.fraction[cat] =
        it == counts.end()
            ? 0.0
            : static_cast<double>(it->second) / static_cast<double>(stats.highlighted_tokens);
  }
  stats.verb_noun_adj = stats.fraction[PosCategory::verb] +
                        stats.fraction[PosCategory::noun] +
                        stats.fraction[PosCategory::adj];
  return stats;
}

double oov_rate(const Dataset& d, const std::unordered_set<std::string>& vocab) {
  std::size_t oov = 0, total = 0;
  for (const auto& pair : d.pairs) {
    for (const auto& t : pair.premise) {
      if (!vocab.count(t.normalized)) ++oov;
      ++total;
    }
    for (const auto& t : pair.hypothesis) {
      if (!vocab.count(t.normalized)) ++oov;
      ++total;
    }
  }
  return total ? static_cast<double>(oov) / static_cast<double>(total) : 0.0;
}

}  // namespace attnplaus
