#include "attnplaus/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "attnplaus/errors.hpp"
#include "attnplaus/rng.hpp"

namespace attnplaus {

EmbeddingTable::EmbeddingTable(std::size_t dim, OovPolicy policy)
    : dim_(dim), policy_(policy) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
}

bool EmbeddingTable::insert(std::string token, std::vector<double> vec) {
  if (vec.size() != dim_)
    throw DimensionError("vector for '" + token + "' has length " +
                         std::to_string(vec.size()) + ", table dimension is " +
                         std::to_string(dim_));
  return entries_.emplace(std::move(token), std::move(vec)).second;
}

bool EmbeddingTable::contains(std::string_view token) const {
  return entries_.count(std::string(token)) > 0;
}

std::vector<double> EmbeddingTable::lookup(std::string_view token) const {
  auto it = entries_.find(std::string(token));
  if (it != entries_.end()) return it->second;
  if (policy_.kind == OovPolicy::Kind::zero) return std::vector<double>(dim_, 0.0);
  DetRng rng(fnv1a64(token) + 0x9e3779b97f4a7c15ULL * policy_.seed);
  std::vector<double> vec(dim_);
  for (double& x : vec) x = rng.uniform(policy_.lo, policy_.hi);
  return vec;
}

std::unordered_set<std::string> EmbeddingTable::vocabulary() const {
  std::unordered_set<std::string> vocab;
  vocab.reserve(entries_.size());
  for (const auto& [token, vec] : entries_) vocab.insert(token);
  return vocab;
}

EmbeddingTable load_table(const std::string& path, std::size_t dim, OovPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file " + path);
  EmbeddingTable table(dim, policy);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0)
      throw FormatError("embedding line has no vector part", line_no);
    std::string token = line.substr(0, sp);
    vec.clear();
    std::size_t pos = sp + 1;
    while (pos < line.size()) {
      while (pos < line.size() && line[pos] == ' ') ++pos;
      if (pos >= line.size()) break;
      std::size_t end = line.find(' ', pos);
      if (end == std::string::npos) end = line.size();
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, value);
      if (ec != std::errc() || ptr != line.data() + end)
        throw FormatError("bad float '" + line.substr(pos, end - pos) + "'", line_no);
      vec.push_back(value);
      pos = end;
    }
    if (vec.size() != dim)
      throw FormatError("expected " + std::to_string(dim) + " floats, got " +
                            std::to_string(vec.size()),
                        line_no);
    table.insert(std::move(token), vec);
  }
  if (in.bad()) throw IoError("read failure on " + path);
  return table;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw DimensionError("cosine of vectors with lengths " + std::to_string(u.size()) +
                         " and " + std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  if (c > 1.0) return 1.0;
  if (c < -1.0) return -1.0;
  return c;
}

}  // namespace attnplaus
