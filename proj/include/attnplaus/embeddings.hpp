#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace attnplaus {

struct OovPolicy {
  enum class Kind { zero, seeded_uniform };
  Kind kind = Kind::zero;
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t seed = 0;

  static OovPolicy zero() { return OovPolicy{}; }
  static OovPolicy seeded_uniform(double lo, double hi, std::uint64_t seed) {
    return OovPolicy{Kind::seeded_uniform, lo, hi, seed};
  }
};

class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, OovPolicy policy = OovPolicy::zero());

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const OovPolicy& oov_policy() const { return policy_; }

  // First insertion of a token wins; later duplicates are ignored.
  bool insert(std::string token, std::vector<double> vec);

  bool contains(std::string_view token) const;

  // Stored vector, or the OOV policy vector. Deterministic: the same token
  // always gets the same vector, in this process and any other with the
  // same seed.
  std::vector<double> lookup(std::string_view token) const;

  std::unordered_set<std::string> vocabulary() const;

 private:
  std::size_t dim_;
  OovPolicy policy_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

EmbeddingTable load_table(const std::string& path, std::size_t dim,
                          OovPolicy policy = OovPolicy::zero());

// u·v / (|u||v|), 0 when either norm is 0, clamped into [-1,1].
double cosine(const std::vector<double>& u, const std::vector<double>& v);

}  // namespace attnplaus
