#pragma once

// Finite posets with an order-consistent enumeration, the zeta and Moebius
// matrices of that enumeration, up/down sets and lattice operations.
//
// States are always addressed by their enumeration index: e_i <= e_j implies
// i < j. The position a label had in the caller's input is kept separately
// so that files can be read and written in the caller's order.

#include "mobius/core.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mobius {

/// Fixed-width bit row used for the dense order relation.
class BitRow {
 public:
  BitRow() = default;
  explicit BitRow(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  std::size_t size() const { return n_; }

  BitRow& operator|=(const BitRow& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
    return *this;
  }
  friend BitRow operator&(BitRow a, const BitRow& b) {
    for (std::size_t w = 0; w < a.words_.size(); ++w) a.words_[w] &= b.words_[w];
    return a;
  }
  bool subset_of(const BitRow& o) const {
    for (std::size_t w = 0; w < words_.size(); ++w)
      if (words_[w] & ~o.words_[w]) return false;
    return true;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        f(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
  }
  friend bool operator==(const BitRow&, const BitRow&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// A vertex of {0,1}^d. Bit i-1 of `bits` is the coordinate e_i.
struct CubeState {
  std::uint32_t bits = 0;
  unsigned d = 0;

  unsigned weight() const { return static_cast<unsigned>(std::popcount(bits)); }
  bool operator[](unsigned i) const { return (bits >> i) & 1u; }

  /// "e_1 e_2 ... e_d" without separators, e.g. (1,0,0) -> "100".
  std::string label() const {
    std::string s(d, '0');
    for (unsigned i = 0; i < d; ++i)
      if ((bits >> i) & 1u) s[i] = '1';
    return s;
  }
};

class Poset {
 public:
  Poset() = default;

  std::size_t size() const { return size_; }

  std::string label(std::size_t i) const {
    if (cube_dim_) return CubeState{masks_[i], *cube_dim_}.label();
    return labels_[i];
  }

  std::optional<std::size_t> find(const std::string& label) const {
    if (cube_dim_) {
      if (label.size() != *cube_dim_) return std::nullopt;
      std::uint32_t m = 0;
      for (unsigned i = 0; i < *cube_dim_; ++i) {
        if (label[i] == '1') m |= 1u << i;
        else if (label[i] != '0') return std::nullopt;
      }
      return positions_[m];
    }
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string& label) const {
    if (auto i = find(label)) return *i;
    throw Error(ErrorKind::UnknownState, "unknown state '" + label + "'", {{"state", label}});
  }

  bool leq(std::size_t i, std::size_t j) const {
    if (cube_dim_) return (masks_[i] & ~masks_[j]) == 0;
    return up_[i].test(j);
  }
  bool comparable(std::size_t i, std::size_t j) const { return leq(i, j) || leq(j, i); }

  std::optional<unsigned> cube_dimension() const { return cube_dim_; }
  bool is_cube() const { return cube_dim_.has_value(); }
  std::uint32_t cube_mask(std::size_t i) const { return masks_[i]; }
  std::size_t index_of_mask(std::uint32_t m) const { return positions_[m]; }
  CubeState cube_state(std::size_t i) const { return {masks_[i], *cube_dim_}; }

  /// Position of state i in the label list the poset was built from. For
  /// cubes the "input order" is the enumeration itself.
  std::size_t input_position(std::size_t i) const { return cube_dim_ ? i : input_pos_[i]; }
  std::size_t from_input_position(std::size_t p) const { return cube_dim_ ? p : from_input_[p]; }

  /// Cover pairs (i, j): e_i < e_j with nothing strictly between.
  std::vector<std::pair<std::size_t, std::size_t>> covers() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (cube_dim_) {
      for (std::size_t i = 0; i < size_; ++i)
        for (unsigned k = 0; k < *cube_dim_; ++k)
          if (!((masks_[i] >> k) & 1u)) out.emplace_back(i, positions_[masks_[i] | (1u << k)]);
      return out;
    }
    for (std::size_t i = 0; i < size_; ++i)
      for (std::size_t j = i + 1; j < size_; ++j) {
        if (!leq(i, j)) continue;
        bool cover = true;
        for (std::size_t k = i + 1; k < j && cover; ++k)
          if (leq(i, k) && leq(k, j)) cover = false;
        if (cover) out.emplace_back(i, j);
      }
    return out;
  }

  std::vector<std::size_t> maximal_elements() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size_; ++i) {
      bool maximal = true;
      for (std::size_t j = i + 1; j < size_ && maximal; ++j)
        if (leq(i, j)) maximal = false;
      if (maximal) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> minimal_elements() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < size_; ++j) {
      bool minimal = true;
      for (std::size_t i = 0; i < j && minimal; ++i)
        if (leq(i, j)) minimal = false;
      if (minimal) out.push_back(j);
    }
    return out;
  }

  bool is_total_order() const {
    for (std::size_t i = 0; i + 1 < size_; ++i)
      if (!leq(i, i + 1)) return false;
    return true;
  }

  friend Poset build_poset(const std::vector<std::string>& labels,
                           const std::vector<std::pair<std::string, std::string>>& relations);
  friend Poset cube_poset(unsigned d);

 private:
  std::size_t size_ = 0;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<BitRow> up_;  // up_[i].test(j) <=> e_i <= e_j
  std::vector<std::size_t> input_pos_;
  std::vector<std::size_t> from_input_;
  std::optional<unsigned> cube_dim_;
  std::vector<std::uint32_t> masks_;
  std::vector<std::size_t> positions_;
};

/// Reflexive-transitive closure of `relations` over `labels`, enumerated by
/// a topological sort that breaks ties by input order.
inline Poset build_poset(const std::vector<std::string>& labels,
                         const std::vector<std::pair<std::string, std::string>>& relations) {
  const std::size_t m = labels.size();
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "poset needs at least one state");
  if (m > kMaxDenseStates)
    throw Error(ErrorKind::DimensionTooLarge,
                "explicit posets are limited to " + std::to_string(kMaxDenseStates) + " states");
  std::unordered_map<std::string, std::size_t> input_index;
  for (std::size_t i = 0; i < m; ++i) {
    if (!input_index.emplace(labels[i], i).second)
      throw Error(ErrorKind::DuplicateLabel, "duplicate state label '" + labels[i] + "'",
                  {{"state", labels[i]}});
  }
  auto lookup = [&](const std::string& s) {
    auto it = input_index.find(s);
    if (it == input_index.end())
      throw Error(ErrorKind::UnknownState, "relation mentions unknown state '" + s + "'",
                  {{"state", s}});
    return it->second;
  };

  // Warshall closure over bit rows, input indexing.
  std::vector<BitRow> up(m, BitRow(m));
  for (std::size_t i = 0; i < m; ++i) up[i].set(i);
  for (const auto& [a, b] : relations) up[lookup(a)].set(lookup(b));
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      if (up[i].test(k)) up[i] |= up[k];

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (up[i].test(j) && up[j].test(i))
        throw Error(ErrorKind::CycleError,
                    "order relation is not antisymmetric: '" + labels[i] + "' <= '" + labels[j] +
                        "' and '" + labels[j] + "' <= '" + labels[i] + "'",
                    {{"first", labels[i]}, {"second", labels[j]}});

  // Kahn's algorithm on the strict relation; smallest input index first.
  std::vector<std::size_t> indegree(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j && up[i].test(j)) ++indegree[j];
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < m; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<std::size_t> order;
  order.reserve(m);
  while (!ready.empty()) {
    std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t j = 0; j < m; ++j)
      if (j != v && up[v].test(j) && --indegree[j] == 0) ready.push(j);
  }

  Poset p;
  p.size_ = m;
  p.input_pos_ = order;
  p.from_input_.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) p.from_input_[order[i]] = i;
  p.labels_.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    p.labels_.push_back(labels[order[i]]);
    p.index_.emplace(labels[order[i]], i);
  }
  p.up_.assign(m, BitRow(m));
  for (std::size_t i = 0; i < m; ++i)
    up[order[i]].for_each([&](std::size_t j) { p.up_[i].set(p.from_input_[j]); });
  return p;
}

inline constexpr unsigned kMaxCubeDimension = 20;

/// {0,1}^d under the coordinatewise order, enumerated by (weight, mask).
/// Comparisons use bit operations, so no relation matrix is stored.
inline Poset cube_poset(unsigned d) {
  if (d < 1 || d > kMaxCubeDimension)
    throw Error(ErrorKind::DimensionTooLarge,
                "cube dimension must be in [1, " + std::to_string(kMaxCubeDimension) + "], got " +
                    std::to_string(d));
  const std::size_t m = std::size_t{1} << d;
  Poset p;
  p.size_ = m;
  p.cube_dim_ = d;
  p.masks_.resize(m);
  for (std::size_t i = 0; i < m; ++i) p.masks_[i] = static_cast<std::uint32_t>(i);
  std::stable_sort(p.masks_.begin(), p.masks_.end(), [](std::uint32_t a, std::uint32_t b) {
    int wa = std::popcount(a), wb = std::popcount(b);
    return wa != wb ? wa < wb : a < b;
  });
  p.positions_.resize(m);
  for (std::size_t i = 0; i < m; ++i) p.positions_[p.masks_[i]] = i;
  return p;
}

inline std::vector<std::size_t> up_set(const Poset& p, std::size_t e) {
  if (e >= p.size()) throw Error(ErrorKind::UnknownState, "state index out of range");
  std::vector<std::size_t> out;
  for (std::size_t j = e; j < p.size(); ++j)
    if (p.leq(e, j)) out.push_back(j);
  return out;
}

inline std::vector<std::size_t> down_set(const Poset& p, std::size_t e) {
  if (e >= p.size()) throw Error(ErrorKind::UnknownState, "state index out of range");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j <= e; ++j)
    if (p.leq(j, e)) out.push_back(j);
  return out;
}

inline std::vector<std::size_t> up_set(const Poset& p, const std::string& label) {
  return up_set(p, p.index_of(label));
}
inline std::vector<std::size_t> down_set(const Poset& p, const std::string& label) {
  return down_set(p, p.index_of(label));
}

/// Greatest lower bound, if it exists.
inline std::optional<std::size_t> meet(const Poset& p, std::size_t x, std::size_t y) {
  if (p.is_cube()) return p.index_of_mask(p.cube_mask(x) & p.cube_mask(y));
  // A greatest lower bound must carry the largest index among lower bounds.
  std::optional<std::size_t> best;
  for (std::size_t k = std::min(x, y) + 1; k-- > 0;)
    if (p.leq(k, x) && p.leq(k, y)) {
      best = k;
      break;
    }
  if (!best) return std::nullopt;
  for (std::size_t k = 0; k < *best; ++k)
    if (p.leq(k, x) && p.leq(k, y) && !p.leq(k, *best)) return std::nullopt;
  return best;
}

/// Least upper bound, if it exists.
inline std::optional<std::size_t> join(const Poset& p, std::size_t x, std::size_t y) {
  if (p.is_cube()) return p.index_of_mask(p.cube_mask(x) | p.cube_mask(y));
  std::optional<std::size_t> best;
  for (std::size_t k = std::max(x, y); k < p.size(); ++k)
    if (p.leq(x, k) && p.leq(y, k)) {
      best = k;
      break;
    }
  if (!best) return std::nullopt;
  for (std::size_t k = *best + 1; k < p.size(); ++k)
    if (p.leq(x, k) && p.leq(y, k) && !p.leq(*best, k)) return std::nullopt;
  return best;
}

inline std::optional<std::pair<std::size_t, std::size_t>> meet_join(const Poset& p, std::size_t x,
                                                                    std::size_t y) {
  auto m = meet(p, x, y);
  auto j = join(p, x, y);
  if (!m || !j) return std::nullopt;
  return std::pair{*m, *j};
}

inline bool is_lattice(const Poset& p) {
  if (p.is_cube()) return true;
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = x + 1; y < p.size(); ++y)
      if (!meet(p, x, y) || !join(p, x, y)) return false;
  return true;
}

/// Zeta matrix C (C(i,j) = 1 iff e_i <= e_j) and its inverse, the Moebius
/// matrix, both exact integers. Real copies are kept for dense products.
struct ZetaMobius {
  IntMatrix zeta;
  IntMatrix mobius;
  Matrix C;
  Matrix Cinv;

  std::size_t size() const { return static_cast<std::size_t>(zeta.rows()); }
};

inline ZetaMobius zeta_mobius(const Poset& p) {
  const std::size_t m = p.size();
  if (m > kMaxDenseStates)
    throw Error(ErrorKind::DimensionTooLarge, "zeta/Moebius matrices are dense; at most " +
                                                  std::to_string(kMaxDenseStates) + " states");
  const auto n = static_cast<Eigen::Index>(m);
  ZetaMobius zm;
  zm.zeta = IntMatrix::Zero(n, n);
  std::vector<std::vector<std::size_t>> strict_up(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      if (p.leq(i, j)) {
        zm.zeta(i, j) = 1;
        if (j != i) strict_up[i].push_back(j);
      }

  // Back substitution on C X = I: X(i,j) = [i==j] - sum_{k > i, e_i < e_k} X(k,j).
  zm.mobius = IntMatrix::Zero(n, n);
  for (std::size_t i = m; i-- > 0;) {
    zm.mobius(i, i) = 1;
    for (std::size_t k : strict_up[i])
      for (std::size_t j = k; j < m; ++j) zm.mobius(i, j) -= zm.mobius(k, j);
  }
  zm.C = zm.zeta.cast<double>();
  zm.Cinv = zm.mobius.cast<double>();
  return zm;
}

}  // namespace mobius
