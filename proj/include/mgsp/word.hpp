#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgsp/sparse_shift.hpp"

namespace mgsp {

// A monomial of the free algebra on generators {1..m}. The word
// (i1, i2, ..., ir) stands for the operator S_i1 S_i2 ... S_ir, so the
// rightmost letter acts on a signal first. The empty word is the identity.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<int> letters) : letters_(std::move(letters)) {}
  Word(std::initializer_list<int> letters) : letters_(letters) {}

  std::size_t length() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  int operator[](std::size_t k) const { return letters_[k]; }
  const std::vector<int>& letters() const { return letters_; }

  // Outermost (leftmost) letter and the word without it. In the diffusion
  // tree the tail is the parent: S_w x = S_head (S_tail x).
  int head() const { return letters_.front(); }
  Word tail() const { return Word(std::vector<int>(letters_.begin() + 1, letters_.end())); }

  // True when `a` is immediately followed by `b` somewhere in the word.
  bool has_adjacent(int a, int b) const;

  std::string to_string() const;

  bool operator==(const Word&) const = default;
  // Shorter words first, then lexicographic.
  std::strong_ordering operator<=>(const Word& other) const;

 private:
  std::vector<int> letters_;
};

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept;
};

struct PrunedPair {
  int i = 0;  // 1-based generators, i < j
  int j = 0;
  double epsilon = 0.0;  // measured commutator norm
};

// Sorted, duplicate-free list of words that contains the identity and is
// closed under taking tails, so every word's diffusion can be computed from
// its parent's.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(int num_generators, int depth, std::vector<Word> words,
                std::vector<PrunedPair> pruned_pairs = {});

  int num_generators() const { return num_generators_; }
  int depth() const { return depth_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<Word>& words() const { return words_; }
  const Word& word(std::size_t k) const { return words_[k]; }
  const std::vector<PrunedPair>& pruned_pairs() const { return pruned_pairs_; }

  // -1 when absent.
  int index_of(const Word& w) const;
  bool contains(const Word& w) const { return index_of(w) >= 0; }

  // Index of the tail word, -1 for the identity.
  int parent(std::size_t k) const { return parents_[k]; }
  // 0-based generator of the word's head letter.
  int lead_generator(std::size_t k) const { return words_[k].head() - 1; }

  bool operator==(const MonomialBasis& other) const {
    return num_generators_ == other.num_generators_ && depth_ == other.depth_ &&
           words_ == other.words_;
  }

 private:
  int num_generators_ = 0;
  int depth_ = 0;
  std::vector<Word> words_;
  std::vector<int> parents_;
  std::vector<PrunedPair> pruned_pairs_;
  std::unordered_map<Word, int, WordHash> index_;
};

inline constexpr std::size_t kDefaultBasisCap = 100000;

// (m^(K+1) - 1) / (m - 1), or K + 1 for m = 1. Saturates at SIZE_MAX.
std::size_t full_basis_size(int num_generators, int depth);

// Every word of length 0..K over m generators (the diffusion tree).
MonomialBasis enumerate_monomials(int num_generators, int depth,
                                  std::size_t cap = kDefaultBasisCap);

// Drops every word containing the descending adjacency (j, i) for each
// generator pair i < j whose commutator norm is at most `epsilon`. Shifts
// must already be normalized.
MonomialBasis prune_basis(const MonomialBasis& basis, std::span<const SparseShift> shifts,
                          double epsilon, const NormOptions& options = {});

}  // namespace mgsp
