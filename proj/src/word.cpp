#include "mgsp/word.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "mgsp/errors.hpp"

namespace mgsp {

namespace {

// Slack on ||S||_2 <= 1 when checking that shifts were normalized.
constexpr double kNormalizedSlack = 1e-6;

}  // namespace

bool Word::has_adjacent(int a, int b) const {
  for (std::size_t k = 0; k + 1 < letters_.size(); ++k)
    if (letters_[k] == a && letters_[k + 1] == b) return true;
  return false;
}

std::string Word::to_string() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t k = 0; k < letters_.size(); ++k) out << (k ? "," : "") << letters_[k];
  out << ')';
  return out.str();
}

std::strong_ordering Word::operator<=>(const Word& other) const {
  if (auto c = letters_.size() <=> other.letters_.size(); c != 0) return c;
  return letters_ <=> other.letters_;
}

std::size_t WordHash::operator()(const Word& w) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (int l : w.letters()) h = (h ^ static_cast<std::size_t>(l)) * 1099511628211ull;
  return h ^ w.length();
}

MonomialBasis::MonomialBasis(int num_generators, int depth, std::vector<Word> words,
                             std::vector<PrunedPair> pruned_pairs)
    : num_generators_(num_generators),
      depth_(depth),
      words_(std::move(words)),
      pruned_pairs_(std::move(pruned_pairs)) {
  if (num_generators_ < 1) throw ValidationError("basis needs at least one generator");
  if (depth_ < 0) throw ValidationError("basis depth must be nonnegative");
  for (std::size_t k = 0; k < words_.size(); ++k) {
    const Word& w = words_[k];
    if (static_cast<int>(w.length()) > depth_)
      throw ValidationError("word " + w.to_string() + " longer than depth");
    for (int l : w.letters())
      if (l < 1 || l > num_generators_)
        throw ValidationError("word " + w.to_string() + " has a letter out of range");
    if (k > 0 && !(words_[k - 1] < w))
      throw ValidationError("basis words must be unique and in canonical order");
    index_.emplace(w, static_cast<int>(k));
  }
  if (words_.empty() || !words_.front().empty())
    throw ValidationError("basis must contain the identity word");
  parents_.resize(words_.size(), -1);
  for (std::size_t k = 1; k < words_.size(); ++k) {
    parents_[k] = index_of(words_[k].tail());
    if (parents_[k] < 0)
      throw ValidationError("basis is not closed under tails: missing parent of " +
                            words_[k].to_string());
  }
}

int MonomialBasis::index_of(const Word& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? -1 : it->second;
}

std::size_t full_basis_size(int num_generators, int depth) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  std::size_t level = 1;
  const auto m = static_cast<std::size_t>(num_generators);
  for (int k = 0; k <= depth; ++k) {
    if (total > kMax - level) return kMax;
    total += level;
    if (k < depth) {
      if (m != 0 && level > kMax / m) return kMax;
      level *= m;
    }
  }
  return total;
}

MonomialBasis enumerate_monomials(int num_generators, int depth, std::size_t cap) {
  if (num_generators < 1) throw ValidationError("enumerate_monomials: need m >= 1");
  if (depth < 0) throw ValidationError("enumerate_monomials: need K >= 0");
  const std::size_t size = full_basis_size(num_generators, depth);
  if (size > cap) {
    std::ostringstream msg;
    msg << "basis of " << num_generators << " generators at depth " << depth << " has " << size
        << " words, above the cap of " << cap;
    throw ValidationError(msg.str());
  }
  std::vector<Word> words;
  words.reserve(size);
  words.emplace_back();
  // Level k+1 is level k with each letter appended, which keeps lexicographic
  // order within a level.
  std::size_t level_begin = 0;
  for (int k = 0; k < depth; ++k) {
    const std::size_t level_end = words.size();
    for (std::size_t p = level_begin; p < level_end; ++p) {
      for (int g = 1; g <= num_generators; ++g) {
        std::vector<int> letters = words[p].letters();
        letters.push_back(g);
        words.emplace_back(std::move(letters));
      }
    }
    level_begin = level_end;
  }
  return MonomialBasis(num_generators, depth, std::move(words));
}

MonomialBasis prune_basis(const MonomialBasis& basis, std::span<const SparseShift> shifts,
                          double epsilon, const NormOptions& options) {
  if (static_cast<int>(shifts.size()) != basis.num_generators())
    throw ValidationError("prune_basis: one shift per generator required");
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw ValidationError("prune_basis: epsilon must lie in [0, 0.5)");
  for (std::size_t g = 0; g < shifts.size(); ++g) {
    const double norm = spectral_norm(shifts[g], options);
    if (norm > 1.0 + kNormalizedSlack) {
      std::ostringstream msg;
      msg << "prune_basis: shift " << g + 1 << " is not normalized (norm " << norm << ")";
      throw ValidationError(msg.str());
    }
  }

  std::vector<PrunedPair> pairs = basis.pruned_pairs();
  const int m = basis.num_generators();
  for (int i = 1; i <= m; ++i) {
    for (int j = i + 1; j <= m; ++j) {
      if (std::any_of(pairs.begin(), pairs.end(),
                      [&](const PrunedPair& p) { return p.i == i && p.j == j; }))
        continue;
      const double eps = commutator_norm(shifts[static_cast<std::size_t>(i - 1)],
                                         shifts[static_cast<std::size_t>(j - 1)], options);
      if (eps <= epsilon) pairs.push_back({i, j, eps});
    }
  }

  std::set<Word> kept;
  for (const Word& w : basis.words()) {
    const bool drop = std::any_of(pairs.begin(), pairs.end(),
                                  [&](const PrunedPair& p) { return w.has_adjacent(p.j, p.i); });
    if (!drop) kept.insert(w);
  }
  // Re-close under tails. Pattern avoidance is closed under factors, so this
  // only matters for bases that were not closed to begin with.
  std::vector<Word> pending(kept.begin(), kept.end());
  while (!pending.empty()) {
    Word w = std::move(pending.back());
    pending.pop_back();
    if (w.empty()) continue;
    Word t = w.tail();
    if (kept.insert(t).second) pending.push_back(std::move(t));
  }
  return MonomialBasis(basis.num_generators(), basis.depth(),
                       std::vector<Word>(kept.begin(), kept.end()), std::move(pairs));
}

}  // namespace mgsp
