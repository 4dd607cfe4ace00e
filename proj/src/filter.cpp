#include "mgsp/filter.hpp"

#include <random>
#include <sstream>

#include "mgsp/errors.hpp"

namespace mgsp {

MultigraphFilter::MultigraphFilter(MonomialBasis basis, int in_features, int out_features)
    : basis_(std::move(basis)), in_features_(in_features), out_features_(out_features) {
  if (in_features_ < 1 || out_features_ < 1)
    throw ValidationError("filter feature counts must be positive");
  coefficients_.assign(basis_.size(), Matrix::Zero(in_features_, out_features_));
}

MultigraphFilter::MultigraphFilter(MonomialBasis basis, std::vector<Matrix> coefficients)
    : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != basis_.size())
    throw ValidationError("filter needs exactly one coefficient block per basis word");
  in_features_ = static_cast<int>(coefficients_.front().rows());
  out_features_ = static_cast<int>(coefficients_.front().cols());
  if (in_features_ < 1 || out_features_ < 1)
    throw ValidationError("filter feature counts must be positive");
  for (const auto& c : coefficients_)
    if (c.rows() != in_features_ || c.cols() != out_features_)
      throw ValidationError("filter coefficient blocks must share one shape");
}

Matrix& MultigraphFilter::coefficient(const Word& w) {
  const int k = basis_.index_of(w);
  if (k < 0) throw ValidationError("word " + w.to_string() + " is not in the filter basis");
  return coefficients_[static_cast<std::size_t>(k)];
}

const Matrix& MultigraphFilter::coefficient(const Word& w) const {
  return const_cast<MultigraphFilter*>(this)->coefficient(w);
}

namespace {

void check_compatible(const MonomialBasis& basis, const Multigraph& g, const Signal& x,
                      int features, const char* what) {
  if (basis.num_generators() != g.num_shifts()) {
    std::ostringstream msg;
    msg << what << ": basis has " << basis.num_generators() << " generators, multigraph has "
        << g.num_shifts() << " shifts";
    throw ValidationError(msg.str());
  }
  if (x.rows() != g.num_nodes() || x.cols() != features) {
    std::ostringstream msg;
    msg << what << ": signal is " << x.rows() << "x" << x.cols() << ", expected " << g.num_nodes()
        << "x" << features;
    throw ValidationError(msg.str());
  }
}

}  // namespace

std::vector<Signal> diffuse(const MonomialBasis& basis, const Multigraph& g, const Signal& x) {
  if (basis.num_generators() != g.num_shifts())
    throw ValidationError("diffuse: basis and multigraph disagree on the generator count");
  if (x.rows() != g.num_nodes()) throw ValidationError("diffuse: signal row count mismatch");
  std::vector<Signal> z(basis.size());
  z[0] = x;
  for (std::size_t k = 1; k < basis.size(); ++k)
    z[k] = g.shift(basis.lead_generator(k)).apply(z[static_cast<std::size_t>(basis.parent(k))]);
  return z;
}

Signal combine_diffusions(const MultigraphFilter& h, std::span<const Signal> diffusions) {
  if (diffusions.size() != h.basis().size())
    throw ValidationError("combine_diffusions: one diffusion per basis word required");
  Signal y = Signal::Zero(diffusions.front().rows(), h.out_features());
  for (std::size_t k = 0; k < diffusions.size(); ++k) y.noalias() += diffusions[k] * h.coefficient(k);
  return y;
}

Signal apply_filter(const MultigraphFilter& h, const Multigraph& g, const Signal& x) {
  check_compatible(h.basis(), g, x, h.in_features(), "apply_filter");
  return combine_diffusions(h, diffuse(h.basis(), g, x));
}

Signal filter_adjoint_apply(const MultigraphFilter& h, const Multigraph& g, const Signal& u) {
  check_compatible(h.basis(), g, u, h.out_features(), "filter_adjoint_apply");
  const MonomialBasis& basis = h.basis();
  // acc[k] collects sum over descendants d = (u, w_k) of S_u^T u C_d^T;
  // children always sit after their parent, so one backward sweep suffices.
  std::vector<Signal> acc(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) acc[k] = u * h.coefficient(k).transpose();
  for (std::size_t k = basis.size() - 1; k > 0; --k) {
    acc[static_cast<std::size_t>(basis.parent(k))] +=
        g.shift(basis.lead_generator(k)).apply_transpose(acc[k]);
  }
  return acc[0];
}

namespace {

Vector apply_word(std::span<const SparseShift> shifts, const Word& w, Vector v) {
  for (std::size_t k = w.length(); k-- > 0;) v = shifts[static_cast<std::size_t>(w[k] - 1)].apply(v);
  return v;
}

Vector apply_word_transpose(std::span<const SparseShift> shifts, const Word& w, Vector v) {
  for (std::size_t k = 0; k < w.length(); ++k)
    v = shifts[static_cast<std::size_t>(w[k] - 1)].apply_transpose(v);
  return v;
}

Word random_word(int m, int depth, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(0, depth);
  std::uniform_int_distribution<int> letter(1, m);
  std::vector<int> letters(static_cast<std::size_t>(length(rng)));
  for (auto& l : letters) l = letter(rng);
  return Word(std::move(letters));
}

}  // namespace

PruningBoundReport check_pruning_bound(std::span<const SparseShift> shifts, int i, int j,
                                       int trials, int depth, std::uint64_t seed,
                                       const NormOptions& options) {
  const int m = static_cast<int>(shifts.size());
  if (m < 1) throw ValidationError("check_pruning_bound: no shifts");
  if (i < 1 || i > m || j < 1 || j > m)
    throw ValidationError("check_pruning_bound: generator index out of range");
  if (trials < 1 || depth < 0) throw ValidationError("check_pruning_bound: bad trial count or depth");
  const int n = shifts.front().dimension();
  for (const auto& s : shifts)
    if (s.dimension() != n) throw ValidationError("check_pruning_bound: dimension mismatch");

  const SparseShift& si = shifts[static_cast<std::size_t>(i - 1)];
  const SparseShift& sj = shifts[static_cast<std::size_t>(j - 1)];
  std::mt19937_64 rng(seed);
  PruningBoundReport report;
  for (int t = 0; t < trials; ++t) {
    Word left = random_word(m, depth, rng);
    Word right = random_word(m, depth, rng);
    auto forward = [&](const Vector& v) -> Vector {
      Vector r = apply_word(shifts, right, v);
      Vector c = si.apply(sj.apply(r)) - sj.apply(si.apply(r));
      return apply_word(shifts, left, c);
    };
    // [S_i, S_j]^T = S_j^T S_i^T - S_i^T S_j^T
    auto backward = [&](const Vector& v) -> Vector {
      Vector l = apply_word_transpose(shifts, left, v);
      Vector c = sj.apply_transpose(si.apply_transpose(l)) - si.apply_transpose(sj.apply_transpose(l));
      return apply_word_transpose(shifts, right, c);
    };
    const double norm = operator_norm(n, forward, backward, options);
    if (t == 0 || norm > report.max_norm) {
      report.max_norm = norm;
      report.worst_left = left;
      report.worst_right = right;
    }
    ++report.trials;
  }
  return report;
}

}  // namespace mgsp
