#pragma once

// Exact information quantities on small finite joints p(x1, x2, y).
// Everything is in nats; divide by ln 2 for bits.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "fcl/matrix.hpp"
#include "fcl/rng.hpp"

namespace fcl::exactinfo {

/// Subset of {X1, X2, Y} as a bitmask.
enum Var : unsigned { kX1 = 1U, kX2 = 2U, kY = 4U };
using VarSet = unsigned;

inline constexpr std::size_t kMaxAlphabet = 64;

class DiscreteJoint {
 public:
  /// Validates sizes (1..64), nonnegativity, and normalization within 1e-12.
  DiscreteJoint(std::size_t n1, std::size_t n2, std::size_t ny, std::vector<double> prob);

  /// Plain-text table: first line "|X1| |X2| |Y|", then one probability per
  /// line in row-major (x1, x2, y) order. Blank lines and '#' comments are
  /// skipped. A total off by more than 1e-9 is rejected; smaller drift is
  /// renormalized away.
  static DiscreteJoint parse(std::istream& is);
  static DiscreteJoint load(const std::string& path);

  [[nodiscard]] std::array<std::size_t, 3> sizes() const noexcept { return {n1_, n2_, ny_}; }
  [[nodiscard]] double p(std::size_t x1, std::size_t x2, std::size_t y) const noexcept {
    return prob_[(x1 * n2_ + x2) * ny_ + y];
  }
  [[nodiscard]] const std::vector<double>& table() const noexcept { return prob_; }

 private:
  std::size_t n1_, n2_, ny_;
  std::vector<double> prob_;
};

/// Marginal entropy H(vars); 0·log 0 := 0.
[[nodiscard]] double entropy(const DiscreteJoint& joint, VarSet vars);
/// I(A;B) = H(A) + H(B) − H(A,B), clamped at 0 against rounding.
[[nodiscard]] double mutual_information(const DiscreteJoint& joint, VarSet a, VarSet b);
/// I(A;B|C) = Σ_c p(c) I(A;B|C=c).
[[nodiscard]] double conditional_mi(const DiscreteJoint& joint, VarSet a, VarSet b, VarSet c);
/// S = I(X1;X2) − I(X1;X2|Y); may be negative.
[[nodiscard]] double interaction_information(const DiscreteJoint& joint);

struct Decomposition {
  double total = 0.0;    // I(X1,X2;Y)
  double shared = 0.0;   // S
  double unique1 = 0.0;  // I(X1;Y|X2)
  double unique2 = 0.0;  // I(X2;Y|X1)
  double residual = 0.0; // total − (S + U1 + U2)
  double h_y = 0.0;
};
[[nodiscard]] Decomposition decompose(const DiscreteJoint& joint);

/// 1 − exp(info − H(Y)), clamped to [0, 1]. Pass I(X1,X2;Y) for the
/// full-information bound or S for the shared-only bound.
[[nodiscard]] double bayes_error_bound(double info_nats, double h_y_nats);
/// 1 − E_{x1,x2}[max_y p(y | x1, x2)].
[[nodiscard]] double bayes_error_exact(const DiscreteJoint& joint);

/// Dirichlet(alpha)-distributed joint, for property tests.
[[nodiscard]] DiscreteJoint random_joint(std::size_t n1, std::size_t n2, std::size_t ny,
                                         double alpha, Rng& rng);

/// X1, X2 iid fair bits, Y = X1 xor X2.
[[nodiscard]] DiscreteJoint xor_joint();
/// Y = X1 = X2, one fair bit.
[[nodiscard]] DiscreteJoint copy_joint();

}  // namespace fcl::exactinfo
