#pragma once

#include <complex>
#include <random>
#include <string>
#include <string_view>

#include "bbp/rng.hpp"

namespace bbp {

enum class LawKind { gaussian, rademacher, uniform_symmetric };

// Symmetric entry distribution of the Wigner matrix W.
//
// Normalization: real off-diagonal E W^2 = 1, real diagonal E W^2 = 2,
// complex off-diagonal (xi + i eta) with xi, eta iid of variance 1/2 (so E W^2 = 0,
// E|W|^2 = 1), complex diagonal real with variance 1. Each kind is a rescaling of
// a unit-variance base variable X:
//   gaussian           X ~ N(0, 1)
//   rademacher         X = +-1
//   uniform_symmetric  X ~ U[-sqrt 3, sqrt 3]     (E X^4 = 9/5)
class EntryLaw {
 public:
  explicit EntryLaw(LawKind kind = LawKind::gaussian);

  static EntryLaw from_name(std::string_view name);

  LawKind kind() const noexcept { return kind_; }
  std::string name() const;

  // E X^{2p} of the unit-variance base variable, p = 1, 2, 3.
  double base_moment(int p) const;

  // E|W_ij|^{2p} for i != j and E|W_ii|^{2p}, for beta in {1, 2} and p in {1, 2, 3}.
  double offdiag_moment(int p, int beta) const;
  double diag_moment(int p, int beta) const;

  double fourth_moment_offdiag(int beta) const { return offdiag_moment(2, beta); }
  double fourth_moment_diag(int beta) const { return diag_moment(2, beta); }

  // Smallest gamma with E|W|^{2p} <= gamma^{p-1} (2p-1)!! for p = 2, 3 over both
  // diagonal and off-diagonal entries of the given symmetry class.
  double gamma(int beta) const;

  class Sampler;
  Sampler sampler(Rng& rng) const;

 private:
  LawKind kind_;
};

// Draws entries of one law from one generator. Holds distribution state, so a
// sampler must not be shared between trials.
class EntryLaw::Sampler {
 public:
  Sampler(LawKind kind, Rng& rng) : kind_(kind), rng_(&rng) {}

  double base();
  double real_offdiag() { return base(); }
  double real_diag();
  std::complex<double> complex_offdiag();
  double complex_diag() { return base(); }

 private:
  LawKind kind_;
  Rng* rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{-1.7320508075688772, 1.7320508075688772};
};

}  // namespace bbp
