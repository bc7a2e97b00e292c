#include "bbp/entry_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bbp/errors.hpp"

namespace bbp {

namespace {

void check_beta(int beta) {
  if (beta != 1 && beta != 2) throw DomainError("beta must be 1 or 2");
}

void check_order(int p) {
  if (p < 1 || p > 3) throw DomainError("moment order must be 1, 2 or 3");
}

}  // namespace

EntryLaw::EntryLaw(LawKind kind) : kind_(kind) {}

EntryLaw EntryLaw::from_name(std::string_view name) {
  if (name == "gaussian") return EntryLaw(LawKind::gaussian);
  if (name == "rademacher") return EntryLaw(LawKind::rademacher);
  if (name == "uniform_symmetric") return EntryLaw(LawKind::uniform_symmetric);
  throw DomainError("unknown entry law '" + std::string(name) + "'");
}

std::string EntryLaw::name() const {
  switch (kind_) {
    case LawKind::gaussian: return "gaussian";
    case LawKind::rademacher: return "rademacher";
    case LawKind::uniform_symmetric: return "uniform_symmetric";
  }
  return "?";
}

double EntryLaw::base_moment(int p) const {
  check_order(p);
  switch (kind_) {
    case LawKind::gaussian: return p == 1 ? 1.0 : p == 2 ? 3.0 : 15.0;
    case LawKind::rademacher: return 1.0;
    // E X^{2p} = 3^p / (2p + 1)
    case LawKind::uniform_symmetric: return std::pow(3.0, p) / (2.0 * p + 1.0);
  }
  return 0.0;
}

double EntryLaw::offdiag_moment(int p, int beta) const {
  check_beta(beta);
  check_order(p);
  if (beta == 1) return base_moment(p);
  // |W|^2 = (X1^2 + X2^2) / 2 with X1, X2 iid copies of the base variable.
  const double m2 = base_moment(1), m4 = base_moment(2), m6 = base_moment(3);
  switch (p) {
    case 1: return m2;
    case 2: return (2.0 * m4 + 2.0 * m2 * m2) / 4.0;
    default: return (2.0 * m6 + 6.0 * m4 * m2) / 8.0;
  }
}

double EntryLaw::diag_moment(int p, int beta) const {
  check_beta(beta);
  check_order(p);
  const double scale = beta == 1 ? 2.0 : 1.0;  // variance of W_ii
  return std::pow(scale, p) * base_moment(p);
}

double EntryLaw::gamma(int beta) const {
  double g = 0.0;
  for (int p = 2; p <= 3; ++p) {
    const double dfact = p == 2 ? 3.0 : 15.0;
    for (double m : {offdiag_moment(p, beta), diag_moment(p, beta)}) {
      g = std::max(g, std::pow(m / dfact, 1.0 / (p - 1)));
    }
  }
  return g;
}

EntryLaw::Sampler EntryLaw::sampler(Rng& rng) const { return Sampler(kind_, rng); }

double EntryLaw::Sampler::base() {
  switch (kind_) {
    case LawKind::gaussian: return normal_(*rng_);
    case LawKind::rademacher: return ((*rng_)() >> 63) ? 1.0 : -1.0;
    case LawKind::uniform_symmetric: return uniform_(*rng_);
  }
  return 0.0;
}

double EntryLaw::Sampler::real_diag() { return std::numbers::sqrt2 * base(); }

std::complex<double> EntryLaw::Sampler::complex_offdiag() {
  const double re = base() / std::numbers::sqrt2;
  const double im = base() / std::numbers::sqrt2;
  return {re, im};
}

}  // namespace bbp
