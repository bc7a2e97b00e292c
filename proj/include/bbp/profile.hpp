#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bbp/entry_law.hpp"

namespace bbp {

// Symmetric density f on R^d used to build band profiles. Only ratios of f
// enter the profile; sup_norm() matters for the sigma* asymptotics.
class BandKernel {
 public:
  enum class Shape { flat, gaussian, custom };
  using Function = std::function<double(std::span<const double>)>;

  // Uniform density on the cube [-radius, radius]^d.
  static BandKernel flat(int dim, double radius = 1.0);
  // Standard Gaussian density on R^d.
  static BandKernel gaussian(int dim);
  // Arbitrary symmetric density. support_radius bounds supp f in the sup norm;
  // beyond it f is treated as zero.
  static BandKernel custom(int dim, Function f, double sup_norm, double support_radius);

  double evaluate(std::span<const double> x) const;
  double sup_norm() const noexcept { return sup_norm_; }
  double support_radius() const noexcept { return support_radius_; }
  int dim() const noexcept { return dim_; }
  Shape shape() const noexcept { return shape_; }
  double radius() const noexcept { return radius_; }

 private:
  BandKernel(Shape shape, int dim, double radius, double sup_norm, double support_radius, Function f);

  Shape shape_;
  int dim_;
  double radius_;
  double sup_norm_;
  double support_radius_;
  Function custom_;
};

enum class ProfileKind { band, dregular, chiral, uniform, custom };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& s);

// Symmetric matrix of entry standard deviations whose entrywise square is a
// stochastic matrix. Immutable once constructed.
class VarianceProfile {
 public:
  // Validates symmetry, non-negativity and row-stochasticity of sigma∘sigma (1e-12).
  VarianceProfile(Eigen::MatrixXd sigma, ProfileKind kind = ProfileKind::custom,
                  nlohmann::json params = nlohmann::json::object());

  int n() const noexcept { return static_cast<int>(sigma_.rows()); }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  double sigma(int i, int j) const { return sigma_(i, j); }
  // P = sigma∘sigma.
  Eigen::MatrixXd transition() const { return sigma_.cwiseAbs2(); }
  ProfileKind kind() const noexcept { return kind_; }
  const nlohmann::json& params() const noexcept { return params_; }
  double sigma_star() const noexcept { return sigma_star_; }

 private:
  Eigen::MatrixXd sigma_;
  ProfileKind kind_;
  nlohmann::json params_;
  double sigma_star_;
};

// Model 1: sigma_ij^2 = M^{-1} sum_{n in Z^d} f((i - j + nL)/b) on the torus (Z/L)^d,
// vertices ordered lexicographically, N = L^d.
VarianceProfile build_band_profile(int L, int d, double bandwidth, const BandKernel& kernel);

// Model 2: sigma = psi / sqrt(d) for a symmetric 0/1 matrix with constant row sum d.
VarianceProfile build_dregular_profile(const Eigen::MatrixXi& psi);
// Circulant d-regular psi: psi_ij = 1 iff (j - i) mod n is in `offsets`.
Eigen::MatrixXi circulant_adjacency(int n, std::span<const int> offsets);

// Model 3: sigma = [[0, phi], [phi^T, 0]]; rows and columns of phi must have unit 2-norm.
VarianceProfile build_chiral_profile(const Eigen::MatrixXd& phi);

VarianceProfile build_uniform_profile(int n);

inline double sigma_star(const VarianceProfile& profile) { return profile.sigma_star(); }

// (P^k)_{ij}, 0-based indices, computed by propagating row i through k
// multiplications; each intermediate row is checked stochastic to 1e-9.
double markov_power_entry(const VarianceProfile& profile, int k, int i, int j);

// Dense P^k by repeated multiplication, rows re-checked stochastic to 1e-9.
Eigen::MatrixXd markov_power(const VarianceProfile& profile, int k);

// Finite-N parameters of the limiting outlier fluctuation matrix.
struct LimitLawParams {
  int r = 0;
  int beta = 1;
  double a = 0.0;
  double sigma_star = 0.0;
  int truncation = 0;          // K, the last power kept in the g series
  Eigen::MatrixXd g;           // r x r
  Eigen::MatrixXd sigma_tilde; // r x r
  Eigen::VectorXd chi;         // r
  Eigen::VectorXd tau;         // r
  Eigen::MatrixXcd q_rows;     // q x r, orthonormal rows
};

// Evaluates the g, sigma_tilde, chi, tau expressions at the given N. The g series is
// cut at the first K with a^{-2K} a^2/(a^2 - 1) < tol (entries of P^k/sigma*^2 are
// at most 1). `u` diagonalizes A~ as A~ = u^* diag(a_1..a_r) u; q_rows are its first q
// rows. Throws DomainError for a <= 1 or malformed inputs.
LimitLawParams compute_limit_params(const VarianceProfile& profile, std::span<const int> positions,
                                    double a, const EntryLaw& law, int beta,
                                    const Eigen::MatrixXcd& u, int q, double tol = 1e-12);

// Same as above with an explicit truncation K (used to probe truncation soundness).
LimitLawParams compute_limit_params_truncated(const VarianceProfile& profile,
                                              std::span<const int> positions, double a,
                                              const EntryLaw& law, int beta,
                                              const Eigen::MatrixXcd& u, int q, int truncation);

// {kind, n, params, sigma_rows?}. sigma_rows is always written for custom profiles.
nlohmann::json profile_to_json(const VarianceProfile& profile, bool include_sigma = false);
// Regenerates named kinds from params; uses sigma_rows when present.
VarianceProfile profile_from_json(const nlohmann::json& doc);

}  // namespace bbp
