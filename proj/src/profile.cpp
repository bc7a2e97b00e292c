#include "bbp/profile.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "bbp/errors.hpp"

namespace bbp {

using nlohmann::json;

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kPowerDriftTol = 1e-9;
constexpr int kMaxProfileSize = 8192;

// Gaussian tails below exp(-760) underflow to 0 in double precision.
constexpr double kGaussianSupport = 39.0;

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty()) throw SchemaError(what + " must be a non-empty array of rows");
  const auto nr = rows.size();
  const auto nc = rows[0].size();
  Eigen::MatrixXd m(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    if (!rows[i].is_array() || rows[i].size() != nc) throw SchemaError(what + " rows must have equal length");
    for (std::size_t j = 0; j < nc; ++j) {
      if (!rows[i][j].is_number()) throw SchemaError(what + " entries must be numbers");
      m(i, j) = rows[i][j].get<double>();
    }
  }
  return m;
}

void check_row_stochastic(const Eigen::RowVectorXd& row, const char* where) {
  const double s = row.sum();
  if (std::abs(s - 1.0) > kPowerDriftTol) {
    throw NumericError(std::string(where) + ": power of P lost stochasticity (row sum " +
                       std::to_string(s) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// BandKernel

BandKernel::BandKernel(Shape shape, int dim, double radius, double sup_norm, double support_radius,
                       Function f)
    : shape_(shape),
      dim_(dim),
      radius_(radius),
      sup_norm_(sup_norm),
      support_radius_(support_radius),
      custom_(std::move(f)) {
  require(dim >= 1, "kernel dimension must be positive");
}

BandKernel BandKernel::flat(int dim, double radius) {
  require(radius > 0.0, "flat kernel radius must be positive");
  const double height = std::pow(2.0 * radius, -dim);
  return BandKernel(Shape::flat, dim, radius, height, radius, nullptr);
}

BandKernel BandKernel::gaussian(int dim) {
  const double height = std::pow(2.0 * std::numbers::pi, -0.5 * dim);
  return BandKernel(Shape::gaussian, dim, 1.0, height, kGaussianSupport, nullptr);
}

BandKernel BandKernel::custom(int dim, Function f, double sup_norm, double support_radius) {
  require(static_cast<bool>(f), "custom kernel needs a callable");
  require(support_radius > 0.0, "custom kernel support radius must be positive");
  return BandKernel(Shape::custom, dim, support_radius, sup_norm, support_radius, std::move(f));
}

double BandKernel::evaluate(std::span<const double> x) const {
  switch (shape_) {
    case Shape::flat: {
      for (double xi : x)
        if (std::abs(xi) > radius_) return 0.0;
      return sup_norm_;
    }
    case Shape::gaussian: {
      double r2 = 0.0;
      for (double xi : x) r2 += xi * xi;
      return sup_norm_ * std::exp(-0.5 * r2);
    }
    case Shape::custom: {
      for (double xi : x)
        if (std::abs(xi) > support_radius_) return 0.0;
      return custom_(x);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// VarianceProfile

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::band: return "band";
    case ProfileKind::dregular: return "dregular";
    case ProfileKind::chiral: return "chiral";
    case ProfileKind::uniform: return "uniform";
    case ProfileKind::custom: return "custom";
  }
  return "custom";
}

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "band") return ProfileKind::band;
  if (s == "dregular") return ProfileKind::dregular;
  if (s == "chiral") return ProfileKind::chiral;
  if (s == "uniform") return ProfileKind::uniform;
  if (s == "custom") return ProfileKind::custom;
  throw SchemaError("unknown profile kind '" + s + "'");
}

VarianceProfile::VarianceProfile(Eigen::MatrixXd sigma, ProfileKind kind, json params)
    : sigma_(std::move(sigma)), kind_(kind), params_(std::move(params)), sigma_star_(0.0) {
  const auto n = sigma_.rows();
  require(n >= 1 && sigma_.cols() == n, "variance profile must be a non-empty square matrix");
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = sigma_(i, j);
      require(std::isfinite(s) && s >= 0.0, "variance profile entries must be finite and non-negative");
      require(s == sigma_(j, i), "variance profile must be symmetric");
      row += s * s;
    }
    require(std::abs(row - 1.0) <= kStochasticTol,
            "sigma∘sigma is not stochastic: row " + std::to_string(i) + " sums to " +
                std::to_string(row));
  }
  sigma_star_ = sigma_.maxCoeff();
}

// ---------------------------------------------------------------------------
// Constructors

VarianceProfile build_band_profile(int L, int d, double bandwidth, const BandKernel& kernel) {
  require(L >= 1 && d >= 1, "band profile needs L >= 1 and d >= 1");
  require(kernel.dim() == d, "kernel dimension does not match d");
  require(bandwidth > 0.0, "bandwidth must be positive");
  require(bandwidth <= 0.5 * L, "bandwidth must not exceed L/2");
  const double n_real = std::pow(static_cast<double>(L), d);
  require(n_real <= kMaxProfileSize, "band profile too large for dense storage");
  const int n = static_cast<int>(n_real);

  if (kernel.shape() == BandKernel::Shape::custom) {
    // spot-check symmetry on a few points
    for (double t : {0.1, 0.37, 0.5, 0.9}) {
      std::vector<double> x(d), mx(d);
      for (int c = 0; c < d; ++c) {
        x[c] = t * kernel.support_radius() * (c + 1) / d;
        mx[c] = -x[c];
      }
      const double fx = kernel.evaluate(x), fmx = kernel.evaluate(mx);
      require(fx >= 0.0 && std::abs(fx - fmx) <= 1e-14 * std::max(1.0, std::abs(fx)),
              "band kernel must be a non-negative symmetric function");
    }
  }

  // Periodic images needed to cover supp f, plus three extra periods.
  const int images = 3 + static_cast<int>(std::ceil(kernel.support_radius() * bandwidth / L));

  // weight[c] = sum_n f((delta + nL)/b) for each difference class delta in {0..L-1}^d.
  std::vector<double> weight(n, 0.0);
  std::vector<int> delta(d, 0);
  std::vector<int> img(d, -images);
  std::vector<double> x(d);
  for (int cls = 0; cls < n; ++cls) {
    int rem = cls;
    for (int c = d - 1; c >= 0; --c) {
      delta[c] = rem % L;
      rem /= L;
    }
    double w = 0.0;
    std::fill(img.begin(), img.end(), -images);
    while (true) {
      for (int c = 0; c < d; ++c) x[c] = (delta[c] + static_cast<double>(img[c]) * L) / bandwidth;
      w += kernel.evaluate(x);
      int c = d - 1;
      while (c >= 0 && img[c] == images) img[c--] = -images;
      if (c < 0) break;
      ++img[c];
    }
    weight[cls] = w;
  }
  double total = 0.0;
  for (double w : weight) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) throw DomainError("degenerate kernel: lattice sum is zero");

  Eigen::MatrixXd sigma(n, n);
  std::vector<int> ci(d), cj(d);
  for (int i = 0; i < n; ++i) {
    int rem = i;
    for (int c = d - 1; c >= 0; --c) {
      ci[c] = rem % L;
      rem /= L;
    }
    for (int j = 0; j < n; ++j) {
      int r2 = j;
      int cls = 0;
      for (int c = d - 1; c >= 0; --c) {
        cj[c] = r2 % L;
        r2 /= L;
      }
      for (int c = 0; c < d; ++c) cls = cls * L + ((ci[c] - cj[c]) % L + L) % L;
      sigma(i, j) = std::sqrt(weight[cls] / total);
    }
  }
  // Difference classes of (i, j) and (j, i) are negatives of each other; f is
  // symmetric but the image sums may differ in the last bit. Symmetrize exactly.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) sigma(j, i) = sigma(i, j);

  json params = {{"L", L}, {"d", d}, {"bandwidth", bandwidth}};
  switch (kernel.shape()) {
    case BandKernel::Shape::flat: params["kernel"] = {{"shape", "flat"}, {"radius", kernel.radius()}}; break;
    case BandKernel::Shape::gaussian: params["kernel"] = {{"shape", "gaussian"}}; break;
    case BandKernel::Shape::custom: params["kernel"] = {{"shape", "custom"}}; break;
  }
  try {
    return VarianceProfile(std::move(sigma), ProfileKind::band, std::move(params));
  } catch (const DomainError& e) {
    throw DomainError(std::string("degenerate kernel: ") + e.what());
  }
}

Eigen::MatrixXi circulant_adjacency(int n, std::span<const int> offsets) {
  require(n >= 1, "circulant size must be positive");
  Eigen::MatrixXi psi = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int off : offsets) psi(i, ((i + off) % n + n) % n) = 1;
  return psi;
}

VarianceProfile build_dregular_profile(const Eigen::MatrixXi& psi) {
  const auto n = psi.rows();
  require(n >= 1 && psi.cols() == n, "psi must be square");
  int degree = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    int row = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      require(psi(i, j) == 0 || psi(i, j) == 1, "psi must be a 0/1 matrix");
      require(psi(i, j) == psi(j, i), "psi must be symmetric");
      row += psi(i, j);
    }
    if (degree < 0) degree = row;
    if (row != degree) throw DomainError("psi is not regular: row sums differ");
  }
  require(degree >= 1, "psi must have positive degree");
  Eigen::MatrixXd sigma = psi.cast<double>() / std::sqrt(static_cast<double>(degree));
  json params = {{"degree", degree}, {"psi_rows", rows_of(psi.cast<double>())}};
  return VarianceProfile(std::move(sigma), ProfileKind::dregular, std::move(params));
}

VarianceProfile build_chiral_profile(const Eigen::MatrixXd& phi) {
  const auto h = phi.rows();
  require(h >= 1 && phi.cols() == h, "phi must be square");
  require((phi.array() >= 0.0).all(), "phi must be non-negative");
  for (Eigen::Index i = 0; i < h; ++i) {
    require(std::abs(phi.row(i).squaredNorm() - 1.0) <= kStochasticTol, "phi rows must have unit 2-norm");
    require(std::abs(phi.col(i).squaredNorm() - 1.0) <= kStochasticTol, "phi columns must have unit 2-norm");
  }
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2 * h, 2 * h);
  sigma.topRightCorner(h, h) = phi;
  sigma.bottomLeftCorner(h, h) = phi.transpose();
  json params = {{"phi_rows", rows_of(phi)}};
  return VarianceProfile(std::move(sigma), ProfileKind::chiral, std::move(params));
}

VarianceProfile build_uniform_profile(int n) {
  require(n >= 1, "uniform profile size must be positive");
  return VarianceProfile(Eigen::MatrixXd::Constant(n, n, 1.0 / std::sqrt(static_cast<double>(n))),
                         ProfileKind::uniform, json::object());
}

// ---------------------------------------------------------------------------
// Markov powers

double markov_power_entry(const VarianceProfile& profile, int k, int i, int j) {
  const int n = profile.n();
  if (i < 0 || i >= n || j < 0 || j >= n) throw std::out_of_range("markov_power_entry: index out of range");
  require(k >= 1, "markov_power_entry: k must be positive");
  const Eigen::MatrixXd p = profile.transition();
  Eigen::RowVectorXd row = p.row(i);
  check_row_stochastic(row, "markov_power_entry");
  for (int step = 1; step < k; ++step) {
    row = row * p;
    check_row_stochastic(row, "markov_power_entry");
  }
  return row(j);
}

Eigen::MatrixXd markov_power(const VarianceProfile& profile, int k) {
  require(k >= 0, "markov_power: k must be non-negative");
  const Eigen::MatrixXd p = profile.transition();
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(profile.n(), profile.n());
  for (int step = 0; step < k; ++step) {
    out = out * p;
    for (Eigen::Index i = 0; i < out.rows(); ++i) check_row_stochastic(out.row(i), "markov_power");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Limit parameters

namespace {

void validate_limit_inputs(const VarianceProfile& profile, std::span<const int> positions, double a,
                           int beta, const Eigen::MatrixXcd& u, int q) {
  if (!(a > 1.0)) throw DomainError("limit parameters are defined for supercritical a > 1 only");
  require(beta == 1 || beta == 2, "beta must be 1 or 2");
  const int r = static_cast<int>(positions.size());
  require(r >= 1, "at least one deformation position is required");
  std::set<int> seen;
  for (int m : positions) {
    if (m < 0 || m >= profile.n()) throw std::out_of_range("deformation position out of range");
    require(seen.insert(m).second, "deformation positions must be distinct");
  }
  require(u.rows() == r && u.cols() == r, "u must be r x r");
  const double defect = (u * u.adjoint() - Eigen::MatrixXcd::Identity(r, r)).cwiseAbs().maxCoeff();
  require(defect <= 1e-10, "u must be unitary");
  if (beta == 1) require(u.imag().cwiseAbs().maxCoeff() == 0.0, "u must be real orthogonal for beta = 1");
  require(q >= 1 && q <= r, "q must lie in [1, r]");
}

}  // namespace

LimitLawParams compute_limit_params_truncated(const VarianceProfile& profile,
                                              std::span<const int> positions, double a,
                                              const EntryLaw& law, int beta,
                                              const Eigen::MatrixXcd& u, int q, int truncation) {
  validate_limit_inputs(profile, positions, a, beta, u, q);
  require(truncation >= 2, "truncation must be at least 2");
  const int r = static_cast<int>(positions.size());
  const int n = profile.n();
  const double ss = profile.sigma_star();
  const double ss2 = ss * ss;
  const double a2 = a * a;
  const Eigen::MatrixXd p = profile.transition();

  LimitLawParams out;
  out.r = r;
  out.beta = beta;
  out.a = a;
  out.sigma_star = ss;
  out.truncation = truncation;
  out.g = Eigen::MatrixXd::Zero(r, r);
  out.sigma_tilde.resize(r, r);
  out.chi.resize(r);
  out.tau.resize(r);

  for (int i = 0; i < r; ++i) {
    // row_k = e_{m_i}^T P^k
    Eigen::RowVectorXd row = p.row(positions[i]);
    for (int k = 2; k <= truncation; ++k) {
      row = row * p;
      check_row_stochastic(row, "compute_limit_params");
      const double w = std::pow(a, -2.0 * k + 2.0);
      for (int j = 0; j < r; ++j) {
        double term = row(positions[j]) * w;
        if (k == 2 && i == j) term -= row(positions[j]) / a2;
        out.g(i, j) += term;
      }
    }
  }
  out.g /= ss2;
  out.g = 0.5 * (out.g + out.g.transpose()).eval();

  const double fourth_off = law.fourth_moment_offdiag(beta);
  const double fourth_diag = law.fourth_moment_diag(beta);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) out.sigma_tilde(i, j) = profile.sigma(positions[i], positions[j]) / ss;
    double s4 = 0.0, s4w = 0.0;
    for (int y = 0; y < n; ++y) {
      const double s = profile.sigma(positions[i], y);
      const double v = s * s * s * s;
      s4 += v;
      s4w += v * (y == positions[i] ? fourth_diag : fourth_off);
    }
    out.chi(i) = s4 / (ss2 * a2);
    out.tau(i) = s4w / (ss2 * a2);
  }
  out.q_rows = u.topRows(q);
  return out;
}

LimitLawParams compute_limit_params(const VarianceProfile& profile, std::span<const int> positions,
                                    double a, const EntryLaw& law, int beta,
                                    const Eigen::MatrixXcd& u, int q, double tol) {
  if (!(a > 1.0)) throw DomainError("limit parameters are defined for supercritical a > 1 only");
  require(tol > 0.0, "tolerance must be positive");
  // Tail sum_{k > K} a^{-2k+2} = a^{-2K} a^2 / (a^2 - 1).
  const double a2 = a * a;
  int truncation = 2;
  while (std::pow(a, -2.0 * truncation) * a2 / (a2 - 1.0) >= tol) {
    ++truncation;
    if (truncation > 100000) throw NumericError("g series truncation did not reach tolerance");
  }
  return compute_limit_params_truncated(profile, positions, a, law, beta, u, q, truncation);
}

// ---------------------------------------------------------------------------
// JSON

json profile_to_json(const VarianceProfile& profile, bool include_sigma) {
  json doc = {{"kind", to_string(profile.kind())}, {"n", profile.n()}, {"params", profile.params()}};
  const bool custom_kernel = profile.kind() == ProfileKind::band && profile.params().contains("kernel") &&
                             profile.params()["kernel"].value("shape", "") == "custom";
  if (include_sigma || profile.kind() == ProfileKind::custom || custom_kernel) {
    doc["sigma_rows"] = rows_of(profile.sigma());
  }
  return doc;
}

namespace {

BandKernel kernel_from_json(const json& k, int d) {
  if (!k.is_object() || !k.contains("shape")) throw SchemaError("band kernel needs a shape");
  for (const auto& [key, _] : k.items())
    if (key != "shape" && key != "radius") throw SchemaError("unknown kernel field '" + key + "'");
  const std::string shape = k.at("shape").get<std::string>();
  if (shape == "flat") return BandKernel::flat(d, k.value("radius", 1.0));
  if (shape == "gaussian") return BandKernel::gaussian(d);
  throw SchemaError("kernel shape '" + shape + "' cannot be regenerated; supply sigma_rows");
}

}  // namespace

VarianceProfile profile_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("profile must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "kind" && key != "n" && key != "params" && key != "sigma_rows")
      throw SchemaError("unknown profile field '" + key + "'");
  }
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw SchemaError("profile.kind is required");
  const ProfileKind kind = profile_kind_from_string(doc["kind"].get<std::string>());
  const json params = doc.value("params", json::object());
  if (!params.is_object()) throw SchemaError("profile.params must be an object");

  if (doc.contains("sigma_rows")) {
    Eigen::MatrixXd sigma = matrix_from_rows(doc["sigma_rows"], "sigma_rows");
    if (doc.contains("n") && doc["n"].get<int>() != sigma.rows()) throw SchemaError("profile.n does not match sigma_rows");
    return VarianceProfile(std::move(sigma), kind, params);
  }
  switch (kind) {
    case ProfileKind::uniform: {
      if (!doc.contains("n")) throw SchemaError("uniform profile needs n");
      return build_uniform_profile(doc["n"].get<int>());
    }
    case ProfileKind::band: {
      for (const char* key : {"L", "d", "bandwidth", "kernel"})
        if (!params.contains(key)) throw SchemaError(std::string("band profile params need '") + key + "'");
      const int L = params["L"].get<int>();
      const int d = params["d"].get<int>();
      VarianceProfile p =
          build_band_profile(L, d, params["bandwidth"].get<double>(), kernel_from_json(params["kernel"], d));
      if (doc.contains("n") && doc["n"].get<int>() != p.n()) throw SchemaError("profile.n does not equal L^d");
      return p;
    }
    case ProfileKind::dregular: {
      if (params.contains("psi_rows")) {
        return build_dregular_profile(matrix_from_rows(params["psi_rows"], "psi_rows").cast<int>());
      }
      if (params.contains("offsets") && doc.contains("n")) {
        const auto offsets = params["offsets"].get<std::vector<int>>();
        return build_dregular_profile(circulant_adjacency(doc["n"].get<int>(), offsets));
      }
      throw SchemaError("dregular profile needs params.psi_rows or params.offsets with n");
    }
    case ProfileKind::chiral: {
      if (!params.contains("phi_rows")) throw SchemaError("chiral profile needs params.phi_rows");
      return build_chiral_profile(matrix_from_rows(params["phi_rows"], "phi_rows"));
    }
    case ProfileKind::custom: throw SchemaError("custom profile requires sigma_rows");
  }
  throw SchemaError("unreachable profile kind");
}

}  // namespace bbp
