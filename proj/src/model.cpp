#include "wclmmse/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "wclmmse/kernels.hpp"

namespace wclmmse {

namespace {

void require_symmetric(const Matrix& a, const char* what) {
  const double scale = a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  const double skew =
      a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-10 * scale) {
    std::ostringstream os;
    os << what << ": asymmetry " << skew << " exceeds 1e-10 relative";
    throw ModelError(os.str());
  }
}

}  // namespace

CovarianceModel CovarianceModel::from_joint(const Matrix& c_z, Index n) {
  linalg::require_square(c_z, "CovarianceModel::from_joint");
  linalg::require_finite(c_z, "CovarianceModel::from_joint");
  if (n < 1 || n >= c_z.rows()) {
    throw DimensionError("CovarianceModel::from_joint: need 1 <= n < dim, got n=" +
                         std::to_string(n) + " dim=" + std::to_string(c_z.rows()));
  }
  require_symmetric(c_z, "CovarianceModel::from_joint");

  CovarianceModel out;
  out.layout_ = JointLayout{n, c_z.rows() - n};
  out.c_z_ = linalg::symmetrize(c_z);
  out.c_x_ = out.c_z_.topLeftCorner(n, n);
  out.c_y_ = out.c_z_.bottomRightCorner(out.layout_.m, out.layout_.m);
  out.c_xy_ = out.c_z_.topRightCorner(n, out.layout_.m);
  return out;
}

CovarianceModel CovarianceModel::from_blocks(const Matrix& c_x, const Matrix& c_y,
                                             const Matrix& c_xy) {
  linalg::require_square(c_x, "CovarianceModel::from_blocks(c_x)");
  linalg::require_square(c_y, "CovarianceModel::from_blocks(c_y)");
  if (c_xy.rows() != c_x.rows() || c_xy.cols() != c_y.rows()) {
    throw DimensionError("CovarianceModel::from_blocks: c_xy shape does not match");
  }
  if (c_x.rows() < 1 || c_y.rows() < 1) {
    throw DimensionError("CovarianceModel::from_blocks: empty block");
  }
  linalg::require_finite(c_x, "CovarianceModel::from_blocks(c_x)");
  linalg::require_finite(c_y, "CovarianceModel::from_blocks(c_y)");
  linalg::require_finite(c_xy, "CovarianceModel::from_blocks(c_xy)");
  require_symmetric(c_x, "CovarianceModel::from_blocks(c_x)");
  require_symmetric(c_y, "CovarianceModel::from_blocks(c_y)");

  CovarianceModel out;
  out.layout_ = JointLayout{c_x.rows(), c_y.rows()};
  out.c_x_ = linalg::symmetrize(c_x);
  out.c_y_ = linalg::symmetrize(c_y);
  out.c_xy_ = c_xy;
  const Index n = out.layout_.n;
  const Index m = out.layout_.m;
  out.c_z_.resize(n + m, n + m);
  out.c_z_.topLeftCorner(n, n) = out.c_x_;
  out.c_z_.topRightCorner(n, m) = out.c_xy_;
  out.c_z_.bottomLeftCorner(m, n) = out.c_xy_.transpose();
  out.c_z_.bottomRightCorner(m, m) = out.c_y_;
  return out;
}

CovarianceModel CovarianceModel::restrict_inputs(Index m_sub) const {
  if (m_sub < 1 || m_sub > m()) {
    throw DimensionError("restrict_inputs: m_sub out of range");
  }
  return from_blocks(c_x_, c_y_.bottomRightCorner(m_sub, m_sub),
                     c_xy_.rightCols(m_sub));
}

void CovarianceModel::require_psd(double rel_tol) const {
  const Vector values =
      Eigen::SelfAdjointEigenSolver<Matrix>(c_z_, Eigen::EigenvaluesOnly)
          .eigenvalues();
  const double lmax = values.cwiseAbs().maxCoeff();
  if (values(0) < -rel_tol * lmax) {
    std::ostringstream os;
    os << "covariance not PSD: smallest eigenvalue " << values(0)
       << " vs largest magnitude " << lmax;
    throw ModelError(os.str());
  }
}

Matrix SampleSet::rows(const std::vector<Index>& idx) const {
  Matrix out(static_cast<Index>(idx.size()), samples.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Index>(r)) = samples.row(idx[r]);
  }
  return out;
}

Matrix empirical_covariance(const Matrix& samples) {
  const Index k = samples.rows();
  if (k < 2) {
    throw InsufficientDataError("estimate_covariance: need at least 2 samples, got " +
                                std::to_string(k));
  }
  linalg::require_finite(samples, "estimate_covariance");
  Matrix c = kernels::gram(samples);
  c /= static_cast<double>(k - 1);
  return c;
}

CovarianceModel estimate_covariance(const Matrix& samples, Index n) {
  return CovarianceModel::from_joint(empirical_covariance(samples), n);
}

CovarianceModel estimate_covariance(const SampleSet& set) {
  return estimate_covariance(set.train(), set.layout.n);
}

std::vector<double> spectrum_values(const SpectrumSpec& spec, Index dim) {
  std::vector<double> out;
  if (const auto* c = std::get_if<ConstantSpectrum>(&spec)) {
    out.assign(static_cast<std::size_t>(dim), c->value);
  } else if (const auto* g = std::get_if<GeometricSpectrum>(&spec)) {
    out.resize(static_cast<std::size_t>(dim));
    for (Index i = 0; i < dim; ++i) {
      out[static_cast<std::size_t>(i)] =
          g->scale * std::pow(g->ratio, static_cast<double>(i));
    }
  } else {
    out = std::get<ExplicitSpectrum>(spec).values;
    if (static_cast<Index>(out.size()) != dim) {
      throw InvalidSpectrumError("explicit spectrum has " +
                                 std::to_string(out.size()) + " values, need " +
                                 std::to_string(dim));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0) || !std::isfinite(out[i])) {
      std::ostringstream os;
      os << "spectrum entry " << i << " = " << out[i] << " is not positive";
      throw InvalidSpectrumError(os.str());
    }
  }
  return out;
}

CovarianceModel synthetic_model(Index n, Index m, const SpectrumSpec& spec,
                                std::uint64_t seed) {
  if (n < 1 || m < 1) {
    throw DimensionError("synthetic_model: n and m must be >= 1");
  }
  const Index dim = n + m;
  const std::vector<double> lambda = spectrum_values(spec, dim);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix gauss(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) gauss(i, j) = normal(rng);
  }
  const Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix& r = qr.matrixQR();
  // Fix the sign ambiguity of QR so Q is Haar distributed.
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }

  const Eigen::Map<const Vector> s(lambda.data(), dim);
  const Matrix c_z = q * s.asDiagonal() * q.transpose();
  return CovarianceModel::from_joint(linalg::symmetrize(c_z), n);
}

SampleSet sample_from_model(const CovarianceModel& model, Index k,
                            std::uint64_t seed) {
  if (k < 0) throw DimensionError("sample_from_model: negative k");
  const Index dim = model.layout().dim();
  SampleSet out;
  out.layout = model.layout();
  out.samples.resize(k, dim);
  if (k == 0) return out;

  const linalg::SymEig eig = linalg::sym_eig(model.c_z());
  const double lmax = eig.values.cwiseAbs().maxCoeff();
  if (eig.values(dim - 1) < -1e-10 * lmax) {
    std::ostringstream os;
    os << "sample_from_model: covariance not PSD (eigenvalue "
       << eig.values(dim - 1) << ")";
    throw ModelError(os.str());
  }
  const Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  const Matrix factor = eig.vectors * root.asDiagonal();  // C_Z = F F'

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix gauss(k, dim);
  for (Index r = 0; r < k; ++r) {
    for (Index j = 0; j < dim; ++j) gauss(r, j) = normal(rng);
  }
  out.samples.noalias() = gauss * factor.transpose();
  return out;
}

}  // namespace wclmmse
