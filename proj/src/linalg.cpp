#include "wclmmse/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace wclmmse::linalg {

namespace {

// Flip each column so its largest-magnitude entry is positive. The first
// index wins ties, so the result only depends on the input bits.
void normalize_column_signs(Matrix& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) v.col(j) = -v.col(j);
  }
}

// Same convention for paired singular vectors: decide on u, flip v along.
void normalize_svd_signs(Matrix& u, Matrix& v) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0.0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
}

std::string dims(const Matrix& a) {
  std::ostringstream os;
  os << a.rows() << "x" << a.cols();
  return os.str();
}

}  // namespace

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw NumericInputError(std::string(what) + ": non-finite entry");
  }
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(what) + ": expected square matrix, got " +
                         dims(a));
  }
}

Matrix symmetrize(const Matrix& a) {
  require_square(a, "symmetrize");
  Matrix s = 0.5 * (a + a.transpose());
  return s;
}

SymEig sym_eig(const Matrix& a) {
  require_square(a, "sym_eig");
  require_finite(a, "sym_eig");
  const Index n = a.rows();
  SymEig out;
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a),
                                               Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericInputError("sym_eig: eigensolver did not converge");
  }
  // Eigen returns ascending order; reverse to descending.
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  normalize_column_signs(out.vectors);
  return out;
}

Svd svd(const Matrix& a, bool full_v) {
  require_finite(a, "svd");
  Svd out;
  const unsigned options =
      Eigen::ComputeThinU | (full_v ? Eigen::ComputeFullV : Eigen::ComputeThinV);
  Eigen::JacobiSVD<Matrix> solver(a, options);
  out.u = solver.matrixU();
  out.s = solver.singularValues();
  out.v = solver.matrixV();
  const Index r = out.s.size();
  // Sign-normalize only the paired columns; extra columns of a full V are an
  // arbitrary orthonormal completion.
  Matrix v_paired = out.v.leftCols(r);
  normalize_svd_signs(out.u, v_paired);
  out.v.leftCols(r) = v_paired;
  return out;
}

Index numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  const Vector s = svd(a).s;
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  return static_cast<Index>((s.array() > cut).count());
}

Matrix inv_sqrt_spd(const Matrix& a, InverseAudit& audit,
                    std::optional<double> floor) {
  const SymEig eig = sym_eig(a);
  const Index n = eig.size();
  audit.record(n);
  if (n == 0) return Matrix(0, 0);
  const double lmax = eig.values(0);
  const double cut = floor.value_or(1e-12 * std::abs(lmax));
  for (Index i = 0; i < n; ++i) {
    if (!(eig.values(i) > cut)) {
      const double cond = eig.values(i) > 0.0
                              ? lmax / eig.values(i)
                              : std::numeric_limits<double>::infinity();
      std::ostringstream os;
      os << "inv_sqrt_spd: eigenvalue " << i << " = " << eig.values(i)
         << " at or below floor " << cut;
      throw SingularityError(os.str(), i, eig.values(i), cond);
    }
  }
  const Vector scale = eig.values.array().rsqrt();
  Matrix out = eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
  return symmetrize(out);
}

Matrix inv_sqrt_spd(const Matrix& a, std::optional<double> floor) {
  InverseAudit audit;
  return inv_sqrt_spd(a, audit, floor);
}

double condition_number(const Matrix& a) {
  require_square(a, "condition_number");
  require_finite(a, "condition_number");
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    throw UndefinedConditionError("condition_number: zero matrix");
  }
  const Vector values =
      Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(a), Eigen::EigenvaluesOnly)
          .eigenvalues();
  const double lmin = values(0);
  const double lmax = values(values.size() - 1);
  if (lmin <= 0.0) return std::numeric_limits<double>::infinity();
  return lmax / lmin;
}

Matrix solve_spd(const Matrix& a, const Matrix& b, InverseAudit& audit) {
  require_square(a, "solve_spd");
  if (a.rows() != b.rows()) {
    throw DimensionError("solve_spd: A is " + dims(a) + " but B is " + dims(b));
  }
  require_finite(a, "solve_spd");
  require_finite(b, "solve_spd");
  audit.record(a.rows());
  if (a.rows() == 0) return Matrix(0, b.cols());

  const Matrix sym = symmetrize(a);
  const auto reject = [](double rcond) {
    std::ostringstream os;
    os << "solve_spd: reciprocal condition estimate " << rcond
       << " below machine epsilon";
    throw SingularityError(os.str(), -1, 0.0,
                           rcond > 0.0 ? 1.0 / rcond
                                       : std::numeric_limits<double>::infinity());
  };
  const Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    const double rcond = llt.rcond();
    if (!(rcond >= std::numeric_limits<double>::epsilon())) reject(rcond);
    return llt.solve(b);
  }
  // Cholesky breaks down when rounding or perturbation has pushed the
  // smallest eigenvalues of a near-singular covariance below zero. The system
  // is still solvable if it is not singular, so fall back to pivoted LU.
  const Eigen::PartialPivLU<Matrix> lu(sym);
  // The LU estimator is unreliable once a pivot is exactly zero, so check
  // the pivots of U directly as well.
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double eps = std::numeric_limits<double>::epsilon();
  if (!(pivots.minCoeff() > eps * pivots.maxCoeff())) reject(0.0);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || !(rcond >= eps)) reject(rcond);
  return lu.solve(b);
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  InverseAudit audit;
  return solve_spd(a, b, audit);
}

double nuclear_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return svd(a).s.sum();
}

double frobenius_norm(const Matrix& a) { return a.norm(); }

}  // namespace wclmmse::linalg
