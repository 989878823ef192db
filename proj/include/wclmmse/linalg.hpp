#pragma once

#include <algorithm>
#include <optional>

#include <Eigen/Dense>

#include "wclmmse/errors.hpp"

/// Dense real linear-algebra kernels shared by every filter construction.
///
/// All routines are pure: they read their arguments and return fresh values.
/// Eigen supplies the factorizations; this layer fixes ordering and sign
/// conventions so results are reproducible bit-for-bit for identical inputs.
namespace wclmmse::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
/// Each eigenvector's largest-magnitude entry is positive.
struct SymEig {
  Vector values;
  Matrix vectors;

  Index size() const { return values.size(); }
};

/// Singular value decomposition A = U diag(s) V', s descending.
/// u is rows x r, v is cols x r (or cols x cols when requested full),
/// with r = min(rows, cols).
struct Svd {
  Matrix u;
  Vector s;
  Matrix v;
};

/// Records the dimension of every linear system solved (or matrix inverted)
/// while building a result. Filters use max_dim() as their certificate of
/// the largest inverse involved.
class InverseAudit {
 public:
  void record(Index dim) { max_dim_ = std::max(max_dim_, dim); }
  Index max_dim() const { return max_dim_; }

 private:
  Index max_dim_ = 0;
};

/// Throws NumericInputError if any entry is NaN or infinite.
void require_finite(const Matrix& a, const char* what);

/// Throws DimensionError unless `a` is square.
void require_square(const Matrix& a, const char* what);

/// (A + A') / 2.
Matrix symmetrize(const Matrix& a);

SymEig sym_eig(const Matrix& a);

Svd svd(const Matrix& a, bool full_v = false);

/// Number of singular values above rel_tol * sigma_max.
Index numerical_rank(const Matrix& a, double rel_tol = 1e-10);

/// Symmetric B with B A B = I, computed as V diag(lambda^{-1/2}) V'.
/// The default floor is 1e-12 * lambda_max; any eigenvalue at or below the
/// floor raises SingularityError naming its (descending) index.
Matrix inv_sqrt_spd(const Matrix& a, std::optional<double> floor = std::nullopt);
Matrix inv_sqrt_spd(const Matrix& a, InverseAudit& audit,
                    std::optional<double> floor = std::nullopt);

/// lambda_max / lambda_min of the symmetrized input; +infinity when
/// lambda_min <= 0 in floating point.
double condition_number(const Matrix& a);

/// Solves A X = B for symmetric A by Cholesky. If Cholesky breaks down (A
/// has rounded slightly indefinite) the symmetrized system is solved by
/// pivoted LU instead. Numerically singular A (reciprocal condition estimate
/// below machine epsilon) raises SingularityError.
Matrix solve_spd(const Matrix& a, const Matrix& b);
Matrix solve_spd(const Matrix& a, const Matrix& b, InverseAudit& audit);

/// Sum of singular values.
double nuclear_norm(const Matrix& a);

double frobenius_norm(const Matrix& a);

}  // namespace wclmmse::linalg
