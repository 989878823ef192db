#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "wclmmse/model.hpp"

namespace wclmmse {

enum class FilterKind {
  wiener,
  wiener_structured,
  lrw,
  csw,
  jpc,
  lsjpc,
  jpc_simplified,
  lsjpc_simplified,
  weighted,
};

std::string_view to_string(FilterKind kind);
/// Inverse of to_string; throws std::invalid_argument for unknown names.
FilterKind parse_filter_kind(std::string_view name);

/// An N x M estimator together with how it was built.
///
/// max_inverse_dim is the largest linear system solved (or matrix inverted)
/// while computing the matrix from C_Y and C_XY. It is the checkable form of
/// "L-well-conditioned": JPC-family filters report at most l, Wiener / LRW /
/// CSW report M.
struct LinearFilter {
  Matrix matrix;
  FilterKind kind = FilterKind::wiener;
  /// Base kind for FilterKind::weighted.
  std::optional<FilterKind> inner;
  std::optional<Index> l;
  Index max_inverse_dim = 0;

  Vector apply(const Vector& y) const { return matrix * y; }
};

/// Full-row-rank L x M matrix applied to the input before a second stage.
class Prefilter {
 public:
  /// Throws RankError unless rank(b) == rows(b) (singular values above
  /// 1e-10 sigma_max) and rows(b) <= cols(b).
  explicit Prefilter(Matrix b);

  const Matrix& matrix() const { return b_; }
  Index l() const { return b_.rows(); }
  Index m() const { return b_.cols(); }

 private:
  Matrix b_;
};

/// Spectral factorizations shared by the truncated filters of one model.
///
/// Holds the eigendecomposition of C_Z and its row partition into V_X (top N
/// rows) and V_Y (bottom M rows). The SVD of C_XY C_Y^{-1/2} needed by LRW and
/// CSW is computed on first use; that path is thread-safe, so one cache can
/// serve concurrent filter constructions.
class SpectralCache {
 public:
  explicit SpectralCache(const CovarianceModel& model);
  /// Uses a caller-supplied eigendecomposition of C_Z (any column signs).
  /// Throws ModelError if V_X'V_X + V_Y'V_Y deviates from I by more than 1e-8.
  SpectralCache(const CovarianceModel& model, linalg::SymEig joint);

  const JointLayout& layout() const { return layout_; }
  const linalg::SymEig& joint() const { return joint_; }
  const Vector& joint_values() const { return joint_.values; }

  auto v_x() const { return joint_.vectors.topRows(layout_.n); }
  auto v_y() const { return joint_.vectors.bottomRows(layout_.m); }
  Matrix v_xl(Index l) const;
  Matrix v_yl(Index l) const;
  Vector s_zl(Index l) const;

  /// ||V_YL'V_YL - I||_F.
  double gram_defect(Index l) const;

  /// SVD of C_XY C_Y^{-1/2}; may throw SingularityError from the inverse
  /// square root.
  const linalg::Svd& whitened_svd() const;
  /// C_Y^{-1/2}, computed together with whitened_svd().
  const Matrix& c_y_inv_sqrt() const;

 private:
  struct Whitened;
  const Whitened& whitened() const;
  void check_l(Index l, const char* what) const;

  JointLayout layout_;
  linalg::SymEig joint_;
  std::shared_ptr<Whitened> whitened_;
};

/// A_W = C_XY C_Y^{-1}, by Cholesky solve.
LinearFilter wiener(const CovarianceModel& model);

/// C_XY B'(B C_Y B')^{-1} B, using an L x L solve.
LinearFilter wiener_structured(const CovarianceModel& model, const Prefilter& b);

/// Low-rank Wiener: U_L S_L V_L' C_Y^{-1/2} keeping min(l, N) singular
/// triplets of C_XY C_Y^{-1/2}.
LinearFilter lrw(const CovarianceModel& model, Index l);
LinearFilter lrw(const CovarianceModel& model, const SpectralCache& cache, Index l);

/// Cross-spectral Wiener: keeps the l eigenvectors q_i of C_Y with the
/// largest ||C_XY q_i||^2 / lambda_i. rank <= min(l, N) automatically.
LinearFilter csw(const CovarianceModel& model, Index l);
LinearFilter csw(const CovarianceModel& model, const SpectralCache& cache, Index l);

/// Joint-principal-component filter: Wiener-structured with prefilter V_YL'.
LinearFilter jpc(const CovarianceModel& model, Index l);
LinearFilter jpc(const CovarianceModel& model, const SpectralCache& cache, Index l);

/// Least-squares JPC: V_XL (V_YL'V_YL)^{-1} V_YL'.
LinearFilter lsjpc(const CovarianceModel& model, Index l);
LinearFilter lsjpc(const CovarianceModel& model, const SpectralCache& cache, Index l);

/// C_XY V_YL S_ZL^{-1} V_YL' (no linear solve).
LinearFilter jpc_simplified(const CovarianceModel& model, Index l);
LinearFilter jpc_simplified(const CovarianceModel& model, const SpectralCache& cache,
                            Index l);

/// V_XL V_YL' (no inverse at all).
LinearFilter lsjpc_simplified(const CovarianceModel& model, Index l);
LinearFilter lsjpc_simplified(const CovarianceModel& model,
                              const SpectralCache& cache, Index l);

/// Builds any non-weighted kind except wiener_structured. `l` is ignored for
/// wiener and required otherwise.
LinearFilter build_filter(const CovarianceModel& model, const SpectralCache& cache,
                          FilterKind kind, std::optional<Index> l);
LinearFilter build_filter(const CovarianceModel& model, FilterKind kind,
                          std::optional<Index> l);

/// Minimizer of tr(G'G C_err) within the family `base`: builds the base filter
/// for the model (G C_X G', C_Y, G C_XY) and maps it back with G^{-1}.
/// Throws InvalidWeightError unless G is invertible (sigma_min > 1e-10 sigma_max).
LinearFilter weighted_filter(const CovarianceModel& model, const Matrix& g,
                             FilterKind base, std::optional<Index> l);

/// C_X^{-1/2}: the weight under which the weighted-trace minimizer also
/// minimizes det(C_err).
Matrix det_optimal_weight(const CovarianceModel& model);

bool is_l_well_conditioned(const LinearFilter& filter, Index l);

}  // namespace wclmmse
