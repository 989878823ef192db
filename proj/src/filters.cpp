#include "wclmmse/filters.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wclmmse {

namespace {

constexpr std::pair<FilterKind, std::string_view> kKindNames[] = {
    {FilterKind::wiener, "wiener"},
    {FilterKind::wiener_structured, "wiener_structured"},
    {FilterKind::lrw, "lrw"},
    {FilterKind::csw, "csw"},
    {FilterKind::jpc, "jpc"},
    {FilterKind::lsjpc, "lsjpc"},
    {FilterKind::jpc_simplified, "jpc_simplified"},
    {FilterKind::lsjpc_simplified, "lsjpc_simplified"},
    {FilterKind::weighted, "weighted"},
};

void check_truncation(const CovarianceModel& model, Index l, const char* what) {
  if (l < 1 || l > model.m()) {
    std::ostringstream os;
    os << what << ": l = " << l << " outside [1, " << model.m() << "]";
    throw DimensionError(os.str());
  }
}

void check_cache(const CovarianceModel& model, const SpectralCache& cache) {
  if (cache.layout().n != model.n() || cache.layout().m != model.m()) {
    throw DimensionError("spectral cache does not match model dimensions");
  }
}

// Shared by wiener_structured() and jpc() so both follow one arithmetic path.
Matrix wiener_structured_matrix(const CovarianceModel& model, const Matrix& b,
                                linalg::InverseAudit& audit) {
  const Matrix bc = b * model.c_y();                 // L x M
  const Matrix inner = bc * b.transpose();           // L x L
  const Matrix t = linalg::solve_spd(inner, b, audit);  // (B C_Y B')^{-1} B
  return (model.c_xy() * b.transpose()) * t;
}

}  // namespace

std::string_view to_string(FilterKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

FilterKind parse_filter_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown filter kind '" + std::string(name) + "'");
}

Prefilter::Prefilter(Matrix b) : b_(std::move(b)) {
  linalg::require_finite(b_, "Prefilter");
  if (b_.rows() < 1 || b_.rows() > b_.cols()) {
    throw RankError("Prefilter: need 1 <= L <= M, got " + std::to_string(b_.rows()) +
                    "x" + std::to_string(b_.cols()));
  }
  const Index rank = linalg::numerical_rank(b_, 1e-10);
  if (rank != b_.rows()) {
    throw RankError("Prefilter: rank " + std::to_string(rank) + " < L = " +
                    std::to_string(b_.rows()));
  }
}

// ---------------------------------------------------------------------------
// SpectralCache

struct SpectralCache::Whitened {
  Matrix c_y;
  Matrix c_xy;

  std::once_flag once;
  Matrix inv_sqrt;
  linalg::Svd svd;
};

SpectralCache::SpectralCache(const CovarianceModel& model)
    : SpectralCache(model, linalg::sym_eig(model.c_z())) {}

SpectralCache::SpectralCache(const CovarianceModel& model, linalg::SymEig joint)
    : layout_(model.layout()), joint_(std::move(joint)) {
  const Index dim = layout_.dim();
  if (joint_.values.size() != dim || joint_.vectors.rows() != dim ||
      joint_.vectors.cols() != dim) {
    throw DimensionError("SpectralCache: eigendecomposition has wrong shape");
  }
  const Matrix vx = v_x();
  const Matrix vy = v_y();
  const double defect =
      (vx.transpose() * vx + vy.transpose() * vy -
       Matrix::Identity(dim, dim))
          .norm();
  if (defect > 1e-8) {
    std::ostringstream os;
    os << "SpectralCache: eigenvectors not orthonormal (defect " << defect << ")";
    throw ModelError(os.str());
  }
  whitened_ = std::make_shared<Whitened>();
  whitened_->c_y = model.c_y();
  whitened_->c_xy = model.c_xy();
}

void SpectralCache::check_l(Index l, const char* what) const {
  if (l < 1 || l > layout_.dim()) {
    std::ostringstream os;
    os << what << ": l = " << l << " outside [1, " << layout_.dim() << "]";
    throw DimensionError(os.str());
  }
}

Matrix SpectralCache::v_xl(Index l) const {
  check_l(l, "v_xl");
  return joint_.vectors.topLeftCorner(layout_.n, l);
}

Matrix SpectralCache::v_yl(Index l) const {
  check_l(l, "v_yl");
  return joint_.vectors.bottomLeftCorner(layout_.m, l);
}

Vector SpectralCache::s_zl(Index l) const {
  check_l(l, "s_zl");
  return joint_.values.head(l);
}

double SpectralCache::gram_defect(Index l) const {
  const Matrix vyl = v_yl(l);
  return (vyl.transpose() * vyl - Matrix::Identity(l, l)).norm();
}

const SpectralCache::Whitened& SpectralCache::whitened() const {
  Whitened& w = *whitened_;
  std::call_once(w.once, [&w] {
    w.inv_sqrt = linalg::inv_sqrt_spd(w.c_y);
    w.svd = linalg::svd(w.c_xy * w.inv_sqrt);
  });
  return w;
}

const linalg::Svd& SpectralCache::whitened_svd() const { return whitened().svd; }

const Matrix& SpectralCache::c_y_inv_sqrt() const { return whitened().inv_sqrt; }

// ---------------------------------------------------------------------------
// Filters

LinearFilter wiener(const CovarianceModel& model) {
  linalg::InverseAudit audit;
  LinearFilter out;
  try {
    // A C_Y = C_XY  <=>  C_Y A' = C_XY'.
    out.matrix = linalg::solve_spd(model.c_y(), model.c_xy().transpose(), audit)
                     .transpose();
  } catch (const SingularityError& e) {
    const double cond = linalg::condition_number(model.c_y());
    std::ostringstream os;
    os << "wiener: C_Y numerically singular (condition number " << cond
       << "): " << e.what();
    throw SingularityError(os.str(), e.index(), e.value(), cond);
  }
  out.kind = FilterKind::wiener;
  out.max_inverse_dim = audit.max_dim();
  return out;
}

LinearFilter wiener_structured(const CovarianceModel& model, const Prefilter& b) {
  if (b.m() != model.m()) {
    throw DimensionError("wiener_structured: prefilter has " + std::to_string(b.m()) +
                         " columns, model has M = " + std::to_string(model.m()));
  }
  linalg::InverseAudit audit;
  LinearFilter out;
  out.matrix = wiener_structured_matrix(model, b.matrix(), audit);
  out.kind = FilterKind::wiener_structured;
  out.l = b.l();
  out.max_inverse_dim = audit.max_dim();
  return out;
}

LinearFilter lrw(const CovarianceModel& model, Index l) {
  return lrw(model, SpectralCache(model), l);
}

LinearFilter lrw(const CovarianceModel& model, const SpectralCache& cache, Index l) {
  check_truncation(model, l, "lrw");
  check_cache(model, cache);
  const linalg::Svd& w = cache.whitened_svd();
  const Index k = std::min<Index>(l, w.s.size());

  LinearFilter out;
  out.matrix = (w.u.leftCols(k) * w.s.head(k).asDiagonal() *
                w.v.leftCols(k).transpose()) *
               cache.c_y_inv_sqrt();
  out.kind = FilterKind::lrw;
  out.l = l;
  out.max_inverse_dim = model.m();  // C_Y^{-1/2}
  return out;
}

LinearFilter csw(const CovarianceModel& model, Index l) {
  return csw(model, SpectralCache(model), l);
}

LinearFilter csw(const CovarianceModel& model, const SpectralCache& cache, Index l) {
  check_truncation(model, l, "csw");
  check_cache(model, cache);
  const linalg::SymEig eig = linalg::sym_eig(model.c_y());
  const Index m = model.m();
  const double cut = 1e-12 * std::abs(eig.values(0));
  for (Index i = 0; i < m; ++i) {
    if (!(eig.values(i) > cut)) {
      throw SingularityError("csw: C_Y eigenvalue " + std::to_string(i) +
                                 " at or below singularity floor",
                             i, eig.values(i),
                             linalg::condition_number(model.c_y()));
    }
  }

  // Cross-spectral score of each eigen-direction: ||C_XY q_i||^2 / lambda_i.
  const Matrix proj = model.c_xy() * eig.vectors;
  Vector score(m);
  for (Index i = 0; i < m; ++i) score(i) = proj.col(i).squaredNorm() / eig.values(i);

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&score](Index a, Index b) { return score(a) > score(b); });

  Matrix q(m, l);
  Matrix cq(model.n(), l);
  for (Index j = 0; j < l; ++j) {
    const Index i = order[static_cast<std::size_t>(j)];
    q.col(j) = eig.vectors.col(i);
    cq.col(j) = proj.col(i) / eig.values(i);
  }

  LinearFilter out;
  out.matrix = cq * q.transpose();
  out.kind = FilterKind::csw;
  out.l = l;
  out.max_inverse_dim = m;  // full spectral inverse of C_Y
  return out;
}

LinearFilter jpc(const CovarianceModel& model, Index l) {
  return jpc(model, SpectralCache(model), l);
}

LinearFilter jpc(const CovarianceModel& model, const SpectralCache& cache, Index l) {
  check_truncation(model, l, "jpc");
  check_cache(model, cache);
  const Prefilter b(cache.v_yl(l).transpose());
  linalg::InverseAudit audit;
  LinearFilter out;
  out.matrix = wiener_structured_matrix(model, b.matrix(), audit);
  out.kind = FilterKind::jpc;
  out.l = l;
  out.max_inverse_dim = audit.max_dim();
  return out;
}

LinearFilter lsjpc(const CovarianceModel& model, Index l) {
  return lsjpc(model, SpectralCache(model), l);
}

LinearFilter lsjpc(const CovarianceModel& model, const SpectralCache& cache,
                   Index l) {
  check_truncation(model, l, "lsjpc");
  check_cache(model, cache);
  const Matrix vyl = cache.v_yl(l);
  const Prefilter rank_check(vyl.transpose());
  linalg::InverseAudit audit;
  // Resolution matrix R_YL = (V_YL'V_YL)^{-1} V_YL'.
  const Matrix resolution =
      linalg::solve_spd(vyl.transpose() * vyl, vyl.transpose(), audit);

  LinearFilter out;
  out.matrix = cache.v_xl(l) * resolution;
  out.kind = FilterKind::lsjpc;
  out.l = l;
  out.max_inverse_dim = audit.max_dim();
  return out;
}

LinearFilter jpc_simplified(const CovarianceModel& model, Index l) {
  return jpc_simplified(model, SpectralCache(model), l);
}

LinearFilter jpc_simplified(const CovarianceModel& model, const SpectralCache& cache,
                            Index l) {
  check_truncation(model, l, "jpc_simplified");
  check_cache(model, cache);
  const Vector s = cache.s_zl(l);
  const double cut = 1e-12 * std::abs(cache.joint_values()(0));
  for (Index i = 0; i < l; ++i) {
    if (!(s(i) > cut)) {
      throw SingularityError("jpc_simplified: joint eigenvalue " + std::to_string(i) +
                                 " at or below singularity floor",
                             i, s(i), std::numeric_limits<double>::infinity());
    }
  }
  const Matrix vyl = cache.v_yl(l);
  LinearFilter out;
  out.matrix = (model.c_xy() * vyl) * s.cwiseInverse().asDiagonal() * vyl.transpose();
  out.kind = FilterKind::jpc_simplified;
  out.l = l;
  out.max_inverse_dim = 0;
  return out;
}

LinearFilter lsjpc_simplified(const CovarianceModel& model, Index l) {
  return lsjpc_simplified(model, SpectralCache(model), l);
}

LinearFilter lsjpc_simplified(const CovarianceModel& model,
                              const SpectralCache& cache, Index l) {
  check_truncation(model, l, "lsjpc_simplified");
  check_cache(model, cache);
  LinearFilter out;
  out.matrix = cache.v_xl(l) * cache.v_yl(l).transpose();
  out.kind = FilterKind::lsjpc_simplified;
  out.l = l;
  out.max_inverse_dim = 0;
  return out;
}

LinearFilter build_filter(const CovarianceModel& model, const SpectralCache& cache,
                          FilterKind kind, std::optional<Index> l) {
  if (kind == FilterKind::wiener) return wiener(model);
  if (!l) {
    throw std::invalid_argument("build_filter: " + std::string(to_string(kind)) +
                                " needs a truncation parameter l");
  }
  switch (kind) {
    case FilterKind::lrw:
      return lrw(model, cache, *l);
    case FilterKind::csw:
      return csw(model, cache, *l);
    case FilterKind::jpc:
      return jpc(model, cache, *l);
    case FilterKind::lsjpc:
      return lsjpc(model, cache, *l);
    case FilterKind::jpc_simplified:
      return jpc_simplified(model, cache, *l);
    case FilterKind::lsjpc_simplified:
      return lsjpc_simplified(model, cache, *l);
    default:
      throw std::invalid_argument("build_filter: unsupported kind " +
                                  std::string(to_string(kind)));
  }
}

LinearFilter build_filter(const CovarianceModel& model, FilterKind kind,
                          std::optional<Index> l) {
  if (kind == FilterKind::wiener) return wiener(model);
  return build_filter(model, SpectralCache(model), kind, l);
}

LinearFilter weighted_filter(const CovarianceModel& model, const Matrix& g,
                             FilterKind base, std::optional<Index> l) {
  if (g.rows() != model.n() || g.cols() != model.n()) {
    throw DimensionError("weighted_filter: G must be N x N");
  }
  linalg::require_finite(g, "weighted_filter");
  const Vector sv = linalg::svd(g).s;
  if (sv.size() == 0 || !(sv(sv.size() - 1) > 1e-10 * sv(0))) {
    throw InvalidWeightError("weighted_filter: G is not invertible");
  }
  if (base == FilterKind::weighted || base == FilterKind::wiener_structured) {
    throw std::invalid_argument("weighted_filter: unsupported base kind " +
                                std::string(to_string(base)));
  }

  // E||G A Y - G X||^2: same C_Y, target covariance G C_X G', cross G C_XY.
  const CovarianceModel transformed = CovarianceModel::from_blocks(
      g * model.c_x() * g.transpose(), model.c_y(), g * model.c_xy());
  const LinearFilter inner = build_filter(transformed, base, l);

  LinearFilter out;
  out.matrix = g.fullPivLu().solve(inner.matrix);
  out.kind = FilterKind::weighted;
  out.inner = base;
  out.l = inner.l;
  out.max_inverse_dim = inner.max_inverse_dim;
  return out;
}

Matrix det_optimal_weight(const CovarianceModel& model) {
  return linalg::inv_sqrt_spd(model.c_x());
}

bool is_l_well_conditioned(const LinearFilter& filter, Index l) {
  return filter.max_inverse_dim <= l;
}

}  // namespace wclmmse
