#include "wclmmse/kernels.hpp"

#include <vector>


namespace wclmmse::kernels {

namespace {

void require_residual_shapes(const Matrix& filter, const Matrix& samples) {
  if (filter.rows() + filter.cols() != samples.cols()) {
    throw DimensionError("residual_norms_sq: filter " +
                         std::to_string(filter.rows()) + "x" +
                         std::to_string(filter.cols()) +
                         " does not match sample length " +
                         std::to_string(samples.cols()));
  }
}

}  // namespace

Matrix gram(const Matrix& samples) {
  const Index d = samples.cols();
  Matrix out(d, d);
  if (d == 0) return out;

  const Index blocks = (d + kGramBlock - 1) / kGramBlock;
  // Upper-triangular block pairs (bi <= bj), flattened so one parallel loop
  // covers them.
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(blocks * (blocks + 1) / 2));
  for (Index bi = 0; bi < blocks; ++bi) {
    for (Index bj = bi; bj < blocks; ++bj) pairs.emplace_back(bi, bj);
  }

  const auto count = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    const auto [bi, bj] = pairs[static_cast<std::size_t>(p)];
    const Index i0 = bi * kGramBlock;
    const Index j0 = bj * kGramBlock;
    const Index wi = std::min(kGramBlock, d - i0);
    const Index wj = std::min(kGramBlock, d - j0);
    out.block(i0, j0, wi, wj).noalias() =
        samples.middleCols(i0, wi).transpose() * samples.middleCols(j0, wj);
  }

  // Mirror the strict upper triangle so the result is exactly symmetric.
  for (Index j = 0; j < d; ++j) {
    for (Index i = j + 1; i < d; ++i) out(i, j) = out(j, i);
  }
  return out;
}

Vector residual_norms_sq(const Matrix& filter, const Matrix& samples) {
  require_residual_shapes(filter, samples);
  const Index k = samples.rows();
  const Index n = filter.rows();
  const Index m = filter.cols();
  Vector out(k);
  if (k == 0) return out;

  const Index blocks = (k + kResidualBlock - 1) / kResidualBlock;
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < blocks; ++b) {
    const Index r0 = b * kResidualBlock;
    const Index h = std::min(kResidualBlock, k - r0);
    Matrix err = samples.block(r0, n, h, m) * filter.transpose();
    err -= samples.block(r0, 0, h, n);
    out.segment(r0, h) = err.rowwise().squaredNorm();
  }
  return out;
}

double target_power(const Matrix& samples, Index n, double offset) {
  if (n > samples.cols()) {
    throw DimensionError("target_power: n exceeds sample length");
  }
  return (samples.leftCols(n).array() + offset).square().sum();
}

namespace serial {

Matrix gram(const Matrix& samples) {
  const Index k = samples.rows();
  const Index d = samples.cols();
  Matrix out = Matrix::Zero(d, d);
  for (Index r = 0; r < k; ++r) {
    for (Index i = 0; i < d; ++i) {
      const double zi = samples(r, i);
      for (Index j = i; j < d; ++j) out(i, j) += zi * samples(r, j);
    }
  }
  for (Index j = 0; j < d; ++j) {
    for (Index i = j + 1; i < d; ++i) out(i, j) = out(j, i);
  }
  return out;
}

Vector residual_norms_sq(const Matrix& filter, const Matrix& samples) {
  require_residual_shapes(filter, samples);
  const Index k = samples.rows();
  const Index n = filter.rows();
  const Index m = filter.cols();
  Vector out(k);
  for (Index r = 0; r < k; ++r) {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
      double pred = 0.0;
      for (Index j = 0; j < m; ++j) pred += filter(i, j) * samples(r, n + j);
      const double e = pred - samples(r, i);
      acc += e * e;
    }
    out(r) = acc;
  }
  return out;
}

}  // namespace serial

}  // namespace wclmmse::kernels
