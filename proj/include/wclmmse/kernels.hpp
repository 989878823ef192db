#pragma once

#include "wclmmse/linalg.hpp"

/// Data-parallel inner loops of the sample pipeline.
///
/// Samples are stored one per row (K x D). The OpenMP kernels split work into
/// fixed-size blocks whose boundaries never depend on the thread count, so
/// their output is identical for any OMP_NUM_THREADS. The `serial` namespace
/// holds straightforward reference loops used by the tests and benchmarks.
namespace wclmmse::kernels {

using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

/// Column block width used by gram(); exposed for the benchmarks.
inline constexpr Index kGramBlock = 64;
/// Sample block height used by residual_norms_sq().
inline constexpr Index kResidualBlock = 256;

/// Z' Z for a K x D sample matrix. The result is exactly symmetric.
Matrix gram(const Matrix& samples);

/// Squared prediction error per sample, ||A y_i - x_i||^2, where x_i is the
/// first `filter.rows()` entries of row i and y_i the remaining entries.
Vector residual_norms_sq(const Matrix& filter, const Matrix& samples);

/// Sum of squared norms of the first n entries of each row after adding
/// `offset` to every entry.
double target_power(const Matrix& samples, Index n, double offset);

namespace serial {

Matrix gram(const Matrix& samples);
Vector residual_norms_sq(const Matrix& filter, const Matrix& samples);

}  // namespace serial

}  // namespace wclmmse::kernels
