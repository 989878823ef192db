#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "wclmmse/layout.hpp"
#include "wclmmse/linalg.hpp"

namespace wclmmse {

using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

/// Second-order description of the joint vector z = [x; y]:
/// C_X (N x N), C_Y (M x M), C_XY (N x M) and the assembled joint C_Z.
///
/// C_Z is always the exact block matrix [[C_X, C_XY], [C_XY', C_Y]]; the
/// blocks and C_Z never disagree. Instances are immutable.
class CovarianceModel {
 public:
  /// Partitions a joint covariance with the target block on top.
  /// Throws DimensionError / NumericInputError / ModelError (asymmetry beyond
  /// 1e-10 relative).
  static CovarianceModel from_joint(const Matrix& c_z, Index n);

  /// Assembles C_Z from blocks. Same checks as from_joint.
  static CovarianceModel from_blocks(const Matrix& c_x, const Matrix& c_y,
                                     const Matrix& c_xy);

  Index n() const { return layout_.n; }
  Index m() const { return layout_.m; }
  const JointLayout& layout() const { return layout_; }

  const Matrix& c_x() const { return c_x_; }
  const Matrix& c_y() const { return c_y_; }
  const Matrix& c_xy() const { return c_xy_; }
  const Matrix& c_z() const { return c_z_; }

  /// Model restricted to the last `m_sub` input coordinates (the most recent
  /// lags under the windowing convention). m_sub == m() returns a copy.
  CovarianceModel restrict_inputs(Index m_sub) const;

  /// Throws ModelError if C_Z has an eigenvalue below -rel_tol * lambda_max.
  void require_psd(double rel_tol = 1e-10) const;

 private:
  CovarianceModel() = default;
  void validate() const;

  JointLayout layout_;
  Matrix c_x_;
  Matrix c_y_;
  Matrix c_xy_;
  Matrix c_z_;
};

/// Train/test index sets over the rows of a SampleSet. Both are sorted and
/// disjoint.
struct Partition {
  std::vector<Index> train;
  std::vector<Index> test;

  bool empty() const { return train.empty() && test.empty(); }
  bool operator==(const Partition&) const = default;
};

/// Windowed joint samples, one per row, with the scalar mean that was
/// subtracted from every entry.
struct SampleSet {
  JointLayout layout;
  Matrix samples;  // K x (n + m)
  double mean = 0.0;
  Partition partition;

  Index size() const { return samples.rows(); }
  Matrix rows(const std::vector<Index>& idx) const;
  Matrix train() const { return rows(partition.train); }
  Matrix test() const { return rows(partition.test); }
};

/// sum_i z_i z_i' / (K - 1) for the rows of `samples`, exactly symmetric.
/// Throws InsufficientDataError for K < 2.
Matrix empirical_covariance(const Matrix& samples);

/// Empirical joint covariance of mean-subtracted samples, partitioned with
/// the first n coordinates as the target block.
CovarianceModel estimate_covariance(const Matrix& samples, Index n);

/// Covariance of the training rows of a sample set.
CovarianceModel estimate_covariance(const SampleSet& set);

struct ConstantSpectrum {
  double value = 1.0;
};
/// lambda_i = scale * ratio^i, i = 0 .. dim-1.
struct GeometricSpectrum {
  double scale = 1.0;
  double ratio = 0.5;
};
struct ExplicitSpectrum {
  std::vector<double> values;
};
using SpectrumSpec =
    std::variant<ConstantSpectrum, GeometricSpectrum, ExplicitSpectrum>;

/// Eigenvalues requested by `spec` for a dim-dimensional joint covariance.
/// Throws InvalidSpectrumError for nonpositive or non-finite entries, or an
/// explicit list of the wrong length.
std::vector<double> spectrum_values(const SpectrumSpec& spec, Index dim);

/// Seeded random model: C_Z = V S V' with V the (sign-corrected) Q factor of
/// a Gaussian matrix and S the requested spectrum.
CovarianceModel synthetic_model(Index n, Index m, const SpectrumSpec& spec,
                                std::uint64_t seed);

/// k i.i.d. zero-mean Gaussian samples with covariance C_Z. No partition.
/// Throws ModelError if C_Z is not PSD within tolerance.
SampleSet sample_from_model(const CovarianceModel& model, Index k,
                            std::uint64_t seed);

}  // namespace wclmmse
