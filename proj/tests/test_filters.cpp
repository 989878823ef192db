#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "wclmmse/diagnostics.hpp"
#include "wclmmse/errors.hpp"
#include "wclmmse/filters.hpp"

namespace {

using namespace wclmmse;
using wclmmse::testing::gaussian;
using wclmmse::testing::oracle_mse;
using wclmmse::testing::oracle_wiener;
using wclmmse::testing::oracle_wiener_structured;
using wclmmse::testing::random_invertible;
using wclmmse::testing::random_model;
using wclmmse::testing::random_spd;
using wclmmse::testing::rel_diff;
using wclmmse::testing::Rng;

CovarianceModel blocks(const Matrix& cx, const Matrix& cy, const Matrix& cxy) {
  return CovarianceModel::from_blocks(cx, cy, cxy);
}

// X equals Y exactly: C_Z = [[C, C], [C, C]].
CovarianceModel copy_model(Index m, Rng& rng) {
  const Matrix c = random_spd(m, rng, 0.5);
  return blocks(c, c, c);
}

TEST(FilterKind, NamesRoundTrip) {
  for (const auto kind :
       {FilterKind::wiener, FilterKind::wiener_structured, FilterKind::lrw, FilterKind::csw,
        FilterKind::jpc, FilterKind::lsjpc, FilterKind::jpc_simplified,
        FilterKind::lsjpc_simplified, FilterKind::weighted}) {
    EXPECT_EQ(parse_filter_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_filter_kind("kalman"), std::invalid_argument);
}

TEST(Wiener, SmallCases) {
  Matrix cxy(1, 2);
  cxy << 1, 0;
  const Matrix cx = Matrix::Constant(1, 1, 2.0);
  const auto a = wiener(blocks(cx, Matrix::Identity(2, 2), cxy));
  EXPECT_NEAR(a.matrix(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(a.matrix(0, 1), 0.0, 1e-15);
  const auto b = wiener(blocks(cx, 2.0 * Matrix::Identity(2, 2), cxy));
  EXPECT_NEAR(b.matrix(0, 0), 0.5, 1e-15);
  EXPECT_EQ(b.kind, FilterKind::wiener);
  EXPECT_FALSE(b.l.has_value());
  EXPECT_EQ(b.max_inverse_dim, 2);
}

TEST(Wiener, MatchesExplicitInverse) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_model(2, 3, rng);
    EXPECT_LE(rel_diff(wiener(model).matrix, oracle_wiener(model)), 1e-8);
  }
}

TEST(Wiener, SingularInputReportsCondition) {
  Matrix cy = Matrix::Zero(2, 2);
  cy(0, 0) = 1.0;
  try {
    wiener(blocks(Matrix::Identity(1, 1), cy, Matrix::Zero(1, 2)));
    FAIL() << "expected SingularityError";
  } catch (const SingularityError& e) {
    EXPECT_TRUE(std::isinf(e.condition()));
    EXPECT_NE(std::string(e.what()).find("condition number"), std::string::npos);
  }
}

TEST(Prefilter, RankChecks) {
  Rng rng(2);
  EXPECT_NO_THROW(Prefilter(gaussian(2, 4, rng)));
  Matrix dup = gaussian(1, 4, rng);
  Matrix b(2, 4);
  b << dup, 3.0 * dup;
  EXPECT_THROW(Prefilter{b}, RankError);
  EXPECT_THROW(Prefilter(gaussian(5, 4, rng)), RankError);
  EXPECT_THROW(Prefilter(Matrix(0, 4)), RankError);
}

TEST(WienerStructured, IdentityPrefilterIsWiener) {
  Rng rng(3);
  const auto model = random_model(2, 5, rng);
  const auto a = wiener_structured(model, Prefilter(Matrix::Identity(5, 5)));
  EXPECT_LE(rel_diff(a.matrix, wiener(model).matrix), 1e-8);
  EXPECT_EQ(a.max_inverse_dim, 5);
  EXPECT_EQ(a.l, 5);
}

TEST(WienerStructured, MatchesExplicitFormulaAndAuditsL) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_model(3, 7, rng);
    const Matrix b = gaussian(3, 7, rng);
    const auto a = wiener_structured(model, Prefilter(b));
    EXPECT_LE(rel_diff(a.matrix, oracle_wiener_structured(model, b)), 1e-8);
    EXPECT_EQ(a.max_inverse_dim, 3);
    EXPECT_TRUE(is_l_well_conditioned(a, 3));
  }
}

TEST(WienerStructured, InvariantToInvertibleRemix) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 2 + trial % 7;
    const Index l = 1 + trial % std::min<Index>(m, 4);
    const auto model = random_model(2, m, rng);
    const Matrix b = gaussian(l, m, rng);
    const Matrix t = random_invertible(l, rng);
    const Matrix a1 = wiener_structured(model, Prefilter(b)).matrix;
    const Matrix a2 = wiener_structured(model, Prefilter(t * b)).matrix;
    EXPECT_LE((a1 - a2).norm(), 1e-8 * a1.norm());
  }
}

TEST(WienerStructured, ScalarLeastSquaresOracle) {
  // N = 1, L = 1, M = 2: the best D for the scalar input bY minimizes
  // c_x - 2 d (c_xy b') + d^2 (b c_y b').
  Rng rng(6);
  const auto model = random_model(1, 2, rng);
  const Matrix b = gaussian(1, 2, rng);
  const double cross = (model.c_xy() * b.transpose())(0, 0);
  const double power = (b * model.c_y() * b.transpose())(0, 0);
  const double d_star = cross / power;
  const Matrix a = wiener_structured(model, Prefilter(b)).matrix;
  EXPECT_LE(rel_diff(a, d_star * b), 1e-12);
  const double best = oracle_mse(model, a);
  for (double d = d_star - 1.0; d <= d_star + 1.0; d += 0.01) {
    EXPECT_GE(oracle_mse(model, d * b), best - 1e-12);
  }
}

TEST(WienerStructured, OptimalOverRandomSecondStages) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_model(2, 6, rng);
    const Matrix b = gaussian(3, 6, rng);
    const Matrix a = wiener_structured(model, Prefilter(b)).matrix;
    const double best = oracle_mse(model, a);
    for (int k = 0; k < 100; ++k) {
      const Matrix d = gaussian(2, 3, rng);
      EXPECT_LE(best, oracle_mse(model, d * b) + 1e-10);
    }
  }
}

TEST(WienerStructured, DimensionMismatch) {
  Rng rng(8);
  const auto model = random_model(1, 3, rng);
  EXPECT_THROW(wiener_structured(model, Prefilter(gaussian(1, 4, rng))), DimensionError);
}

TEST(Lrw, NoTruncationIsWiener) {
  Rng rng(9);
  const auto model = random_model(2, 4, rng);
  for (Index l = 2; l <= 4; ++l) {
    const auto a = lrw(model, l);
    EXPECT_LE(rel_diff(a.matrix, wiener(model).matrix), 1e-8) << l;
    EXPECT_EQ(a.max_inverse_dim, 4);
  }
}

TEST(Lrw, KeepsDominantDirection) {
  Matrix cx = Matrix::Zero(2, 2);
  cx(0, 0) = 10.0;
  cx(1, 1) = 2.0;
  Matrix cxy = Matrix::Zero(2, 3);
  cxy(0, 0) = 3.0;
  cxy(1, 1) = 1.0;
  const auto model = blocks(cx, Matrix::Identity(3, 3), cxy);
  const auto a = lrw(model, 1);
  EXPECT_NEAR(a.matrix(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(a.matrix.norm(), 3.0, 1e-12);
  EXPECT_NEAR(oracle_mse(model, a.matrix), 12.0 - 9.0, 1e-12);
  EXPECT_EQ(linalg::numerical_rank(a.matrix), 1);
}

TEST(Lrw, RankBoundedByTruncation) {
  Rng rng(10);
  const auto model = random_model(3, 6, rng);
  for (Index l = 1; l <= 6; ++l) {
    EXPECT_LE(linalg::numerical_rank(lrw(model, l).matrix), std::min<Index>(l, 3));
  }
}

TEST(Lrw, BeatsRandomRankOneWienerStructured) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_model(2, 3, rng);
    const double ours = oracle_mse(model, lrw(model, 1).matrix);
    for (int k = 0; k < 200; ++k) {
      const Matrix b = gaussian(1, 3, rng);
      const Matrix a = oracle_wiener_structured(model, b);
      EXPECT_LE(ours, oracle_mse(model, a) + 1e-10);
    }
  }
}

TEST(Lrw, SingularInput) {
  Matrix cy = Matrix::Zero(2, 2);
  cy(0, 0) = 1.0;
  EXPECT_THROW(lrw(blocks(Matrix::Identity(1, 1), cy, Matrix::Zero(1, 2)), 1),
               SingularityError);
}

TEST(Truncation, OutOfRange) {
  Rng rng(12);
  const auto model = random_model(2, 3, rng);
  for (const auto kind : {FilterKind::lrw, FilterKind::csw, FilterKind::jpc,
                          FilterKind::lsjpc, FilterKind::jpc_simplified,
                          FilterKind::lsjpc_simplified}) {
    EXPECT_THROW(build_filter(model, kind, Index{0}), DimensionError);
    EXPECT_THROW(build_filter(model, kind, Index{4}), DimensionError);
    EXPECT_THROW(build_filter(model, kind, std::nullopt), std::invalid_argument);
  }
}

TEST(Csw, FullBasisIsWiener) {
  Rng rng(13);
  const auto model = random_model(2, 5, rng);
  EXPECT_LE(rel_diff(csw(model, 5).matrix, wiener(model).matrix), 1e-8);
  EXPECT_EQ(csw(model, 2).max_inverse_dim, 5);
}

TEST(Csw, AgreesWithLrwWhenOrderingsCoincide) {
  // Diagonal C_Y with C_XY aligned to the axes: cross-spectral scores and
  // whitened singular values rank the same directions.
  Matrix cy = Matrix::Zero(3, 3);
  cy.diagonal() << 4.0, 2.0, 1.0;
  Matrix cxy = Matrix::Zero(2, 3);
  cxy(0, 0) = 3.0;
  cxy(1, 1) = 1.0;
  const auto model = blocks(10.0 * Matrix::Identity(2, 2), cy, cxy);
  Matrix expected = Matrix::Zero(2, 3);
  expected(0, 0) = 0.75;
  EXPECT_LE((csw(model, 1).matrix - expected).norm(), 1e-12);
  EXPECT_LE((lrw(model, 1).matrix - expected).norm(), 1e-12);
}

TEST(Csw, NeverBeatsLrw) {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = random_model(2, 4, rng);
    for (Index l = 1; l <= 2; ++l) {
      EXPECT_GE(oracle_mse(model, csw(model, l).matrix),
                oracle_mse(model, lrw(model, l).matrix) - 1e-10);
    }
    EXPECT_LE(linalg::numerical_rank(csw(model, 1).matrix), 1);
  }
}

TEST(Jpc, FullTruncationIsWiener) {
  Rng rng(15);
  const auto model = random_model(2, 4, rng);
  EXPECT_LE(rel_diff(jpc(model, 4).matrix, wiener(model).matrix), 1e-8);
}

TEST(Jpc, IsotropicGivesZeroFilter) {
  const auto model = CovarianceModel::from_joint(Matrix::Identity(5, 5), 2);
  for (Index l = 1; l <= 3; ++l) {
    EXPECT_EQ(jpc(model, l).matrix.norm(), 0.0);
    EXPECT_EQ(jpc_simplified(model, l).matrix.norm(), 0.0);
    EXPECT_EQ(lsjpc_simplified(model, l).matrix.norm(), 0.0);
    const auto ls = lsjpc(model, l);
    EXPECT_NEAR(oracle_mse(model, ls.matrix), model.c_x().trace(), 1e-12);
  }
}

TEST(Jpc, SamePathAsWienerStructured) {
  const auto model = synthetic_model(2, 4, GeometricSpectrum{1.0, 0.6}, 3);
  const SpectralCache cache(model);
  for (Index l = 1; l <= 4; ++l) {
    const auto a = jpc(model, cache, l);
    const auto b = wiener_structured(model, Prefilter(cache.v_yl(l).transpose()));
    EXPECT_EQ(a.matrix, b.matrix) << l;
    EXPECT_EQ(a.max_inverse_dim, l);
    EXPECT_EQ(a.l, l);
  }
}

TEST(Jpc, MatchesExplicitOracle) {
  Rng rng(16);
  const auto model = random_model(3, 8, rng);
  const SpectralCache cache(model);
  for (Index l = 1; l <= 8; ++l) {
    const Matrix v = cache.v_yl(l);
    const Matrix oracle =
        model.c_xy() * v * (v.transpose() * model.c_y() * v).inverse() * v.transpose();
    EXPECT_LE(rel_diff(jpc(model, cache, l).matrix, oracle), 1e-8) << l;
  }
}

TEST(Lsjpc, CopyCaseIsIdentity) {
  Rng rng(17);
  const auto model = copy_model(3, rng);
  const auto a = lsjpc(model, 3);
  EXPECT_LE((a.matrix - Matrix::Identity(3, 3)).norm(), 1e-8);
  EXPECT_EQ(a.max_inverse_dim, 3);
}

TEST(Lsjpc, MatchesResolutionMatrixOracle) {
  Rng rng(18);
  const auto model = random_model(2, 6, rng);
  const SpectralCache cache(model);
  for (Index l = 1; l <= 6; ++l) {
    const Matrix vy = cache.v_yl(l);
    const Matrix resolution = (vy.transpose() * vy).inverse() * vy.transpose();
    const Matrix oracle = cache.v_xl(l) * resolution;
    EXPECT_LE(rel_diff(lsjpc(model, cache, l).matrix, oracle), 1e-8) << l;
  }
}

TEST(Simplified, ExactWhenGramIsIdentity) {
  // Top joint eigenvectors live entirely in Y, so V_YL'V_YL = I for l <= 3.
  Matrix cz = Matrix::Zero(4, 4);
  cz.diagonal() << 1.0, 4.0, 3.0, 2.0;
  const auto model = CovarianceModel::from_joint(cz, 1);
  const SpectralCache cache(model);
  for (Index l = 1; l <= 3; ++l) {
    EXPECT_NEAR(cache.gram_defect(l), 0.0, 1e-15);
    EXPECT_LE((jpc_simplified(model, cache, l).matrix - jpc(model, cache, l).matrix).norm(),
              1e-8);
    EXPECT_LE(
        (lsjpc_simplified(model, cache, l).matrix - lsjpc(model, cache, l).matrix).norm(),
        1e-8);
  }
}

TEST(Simplified, CopyCaseHalvesLsjpc) {
  Rng rng(19);
  const auto model = copy_model(3, rng);
  const Matrix full = lsjpc(model, 3).matrix;
  const Matrix simple = lsjpc_simplified(model, 3).matrix;
  EXPECT_LE((simple - 0.5 * full).norm(), 1e-8);
}

TEST(Simplified, LsjpcGapControlledByGramDefect) {
  // A_LSJPC - V_XL V_YL' = V_XL ((V_YL'V_YL)^{-1} - I) V_YL'.
  const auto model = synthetic_model(2, 24, GeometricSpectrum{1.0, 0.8}, 4);
  const SpectralCache cache(model);
  for (Index l = 1; l <= 24; l += 3) {
    const Matrix vx = cache.v_xl(l);
    const Matrix vy = cache.v_yl(l);
    const Matrix g = vy.transpose() * vy;
    const Matrix inv_minus_i = g.inverse() - Matrix::Identity(l, l);
    const double bound = linalg::svd(vx).s(0) * inv_minus_i.norm() * linalg::svd(vy).s(0);
    const double gap =
        (lsjpc(model, cache, l).matrix - lsjpc_simplified(model, cache, l).matrix).norm();
    EXPECT_LE(gap, bound * (1 + 1e-10) + 1e-14) << l;
  }
}

TEST(Simplified, AuditAndSingularSpectrum) {
  const auto model = synthetic_model(1, 4, GeometricSpectrum{1.0, 0.5}, 5);
  EXPECT_EQ(jpc_simplified(model, 3).max_inverse_dim, 0);
  EXPECT_EQ(lsjpc_simplified(model, 3).max_inverse_dim, 0);
  EXPECT_TRUE(is_l_well_conditioned(lsjpc_simplified(model, 1), 1));
  EXPECT_TRUE(is_l_well_conditioned(jpc(model, 2), 2));
  EXPECT_FALSE(is_l_well_conditioned(lrw(model, 2), 2));

  // Zero joint eigenvalue among the first l.
  Matrix g(4, 1);
  g << 1.0, 0.5, -0.25, 2.0;
  const Matrix cz = g * g.transpose();
  const auto rank_one = blocks(cz.topLeftCorner(1, 1), cz.bottomRightCorner(3, 3),
                               cz.topRightCorner(1, 3));
  EXPECT_THROW(jpc_simplified(rank_one, 2), SingularityError);
}

TEST(SpectralCache, SignFlipsDoNotChangeFilters) {
  Rng rng(21);
  const auto model = random_model(2, 6, rng);
  const SpectralCache base(model);
  linalg::SymEig flipped = base.joint();
  std::bernoulli_distribution coin(0.5);
  for (Index j = 0; j < flipped.vectors.cols(); ++j) {
    if (coin(rng)) flipped.vectors.col(j) *= -1.0;
  }
  const SpectralCache other(model, flipped);
  for (const auto kind : {FilterKind::lrw, FilterKind::csw, FilterKind::jpc,
                          FilterKind::lsjpc, FilterKind::jpc_simplified,
                          FilterKind::lsjpc_simplified}) {
    for (Index l = 1; l <= 6; ++l) {
      const Matrix a = build_filter(model, base, kind, l).matrix;
      const Matrix b = build_filter(model, other, kind, l).matrix;
      EXPECT_LE((a - b).norm(), 1e-12 * std::max(1.0, a.norm()))
          << to_string(kind) << " l=" << l;
    }
  }
}

TEST(SpectralCache, PartitionChecks) {
  Rng rng(22);
  const auto model = random_model(2, 4, rng);
  const SpectralCache cache(model);
  const Matrix vx = cache.v_xl(6);
  const Matrix vy = cache.v_yl(6);
  const Matrix total = vx.transpose() * vx + vy.transpose() * vy;
  EXPECT_LE((total - Matrix::Identity(6, 6)).norm(), 1e-10);
  // At full rank the Y rows alone miss exactly the X rows' contribution.
  EXPECT_NEAR(cache.gram_defect(6), std::sqrt(2.0), 1e-10);
  EXPECT_EQ(cache.v_x().rows(), 2);
  EXPECT_EQ(cache.v_y().rows(), 4);
  linalg::SymEig bad = cache.joint();
  bad.vectors.col(0) *= 2.0;
  EXPECT_THROW(SpectralCache(model, bad), ModelError);
  EXPECT_THROW(cache.v_yl(0), DimensionError);
  EXPECT_THROW(cache.v_yl(7), DimensionError);
  const auto other = random_model(2, 5, rng);
  EXPECT_THROW(jpc(other, cache, 2), DimensionError);
}

TEST(SpectralCache, SharedAcrossThreads) {
  const auto model = synthetic_model(3, 40, GeometricSpectrum{1.0, 0.9}, 6);
  const SpectralCache cache(model);
  std::vector<Matrix> out(16);
#pragma omp parallel for
  for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(i)] = lrw(model, cache, 2).matrix;
  for (const auto& m : out) EXPECT_EQ(m, out[0]);
}

TEST(AllFilters, WienerIsALowerBound) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_model(2, 6, rng);
    const SpectralCache cache(model);
    const double best = oracle_mse(model, wiener(model).matrix);
    for (const auto kind : {FilterKind::lrw, FilterKind::csw, FilterKind::jpc,
                            FilterKind::lsjpc, FilterKind::jpc_simplified,
                            FilterKind::lsjpc_simplified}) {
      for (Index l = 1; l <= 6; ++l) {
        EXPECT_GE(oracle_mse(model, build_filter(model, cache, kind, l).matrix),
                  best - 1e-10);
      }
    }
  }
}

TEST(Weighted, IdentityWeightIsBase) {
  Rng rng(24);
  const auto model = random_model(2, 5, rng);
  const Matrix id = Matrix::Identity(2, 2);
  for (const auto kind : {FilterKind::lrw, FilterKind::jpc, FilterKind::lsjpc}) {
    const auto w = weighted_filter(model, id, kind, 2);
    EXPECT_LE(rel_diff(w.matrix, build_filter(model, kind, 2).matrix), 1e-12);
    EXPECT_EQ(w.kind, FilterKind::weighted);
    EXPECT_EQ(w.inner, kind);
  }
}

TEST(Weighted, WienerIsWeightIndependent) {
  Rng rng(25);
  const auto model = random_model(3, 5, rng);
  const Matrix a = wiener(model).matrix;
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = weighted_filter(model, gaussian(3, 3, rng), FilterKind::wiener, std::nullopt);
    EXPECT_LE(rel_diff(w.matrix, a), 1e-8);
  }
}

TEST(Weighted, LowersWeightedObjective) {
  Rng rng(26);
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 2.0;
  g(1, 1) = 1.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_model(2, 4, rng);
    const auto weighted = weighted_filter(model, g, FilterKind::lrw, 1);
    const auto plain = lrw(model, 1);
    EXPECT_LE(weighted_trace_objective(model, weighted.matrix, g),
              weighted_trace_objective(model, plain.matrix, g) + 1e-10);
  }
}

TEST(Weighted, RejectsSingularWeight) {
  Rng rng(27);
  const auto model = random_model(2, 3, rng);
  Matrix g = Matrix::Ones(2, 2);
  EXPECT_THROW(weighted_filter(model, g, FilterKind::wiener, std::nullopt),
               InvalidWeightError);
  EXPECT_THROW(weighted_filter(model, Matrix::Identity(3, 3), FilterKind::wiener,
                               std::nullopt),
               DimensionError);
}

TEST(DetOptimalWeight, Cases) {
  Rng rng(28);
  const auto iso = CovarianceModel::from_joint(Matrix::Identity(4, 4), 2);
  EXPECT_LE((det_optimal_weight(iso) - Matrix::Identity(2, 2)).norm(), 1e-15);

  Matrix cx = Matrix::Zero(2, 2);
  cx.diagonal() << 4.0, 9.0;
  const auto diag = blocks(cx, Matrix::Identity(1, 1), Matrix::Zero(2, 1));
  const Matrix g = det_optimal_weight(diag);
  EXPECT_NEAR(g(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g(1, 1), 1.0 / 3.0, 1e-15);

  const auto model = random_model(3, 2, rng);
  const Matrix w = det_optimal_weight(model);
  EXPECT_LE((w * model.c_x() * w.transpose() - Matrix::Identity(3, 3)).norm(), 1e-8);
}

}  // namespace
