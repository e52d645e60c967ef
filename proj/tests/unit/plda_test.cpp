// Copyright 2026 The diarkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "diarkit/error.hpp"
#include "diarkit/plda.hpp"
#include "diarkit/rng.hpp"
#include "oracles.hpp"

using namespace diarkit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

plda::Model make_model(VectorXd mean, MatrixXd between, MatrixXd within) {
  plda::Model m;
  m.mean = std::move(mean);
  m.between = std::move(between);
  m.within = std::move(within);
  return m;
}

plda::Model random_model(Rng& rng, Eigen::Index d) {
  return make_model(oracle::random_vector(rng, d, 1.0), oracle::random_spd(rng, d, 0.05),
                    oracle::random_spd(rng, d, 0.05));
}

// Anisotropic generating covariances for the recovery tests.
MatrixXd between_star(Eigen::Index d) {
  MatrixXd b = MatrixXd::Zero(d, d);
  // Steep spectrum: with 200 speakers the sampling error of the speaker
  // means alone is about sqrt((tr(B)^2 + tr(B^2)) / (200 tr(B^2))).
  for (Eigen::Index i = 0; i < d; ++i) b(i, i) = 4.0 * std::pow(0.3, static_cast<double>(i));
  b(0, 1) = b(1, 0) = 0.5;
  return b;
}

MatrixXd within_star(Eigen::Index d) {
  MatrixXd w = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) w(i, i) = 0.5 + 0.1 * static_cast<double>(i);
  w(2, 3) = w(3, 2) = 0.2;
  return w;
}

}  // namespace

TEST(PldaScore, OneDimensionalAnalyticCase) {
  const auto m = make_model(VectorXd::Zero(1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1));
  const VectorXd z = VectorXd::Zero(1);
  EXPECT_NEAR(plda::score_pair(m, z, z), 0.5 * std::log(4.0 / 3.0), 1e-12);
  EXPECT_NEAR(oracle::direct_llr(m, z, z), 0.5 * std::log(4.0 / 3.0), 1e-12);
}

TEST(PldaScore, MatchesDirectDensity) {
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(8));
    const auto m = random_model(rng, d);
    const VectorXd x1 = oracle::random_vector(rng, d, 2.0);
    const VectorXd x2 = oracle::random_vector(rng, d, 2.0);
    EXPECT_NEAR(plda::score_pair(m, x1, x2), oracle::direct_llr(m, x1, x2), 1e-8);
  }
}

TEST(PldaScore, ExactlySymmetric) {
  Rng rng(22);
  for (int i = 0; i < 200; ++i) {
    const auto m = random_model(rng, 5);
    const VectorXd x1 = oracle::random_vector(rng, 5, 3.0);
    const VectorXd x2 = oracle::random_vector(rng, 5, 3.0);
    EXPECT_EQ(plda::score_pair(m, x1, x2), plda::score_pair(m, x2, x1));
  }
}

TEST(PldaScore, VanishingBetweenGivesZero) {
  Rng rng(23);
  const auto m = make_model(VectorXd::Zero(3), 1e-12 * MatrixXd::Identity(3, 3),
                            oracle::random_spd(rng, 3, 0.5));
  for (int i = 0; i < 50; ++i) {
    const VectorXd x1 = oracle::random_vector(rng, 3, 2.0);
    const VectorXd x2 = oracle::random_vector(rng, 3, 2.0);
    EXPECT_NEAR(plda::score_pair(m, x1, x2), 0.0, 1e-9);
  }
}

TEST(PldaScore, Errors) {
  const auto m = make_model(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                            MatrixXd::Identity(2, 2));
  VectorXd bad(2);
  bad << 0.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(plda::score_pair(m, bad, VectorXd::Zero(2)), DomainError);
  EXPECT_THROW(plda::score_pair(m, VectorXd::Zero(3), VectorXd::Zero(3)), DomainError);
}

TEST(ScoreMatrix, SingleSegment) {
  Rng rng(24);
  const auto m = random_model(rng, 3);
  const MatrixXd s = plda::score_matrix(m, oracle::random_vector(rng, 3, 1).transpose(), 0.3);
  ASSERT_EQ(s.rows(), 1);
  EXPECT_TRUE(std::isinf(s(0, 0)) && s(0, 0) > 0);
}

TEST(ScoreMatrix, SymmetricWithSentinelDiagonal) {
  Rng rng(25);
  const auto m = random_model(rng, 6);
  MatrixXd segs(20, 6);
  for (Eigen::Index i = 0; i < 20; ++i) segs.row(i) = oracle::random_vector(rng, 6, 1).transpose();
  for (double e : {0.1, 0.3, 0.7, 1.0}) {
    const MatrixXd s = plda::score_matrix(m, segs, e);
    for (Eigen::Index i = 0; i < 20; ++i) {
      EXPECT_TRUE(std::isinf(s(i, i)));
      for (Eigen::Index j = 0; j < 20; ++j)
        if (i != j) EXPECT_EQ(s(i, j), s(j, i));
    }
  }
}

TEST(ScoreMatrix, FullEnergyMatchesUnprojectedScoring) {
  Rng rng(26);
  const auto m = random_model(rng, 5);
  MatrixXd segs(15, 5);
  for (Eigen::Index i = 0; i < 15; ++i) segs.row(i) = oracle::random_vector(rng, 5, 1).transpose();
  const MatrixXd s = plda::score_matrix(m, segs, 1.0);
  for (Eigen::Index i = 0; i < 15; ++i)
    for (Eigen::Index j = 0; j < 15; ++j)
      if (i != j)
        EXPECT_NEAR(s(i, j), oracle::direct_llr(m, segs.row(i).transpose(), segs.row(j).transpose()),
                    1e-8);
}

TEST(ScoreAll, MatchesPairwise) {
  Rng rng(27);
  const auto m = random_model(rng, 4);
  MatrixXd pts(9, 4);
  for (Eigen::Index i = 0; i < 9; ++i) pts.row(i) = oracle::random_vector(rng, 4, 1).transpose();
  const plda::PairScorer scorer(m);
  const MatrixXd all = scorer.score_all(pts);
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = 0; j < 9; ++j)
      if (i != j)
        EXPECT_NEAR(all(i, j), scorer.score(pts.row(i).transpose(), pts.row(j).transpose()),
                    1e-9);
}

TEST(Pca, DiagonalConstruction) {
  // Sample covariance diag(9, 1).
  MatrixXd x(4, 2);
  const double a = std::sqrt(13.5), b = std::sqrt(1.5);
  x << a, 0, -a, 0, 0, b, 0, -b;
  const auto p30 = plda::recording_pca(x, 0.30);
  EXPECT_EQ(p30.k(), 1);
  EXPECT_NEAR(std::abs(p30.basis(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(p30.retained_fraction, 0.9, 1e-12);
  EXPECT_EQ(plda::recording_pca(x, 0.95).k(), 2);
  EXPECT_EQ(plda::recording_pca(x, 0.9).k(), 1);
}

TEST(Pca, FullEnergyKeepsRank) {
  Rng rng(28);
  MatrixXd x(30, 5);
  for (Eigen::Index i = 0; i < 30; ++i) {
    const VectorXd z = oracle::random_vector(rng, 3, 1.0);
    x.row(i) << z(0), z(1), z(2), z(0) + z(1), 2 * z(2);  // rank 3
  }
  EXPECT_EQ(plda::recording_pca(x, 1.0).k(), 3);
}

TEST(Pca, OrthonormalMinimalAndSufficient) {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(7));
    const auto n = 3 + static_cast<Eigen::Index>(rng.below(30));
    const MatrixXd mix = oracle::random_spd(rng, d, 0.01);
    MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) = (mix * oracle::random_vector(rng, d, 1)).transpose();
    const double energy = rng.uniform(0.05, 1.0);
    const auto p = plda::recording_pca(x, energy);
    ASSERT_GE(p.k(), 1);
    const MatrixXd gram = p.basis * p.basis.transpose();
    EXPECT_LE((gram - MatrixXd::Identity(p.k(), p.k())).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GE(p.retained_fraction, energy - 1e-12);

    // Eigenvalue oracle from a fresh decomposition.
    const MatrixXd c = x.rowwise() - x.colwise().mean();
    const MatrixXd cov = c.transpose() * c / static_cast<double>(n - 1);
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(cov).eigenvalues().reverse();
    const double total = ev.cwiseMax(0.0).sum();
    double before = 0.0;
    for (Eigen::Index i = 0; i + 1 < p.k(); ++i) before += std::max(0.0, ev(i));
    EXPECT_LT(before, energy * total + 1e-9) << "k is not minimal";
    // Captured variance along the basis equals the top-k eigenvalue sum.
    const double captured = (p.basis * cov * p.basis.transpose()).trace();
    EXPECT_NEAR(captured, before + ev(p.k() - 1), 1e-8 * total);
  }
}

TEST(Pca, DegeneratePaths) {
  const MatrixXd one = MatrixXd::Ones(1, 4);
  const auto p1 = plda::recording_pca(one, 0.3);
  EXPECT_EQ(p1.k(), 1);
  EXPECT_TRUE(p1.degenerate);
  const MatrixXd flat = MatrixXd::Ones(5, 3);
  const auto p2 = plda::recording_pca(flat, 0.3);
  EXPECT_EQ(p2.k(), 1);
  EXPECT_TRUE(p2.degenerate);
  EXPECT_NEAR(p2.basis.norm(), 1.0, 1e-12);
  EXPECT_THROW(plda::recording_pca(flat, 0.0), DomainError);
  EXPECT_THROW(plda::recording_pca(flat, 1.5), DomainError);
}

TEST(ProjectModel, IdentityBasisIsIdentity) {
  Rng rng(30);
  const auto m = random_model(rng, 4);
  plda::PcaProjection p;
  p.basis = MatrixXd::Identity(4, 4);
  const auto out = plda::project_model(m, p);
  EXPECT_EQ(out.mean, m.mean);
  EXPECT_LE((out.between - m.between).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((out.within - m.within).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectModel, OneDimensionalOfDiagonal) {
  VectorXd bd(3), wd(3);
  bd << 2, 3, 4;
  wd << 0.5, 0.6, 0.7;
  const auto m = make_model(VectorXd::Zero(3), bd.asDiagonal(), wd.asDiagonal());
  plda::PcaProjection p;
  p.basis = MatrixXd::Zero(1, 3);
  p.basis(0, 1) = 1.0;
  const auto out = plda::project_model(m, p);
  EXPECT_DOUBLE_EQ(out.between(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(out.within(0, 0), 0.6);
  p.basis = MatrixXd::Zero(1, 2);
  EXPECT_THROW(plda::project_model(m, p), DomainError);
}

TEST(ProjectModel, PreservesSymmetryAndPsd) {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(6));
    const auto m = random_model(rng, d);
    MatrixXd x(d + 3, d);
    for (Eigen::Index r = 0; r < x.rows(); ++r) x.row(r) = oracle::random_vector(rng, d, 1).transpose();
    const auto p = plda::recording_pca(x, rng.uniform(0.1, 1.0));
    const auto out = plda::project_model(m, p);
    EXPECT_EQ(out.between, out.between.transpose());
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(out.between).eigenvalues().minCoeff(), -1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(out.within).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(PldaEm, RecoversGeneratingCovariances) {
  Rng rng(0);
  const Eigen::Index d = 8;
  const VectorXd mu = oracle::random_vector(rng, d, 1.0);
  const auto data = oracle::sample_plda(rng, mu, between_star(d), within_star(d), 200, 50);
  const auto r = plda::train_em(data.x, data.labels, 20);
  EXPECT_LE(oracle::rel_frobenius(r.model.between, between_star(d)), 0.15);
  EXPECT_LE(oracle::rel_frobenius(r.model.within, within_star(d)), 0.15);
  EXPECT_LE((r.model.mean - mu).norm(), 0.5);
}

// Balanced data has a closed-form maximum: pooled within scatter, and the
// scatter of speaker means less W/n.
TEST(PldaEm, BalancedDataReachesClosedForm) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Eigen::Index d = 5, n_spk = 60, per = 20;
    const VectorXd mu = oracle::random_vector(rng, d, 1.0);
    const auto data = oracle::sample_plda(rng, mu, oracle::random_spd(rng, d, 0.5),
                                          oracle::random_spd(rng, d, 0.2), n_spk, per);
    const VectorXd m = data.x.colwise().mean().transpose();
    MatrixXd ssw = MatrixXd::Zero(d, d), ssb = MatrixXd::Zero(d, d);
    for (Eigen::Index k = 0; k < n_spk; ++k) {
      const MatrixXd blk = data.x.middleRows(k * per, per);
      const VectorXd mk = blk.colwise().mean().transpose();
      const MatrixXd c = blk.rowwise() - mk.transpose();
      ssw += c.transpose() * c;
      ssb += (mk - m) * (mk - m).transpose();
    }
    const MatrixXd w = ssw / static_cast<double>(n_spk * (per - 1));
    const MatrixXd b = ssb / static_cast<double>(n_spk) - w / static_cast<double>(per);
    const auto r = plda::train_em(data.x, data.labels, 100);
    EXPECT_LE(oracle::rel_frobenius(r.model.between, b), 1e-7);
    EXPECT_LE(oracle::rel_frobenius(r.model.within, w), 1e-7);
  }
}

TEST(PldaEm, LikelihoodMonotoneAndReported) {
  Rng rng(33);
  const auto data = oracle::sample_plda(rng, VectorXd::Zero(4), oracle::random_spd(rng, 4, 0.1),
                                        oracle::random_spd(rng, 4, 0.1), 30, 7);
  const auto r = plda::train_em(data.x, data.labels, 15);
  ASSERT_EQ(r.log_likelihood.size(), 16u);
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
    EXPECT_GE(r.log_likelihood[i], r.log_likelihood[i - 1] - 1e-8);
  EXPECT_NEAR(plda::log_likelihood(r.model, data.x, data.labels), r.log_likelihood.back(),
              1e-8 * std::abs(r.log_likelihood.back()));
}

TEST(PldaEm, UnevenSpeakerCountsStayMonotone) {
  Rng rng(34);
  const auto base = oracle::sample_plda(rng, VectorXd::Zero(3), oracle::random_spd(rng, 3, 0.1),
                                        oracle::random_spd(rng, 3, 0.1), 40, 6);
  std::vector<std::string> labels;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < base.x.rows(); ++i) {
    if (static_cast<std::size_t>(i) % 6 < 1 + (static_cast<std::size_t>(i) / 6) % 6) {
      keep.push_back(i);
      labels.push_back(base.labels[static_cast<std::size_t>(i)]);
    }
  }
  MatrixXd x(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t i = 0; i < keep.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = base.x.row(keep[i]);
  const auto r = plda::train_em(x, labels, 25);
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
    EXPECT_GE(r.log_likelihood[i], r.log_likelihood[i - 1] - 1e-8);
}

TEST(PldaEm, IdenticalSamplesPerSpeaker) {
  Rng rng(35);
  const Eigen::Index d = 3;
  MatrixXd x(60, d);
  std::vector<std::string> labels;
  for (int s = 0; s < 12; ++s) {
    const VectorXd y = oracle::random_vector(rng, d, 2.0);
    for (int k = 0; k < 5; ++k) {
      x.row(s * 5 + k) = y.transpose();
      labels.push_back("s" + std::to_string(s));
    }
  }
  const auto r = plda::train_em(x, labels, 10);
  EXPECT_LE(r.model.within.trace(), 1e-6 * r.model.between.trace());
  EXPECT_GT(r.jitter_events, 0u);
}

TEST(PldaEm, DeterministicAndErrors) {
  Rng rng(36);
  const auto data = oracle::sample_plda(rng, VectorXd::Zero(3), MatrixXd::Identity(3, 3),
                                        0.3 * MatrixXd::Identity(3, 3), 10, 5);
  const auto a = plda::train_em(data.x, data.labels, 5);
  const auto b = plda::train_em(data.x, data.labels, 5);
  EXPECT_EQ(plda::to_json(a.model), plda::to_json(b.model));
  const std::vector<std::string> one(data.labels.size(), "same");
  EXPECT_THROW(plda::train_em(data.x, one, 5), TrainingError);
}

TEST(PldaAdapt, MatchingMarginalIsNoOp) {
  Rng rng(37);
  const Eigen::Index d = 4;
  const auto m = random_model(rng, d);
  const MatrixXd lt = Eigen::LLT<MatrixXd>(m.between + m.within).matrixL();
  MatrixXd pooled(50000, d);
  for (Eigen::Index i = 0; i < pooled.rows(); ++i)
    pooled.row(i) = (m.mean + lt * oracle::random_vector(rng, d, 1.0)).transpose();
  const auto out = plda::adapt(m, pooled, {});
  EXPECT_LE(oracle::rel_frobenius(out.between, m.between), 0.05);
  EXPECT_LE(oracle::rel_frobenius(out.within, m.within), 0.05);
}

TEST(PldaAdapt, DoubledVarianceAlongFirstAxis) {
  // Model total is diag(2, 2); pooled covariance is exactly diag(4, 2).
  const auto m = make_model(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                            MatrixXd::Identity(2, 2));
  MatrixXd pooled(4, 2);
  const double a = std::sqrt(8.0);
  pooled << a, 0, -a, 0, 0, 2, 0, -2;

  const auto all_within = plda::adapt(m, pooled, {1.0, 0.0});
  EXPECT_NEAR(all_within.within(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(all_within.within(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(all_within.within(0, 1), 0.0, 1e-12);
  EXPECT_LE((all_within.between - m.between).cwiseAbs().maxCoeff(), 1e-12);

  const auto split = plda::adapt(m, pooled, {0.75, 0.25});
  const double dw = split.within(0, 0) - 1.0;
  const double db = split.between(0, 0) - 1.0;
  EXPECT_NEAR(dw, 1.5, 1e-12);
  EXPECT_NEAR(db, 0.5, 1e-12);
  EXPECT_NEAR(dw / db, 3.0, 1e-9);
  ASSERT_TRUE(split.meta.adaptation.has_value());
  EXPECT_DOUBLE_EQ(split.meta.adaptation->within_share, 0.75);
}

TEST(PldaAdapt, ShrinkingDirectionsUnchangedAndPsd) {
  Rng rng(38);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(4));
    const auto m = random_model(rng, d);
    MatrixXd pooled(40, d);
    const MatrixXd mix = oracle::random_spd(rng, d, 0.01);
    for (Eigen::Index r = 0; r < 40; ++r)
      pooled.row(r) = (m.mean + mix * oracle::random_vector(rng, d, 1)).transpose();
    const auto out = plda::adapt(m, pooled, {});
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(out.between - m.between).eigenvalues().minCoeff(),
              -1e-9);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(out.within - m.within).eigenvalues().minCoeff(),
              -1e-9);
    EXPECT_EQ(out.within, out.within.transpose());
  }
}

TEST(PldaAdapt, Errors) {
  const auto m = make_model(VectorXd::Zero(3), MatrixXd::Identity(3, 3),
                            MatrixXd::Identity(3, 3));
  EXPECT_THROW(plda::adapt(m, MatrixXd::Ones(3, 3), {}), UsageError);
  EXPECT_THROW(plda::adapt(m, MatrixXd::Ones(10, 2), {}), DomainError);
  EXPECT_THROW(plda::adapt(m, MatrixXd::Random(10, 3), {0.5, 0.6}), ConfigError);
}

TEST(PldaModel, JsonRoundTripAndValidation) {
  Rng rng(39);
  auto m = random_model(rng, 3);
  m.meta.training_hash = "abc";
  m.meta.n_speakers = 7;
  m.meta.adaptation = plda::AdaptationConfig{0.6, 0.4};
  const auto back = plda::model_from_json(plda::to_json(m));
  EXPECT_EQ(back.mean, m.mean);
  EXPECT_EQ(back.between, m.between);
  EXPECT_EQ(back.within, m.within);
  EXPECT_EQ(back.meta.training_hash, "abc");
  EXPECT_EQ(back.meta.n_speakers, 7u);
  ASSERT_TRUE(back.meta.adaptation.has_value());
  EXPECT_DOUBLE_EQ(back.meta.adaptation->between_share, 0.4);

  auto bad = m;
  bad.within(0, 1) += 1.0;
  EXPECT_THROW(plda::validate(bad), ValidationError);
  EXPECT_THROW(plda::model_from_json("{"), ParseError);
}

TEST(Jitter, OnlyWhenNearSingular) {
  MatrixXd ref = MatrixXd::Identity(2, 2) * 3.0;
  MatrixXd fine = MatrixXd::Identity(2, 2);
  EXPECT_FALSE(plda::apply_jitter(fine, ref));
  MatrixXd singular = MatrixXd::Zero(2, 2);
  EXPECT_TRUE(plda::apply_jitter(singular, ref));
  EXPECT_NEAR(singular(0, 0), 1e-8 * 3.0, 1e-20);
}

TEST(LengthNorm, RowsHaveNormSqrtD) {
  Rng rng(40);
  MatrixXd x(10, 6);
  for (Eigen::Index i = 0; i < 10; ++i) x.row(i) = oracle::random_vector(rng, 6, 5).transpose();
  plda::length_normalize_rows(x);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(x.row(i).norm(), std::sqrt(6.0), 1e-12);
}
