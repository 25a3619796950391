/*
 Copyright 2026 The dsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "dsteer/covsteer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <random>

#include "dsteer/errors.hpp"
#include "dsteer/rng.hpp"
#include "test_support.hpp"

namespace dsteer {
namespace {

LinearGaussianProblem example1() {
  const double dt = 0.1;
  Matrix a = Matrix::Identity(4, 4);
  a.block(0, 2, 2, 2) = dt * Matrix::Identity(2, 2);
  Matrix b = Matrix::Zero(4, 2);
  b.block(2, 0, 2, 2) = dt * Matrix::Identity(2, 2);
  Vector mi(4), mf(4);
  mi << 0, 0, 5, 8;
  mf << 0, 0, 10, 0;
  Matrix si = Matrix::Zero(4, 4);
  si.diagonal() << 1, 1, 0.2, 0.2;
  return LinearGaussianProblem{a, b, 30, GaussianSpec(mi, si), GaussianSpec(mf, 0.4 * Matrix::Identity(4, 4)), 60.0};
}

Matrix power(const Matrix& a, int p) {
  Matrix out = Matrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < p; ++i) out = a * out;
  return out;
}

AffinePolicy random_policy(int horizon, Eigen::Index n, Eigen::Index m, std::mt19937_64& gen, double scale) {
  AffinePolicy p = AffinePolicy::zeros(horizon, n, m);
  for (int k = 0; k < horizon; ++k) {
    p.gains[k] = scale * testing::random_matrix(m, n, gen, -1.0, 1.0);
    p.feedforward[k] = testing::random_matrix(m, 1, gen, -1.0, 1.0);
  }
  return p;
}

TEST(Propagate, OpenLoopIsMatrixPower) {
  const LinearGaussianProblem p = example1();
  const MomentTrajectory t = propagate(p.a, p.b, AffinePolicy::zeros(30, 4, 2), p.initial.mean(),
                                       p.initial.covariance());
  ASSERT_EQ(t.means.size(), 31u);
  for (int k : {0, 1, 7, 30}) {
    const Matrix ak = power(p.a, k);
    EXPECT_LT((t.means[k] - ak * p.initial.mean()).norm(), 1e-12);
    EXPECT_LT((t.covariances[k] - ak * p.initial.covariance() * ak.transpose()).norm(), 1e-10);
  }
  Vector expected(4);
  expected << 15, 24, 5, 8;
  EXPECT_LT((t.means.back() - expected).norm(), 1e-12);
}

TEST(Propagate, SymmetricEveryStep) {
  std::mt19937_64 gen(3);
  const Matrix a = Matrix::Identity(3, 3) + testing::random_matrix(3, 3, gen, -0.3, 0.3);
  const Matrix b = testing::random_matrix(3, 2, gen, -1.0, 1.0);
  const AffinePolicy pol = random_policy(40, 3, 2, gen, 0.3);
  const MomentTrajectory t = propagate(a, b, pol, Vector::Zero(3), Matrix::Identity(3, 3));
  for (const Matrix& s : t.covariances) EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Propagate, RejectsMismatchedPolicy) {
  AffinePolicy pol = AffinePolicy::zeros(2, 2, 1);
  pol.feedforward.pop_back();
  EXPECT_THROW(propagate(Matrix::Identity(2, 2), Matrix::Ones(2, 1), pol, Vector::Zero(2), Matrix::Identity(2, 2)),
               DimensionError);
}

TEST(Propagate, MatchesMonteCarloMoments) {
  std::mt19937_64 gen(11);
  const Matrix a = Matrix::Identity(2, 2) + testing::random_matrix(2, 2, gen, -0.2, 0.2);
  const Matrix b = testing::random_matrix(2, 1, gen, -1.0, 1.0);
  const AffinePolicy pol = random_policy(5, 2, 1, gen, 0.5);
  Vector mu0(2);
  mu0 << 1.0, -0.5;
  Matrix s0(2, 2);
  s0 << 1.0, 0.3, 0.3, 0.5;
  const GaussianSpec init(mu0, s0);
  const MomentTrajectory t = propagate(a, b, pol, mu0, s0);
  const Eigen::Index samples = 100000;
  CounterRng rng(5, "mc");
  Matrix x = init.sample(samples, rng);
  for (int k = 0; k < pol.horizon(); ++k) {
    const Matrix dev = x.rowwise() - t.means[k].transpose();
    const Matrix u = (dev * pol.gains[k].transpose()).rowwise() + pol.feedforward[k].transpose();
    x = x * a.transpose() + u * b.transpose();
  }
  const Vector mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(samples - 1);
  const Matrix& sn = t.covariances.back();
  for (int i = 0; i < 2; ++i) {
    const double se = std::sqrt(sn(i, i) / samples);
    EXPECT_LT(std::abs(mean(i) - t.means.back()(i)), 3.0 * se);
    for (int j = 0; j < 2; ++j) {
      // Var of the sample covariance entry: (S_ii S_jj + S_ij^2) / M.
      const double se_cov = std::sqrt((sn(i, i) * sn(j, j) + sn(i, j) * sn(i, j)) / samples);
      EXPECT_LT(std::abs(cov(i, j) - sn(i, j)), 3.0 * se_cov);
    }
  }
}

TEST(AnalyticCost, ZeroPolicyIsWeightedKl) {
  const LinearGaussianProblem p = example1();
  const AffinePolicy zero = AffinePolicy::zeros(30, 4, 2);
  const MomentTrajectory t = propagate(p.a, p.b, zero, p.initial.mean(), p.initial.covariance());
  const AffineCost c = analytic_cost(t, zero, p.lambda, p.target);
  EXPECT_EQ(c.effort, 0.0);
  const double kl = gaussian_kl(GaussianSpec(t.means.back(), t.covariances.back()), p.target);
  EXPECT_NEAR(c.total, p.lambda * kl, 1e-9 * c.total);
}

TEST(AnalyticCost, OpenLoopEffortIsFeedforwardEnergy) {
  std::mt19937_64 gen(2);
  const LinearGaussianProblem p = example1();
  AffinePolicy pol = random_policy(30, 4, 2, gen, 0.0);
  double energy = 0.0;
  for (const Vector& v : pol.feedforward) energy += v.squaredNorm();
  const MomentTrajectory t = propagate(p.a, p.b, pol, p.initial.mean(), p.initial.covariance());
  EXPECT_NEAR(analytic_cost(t, pol, p.lambda, p.target).effort, energy, 1e-12);
}

TEST(AnalyticCost, MatchesMonteCarloCost) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix a = Matrix::Identity(2, 2) + testing::random_matrix(2, 2, gen, -0.2, 0.2);
    const Matrix b = testing::random_matrix(2, 2, gen, -1.0, 1.0);
    const AffinePolicy pol = random_policy(4, 2, 2, gen, 0.3);
    const GaussianSpec init(Vector::Zero(2), Matrix::Identity(2, 2));
    const MomentTrajectory t = propagate(a, b, pol, init.mean(), init.covariance());
    const AffineCost c = analytic_cost(t, pol, 1.0, init);
    const Eigen::Index samples = 100000;
    CounterRng rng(trial, "mc");
    Matrix x = init.sample(samples, rng);
    Vector effort = Vector::Zero(samples);
    for (int k = 0; k < pol.horizon(); ++k) {
      const Matrix u = ((x.rowwise() - t.means[k].transpose()) * pol.gains[k].transpose()).rowwise() +
                       pol.feedforward[k].transpose();
      effort += u.rowwise().squaredNorm();
      x = x * a.transpose() + u * b.transpose();
    }
    const double mean = effort.mean();
    const double se = std::sqrt((effort.array() - mean).square().sum() / (samples - 1) / samples);
    EXPECT_LT(std::abs(mean - c.effort), 3.0 * se) << "trial " << trial;
  }
}

TEST(AnalyticCost, TapeMatchesPlainAndGradientMatchesFiniteDifference) {
  std::mt19937_64 gen(8);
  const Matrix a = Matrix::Identity(2, 2) + testing::random_matrix(2, 2, gen, -0.2, 0.2);
  const Matrix b = testing::random_matrix(2, 1, gen, -1.0, 1.0);
  Vector mf(2);
  mf << 1.0, 2.0;
  const LinearGaussianProblem p{a, b, 3, GaussianSpec(Vector::Zero(2), Matrix::Identity(2, 2)),
                                GaussianSpec(mf, 0.5 * Matrix::Identity(2, 2)), 4.0};
  const AffinePolicy pol = random_policy(3, 2, 1, gen, 0.3);
  const double plain =
      analytic_cost(propagate(a, b, pol, p.initial.mean(), p.initial.covariance()), pol, p.lambda, p.target).total;
  Tape tape;
  const TapedAffineCost taped = analytic_cost(tape, p, pol);
  EXPECT_NEAR(taped.total.scalar(), plain, 1e-10 * std::abs(plain));
  const Gradient g = tape.backward(taped.total);
  for (int k = 0; k < 3; ++k) {
    const Matrix fd = testing::numeric_gradient(
        [&](const Matrix& gk) {
          AffinePolicy q = pol;
          q.gains[k] = gk;
          return analytic_cost(propagate(a, b, q, p.initial.mean(), p.initial.covariance()), q, p.lambda, p.target)
              .total;
        },
        pol.gains[k]);
    EXPECT_LT(testing::relative_error(g.at(taped.leaves[2 * k].id()), fd), 1e-6);
  }
}

TEST(OptimizeAffine, AlreadyAtTargetStaysPut) {
  const GaussianSpec unit(Vector::Zero(2), Matrix::Identity(2, 2));
  const LinearGaussianProblem p{Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1, unit, unit, 1e4};
  const AffineSolution s = optimize_affine(p, 500, 2);
  EXPECT_LT(s.cost.total, 1e-8);
  EXPECT_LT(s.policy.gains[0].norm(), 1e-4);
  EXPECT_LT(s.policy.feedforward[0].norm(), 1e-8);
}

// Scalar x' = x + u, N = 1: v* solves a linear equation and c = 1 + K solves
// c^2 (2 s0 + lambda s0 / sf) - 2 s0 c - lambda = 0 (stationarity times c).
TEST(OptimizeAffine, ScalarClosedForm) {
  const double s0 = 1.0, sf = 0.25, mu0 = 2.0, muf = -1.0, lambda = 3.0;
  const LinearGaussianProblem p{Matrix::Ones(1, 1), Matrix::Ones(1, 1), 1,
                                GaussianSpec(Vector::Constant(1, mu0), Matrix::Constant(1, 1, s0)),
                                GaussianSpec(Vector::Constant(1, muf), Matrix::Constant(1, 1, sf)), lambda};
  const double v_star = -lambda * (mu0 - muf) / (2.0 * sf + lambda);
  const double qa = 2.0 * s0 + lambda * s0 / sf, qb = -2.0 * s0, qc = -lambda;
  const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  auto cost = [&](double c) {
    const double k = c - 1.0;
    return k * k * s0 + 0.5 * lambda * (c * c * s0 / sf - std::log(c * c * s0 / sf) - 1.0);
  };
  const double c1 = (-qb + disc) / (2.0 * qa), c2 = (-qb - disc) / (2.0 * qa);
  const double k_star = (cost(c1) <= cost(c2) ? c1 : c2) - 1.0;
  const AffineSolution s = optimize_affine(p);
  EXPECT_NEAR(s.policy.gains[0](0, 0), k_star, 1e-4);
  EXPECT_NEAR(s.policy.feedforward[0](0), v_star, 1e-4);
}

TEST(OptimizeAffine, HistoryNonIncreasing) {
  const AffineSolution s = optimize_affine(example1(), 300, 1);
  ASSERT_GT(s.history.size(), 2u);
  for (std::size_t i = 1; i < s.history.size(); ++i) EXPECT_LE(s.history[i], s.history[i - 1] * (1 + 1e-15));
}

// Mean part in closed form: r^T (G G^T + (2 / lambda) Sf)^-1 r with r = A^N mu_i - mu_f,
// G = [A^{N-1} B ... B]. Covariance part 3.742947 from an independent numpy/scipy
// L-BFGS over the same gains.
TEST(OptimizeAffine, ReproducesExample1Benchmark) {
  const LinearGaussianProblem p = example1();
  Matrix g(4, 60);
  for (int k = 0; k < 30; ++k) g.middleCols(2 * k, 2) = power(p.a, 29 - k) * p.b;
  const Vector r = power(p.a, 30) * p.initial.mean() - p.target.mean();
  const Matrix h = g * g.transpose() + (2.0 / p.lambda) * p.target.covariance();
  const double mean_part = r.dot(h.ldlt().solve(r));
  EXPECT_NEAR(mean_part, 2728.7999, 1e-3);
  const AffineSolution s = optimize_affine(p);
  EXPECT_NEAR(s.cost.total, mean_part + 3.742947, 2e-3);
  ASSERT_EQ(s.restart_costs.size(), 5u);
  const auto [lo, hi] = std::minmax_element(s.restart_costs.begin(), s.restart_costs.end());
  EXPECT_LT((*hi - *lo) / *lo, 0.01);
}

TEST(OptimizeAffine, ValidatesInputs) {
  LinearGaussianProblem p = example1();
  p.lambda = 0.0;
  EXPECT_THROW(optimize_affine(p), ConfigError);
  EXPECT_THROW(optimize_affine(example1(), 10, 0), ConfigError);
}

TEST(ExportSdp, ScalarCensus) {
  const GaussianSpec unit(Vector::Zero(1), Matrix::Identity(1, 1));
  const LinearGaussianProblem p{Matrix::Ones(1, 1), Matrix::Ones(1, 1), 1, unit, unit, 1.0};
  SdpLayout layout;
  const SdpProblem sdp = export_sdp(p, 8, &layout);
  // v0, U0, Y0, t0, mu1, S1, s, Z, w
  EXPECT_EQ(sdp.num_vars, 9);
  // coupling, effort, mean, log-det, LP: 2 mean rows + 2 covariance rows + 8 cuts
  EXPECT_EQ(sdp.block_sizes, (std::vector<int>{2, 2, 2, 2, -12}));
  EXPECT_EQ(layout.lmi_blocks, 1);
  EXPECT_EQ(layout.lp_rows, 12);
}

TEST(ExportSdp, Example1BlockCounts) {
  const SdpProblem sdp = export_sdp(example1());
  ASSERT_EQ(sdp.block_sizes.size(), 63u);
  for (int k = 0; k < 30; ++k) EXPECT_EQ(sdp.block_sizes[k], 6);
  for (int k = 30; k < 60; ++k) EXPECT_EQ(sdp.block_sizes[k], 3);
  EXPECT_EQ(sdp.block_sizes[60], 5);
  EXPECT_EQ(sdp.block_sizes[61], 8);
  EXPECT_EQ(sdp.block_sizes[62], -(2 * 30 * 4 + 2 * 30 * 10 + 4 * 24));
  // per step: v 2, U 8, Y 3, t 1, mu 4, S 10; then s, Z 10, w 4
  EXPECT_EQ(sdp.num_vars, 30 * 28 + 1 + 10 + 4);
}

TEST(ExportSdp, AffinePolicyMapsToFeasiblePointWithSameCost) {
  std::mt19937_64 gen(4);
  const LinearGaussianProblem p = example1();
  const AffinePolicy pol = random_policy(30, 4, 2, gen, 0.05);
  const SdpProblem sdp = export_sdp(p);
  const Vector x = sdp_point(p, pol);
  ASSERT_EQ(x.size(), sdp.num_vars);
  for (int blk = 1; blk <= static_cast<int>(sdp.block_sizes.size()); ++blk) {
    const Matrix f = sdp.block_value(blk, x);
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    if (sdp.block_sizes[blk - 1] < 0) {
      EXPECT_GE(f.diagonal().minCoeff(), -1e-9 * scale) << "block " << blk;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * scale) << "block " << blk;
    }
  }
  const double cost =
      analytic_cost(propagate(p.a, p.b, pol, p.initial.mean(), p.initial.covariance()), pol, p.lambda, p.target)
          .total;
  EXPECT_NEAR(sdp.objective_value(x), cost, 1e-8 * cost);
}

TEST(ExportSdp, RoundTrip) {
  const SdpProblem sdp = export_sdp(example1());
  const std::string text = to_sdpa(sdp);
  EXPECT_EQ(parse_sdpa(text), sdp);
  EXPECT_EQ(to_sdpa(parse_sdpa(text)), text);
}

TEST(ExportSdp, ParseRejectsMalformed) {
  EXPECT_THROW(parse_sdpa("1\n1\n2\n"), ContractError);
  EXPECT_THROW(parse_sdpa("1\n1\n2\n1.0\n1 1 1\n"), ContractError);
  EXPECT_THROW(parse_sdpa("1\n1\n2\n1.0\n1 1 3 3 1.0\n"), IndexError);
}

}  // namespace
}  // namespace dsteer
