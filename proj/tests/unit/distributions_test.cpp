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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "dsteer/distributions.hpp"
#include "dsteer/errors.hpp"
#include "test_support.hpp"

namespace dsteer {
namespace {

using testing::numeric_gradient;
using testing::random_matrix;
using testing::relative_error;

Matrix spd(Eigen::Index n, std::mt19937_64& gen) {
  const Matrix a = random_matrix(n, n, gen);
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

// Textbook density through the explicit inverse and determinant.
double direct_log_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  const Vector d = x - mean;
  const double n = static_cast<double>(x.size());
  return -0.5 * (d.dot(cov.inverse() * d) + n * std::log(2.0 * std::numbers::pi) +
                 std::log(cov.determinant()));
}

TEST(CounterRng, StreamsAreReproducibleAndIndependent) {
  CounterRng a(7, "batch");
  CounterRng b(7, "batch");
  CounterRng c(7, "eval");
  CounterRng d(8, "batch");
  const std::uint64_t first = a();
  EXPECT_EQ(first, b());
  EXPECT_NE(first, c());
  EXPECT_NE(first, d());
  EXPECT_EQ(a.counter(), 1u);
  const double u = uniform01(a);
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}

TEST(GaussianSpec, LogPdfMatchesDirectFormula) {
  std::mt19937_64 gen(1);
  for (Eigen::Index n : {1, 2, 4}) {
    const Matrix cov = spd(n, gen);
    const Vector mean = random_matrix(n, 1, gen).col(0);
    GaussianSpec g(mean, cov);
    const Matrix x = random_matrix(6, n, gen, -3.0, 3.0);
    const Vector lp = g.log_pdf(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      EXPECT_NEAR(lp(i), direct_log_pdf(x.row(i).transpose(), mean, cov), 1e-10);
    }
    Tape tape;
    const Matrix tape_lp = g.log_pdf(tape.constant(x)).value();
    EXPECT_LT(relative_error(tape_lp, Matrix(lp)), 1e-13);
  }
}

TEST(GaussianSpec, LogPdfGradientMatchesCentralDifferences) {
  std::mt19937_64 gen(2);
  GaussianSpec g(Vector::Ones(3), spd(3, gen));
  const Matrix x = random_matrix(4, 3, gen);
  Tape tape;
  Var p = tape.parameter(x);
  const Matrix analytic = tape.backward(sum(g.log_pdf(p)))[p];
  const Matrix numeric = numeric_gradient([&](const Matrix& m) { return g.log_pdf(m).sum(); }, x);
  EXPECT_LT(relative_error(analytic, numeric), 1e-7);
}

TEST(GaussianSpec, EntropyOfStandardNormal) {
  GaussianSpec g(Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_NEAR(g.entropy(), 1.0 + std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(GaussianSpec, RejectsInvalidCovariance) {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.1;
  EXPECT_THROW(GaussianSpec(Vector::Zero(2), asym), ContractError);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(GaussianSpec(Vector::Zero(2), indefinite), ContractError);
  EXPECT_THROW(GaussianSpec(Vector::Zero(2), Matrix::Identity(3, 3)), DimensionError);
}

// Property: sample moments approach the specified mean and covariance.
TEST(GaussianSpec, SampleMomentsConverge) {
  std::mt19937_64 gen(3);
  const Matrix cov = spd(3, gen);
  const Vector mean = Vector::LinSpaced(3, -1.0, 2.0);
  GaussianSpec g(mean, cov);
  CounterRng rng(42, "test");
  const Matrix x = g.sample(200000, rng);
  const Vector m = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - m.transpose();
  const Matrix c = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  EXPECT_LT((m - mean).cwiseAbs().maxCoeff(), 0.02 * std::max(1.0, cov.maxCoeff()));
  EXPECT_LT((c - cov).cwiseAbs().maxCoeff(), 0.03 * cov.cwiseAbs().maxCoeff());
}

TEST(GaussianKl, ScalarCaseMatchesHandComputation) {
  GaussianSpec a(Vector::Zero(1), Matrix::Identity(1, 1));
  GaussianSpec b(Vector::Ones(1), Matrix::Constant(1, 1, 2.0));
  // 0.5 (1/2 + 1/2 - 1 + log 2)
  EXPECT_NEAR(gaussian_kl(a, b), 0.5 * std::log(2.0), 1e-15);
  EXPECT_NEAR(gaussian_kl(a, a), 0.0, 1e-15);
}

TEST(GaussianKl, WorkedExamples) {
  const GaussianSpec std2(Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_EQ(gaussian_kl(std2, std2), 0.0);
  EXPECT_NEAR(gaussian_kl(GaussianSpec(Vector::Unit(2, 0), Matrix::Identity(2, 2)), std2), 0.5, 1e-15);
  EXPECT_NEAR(gaussian_kl(GaussianSpec(Vector::Zero(2), 2.0 * Matrix::Identity(2, 2)), std2),
              1.0 - std::log(2.0), 1e-15);
}

TEST(GaussianKl, AgreesWithMonteCarloEstimate) {
  std::mt19937_64 gen(4);
  GaussianSpec a(Vector::Zero(2), spd(2, gen));
  GaussianSpec b(Vector::Ones(2), spd(2, gen));
  CounterRng rng(5, "kl");
  const Matrix x = a.sample(400000, rng);
  const double mc = (a.log_pdf(x) - b.log_pdf(x)).mean();
  EXPECT_NEAR(gaussian_kl(a, b), mc, 0.02 * std::max(1.0, mc));
}

TEST(GmmSpec, LogPdfMatchesDirectMixtureSum) {
  std::mt19937_64 gen(6);
  std::vector<GaussianSpec> comps;
  for (int i = 0; i < 3; ++i) comps.emplace_back(random_matrix(2, 1, gen, -3, 3).col(0), spd(2, gen));
  GmmSpec gmm({0.2, 0.5, 0.3}, comps);
  const Matrix x = random_matrix(5, 2, gen, -4, 4);
  const Vector lp = gmm.log_pdf(x);
  Tape tape;
  const Matrix tape_lp = gmm.log_pdf(tape.constant(x)).value();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double total = 0.0;
    const std::array<double, 3> w{0.2, 0.5, 0.3};
    for (int c = 0; c < 3; ++c) {
      total += w[c] * std::exp(direct_log_pdf(x.row(i).transpose(), comps[c].mean(), comps[c].covariance()));
    }
    EXPECT_NEAR(lp(i), std::log(total), 1e-10);
    EXPECT_NEAR(tape_lp(i, 0), std::log(total), 1e-10);
  }
}

TEST(GmmSpec, SamplingFollowsWeights) {
  std::vector<GaussianSpec> comps{GaussianSpec(Vector::Constant(1, -50.0), Matrix::Identity(1, 1)),
                                  GaussianSpec(Vector::Constant(1, 50.0), Matrix::Identity(1, 1))};
  GmmSpec gmm({0.25, 0.75}, comps);
  CounterRng rng(9, "gmm");
  const Matrix x = gmm.sample(40000, rng);
  const double positive = (x.array() > 0.0).cast<double>().mean();
  EXPECT_NEAR(positive, 0.75, 0.01);
}

TEST(GmmSpec, RejectsBadWeights) {
  std::vector<GaussianSpec> comps{GaussianSpec(Vector::Zero(1), Matrix::Identity(1, 1))};
  EXPECT_THROW(GmmSpec({0.9}, comps), ContractError);
  EXPECT_THROW(GmmSpec({0.5, 0.5}, comps), DimensionError);
}

TEST(EmpiricalSet, ReadsCsvWithHeaderAndComments) {
  const auto path = std::filesystem::temp_directory_path() / "dsteer_empirical.csv";
  {
    std::ofstream out(path);
    out << "# point cloud\nx,y\n1,2\n3,4\n5,6\n";
  }
  EmpiricalSet set = EmpiricalSet::from_csv(path.string());
  EXPECT_EQ(set.count(), 3);
  EXPECT_EQ(set.dim(), 2);
  EXPECT_EQ(set.samples()(2, 1), 6.0);
  Distribution d(set);
  EXPECT_FALSE(d.has_pdf());
  EXPECT_EQ(d.kind(), "samples");
  EXPECT_THROW(d.log_pdf(Matrix::Zero(1, 2)), ContractError);
  CounterRng rng(1, "resample");
  const Matrix draws = d.sample(50, rng);
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    EXPECT_EQ(draws(i, 1), draws(i, 0) + 1.0);
  }
  std::filesystem::remove(path);
}

TEST(EmpiricalSet, RejectsRaggedFile) {
  const auto path = std::filesystem::temp_directory_path() / "dsteer_ragged.csv";
  {
    std::ofstream out(path);
    out << "1,2\n3\n";
  }
  EXPECT_THROW(EmpiricalSet::from_csv(path.string()), ConfigError);
  std::filesystem::remove(path);
}

TEST(Distribution, SampleRequiresPositiveCount) {
  Distribution d(GaussianSpec(Vector::Zero(2), Matrix::Identity(2, 2)));
  CounterRng rng(1, "s");
  EXPECT_THROW(sample(d, 0, rng), ContractError);
  EXPECT_EQ(sample(d, 10, rng).count(), 10);
  EXPECT_EQ(d.kind(), "gaussian");
}

}  // namespace
}  // namespace dsteer
