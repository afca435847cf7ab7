#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tangled/error.hpp"
#include "tangled/ingest.hpp"
#include "tangled/metrics.hpp"

using namespace tangled;

TEST_CASE("rmse examples") {
  const std::vector<double> y{1, 2, 3};
  CHECK(rmse(y, y) == 0.0);
  CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) ==
        doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(rmse(y, std::vector<double>{1.5, 2.5, 3.5}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(rmse(y, std::vector<double>{1}), DataError);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST_CASE("r squared examples") {
  const std::vector<double> y{1, 2, 3};
  CHECK(r_squared(y, y) == 1.0);
  CHECK(r_squared(y, std::vector<double>{2, 2, 2}) == 0.0);
  CHECK(r_squared(y, std::vector<double>{1, 2, 4}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(r_squared(std::vector<double>{5, 5}, std::vector<double>{1, 2}), DomainError);
}

TEST_CASE("r squared is invariant under a shared positive affine map") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> y(50);
  std::vector<double> h(50);
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = normal(rng);
    h[i] = y[i] + 0.3 * normal(rng);
  }
  const double before = r_squared(y, h);
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = 4 * y[i] - 7;
    h[i] = 4 * h[i] - 7;
  }
  CHECK(r_squared(y, h) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("angular rmse examples") {
  const std::vector<double> t{0.1, -2.0, 3.0};
  CHECK(angular_rmse(t, t) == 0.0);
  CHECK(angular_rmse(std::vector<double>{kPi - 0.1}, std::vector<double>{-kPi + 0.1}) ==
        doctest::Approx(0.2).epsilon(1e-12));
  std::vector<double> shifted;
  for (double v : t) shifted.push_back(wrap_angle(v + kPi));
  CHECK(angular_rmse(t, shifted) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("angular rmse ignores a common rotation") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  std::vector<double> a(40);
  std::vector<double> b(40);
  for (std::size_t i = 0; i < 40; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  const double before = angular_rmse(a, b);
  for (std::size_t i = 0; i < 40; ++i) {
    a[i] = wrap_angle(a[i] + 2.5);
    b[i] = wrap_angle(b[i] + 2.5);
  }
  CHECK(angular_rmse(a, b) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("circular mean and angular r squared") {
  // The mean sits on the branch cut, so either end of the interval is fine.
  const double m = circular_mean(std::vector<double>{kPi - 0.1, -kPi + 0.1});
  CHECK(std::abs(std::abs(m) - kPi) < 1e-12);
  const std::vector<double> t{0.1, 0.5, -0.3, 1.0};
  CHECK(angular_r_squared(t, t) == 1.0);
  CHECK_THROWS_AS(angular_r_squared(std::vector<double>{1, 1}, std::vector<double>{0, 0}),
                  DomainError);
}

TEST_CASE("ols exact line") {
  Matrix x(5, 1);
  x << 0, 1, 2, 3, 4;
  const std::vector<double> y{1, 3, 5, 7, 9};
  const OlsModel m = fit_ols(x, y);
  CHECK(m.coefficients(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(m.intercept == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(m.rank_deficient);
  CHECK(m.feature_means(0) == 2.0);
}

TEST_CASE("ols duplicated column is flagged and still fits") {
  Matrix x(6, 2);
  x << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5;
  const std::vector<double> y{1, 3, 5, 7, 9, 11};
  const OlsModel m = fit_ols(x, y);
  CHECK(m.rank_deficient);
  CHECK(m.rank == 1);
  const auto pred = m.predict(x);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(pred[i] - y[i]) <= 1e-6);
  CHECK(m.coefficients(0) == doctest::Approx(m.coefficients(1)).epsilon(1e-9));
}

TEST_CASE("ols on a zero design returns the mean") {
  const std::vector<double> y{1, 2, 6};
  const OlsModel m = fit_ols(Matrix::Zero(3, 2), y);
  CHECK(m.coefficients.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.intercept == doctest::Approx(3.0));
}

TEST_CASE("ols residuals are orthogonal to the design") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Matrix x(80, 4);
  std::vector<double> y(80);
  for (Eigen::Index i = 0; i < 80; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = normal(rng);
    y[static_cast<std::size_t>(i)] = x(i, 0) - x(i, 3) + normal(rng);
  }
  const OlsModel m = fit_ols(x, y);
  const auto pred = m.predict(x);
  for (Eigen::Index j = 0; j < 4; ++j) {
    double dot = 0.0;
    double resid_sum = 0.0;
    for (Eigen::Index i = 0; i < 80; ++i) {
      const double r = y[static_cast<std::size_t>(i)] - pred[static_cast<std::size_t>(i)];
      dot += r * x(i, j);
      resid_sum += r;
    }
    CHECK(std::abs(dot) <= 1e-8);
    CHECK(std::abs(resid_sum) <= 1e-8);
  }
}

TEST_CASE("score_angle on perfect components") {
  const std::vector<double> theta{0.1, 1.2, -2.0, 3.0};
  std::vector<double> c;
  std::vector<double> s;
  for (double t : theta) {
    c.push_back(std::cos(t));
    s.push_back(std::sin(t));
  }
  const AngleAccuracy a = score_angle(theta, c, s);
  CHECK(a.rmse_components == doctest::Approx(0.0));
  CHECK(a.r2_components == doctest::Approx(1.0));
  CHECK(a.rmse_angular <= 1e-12);
  CHECK(a.r2_angular == doctest::Approx(1.0));
}

TEST_CASE("evaluate predictors on synthetic data") {
  SyntheticSpec spec;
  spec.seed = 3;
  const SyntheticData d = generate_synthetic(spec);
  const DatasetSplit sp = split(d.data.features.rows(), 0.8, 5);
  IndexList all(d.data.features.cols());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  ForestParams p;
  p.seed = 1;
  for (Angle angle : {Angle::kPhi, Angle::kPsi}) {
    const AngleAccuracy rf = evaluate_predictor(Predictor::kForest, all, sp, d.data.features,
                                                d.data.angles, angle, p);
    CHECK(rf.r2_components >= 0.85);
    CHECK(rf.rmse_components >= 0.0);
    CHECK(rf.r2_components <= 1.0);
  }
  CHECK_THROWS_AS(evaluate_predictor(Predictor::kOls, IndexList{}, sp, d.data.features,
                                     d.data.angles, Angle::kPhi, p),
                  DataError);
  CHECK_THROWS_AS(evaluate_predictor(Predictor::kOls, IndexList{99}, sp, d.data.features,
                                     d.data.angles, Angle::kPhi, p),
                  DataError);
}

TEST_CASE("ols recovers an exactly linear cyclic target") {
  // Angles built so that cos and sin are exact linear functions of two columns.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  const std::size_t n = 300;
  FeatureMatrix f;
  f.names = {"c", "s", "z"};
  f.values.resize(n, 3);
  AngleTargets angles;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = u(rng);
    const auto r = static_cast<Eigen::Index>(i);
    f.values(r, 0) = 2 * std::cos(t) + 1;
    f.values(r, 1) = -3 * std::sin(t);
    f.values(r, 2) = u(rng);
    angles.phi.push_back(t);
    angles.psi.push_back(t);
  }
  const DatasetSplit sp = split(n, 0.8, 1);
  const AngleAccuracy a = evaluate_predictor(Predictor::kOls, IndexList{0, 1, 2}, sp, f, angles,
                                             Angle::kPhi, ForestParams{});
  CHECK(a.r2_components >= 0.999);
}
