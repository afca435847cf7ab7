#include "tangled/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tangled/error.hpp"
#include "tangled/random.hpp"

namespace tangled {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("length mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
  if (a.empty()) throw DataError("metrics need at least one observation");
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(acc / static_cast<double>(y.size()));
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sse += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    sst += (y[i] - mean) * (y[i] - mean);
  }
  if (!(sst > 0.0)) throw DomainError("R^2 undefined for a zero-variance target");
  return 1.0 - sse / sst;
}

double angular_rmse(std::span<const double> theta, std::span<const double> theta_hat) {
  check_lengths(theta, theta_hat);
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = wrap_angle(theta[i] - theta_hat[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(theta.size()));
}

double circular_mean(std::span<const double> theta) {
  double s = 0.0;
  double c = 0.0;
  for (double t : theta) {
    s += std::sin(t);
    c += std::cos(t);
  }
  return wrap_angle(std::atan2(s, c));
}

double angular_r_squared(std::span<const double> theta, std::span<const double> theta_hat) {
  check_lengths(theta, theta_hat);
  const double centre = circular_mean(theta);
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double e = wrap_angle(theta[i] - theta_hat[i]);
    const double t = wrap_angle(theta[i] - centre);
    sse += e * e;
    sst += t * t;
  }
  if (!(sst > 0.0)) throw DomainError("angular R^2 undefined for a constant angle");
  return 1.0 - sse / sst;
}

std::vector<double> OlsModel::predict(const Matrix& x) const {
  if (x.cols() != coefficients.size()) throw DataError("OLS design width mismatch");
  const Vector out = (x * coefficients).array() + intercept;
  return {out.begin(), out.end()};
}

OlsModel fit_ols(const Matrix& x, std::span<const double> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
    throw DataError("OLS: design rows do not match target length");
  }
  const Eigen::Map<const Vector> target(y.data(), static_cast<Eigen::Index>(y.size()));
  OlsModel model;
  model.feature_means = x.colwise().mean().transpose();
  const double y_mean = target.mean();
  // Centring absorbs the intercept, so the minimum-norm solution applies to
  // the slopes only.
  const Matrix centered = x.rowwise() - model.feature_means.transpose();
  const Vector y_centered = target.array() - y_mean;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(centered);
  cod.setThreshold(1e-10);
  model.rank = static_cast<std::size_t>(cod.rank());
  model.rank_deficient = model.rank < static_cast<std::size_t>(x.cols());
  model.coefficients = model.rank == 0 ? Vector(Vector::Zero(x.cols())) : Vector(cod.solve(y_centered));
  model.intercept = y_mean - model.feature_means.dot(model.coefficients);
  return model;
}

const char* to_string(Predictor predictor) {
  return predictor == Predictor::kOls ? "ols" : "forest";
}

AngleAccuracy score_angle(std::span<const double> theta, std::span<const double> cos_hat,
                          std::span<const double> sin_hat) {
  check_lengths(theta, cos_hat);
  check_lengths(theta, sin_hat);
  std::vector<double> cos_true(theta.size());
  std::vector<double> sin_true(theta.size());
  std::vector<double> theta_hat(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    cos_true[i] = std::cos(theta[i]);
    sin_true[i] = std::sin(theta[i]);
    // A model can emit (0, 0); the angle is then arbitrary and 0 is used.
    theta_hat[i] = (cos_hat[i] == 0.0 && sin_hat[i] == 0.0) ? 0.0
                                                            : decode_angle(cos_hat[i], sin_hat[i]);
  }
  AngleAccuracy acc;
  acc.rmse_components = 0.5 * (rmse(cos_true, cos_hat) + rmse(sin_true, sin_hat));
  acc.r2_components = 0.5 * (r_squared(cos_true, cos_hat) + r_squared(sin_true, sin_hat));
  acc.rmse_angular = angular_rmse(theta, theta_hat);
  acc.r2_angular = angular_r_squared(theta, theta_hat);
  return acc;
}

AngleAccuracy evaluate_predictor(Predictor predictor, std::span<const std::size_t> selected,
                                 const DatasetSplit& split, const FeatureMatrix& features,
                                 const AngleTargets& angles, Angle angle,
                                 const ForestParams& forest_params, std::size_t threads) {
  if (selected.empty()) throw DataError("cannot evaluate an empty feature selection");
  for (std::size_t j : selected) {
    if (j >= features.cols()) throw DataError("selected feature index out of range");
  }
  const FeatureMatrix subset = features.select_columns(selected);
  const Matrix x_train = subset.select_rows(split.train).values;
  const Matrix x_test = subset.select_rows(split.test).values;
  const auto& theta = angles.get(angle);

  std::vector<double> predictions[2];
  for (int component = 0; component < 2; ++component) {
    std::vector<double> y_train;
    y_train.reserve(split.train.size());
    for (std::size_t r : split.train) {
      y_train.push_back(component == 0 ? std::cos(theta[r]) : std::sin(theta[r]));
    }
    if (predictor == Predictor::kOls) {
      predictions[component] = fit_ols(x_train, y_train).predict(x_test);
    } else {
      ForestParams params = forest_params;
      params.seed = derive_seed(forest_params.seed, Stream::kDownstream,
                                static_cast<std::uint64_t>(angle), static_cast<std::uint64_t>(component));
      predictions[component] = fit_forest(x_train, y_train, params, threads).predict(x_test);
    }
  }
  std::vector<double> theta_test;
  theta_test.reserve(split.test.size());
  for (std::size_t r : split.test) theta_test.push_back(theta[r]);
  return score_angle(theta_test, predictions[0], predictions[1]);
}

}  // namespace tangled
