#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tangled/forest.hpp"
#include "tangled/ingest.hpp"

namespace tangled {

double rmse(std::span<const double> y, std::span<const double> y_hat);

/// 1 - SSE / SST. Throws DomainError when y has zero variance.
double r_squared(std::span<const double> y, std::span<const double> y_hat);

/// Root mean square of wrapped differences, in radians.
double angular_rmse(std::span<const double> theta, std::span<const double> theta_hat);

/// atan2 of the mean sine and mean cosine.
double circular_mean(std::span<const double> theta);

/// 1 - sum wrap(theta - theta_hat)^2 / sum wrap(theta - circular_mean)^2.
double angular_r_squared(std::span<const double> theta, std::span<const double> theta_hat);

struct OlsModel {
  Vector coefficients;
  double intercept = 0.0;
  /// Column means of the training design (the linear-SHAP baseline).
  Vector feature_means;
  std::size_t rank = 0;
  bool rank_deficient = false;

  std::vector<double> predict(const Matrix& x) const;
};

/// Least squares with intercept. Rank-deficient designs get the minimum-norm
/// coefficient vector and are flagged rather than rejected.
OlsModel fit_ols(const Matrix& x, std::span<const double> y);

enum class Predictor { kOls, kForest };

const char* to_string(Predictor predictor);

struct AngleAccuracy {
  double rmse_components = 0.0;
  double r2_components = 0.0;
  double rmse_angular = 0.0;
  double r2_angular = 0.0;
};

struct AccuracyEntry {
  Angle angle = Angle::kPhi;
  Predictor predictor = Predictor::kForest;
  AngleAccuracy accuracy;
};

struct AccuracyReport {
  std::vector<AccuracyEntry> entries;
};

/// Scores predicted (cos, sin) columns against the true angle: component
/// metrics average over the two columns, angular metrics decode atan2.
AngleAccuracy score_angle(std::span<const double> theta, std::span<const double> cos_hat,
                          std::span<const double> sin_hat);

/// Fits the predictor on the training fold restricted to `selected` columns,
/// one model per (cos, sin) component, and scores it on the test fold.
AngleAccuracy evaluate_predictor(Predictor predictor, std::span<const std::size_t> selected,
                                 const DatasetSplit& split, const FeatureMatrix& features,
                                 const AngleTargets& angles, Angle angle,
                                 const ForestParams& forest_params, std::size_t threads = 1);

}  // namespace tangled
