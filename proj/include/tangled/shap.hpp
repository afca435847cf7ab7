#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tangled/forest.hpp"

namespace tangled {

/// Per-observation feature attributions. Local accuracy:
/// base_value + sum_j values(i, j) equals the model output for row i.
struct ShapMatrix {
  Matrix values;
  double base_value = 0.0;
};

/// Path-dependent TreeSHAP for one tree; adds the attributions for `row`
/// into `phi` (length = feature count).
void tree_shap(const RegressionTree& tree, std::span<const double> row, std::span<double> phi);

/// Forest attributions: mean of per-tree TreeSHAP; base value is the mean of
/// the root node values.
ShapMatrix tree_shap(const RegressionForest& forest, const Matrix& x, std::size_t threads = 1);

/// Exact Shapley values by coalition enumeration, using the cover-weighted
/// conditional expectation as the characteristic function. Test oracle; the
/// feature count is limited to 12.
std::vector<double> brute_force_shapley(const RegressionTree& tree, std::span<const double> row,
                                        std::size_t feature_count);

/// (1/n) sum_i |values(i, j)|, normalized to unit sum.
ImportanceVector mean_abs_shap(const ShapMatrix& shap);

/// Exact SHAP values of a linear model under feature independence:
/// coefficient_j * (x_ij - mean_j), with base value intercept + coef . mean.
ShapMatrix linear_shap(const Vector& coefficients, const Vector& feature_means, double intercept,
                       const Matrix& x);

}  // namespace tangled
