#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tangled {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;

inline constexpr double kPi = 3.14159265358979323846;

/// Dense n x m predictor matrix with unique column names.
///
/// Invariants (checked by `validate`): n >= 2, m >= 1, every entry finite,
/// names unique and one per column.
struct FeatureMatrix {
  std::vector<std::string> names;
  Matrix values;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }

  void validate() const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
};

enum class Angle { kPhi, kPsi };
enum class AngleSelection { kPhi, kPsi, kBoth };
enum class AngleUnit { kRadians, kDegrees };

const char* to_string(Angle angle);
std::vector<Angle> expand(AngleSelection selection);

/// Backbone torsions in radians, each in [-pi, pi).
struct AngleTargets {
  std::vector<double> phi;
  std::vector<double> psi;

  std::size_t size() const { return phi.size(); }
  const std::vector<double>& get(Angle angle) const {
    return angle == Angle::kPhi ? phi : psi;
  }
  void validate() const;
  AngleTargets select_rows(std::span<const std::size_t> rows) const;
};

/// Cosine/sine components of the targets, one column per component.
struct EncodedTargets {
  std::vector<std::string> columns;
  Matrix values;

  /// The (cos, sin) pair for one angle as an n x 2 block.
  EncodedTargets components(Angle angle) const;
};

struct Dataset {
  FeatureMatrix features;
  AngleTargets angles;
};

struct DatasetSplit {
  IndexList train;
  IndexList test;
};

/// Wraps into the half-open interval [-pi, pi); +pi maps to -pi.
double wrap_angle(double radians);

FeatureMatrix read_features_csv(std::istream& in);
AngleTargets read_angles_csv(std::istream& in, AngleUnit unit);

/// Loads a features CSV and a phi/psi angle CSV. Throws DataError on missing
/// files, malformed cells, missing values, duplicate names or row mismatch.
Dataset load_csv(const std::filesystem::path& features_path,
                 const std::filesystem::path& angles_path, AngleUnit unit);

void write_features_csv(std::ostream& out, const FeatureMatrix& features);
void write_angles_csv(std::ostream& out, const AngleTargets& angles);

EncodedTargets encode_angles(const AngleTargets& targets);

/// Inverse of the encoding: atan2(sin, cos) folded into [-pi, pi). The pair
/// need not be unit norm; (0, 0) throws DomainError.
std::vector<double> decode_angle(std::span<const double> cos_col,
                                 std::span<const double> sin_col);
double decode_angle(double cos_value, double sin_value);

/// Seeded permutation split; the first floor(fraction * n) indices train.
DatasetSplit split(std::size_t n, double train_fraction, std::uint64_t seed);

/// Same-length resample with replacement.
IndexList bootstrap_resample(std::span<const std::size_t> indices, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic correlated data

struct SyntheticSpec {
  std::size_t n_clusters = 5;
  std::vector<std::size_t> cluster_sizes = {4, 4, 4, 4, 4};
  double intra_correlation = 0.95;
  std::size_t n_noise_features = 10;
  std::size_t n_samples = 2000;
  std::string target_function = "cyclic-tanh-sin";
  double noise_sd = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset data;
  std::vector<IndexList> clusters;
  /// One designated driver per cluster.
  IndexList drivers;
  /// Drivers that enter the phi (resp. psi) target function.
  IndexList phi_drivers;
  IndexList psi_drivers;
  std::uint64_t seed = 0;

  const IndexList& drivers_for(Angle angle) const {
    return angle == Angle::kPhi ? phi_drivers : psi_drivers;
  }
};

/// Builds clusters of correlated features around latent factors plus
/// independent noise columns, and angle targets driven by one designated
/// member per cluster.
///
/// Cluster k is assigned to target slot k mod 3. Slot 0 contributes
/// 1.5 tanh(d) to phi and 0.6 cos(d) to psi, slot 1 contributes 0.8 sin(d) to
/// phi, slot 2 contributes 1.2 d exp(-d^2) to psi. When a slot holds several
/// clusters their terms are averaged, so three clusters give exactly
///   phi = 1.5 tanh(d1) + 0.8 sin(d2),  psi = 1.2 d3 exp(-d3^2) + 0.6 cos(d1).
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace tangled
