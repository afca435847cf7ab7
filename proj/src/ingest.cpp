#include "tangled/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "tangled/error.hpp"
#include "tangled/random.hpp"

namespace tangled {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_cell(std::string_view cell, std::size_t line_no, std::size_t col) {
  if (cell.empty()) {
    throw DataError("missing value at line " + std::to_string(line_no) + ", column " +
                    std::to_string(col + 1));
  }
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw DataError("non-numeric cell '" + std::string(cell) + "' at line " +
                    std::to_string(line_no) + ", column " + std::to_string(col + 1));
  }
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(std::istream& in, const char* what) {
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (trim(view).empty()) continue;
    auto fields = split_fields(view);
    if (!have_header) {
      for (auto f : fields) {
        if (f.empty()) throw DataError(std::string(what) + ": empty column name in header");
        table.header.emplace_back(f);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw DataError(std::string(what) + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_cell(fields[j], line_no, j);
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError(std::string(what) + ": empty file");
  return table;
}

}  // namespace

void FeatureMatrix::validate() const {
  if (rows() < 2) throw DataError("feature matrix needs at least 2 rows");
  if (cols() < 1) throw DataError("feature matrix needs at least 1 column");
  if (names.size() != cols()) throw DataError("feature name count does not match columns");
  std::set<std::string_view> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) throw DataError("duplicate feature name '" + name + "'");
  }
  if (!values.allFinite()) throw DataError("feature matrix contains non-finite values");
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out{names, Matrix(static_cast<Eigen::Index>(rows.size()), values.cols())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  FeatureMatrix out;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.names.push_back(names.at(cols[j]));
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(cols[j]));
  }
  return out;
}

const char* to_string(Angle angle) { return angle == Angle::kPhi ? "phi" : "psi"; }

std::vector<Angle> expand(AngleSelection selection) {
  switch (selection) {
    case AngleSelection::kPhi: return {Angle::kPhi};
    case AngleSelection::kPsi: return {Angle::kPsi};
    case AngleSelection::kBoth: break;
  }
  return {Angle::kPhi, Angle::kPsi};
}

void AngleTargets::validate() const {
  if (phi.size() != psi.size()) throw DataError("phi and psi lengths differ");
  for (const auto* column : {&phi, &psi}) {
    for (double a : *column) {
      if (!(a >= -kPi && a < kPi)) throw DataError("angle outside [-pi, pi)");
    }
  }
}

AngleTargets AngleTargets::select_rows(std::span<const std::size_t> rows) const {
  AngleTargets out;
  out.phi.reserve(rows.size());
  out.psi.reserve(rows.size());
  for (std::size_t r : rows) {
    out.phi.push_back(phi.at(r));
    out.psi.push_back(psi.at(r));
  }
  return out;
}

EncodedTargets EncodedTargets::components(Angle angle) const {
  const std::string prefix = angle == Angle::kPhi ? "_phi" : "_psi";
  EncodedTargets out;
  out.values.resize(values.rows(), 0);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].ends_with(prefix)) {
      out.columns.push_back(columns[c]);
      out.values.conservativeResize(Eigen::NoChange, out.values.cols() + 1);
      out.values.col(out.values.cols() - 1) = values.col(static_cast<Eigen::Index>(c));
    }
  }
  if (out.columns.size() != 2) throw DataError("encoded targets lack both components");
  return out;
}

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * kPi;
  double r = radians - two_pi * std::floor((radians + kPi) / two_pi);
  // Guard the half-open boundary against rounding in the subtraction.
  if (r >= kPi) r -= two_pi;
  if (r < -kPi) r += two_pi;
  return r;
}

FeatureMatrix read_features_csv(std::istream& in) {
  RawTable table = read_table(in, "features");
  FeatureMatrix fm;
  fm.names = std::move(table.header);
  fm.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                   static_cast<Eigen::Index>(fm.names.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < fm.names.size(); ++j) {
      fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.rows[i][j];
    }
  }
  fm.validate();
  return fm;
}

AngleTargets read_angles_csv(std::istream& in, AngleUnit unit) {
  RawTable table = read_table(in, "angles");
  if (table.header != std::vector<std::string>{"phi", "psi"}) {
    throw DataError("angles header must be exactly 'phi,psi'");
  }
  AngleTargets angles;
  const double scale = unit == AngleUnit::kDegrees ? kPi / 180.0 : 1.0;
  for (const auto& row : table.rows) {
    angles.phi.push_back(wrap_angle(row[0] * scale));
    angles.psi.push_back(wrap_angle(row[1] * scale));
  }
  return angles;
}

Dataset load_csv(const std::filesystem::path& features_path,
                 const std::filesystem::path& angles_path, AngleUnit unit) {
  std::ifstream features_in(features_path);
  if (!features_in) throw DataError("cannot open features file " + features_path.string());
  std::ifstream angles_in(angles_path);
  if (!angles_in) throw DataError("cannot open angles file " + angles_path.string());
  Dataset ds{read_features_csv(features_in), read_angles_csv(angles_in, unit)};
  if (ds.angles.size() != ds.features.rows()) {
    throw DataError("dimension mismatch: " + std::to_string(ds.features.rows()) +
                    " feature rows vs " + std::to_string(ds.angles.size()) + " angle rows");
  }
  return ds;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& features) {
  for (std::size_t j = 0; j < features.cols(); ++j) {
    out << (j ? "," : "") << features.names[j];
  }
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < features.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.values.cols(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, features.values(i, j));
      if (j) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void write_angles_csv(std::ostream& out, const AngleTargets& angles) {
  out << "phi,psi\n";
  char buf[32];
  for (std::size_t i = 0; i < angles.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof buf, angles.phi[i]);
    out.write(buf, res.ptr - buf);
    out << ',';
    res = std::to_chars(buf, buf + sizeof buf, angles.psi[i]);
    out.write(buf, res.ptr - buf);
    out << '\n';
  }
}

EncodedTargets encode_angles(const AngleTargets& targets) {
  targets.validate();
  const auto n = static_cast<Eigen::Index>(targets.size());
  EncodedTargets enc{{"cos_phi", "sin_phi", "cos_psi", "sin_psi"}, Matrix(n, 4)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    enc.values(i, 0) = std::cos(targets.phi[k]);
    enc.values(i, 1) = std::sin(targets.phi[k]);
    enc.values(i, 2) = std::cos(targets.psi[k]);
    enc.values(i, 3) = std::sin(targets.psi[k]);
  }
  return enc;
}

double decode_angle(double cos_value, double sin_value) {
  if (cos_value == 0.0 && sin_value == 0.0) {
    throw DomainError("angle undefined for (cos, sin) = (0, 0)");
  }
  const double a = std::atan2(sin_value, cos_value);
  return a >= kPi ? a - 2.0 * kPi : a;
}

std::vector<double> decode_angle(std::span<const double> cos_col,
                                 std::span<const double> sin_col) {
  if (cos_col.size() != sin_col.size()) throw DataError("cos/sin length mismatch");
  std::vector<double> out(cos_col.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = decode_angle(cos_col[i], sin_col[i]);
  return out;
}

DatasetSplit split(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  // The epsilon keeps products such as 0.29 * 100 from flooring to 28.
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  if (n < 2 || n_train == 0 || n_train >= n) {
    throw ConfigError("degenerate split: " + std::to_string(n_train) + " of " +
                      std::to_string(n) + " rows in the training fold");
  }
  IndexList perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, Stream::kSplit));
  std::shuffle(perm.begin(), perm.end(), rng);
  DatasetSplit out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return out;
}

IndexList bootstrap_resample(std::span<const std::size_t> indices, std::uint64_t seed) {
  if (indices.empty()) throw DataError("cannot bootstrap an empty index list");
  Rng rng(derive_seed(seed, Stream::kBootstrap));
  std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
  IndexList out(indices.size());
  for (auto& v : out) v = indices[pick(rng)];
  return out;
}

// ---------------------------------------------------------------------------

void SyntheticSpec::validate() const {
  if (n_clusters == 0) throw ConfigError("synthetic spec needs at least one cluster");
  if (cluster_sizes.size() != n_clusters) {
    throw ConfigError("cluster_sizes length must equal n_clusters");
  }
  for (std::size_t s : cluster_sizes) {
    if (s == 0) throw ConfigError("cluster sizes must be >= 1");
  }
  if (!(intra_correlation > 0.0 && intra_correlation < 1.0)) {
    throw ConfigError("infeasible intra-cluster correlation " +
                      std::to_string(intra_correlation) + ": must lie in (0, 1)");
  }
  if (n_samples < 2) throw ConfigError("synthetic spec needs at least 2 samples");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be >= 0");
  if (target_function != "cyclic-tanh-sin") {
    throw ConfigError("unknown target function '" + target_function + "'");
  }
}

namespace {

double abs_correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  return denom > 0 ? std::abs(ac.dot(bc) / denom) : 0.0;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n_samples);
  std::size_t m = spec.n_noise_features;
  for (std::size_t s : spec.cluster_sizes) m += s;

  Rng rng(derive_seed(spec.seed, Stream::kSynthetic));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(0.5, 2.0);
  std::uniform_real_distribution<double> offset_dist(-5.0, 5.0);
  auto draw = [&](Eigen::Index len) {
    Vector v(len);
    for (auto& x : v) x = normal(rng);
    return v;
  };

  SyntheticData out;
  out.seed = spec.seed;
  auto& fm = out.data.features;
  fm.values.resize(n, static_cast<Eigen::Index>(m));
  fm.names.reserve(m);

  // Member loading c on the latent factor gives pairwise member correlation
  // c^2 = intra_correlation; the driver is the factor itself.
  const double loading = std::sqrt(spec.intra_correlation);
  const double residual = std::sqrt(1.0 - spec.intra_correlation);
  std::vector<Vector> standardized_drivers;
  std::size_t col = 0;
  for (std::size_t k = 0; k < spec.n_clusters; ++k) {
    const Vector z = draw(n);
    const std::size_t size = spec.cluster_sizes[k];
    const std::size_t driver_pos = k % size;
    IndexList members;
    for (std::size_t j = 0; j < size; ++j) {
      Vector x = j == driver_pos ? z : Vector(loading * z + residual * draw(n));
      const double sign = (j % 3 == 2) ? -1.0 : 1.0;
      const double scale = scale_dist(rng);
      const double offset = offset_dist(rng);
      fm.values.col(static_cast<Eigen::Index>(col)) = (sign * scale * x).array() + offset;
      fm.names.push_back("c" + std::to_string(k) + "_" + std::to_string(j));
      if (j == driver_pos) out.drivers.push_back(col);
      members.push_back(col++);
    }
    out.clusters.push_back(std::move(members));
    const double mean = z.mean();
    const double sd = std::sqrt((z.array() - mean).square().mean());
    standardized_drivers.push_back((z.array() - mean) / (sd > 0 ? sd : 1.0));
  }
  for (std::size_t j = 0; j < spec.n_noise_features; ++j) {
    fm.values.col(static_cast<Eigen::Index>(col)) = draw(n);
    fm.names.push_back("noise_" + std::to_string(j));
    ++col;
  }

  // Empirical check of the requested within-cluster correlation.
  for (const auto& members : out.clusters) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const double r = abs_correlation(fm.values.col(static_cast<Eigen::Index>(members[a])),
                                         fm.values.col(static_cast<Eigen::Index>(members[b])));
        if (r < spec.intra_correlation - 0.05) {
          throw DataError("intra-cluster correlation target " +
                          std::to_string(spec.intra_correlation) +
                          " not reached (measured " + std::to_string(r) +
                          "); increase n_samples");
        }
      }
    }
  }

  std::array<std::vector<std::size_t>, 3> slots;
  for (std::size_t k = 0; k < spec.n_clusters; ++k) slots[k % 3].push_back(k);
  auto slot_mean = [&](std::size_t slot, auto&& term) {
    Vector acc = Vector::Zero(n);
    for (std::size_t k : slots[slot]) acc += standardized_drivers[k].unaryExpr(term);
    if (slots[slot].empty()) return acc;
    return Vector(acc / static_cast<double>(slots[slot].size()));
  };
  const Vector phi_raw =
      1.5 * slot_mean(0, [](double d) { return std::tanh(d); }) +
      0.8 * slot_mean(1, [](double d) { return std::sin(d); });
  const Vector psi_raw =
      1.2 * slot_mean(2, [](double d) { return d * std::exp(-d * d); }) +
      0.6 * slot_mean(0, [](double d) { return std::cos(d); });

  auto& angles = out.data.angles;
  angles.phi.resize(spec.n_samples);
  angles.psi.resize(spec.n_samples);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    angles.phi[k] = wrap_angle(phi_raw(i) + spec.noise_sd * normal(rng));
    angles.psi[k] = wrap_angle(psi_raw(i) + spec.noise_sd * normal(rng));
  }

  for (std::size_t k = 0; k < spec.n_clusters; ++k) {
    if (k % 3 != 2) out.phi_drivers.push_back(out.drivers[k]);
    if (k % 3 != 1) out.psi_drivers.push_back(out.drivers[k]);
  }
  fm.validate();
  return out;
}

}  // namespace tangled
