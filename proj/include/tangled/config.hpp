#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tangled/ingest.hpp"
#include "tangled/report.hpp"
#include "tangled/select.hpp"
#include "tangled/stability.hpp"

namespace tangled {

/// Everything a command needs, settable from a flat key=value file and from
/// command-line overrides. Unknown keys and malformed values throw
/// ConfigError.
struct RunConfig {
  SelectionConfig selection;
  std::size_t repeats = 10;
  double train_fraction = 0.8;
  /// Upper end of the Kuncheva k sweep; unset means min(15, m - 1).
  std::optional<std::size_t> k_max;
  SyntheticSpec synth;
  std::uint64_t seed = 0;
  AngleUnit angle_unit = AngleUnit::kRadians;
  std::string features_path;
  std::string angles_path;
  std::string selection_path;
  std::string out_dir = ".";

  void set(std::string_view key, std::string_view value);
  /// Lines of key=value; blank lines and lines starting with '#' are skipped.
  void load_file(const std::filesystem::path& path);
  void validate() const;

  /// Selection settings with the master seed applied.
  SelectionConfig selection_config() const;
  StabilityConfig stability_config(std::size_t feature_count) const;
  SyntheticSpec synthetic_spec() const;

  /// Resolved settings with defaults materialized. Thread count is an
  /// execution detail that never changes results and is left out.
  Json to_json() const;

  static std::vector<std::string> keys();
};

}  // namespace tangled
