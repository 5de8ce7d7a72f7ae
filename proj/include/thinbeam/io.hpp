#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "thinbeam/field.hpp"
#include "thinbeam/recovery.hpp"
#include "thinbeam/tensor.hpp"

namespace thinbeam {

using Json = nlohmann::json;

/// Parses a JSON file. Throws IoError if it cannot be read and ConfigError if
/// it is not valid JSON or not an object.
Json load_config(const std::string& path);

/// View of a JSON object that remembers which keys were read. finish() throws
/// ConfigError naming every key that was never looked at, so misspelled
/// options fail loudly. Getters throw ConfigError for missing required keys
/// and wrong types; `path` prefixes the messages.
class ConfigNode {
 public:
  ConfigNode(const Json& j, std::string path);

  bool has(const std::string& key) const;
  const std::string& path() const { return path_; }

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  int integer(const std::string& key);
  int integer(const std::string& key, int fallback);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  ConfigNode child(const std::string& key);
  /// Raw value, marked as read.
  const Json& raw(const std::string& key);

  void finish() const;

 private:
  const Json& get(const std::string& key);
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* j_;
  std::string path_;
  std::set<std::string> read_;
};

/// Range helpers: throw ConfigError mentioning `name`.
double require_positive(const std::string& name, double v);
double require_nonnegative(const std::string& name, double v);
int require_at_least(const std::string& name, int v, int lo);

/// {"isotropic": {"mu": x, "lambda": y}} or {"voigt": [[3 x 3]]}.
ElasticTensor parse_tensor(ConfigNode node);

/// [[[x1, x2], [x1, x2]], ...] in rescaled coordinates.
CrackSet parse_crack(const Json& j, const std::string& path);

/// Keys: L, u_breaks, u_values, poly, sines [{amplitude, frequency, phase}],
/// v_jumps / vprime_jumps / curvature_jumps [{x, size}]. Validated.
LimitConfig parse_limit(ConfigNode node);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Writes `bytes` to path + ".tmp" and renames it over `path`. Throws IoError.
void atomic_write(const std::string& path, const std::string& bytes);

/// Binary grid: "TBGRID01", int32 nx, ny, ncomp, reserved (0), double L, h,
/// x0, x1, y0, y1 (the box), then (ny + 1) (nx + 1) ncomp doubles, nodes in
/// row-major order (x1 fastest), components interleaved. Little endian.
std::string grid_bytes(const DisplacementField& field);
std::string grid_bytes(const std::vector<double>& values, int nx, int ny, double L, double h, const Box& box);
/// CSV with header i,j,x1,x2 and one column per component.
std::string grid_csv(const DisplacementField& field);
std::string grid_csv(const std::vector<double>& values, int nx, int ny, const Box& box);

/// Reads a two-component grid, binary (by magic) or CSV (by extension .csv;
/// CSV needs L and h from the caller). Throws IoError or InvalidField.
DisplacementField read_grid(const std::string& path, double L = 0.0, double h = 0.0);

}  // namespace thinbeam
