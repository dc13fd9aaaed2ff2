// Deterministic artifact serialization and configuration reading.
//
// Output contract: every floating-point value is written with 17
// significant digits (enough to reproduce the exact IEEE double), keys and
// rows are emitted in fixed order, and lines end with '\n'.  Re-running a
// command with the same configuration therefore reproduces every output
// file byte for byte.  Each artifact carries the hash of the configuration
// document that produced it: CSV files in a leading comment line, JSON
// documents in a "config_hash" member.
//
// Input contract: one JSON document describes a run.  Curves enter as
// cosine/sine coefficient tables per component (or as a named built-in
// shape), scalar profiles over the parameter as cosine/sine tables, and
// numeric parameters mirror the library's configuration structs, with the
// same defaults.  Unknown keys are rejected so that typos cannot silently
// change a run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vlx/dynamics.hpp"
#include "vlx/experiments.hpp"
#include "vlx/geometry.hpp"

namespace vlx {

// 17-significant-digit decimal form of x ("%.17g"): parses back to the
// identical double.  Infinities and NaN render as "inf"/"-inf"/"nan".
std::string format_float(double x);

// 64-bit FNV-1a hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

// Hash of a configuration document as 16 lowercase hex digits.  The text is
// canonicalized first (parsed as JSON, re-serialized with sorted keys and
// no whitespace), so formatting and key order do not affect the hash.
// Throws InvalidArgument when the text is not valid JSON.
std::string config_hash(const std::string& config_text);

// In-memory numeric table.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // each row matches columns in size
};

// Renders "# config_hash=<hash>", the header row, and the data rows in
// fixed float format.  Throws InvalidArgument when a row's size differs
// from the header's.
std::string to_csv(const CsvTable& table, const std::string& hash);

// Deterministic JSON document builder: keys keep insertion order, numbers
// go through format_float, strings are escaped, top-level members render
// one per line.  Values added through put_raw must already be valid JSON
// (typically a nested JsonDoc::str or JsonDoc::array result) and are
// emitted verbatim.
class JsonDoc {
 public:
  void put(const std::string& key, double value);
  void put(const std::string& key, int value);
  void put(const std::string& key, std::size_t value);
  void put(const std::string& key, bool value);
  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, const char* value);
  void put(const std::string& key, const std::vector<double>& values);
  void put(const std::string& key, const std::vector<std::string>& values);
  void put_raw(const std::string& key, std::string rendered_json);

  // "[item, item, ...]" from pre-rendered JSON items.
  static std::string array(const std::vector<std::string>& rendered_items);

  // Compact single-line rendering, for nesting inside another document.
  std::string compact() const;
  // Full document: one top-level member per line, trailing newline.
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> members_;
};

// Whole-file helpers; throw InvalidArgument when the file cannot be read
// or written.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Curve description parsed from a JSON object: either a built-in shape
//   {"shape": "circle"}
//   {"shape": "ellipse", "semi_axis_x": a, "semi_axis_y": b}
//   {"shape": "perturbed_circle", "amplitude": a, "wavenumber": k}
// or raw coefficient tables indexed by wavenumber from 0
//   {"x_cos": [...], "x_sin": [...], "y_cos": [...], "y_sin": [...]}
// with optional "n_modes" (Fourier modes kept by the arclength fit,
// default 64) and "rho0" (override for the analyticity radius, default 0 =
// estimate from coefficient decay).  A "sin" table's entry 0 must be zero.
struct CurveInput {
  CurveCoefficients coefficients;
  int n_modes = 64;
  double rho0 = 0.0;
};
CurveInput curve_from_json(const std::string& json_text);

// Sampling parameters of the kernel lower-bound certificate.
struct ProbeConfig {
  double rho = 0.05;
  int n_samples = 1000;
  unsigned long long seed = 7;
};

// One run's complete description, parsed and validated from a single JSON
// document:
//
//   curve             (required)  see curve_from_json
//   epsilon           one tube half-width, or
//   epsilons          a strictly decreasing list of them
//   n_points, n_layers            grid sizes (defaults 256, 8)
//   aggregate         (required)  total sheet density, {"cos": [...],
//                                 "sin": [...]} indexed by wavenumber
//   eta0              initial offset profile, same form (default 0)
//   comparison_times  for convergence runs (default [0.05])
//   evolution         EvolutionConfig fields by name (same defaults)
//   kernel            {"pv_rule": "alternate_point" | "skip_diagonal",
//                      "near_coincidence_factor": ..., "threads": ...}
//   probe             {"rho": ..., "n_samples": ..., "seed": ...}
//
// Single-run commands use the sole entry of `epsilons`; family commands use
// the whole list.  Throws InvalidArgument on malformed JSON, unknown keys,
// wrong types, or values violating the library's preconditions.
struct RunSetup {
  ExperimentSpec experiment;
  ProbeConfig probe;
  std::string hash;  // canonical hash of the parsed document
};
RunSetup parse_run_config(const std::string& json_text);

}  // namespace vlx
