#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hankelab/dyadic.hpp"
#include "hankelab/norms.hpp"
#include "hankelab/paraproduct.hpp"
#include "hankelab/wavelet.hpp"

namespace hankelab {

using ojson = nlohmann::ordered_json;

/// Bad configuration; the CLI maps it to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Coefficient magnitude profile of generated symbols. kFlat draws c(R)
/// standard complex Gaussian; kVolume multiplies by |R|^{1/2}, which makes
/// large rectangles dominate and the BMO witness nontrivial.
enum class CoeffScale { kFlat, kVolume };

struct ExperimentConfig {
  int n = 2;
  int N = 64;
  int depth = 3;              // L: rectangle levels are at most L
  std::uint64_t seed = 7;
  int trials = 100;
  int support = 8;            // nonzero coefficients per symbol
  int collection_size = 8;    // rectangles per random collection
  int subsets = 50;           // random subsets for few_small_ratio
  Rational delta = Rational(1, 3);    // Journe delta (journe kind)
  Rational epsilon = Rational(1, 2);
  Deltas deltas;
  BmoStrategy strategy = BmoStrategy::kExhaustive;
  CoeffScale scale = CoeffScale::kVolume;
  int threads = 0;            // 0: hardware concurrency
  std::string frozen;         // fixture path; empty disables the band comparison
  std::string out;            // report path stem; empty writes to stdout

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  ojson to_json() const;
};

/// Path of the committed fixture (data/frozen_constants.json in the source tree).
std::string default_frozen_path();

/// Applies one key=value pair; unknown keys and malformed values throw ConfigError.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
/// `key = value` lines; '#' starts a comment. Starts from `base`.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// SplitMix64 step (Steele, Lea, Flood 2014).
std::uint64_t splitmix64(std::uint64_t& state);
/// Trial t draws from mt19937_64 seeded with four SplitMix64 outputs of the
/// state seed ^ (t * golden gamma), so streams never share a seed sequence.
std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial);

/// Random index walk from [0,1): each coordinate descends to a uniform level
/// in [0, depth], picking a child uniformly at every step.
DyadicRectangle random_rect(int n, int depth, std::mt19937_64& rng);
/// `collection_size` walks (duplicates merge, so the size may be smaller).
RectCollection generate_collection(const ExperimentConfig& cfg, std::uint64_t trial);
/// `support` distinct admissible rectangles at levels <= min(depth, max_level)
/// with complex Gaussian coefficients. max_level < 0 means the family's top level.
WaveletCoeffs generate_coeffs(const ExperimentConfig& cfg, std::uint64_t trial, int max_level = -1);

enum class ExperimentKind { kEquivalence, kJourne, kParaproduct, kVerify };
std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(std::string_view s);

/// Suite bracket of a measured ratio. Upper-only constants carry lo = 0.
struct Bracket {
  double lo = 0;
  double hi = 0;
};
using FrozenConstants = std::map<std::string, Bracket>;

inline constexpr double kFrozenBand = 0.2;

/// Missing file: empty map. Malformed file: ConfigError naming the path.
FrozenConstants load_frozen(const std::string& path);
/// Merges `update` into the file, replacing keys it names.
void save_frozen(const std::string& path, const FrozenConstants& update);
/// lo / (1 + band) <= v <= hi (1 + band).
bool within_band(double v, const Bracket& b, double band = kFrozenBand);

struct Report {
  ExperimentKind kind = ExperimentKind::kVerify;
  ojson json;                               // full document, schema "v1"
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Fixed CSV columns of each kind.
std::vector<std::string> csv_columns(ExperimentKind k);
/// Valid document with no trials.
Report empty_report(ExperimentKind k);

/// Trials run in parallel on independent streams and are reduced in trial
/// order, so the document depends only on the config. With `freeze` the
/// measured brackets are written to cfg.frozen instead of being compared.
Report run_experiment(const ExperimentConfig& cfg, ExperimentKind kind, bool freeze = false);

enum class ReportFormat { kJson, kCsv };
std::string render_report(const Report& r, ReportFormat f);
/// Writes to `path` ("-" or empty: stdout). Throws std::runtime_error naming the path.
void emit_report(const Report& r, ReportFormat f, const std::string& path);

/// Doubles in reports are rounded to 12 significant digits.
double round12(double v);

/// One entry of the verify suite: `run` returns an empty string on success.
struct VerifyCheck {
  std::string name;
  std::vector<std::string> ops;  // "module.operation" names it exercises
  std::function<std::string()> run;
};

const std::vector<VerifyCheck>& verify_registry();
/// Every public operation of every module, as "module.operation".
const std::vector<std::string>& operation_catalog();
/// Catalog entries no registered check claims.
std::vector<std::string> uncovered_operations();

}  // namespace hankelab
