#include "hankelab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "hankelab/hankel.hpp"
#include "hankelab/journe.hpp"

#ifndef HANKELAB_FROZEN_PATH
#define HANKELAB_FROZEN_PATH "data/frozen_constants.json"
#endif

namespace hankelab {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config: " + std::string(key) + " expects an integer, got '" + std::string(v) + "'");
  return out;
}

Rational parse_q(std::string_view key, std::string_view v) {
  try {
    return parse_rational(v);
  } catch (const std::exception&) {
    throw ConfigError("config: " + std::string(key) + " expects a rational p/q, got '" + std::string(v) + "'");
  }
}

bool open_unit(const Rational& q) { return q > 0 && q < 1; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Runs fn(0..count-1) on worker threads; the first exception (by index) is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int log2_exact(int N) {
  int l = 0;
  while ((1 << l) < N) ++l;
  return l;
}

// Frozen-constant bookkeeping shared by the experiment kinds.
struct FrozenCheck {
  const ExperimentConfig& cfg;
  bool freeze;
  FrozenConstants loaded;
  FrozenConstants measured;
  ojson doc = ojson::object();

  FrozenCheck(const ExperimentConfig& c, bool f) : cfg(c), freeze(f) {
    if (!freeze && !cfg.frozen.empty()) loaded = load_frozen(cfg.frozen);
  }

  /// Two-sided when `two_sided`, otherwise only the maximum is constrained.
  void check(const std::string& key, double lo, double hi, bool two_sided, std::vector<std::string>& violations) {
    Bracket m{two_sided ? lo : 0.0, hi};
    measured[key] = m;
    ojson e;
    e["measured_lo"] = round12(lo);
    e["measured_hi"] = round12(hi);
    if (freeze) {
      e["status"] = "frozen";
    } else if (cfg.frozen.empty()) {
      e["status"] = "unchecked";
    } else if (auto it = loaded.find(key); it == loaded.end()) {
      e["status"] = "missing";
      violations.push_back("no frozen constant for " + key + " (run with --freeze)");
    } else {
      const Bracket& b = it->second;
      bool ok = within_band(hi, b) && (!two_sided || within_band(lo, b));
      e["lo"] = round12(b.lo);
      e["hi"] = round12(b.hi);
      e["status"] = ok ? "within" : "outside";
      if (!ok)
        violations.push_back(key + ": measured [" + fmt(lo) + ", " + fmt(hi) + "] outside frozen [" + fmt(b.lo) +
                             ", " + fmt(b.hi) + "] with 20% band");
    }
    doc[key] = e;
  }

  void finish() {
    if (freeze) {
      if (cfg.frozen.empty()) throw ConfigError("--freeze needs a fixture path (config key 'frozen')");
      save_frozen(cfg.frozen, measured);
    }
  }
};

Report start_report(const ExperimentConfig& cfg, ExperimentKind kind) {
  Report r = empty_report(kind);
  r.json["config"] = cfg.to_json();
  return r;
}

void finish_report(Report& r, const FrozenCheck* fc) {
  if (fc) r.json["frozen"] = fc->doc;
  r.json["violations"] = r.violations;
}

// ---------------------------------------------------------------- equivalence

struct EquivalenceTrial {
  std::size_t support = 0;
  double hankel = 0, single = 0, greedy = 0, exhaustive = 0, minus1 = 0, minus1_exhaustive = 0;
  std::vector<std::string> violations;
};

bool leq(double a, double b) { return a <= b * (1 + 1e-12) + 1e-15; }

Report run_equivalence(const ExperimentConfig& cfg, bool freeze) {
  if (cfg.support > static_cast<int>(kExhaustiveLimit))
    throw ConfigError("equivalence: support must be at most " + std::to_string(kExhaustiveLimit));
  WaveletFamily fam(cfg.N, cfg.n);
  // Hankel matrices need 2K < N/2: levels at most log2(N) - 3.
  int max_level = fam.levels() - 2;
  if (max_level < 0) throw ConfigError("equivalence: N too small for the Hankel guard band");
  std::vector<EquivalenceTrial> trials(cfg.trials);
  parallel_for(trials.size(), cfg.threads, [&](std::size_t t) {
    auto& out = trials[t];
    auto c = generate_coeffs(cfg, t, max_level);
    out.support = c.map.size();
    auto b = synthesize(c, fam);
    out.hankel = operator_norm(hankel_matrix(b));
    out.single = bmo_estimate(c, BmoStrategy::kSingleRect).value;
    out.greedy = bmo_estimate(c, BmoStrategy::kGreedy).value;
    out.exhaustive = bmo_estimate(c, BmoStrategy::kExhaustive).value;
    if (!leq(out.single, out.greedy)) out.violations.push_back("single-rect exceeds greedy");
    if (!leq(out.greedy, out.exhaustive)) out.violations.push_back("greedy exceeds exhaustive");
    if (cfg.n >= 2) {
      out.minus1 = bmo_minus1(c, BmoStrategy::kGreedy).value;
      out.minus1_exhaustive = bmo_minus1(c, BmoStrategy::kExhaustive).value;
      if (!leq(out.minus1, out.exhaustive)) out.violations.push_back("BMO_-1 (greedy) exceeds BMO");
      if (!leq(out.minus1_exhaustive, out.exhaustive)) out.violations.push_back("BMO_-1 (exhaustive) exceeds BMO");
    }
  });

  Report r = start_report(cfg, ExperimentKind::kEquivalence);
  FrozenCheck fc(cfg, freeze);
  double lo = INFINITY, hi = 0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& tr = trials[t];
    double ratio = tr.hankel / tr.exhaustive;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ojson j;
    j["trial"] = t;
    j["support"] = tr.support;
    j["hankel_norm"] = round12(tr.hankel);
    j["bmo_single"] = round12(tr.single);
    j["bmo_greedy"] = round12(tr.greedy);
    j["bmo_exhaustive"] = round12(tr.exhaustive);
    j["bmo_minus1"] = round12(tr.minus1);
    j["bmo_minus1_exhaustive"] = round12(tr.minus1_exhaustive);
    j["ratio"] = round12(ratio);
    j["violations"] = tr.violations;
    r.json["trials"].push_back(j);
    r.csv_rows.push_back({std::to_string(t), std::to_string(tr.support), fmt(tr.hankel), fmt(tr.single),
                          fmt(tr.greedy), fmt(tr.exhaustive), fmt(tr.minus1), fmt(tr.minus1_exhaustive),
                          fmt(ratio)});
    for (const auto& v : tr.violations) r.violations.push_back("trial " + std::to_string(t) + ": " + v);
  }
  if (!trials.empty()) {
    r.json["summary"] = {{"ratio_min", round12(lo)}, {"ratio_max", round12(hi)}};
    fc.check("equivalence.n" + std::to_string(cfg.n) + ".N" + std::to_string(cfg.N), lo, hi, true, r.violations);
  }
  fc.finish();
  finish_report(r, &fc);
  return r;
}

// --------------------------------------------------------------------- journe

struct JourneTrial {
  std::size_t rects = 0;
  Rational shadow, V_enlarge, V_journe;
  double K = 0, few_small = 0;
  std::size_t containment_failures = 0;
  std::vector<std::string> violations;
};

Report run_journe(const ExperimentConfig& cfg, bool freeze) {
  JourneConfig jc;
  jc.delta = cfg.delta;
  jc.epsilon = cfg.epsilon;
  const double dl = to_double(cfg.delta) * std::abs(std::log2(to_double(cfg.delta)));
  Rational growth = 1;
  for (int i = 0; i < cfg.n; ++i) growth *= 1 + cfg.delta;

  std::vector<JourneTrial> trials(cfg.trials);
  parallel_for(trials.size(), cfg.threads, [&](std::size_t t) {
    auto& out = trials[t];
    auto rng = trial_stream(cfg.seed, t);
    std::vector<DyadicRectangle> rects;
    for (int i = 0; i < cfg.collection_size; ++i) rects.push_back(random_rect(cfg.n, cfg.depth, rng));
    RectCollection coll(cfg.n, rects);
    out.rects = coll.size();
    out.shadow = coll.shadow().measure();

    OpenSet V = enlarge(coll, jc);
    out.V_enlarge = V.measure();
    if (!V.contains(coll.shadow())) out.violations.push_back("enlarged set misses the shadow");
    out.K = (to_double(out.V_enlarge / out.shadow) - 1) / dl;

    std::vector<RectCollection> subsets;
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<std::size_t> pick(0, coll.size() - 1);
    for (int s = 0; s < cfg.subsets; ++s) {
      std::vector<DyadicRectangle> sub;
      for (const auto& R : coll.rects())
        if (coin(rng)) sub.push_back(R);
      if (sub.empty()) sub.push_back(coll.rects()[pick(rng)]);
      subsets.emplace_back(cfg.n, std::move(sub));
    }
    out.few_small = few_small_ratio(coll, V, cfg.epsilon, subsets, 0);

    auto res = journe_full(coll, jc);
    out.V_journe = res.V_measure;
    for (const auto& e : res.entries)
      if (!e.contained) ++out.containment_failures;
    if (out.containment_failures)
      out.violations.push_back(std::to_string(out.containment_failures) + " rectangles with Emb(R) R outside V");
    if (res.V_measure > growth * res.shadow_measure) out.violations.push_back("|V| exceeds (1+delta)^n |sh|");
  });

  Report r = start_report(cfg, ExperimentKind::kJourne);
  FrozenCheck fc(cfg, freeze);
  double Kmax = 0, Cmax = 0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& tr = trials[t];
    Kmax = std::max(Kmax, tr.K);
    Cmax = std::max(Cmax, tr.few_small);
    ojson j;
    j["trial"] = t;
    j["rects"] = tr.rects;
    j["shadow_measure"] = to_string(tr.shadow);
    j["V_enlarge"] = to_string(tr.V_enlarge);
    j["V_journe"] = to_string(tr.V_journe);
    j["K"] = round12(tr.K);
    j["few_small_ratio"] = round12(tr.few_small);
    j["containment_failures"] = tr.containment_failures;
    j["violations"] = tr.violations;
    r.json["trials"].push_back(j);
    r.csv_rows.push_back({std::to_string(t), std::to_string(cfg.n), to_string(cfg.delta), std::to_string(tr.rects),
                          to_string(tr.shadow), to_string(tr.V_enlarge), to_string(tr.V_journe), fmt(tr.K),
                          fmt(tr.few_small), std::to_string(tr.containment_failures)});
    for (const auto& v : tr.violations) r.violations.push_back("trial " + std::to_string(t) + ": " + v);
  }
  if (!trials.empty()) {
    r.json["summary"] = {{"K_max", round12(Kmax)}, {"few_small_max", round12(Cmax)}};
    std::string tag = ".n" + std::to_string(cfg.n) + ".delta" + to_string(cfg.delta);
    fc.check("journe.K" + tag, 0, Kmax, false, r.violations);
    fc.check("journe.few_small" + tag + ".eps" + to_string(cfg.epsilon), 0, Cmax, false, r.violations);
  }
  fc.finish();
  finish_report(r, &fc);
  return r;
}

// --------------------------------------------------------------- paraproduct

Report run_paraproduct(const ExperimentConfig& cfg, bool freeze) {
  WaveletFamily fam(cfg.N, cfg.n);
  JourneConfig jc;
  jc.delta = cfg.deltas.delta_journe;
  jc.epsilon = cfg.epsilon;
  std::vector<BoundsReport> reps(cfg.trials);
  parallel_for(reps.size(), cfg.threads, [&](std::size_t t) {
    BoundsOptions opt;
    opt.seed = cfg.seed ^ t;
    reps[t] = bounds_report(generate_coeffs(cfg, t), fam, cfg.deltas, jc, opt);
  });

  Report r = start_report(cfg, ExperimentKind::kParaproduct);
  FrozenCheck fc(cfg, freeze);
  std::map<std::string, double> worst;
  std::map<std::string, std::size_t> infinite;
  for (std::size_t t = 0; t < reps.size(); ++t) {
    const auto& rep = reps[t];
    std::size_t pairs = 0;
    for (const auto& ps : rep.sets) pairs += ps.pairs.size();
    ojson j;
    j["trial"] = t;
    j["U"] = rep.uvw.U.size();
    j["V"] = rep.uvw.Vcoll.size();
    j["W"] = rep.uvw.Wcoll.size();
    j["classes"] = rep.sets.size();
    j["pairs"] = pairs;
    j["unclassified_pairs"] = rep.unclassified_pairs;
    j["exact_witness"] = rep.uvw.exact_witness;
    j["rows"] = rep.rows.size();
    j["violations"] = rep.violations;
    r.json["trials"].push_back(j);
    for (const auto& row : rep.rows) {
      r.csv_rows.push_back({std::to_string(t), row.klass, row.name, fmt(row.lhs), fmt(row.rhs), fmt(row.ratio()),
                            row.exact ? "1" : "0", row.holds ? "1" : "0"});
      double q = row.ratio();
      if (row.exact) continue;
      if (std::isfinite(q)) worst[row.name] = std::max(worst[row.name], q);
      else ++infinite[row.name];
    }
    // every (R', R) pair of W x U is classified or counted as unrelated
    if (pairs + rep.unclassified_pairs != rep.uvw.Wcoll.size() * rep.uvw.U.size())
      r.violations.push_back("trial " + std::to_string(t) + ": pair recount mismatch");
    for (const auto& v : rep.violations) r.violations.push_back("trial " + std::to_string(t) + ": " + v);
  }
  ojson max_ratio = ojson::object(), unbounded = ojson::object();
  for (const auto& [name, q] : worst) {
    max_ratio[name] = round12(q);
    fc.check("paraproduct." + name, 0, q, false, r.violations);
  }
  for (const auto& [name, count] : infinite) unbounded[name] = count;
  r.json["summary"] = {{"max_ratio", max_ratio}, {"infinite_ratio_rows", unbounded}};
  fc.finish();
  finish_report(r, &fc);
  return r;
}

// --------------------------------------------------------------------- verify

Report run_verify(const ExperimentConfig& cfg) {
  const auto& checks = verify_registry();
  std::vector<std::string> results(checks.size());
  parallel_for(checks.size(), cfg.threads, [&](std::size_t i) {
    try {
      results[i] = checks[i].run();
    } catch (const std::exception& e) {
      results[i] = std::string("exception: ") + e.what();
    }
  });
  Report r = start_report(cfg, ExperimentKind::kVerify);
  for (std::size_t i = 0; i < checks.size(); ++i) {
    std::string ops;
    for (const auto& op : checks[i].ops) ops += (ops.empty() ? "" : " ") + op;
    bool ok = results[i].empty();
    r.json["trials"].push_back({{"check", checks[i].name}, {"ops", checks[i].ops}, {"ok", ok}, {"message", results[i]}});
    r.csv_rows.push_back({checks[i].name, ops, ok ? "pass" : "fail", results[i]});
    if (!ok) r.violations.push_back(checks[i].name + ": " + results[i]);
  }
  auto missing = uncovered_operations();
  for (const auto& op : missing) r.violations.push_back("operation without a verify check: " + op);
  r.json["summary"] = {{"checks", checks.size()},
                       {"operations", operation_catalog().size()},
                       {"uncovered", missing}};
  finish_report(r, nullptr);
  return r;
}

}  // namespace

// --------------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (n < 1 || n > 4) throw ConfigError("config: n must lie in [1, 4]");
  if (N < 8 || (N & (N - 1)) != 0) throw ConfigError("config: N must be a power of two, at least 8");
  if (depth < 0 || depth > 16) throw ConfigError("config: depth must lie in [0, 16]");
  if (trials < 0) throw ConfigError("config: trials must be nonnegative");
  if (support < 1) throw ConfigError("config: support must be positive");
  if (collection_size < 1) throw ConfigError("config: collection_size must be positive");
  if (subsets < 1) throw ConfigError("config: subsets must be positive");
  if (!open_unit(delta)) throw ConfigError("config: delta must lie in (0, 1)");
  if (epsilon <= 0) throw ConfigError("config: epsilon must be positive");
  if (threads < 0) throw ConfigError("config: threads must be nonnegative");
  try {
    deltas.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ojson ExperimentConfig::to_json() const {
  ojson j;
  j["n"] = n;
  j["N"] = N;
  j["depth"] = depth;
  j["seed"] = seed;
  j["trials"] = trials;
  j["support"] = support;
  j["collection_size"] = collection_size;
  j["subsets"] = subsets;
  j["delta"] = to_string(delta);
  j["epsilon"] = to_string(epsilon);
  j["delta_minus1"] = to_string(deltas.delta_minus1);
  j["delta_journe"] = to_string(deltas.delta_journe);
  j["delta_2"] = to_string(deltas.delta_2);
  j["delta_3"] = to_string(deltas.delta_3);
  j["strategy"] = hankelab::to_string(strategy);
  j["scale"] = scale == CoeffScale::kFlat ? "flat" : "volume";
  return j;
}

std::string default_frozen_path() { return HANKELAB_FROZEN_PATH; }

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "n") cfg.n = parse_int<int>(key, value);
  else if (key == "N") cfg.N = parse_int<int>(key, value);
  else if (key == "depth") cfg.depth = parse_int<int>(key, value);
  else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "trials") cfg.trials = parse_int<int>(key, value);
  else if (key == "support") cfg.support = parse_int<int>(key, value);
  else if (key == "collection_size") cfg.collection_size = parse_int<int>(key, value);
  else if (key == "subsets") cfg.subsets = parse_int<int>(key, value);
  else if (key == "threads") cfg.threads = parse_int<int>(key, value);
  else if (key == "delta") cfg.delta = parse_q(key, value);
  else if (key == "epsilon") cfg.epsilon = parse_q(key, value);
  else if (key == "delta_minus1") cfg.deltas.delta_minus1 = parse_q(key, value);
  else if (key == "delta_journe") cfg.deltas.delta_journe = parse_q(key, value);
  else if (key == "delta_2") cfg.deltas.delta_2 = parse_q(key, value);
  else if (key == "delta_3") cfg.deltas.delta_3 = parse_q(key, value);
  else if (key == "frozen") cfg.frozen = std::string(value);
  else if (key == "out") cfg.out = std::string(value);
  else if (key == "strategy") {
    try {
      cfg.strategy = parse_strategy(value);
    } catch (const std::exception&) {
      throw ConfigError("config: unknown strategy '" + std::string(value) + "'");
    }
  } else if (key == "scale") {
    if (value == "flat") cfg.scale = CoeffScale::kFlat;
    else if (value == "volume") cfg.scale = CoeffScale::kVolume;
    else throw ConfigError("config: scale must be flat or volume");
  } else {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    auto s = trim(line);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(base, trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

// ------------------------------------------------------------------ generators

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial) {
  std::uint64_t state = seed ^ (trial * 0x9e3779b97f4a7c15ULL);
  std::seed_seq seq{splitmix64(state), splitmix64(state), splitmix64(state), splitmix64(state)};
  return std::mt19937_64(seq);
}

DyadicRectangle random_rect(int n, int depth, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> level(0, depth);
  std::bernoulli_distribution child(0.5);
  std::vector<int> levels(n);
  std::vector<std::int64_t> offsets(n, 0);
  for (int c = 0; c < n; ++c) {
    levels[c] = level(rng);
    for (int s = 0; s < levels[c]; ++s) offsets[c] = 2 * offsets[c] + (child(rng) ? 1 : 0);
  }
  return plain_rect(levels, offsets);
}

RectCollection generate_collection(const ExperimentConfig& cfg, std::uint64_t trial) {
  auto rng = trial_stream(cfg.seed, trial);
  std::vector<DyadicRectangle> rects;
  for (int i = 0; i < cfg.collection_size; ++i) rects.push_back(random_rect(cfg.n, cfg.depth, rng));
  return RectCollection(cfg.n, std::move(rects));
}

WaveletCoeffs generate_coeffs(const ExperimentConfig& cfg, std::uint64_t trial, int max_level) {
  int top = log2_exact(cfg.N) - 2;  // finest admissible level
  if (max_level < 0 || max_level > top) max_level = top;
  int L = std::min(cfg.depth, max_level);
  // distinct admissible rectangles available at levels <= L
  double available = std::pow(std::ldexp(1.0, L + 1) - 1, cfg.n);
  if (available < cfg.support)
    throw ConfigError("config: support " + std::to_string(cfg.support) + " exceeds the " +
                      std::to_string(static_cast<long long>(available)) + " rectangles at depth " + std::to_string(L));
  auto rng = trial_stream(cfg.seed, trial);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  WaveletCoeffs c{cfg.n, cfg.N, {}};
  while (static_cast<int>(c.map.size()) < cfg.support) {
    auto R = random_rect(cfg.n, L, rng);
    cplx z(gauss(rng), gauss(rng));
    if (c.map.count(R)) continue;
    if (cfg.scale == CoeffScale::kVolume) z *= std::sqrt(to_double(R.volume()));
    c.map.emplace(std::move(R), z);
  }
  return c;
}

// --------------------------------------------------------------------- kinds

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kEquivalence: return "equivalence";
    case ExperimentKind::kJourne: return "journe";
    case ExperimentKind::kParaproduct: return "paraproduct";
    case ExperimentKind::kVerify: return "verify";
  }
  return "?";
}

ExperimentKind parse_kind(std::string_view s) {
  for (auto k : {ExperimentKind::kEquivalence, ExperimentKind::kJourne, ExperimentKind::kParaproduct,
                 ExperimentKind::kVerify})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

// -------------------------------------------------------------------- frozen

FrozenConstants load_frozen(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {};
  FrozenConstants out;
  try {
    auto j = nlohmann::json::parse(in);
    for (const auto& [key, v] : j.at("constants").items()) out[key] = Bracket{v.at("lo"), v.at("hi")};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed frozen-constant file " + path + ": " + e.what());
  }
  return out;
}

void save_frozen(const std::string& path, const FrozenConstants& update) {
  auto all = load_frozen(path);
  for (const auto& [k, b] : update) all[k] = b;
  nlohmann::json j;
  j["schema"] = "v1";
  j["band"] = kFrozenBand;
  j["constants"] = nlohmann::json::object();
  for (const auto& [k, b] : all) j["constants"][k] = {{"lo", round12(b.lo)}, {"hi", round12(b.hi)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write frozen-constant file " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool within_band(double v, const Bracket& b, double band) {
  return v <= b.hi * (1 + band) && v >= b.lo / (1 + band);
}

// -------------------------------------------------------------------- reports

double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt(v).c_str(), nullptr);
}

std::vector<std::string> csv_columns(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kEquivalence:
      return {"trial", "support", "hankel_norm", "bmo_single", "bmo_greedy", "bmo_exhaustive", "bmo_minus1",
              "bmo_minus1_exhaustive", "ratio"};
    case ExperimentKind::kJourne:
      return {"trial", "n", "delta", "rects", "shadow_measure", "V_enlarge", "V_journe", "K", "few_small_ratio",
              "containment_failures"};
    case ExperimentKind::kParaproduct:
      return {"trial", "class", "name", "lhs", "rhs", "ratio", "exact", "holds"};
    case ExperimentKind::kVerify:
      return {"check", "ops", "status", "message"};
  }
  return {};
}

Report empty_report(ExperimentKind k) {
  Report r;
  r.kind = k;
  r.csv_header = csv_columns(k);
  r.json["schema"] = "v1";
  r.json["kind"] = to_string(k);
  r.json["config"] = ojson::object();
  r.json["trials"] = ojson::array();
  r.json["summary"] = ojson::object();
  r.json["frozen"] = ojson::object();
  r.json["violations"] = ojson::array();
  return r;
}

Report run_experiment(const ExperimentConfig& cfg, ExperimentKind kind, bool freeze) {
  cfg.validate();
  switch (kind) {
    case ExperimentKind::kEquivalence: return run_equivalence(cfg, freeze);
    case ExperimentKind::kJourne: return run_journe(cfg, freeze);
    case ExperimentKind::kParaproduct: return run_paraproduct(cfg, freeze);
    case ExperimentKind::kVerify: return run_verify(cfg);
  }
  throw ConfigError("unknown experiment kind");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string render_report(const Report& r, ReportFormat f) {
  if (f == ReportFormat::kJson) return r.json.dump(2) + "\n";
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
    out += "\n";
  };
  line(r.csv_header);
  for (const auto& row : r.csv_rows) line(row);
  return out;
}

void emit_report(const Report& r, ReportFormat f, const std::string& path) {
  auto text = render_report(r, f);
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report file " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hankelab
