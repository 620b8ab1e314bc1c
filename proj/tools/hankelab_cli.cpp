// Command-line front end. Exit codes: 0 ok, 1 invariant violation, 2 bad
// configuration or input.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "hankelab/hankel.hpp"
#include "hankelab/harness.hpp"
#include "hankelab/journe.hpp"

using namespace hankelab;

namespace {

struct Violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("write failed: " + path);
}

/// Options every subcommand shares.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool freeze = false;

  void attach(CLI::App* app, bool with_freeze) {
    app->add_option("--config", config, "key = value configuration file");
    app->add_option("--seed", seed, "PRNG seed");
    app->add_option("--out", out, "output path (a stem for two-file reports)");
    if (with_freeze) app->add_flag("--freeze", freeze, "record measured constants into the fixture");
  }

  ExperimentConfig load() const {
    ExperimentConfig cfg;
    cfg.frozen = default_frozen_path();
    if (!config.empty()) cfg = load_config(config, cfg);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    cfg.validate();
    return cfg;
  }
};

double num(double v) { return round12(v); }

ojson complex_json(cplx z) { return ojson::array({num(z.real()), num(z.imag())}); }

WaveletCoeffs load_coeffs(const std::string& path) {
  try {
    return coeffs_from_json(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed coefficient file " + path + ": " + e.what());
  }
}

// Either a coefficient JSON document or lines "xi_1 ... xi_n re im" of
// signed frequencies; '#' starts a comment.
struct Symbol {
  GridFunction b;
  std::optional<WaveletCoeffs> coeffs;
};

Symbol load_symbol(const std::string& path, int n, int N) {
  auto text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    auto c = load_coeffs(path);
    if (c.n != n || (c.N != 0 && c.N != N))
      throw ConfigError("symbol file " + path + " has n=" + std::to_string(c.n) + ", N=" + std::to_string(c.N));
    c.N = N;
    WaveletFamily fam(N, n);
    for (const auto& [R, z] : c.map)
      if (!fam.admissible(R)) throw ConfigError("symbol rectangle outside the family at N=" + std::to_string(N));
    return {synthesize(c, fam), c};
  }
  GridFunction f(n, N, GridFunction::Rep::kFrequency);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::vector<double> vals;
    for (double v; ls >> v;) vals.push_back(v);
    if (vals.empty()) continue;
    if (!ls.eof() || static_cast<int>(vals.size()) != n + 2)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(n) + " frequencies and re im");
    std::vector<int> idx(n);
    for (int c = 0; c < n; ++c) {
      int xi = static_cast<int>(vals[c]);
      if (xi != vals[c] || xi <= -N / 2 || xi >= N / 2)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": frequency out of range");
      idx[c] = (xi + N) % N;
    }
    f.values()[f.flat(idx)] += cplx(vals[n], vals[n + 1]);
  }
  return {f.to_space(), std::nullopt};
}

cplx coefficient(const GridFunction& h, std::vector<int> xi) {
  auto H = h.to_frequency();
  for (int& x : xi) x = ((x % H.N()) + H.N()) % H.N();
  return H.values()[H.flat(xi)];
}

/// Random analytic function with frequencies in [1, K]^n.
GridFunction random_analytic(int n, int N, int K, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  GridFunction f(n, N, GridFunction::Rep::kFrequency);
  std::vector<int> idx(n, 1);
  while (true) {
    f.values()[f.flat(idx)] = cplx(g(rng), g(rng));
    int c = 0;
    while (c < n && ++idx[c] > K) idx[c++] = 1;
    if (c == n) break;
  }
  return f.to_space();
}

// ------------------------------------------------------------------ commands

int cmd_experiment(const Common& common, const std::string& kind_name, std::optional<int> trials) {
  auto kind = parse_kind(kind_name);
  auto cfg = common.load();
  if (trials) {
    cfg.trials = *trials;
    cfg.validate();
  }
  auto r = run_experiment(cfg, kind, common.freeze);
  if (cfg.out.empty()) {
    emit_report(r, ReportFormat::kJson, "-");
  } else {
    emit_report(r, ReportFormat::kJson, cfg.out + ".json");
    emit_report(r, ReportFormat::kCsv, cfg.out + ".csv");
  }
  for (const auto& v : r.violations) std::cerr << "violation: " << v << "\n";
  return r.ok() ? 0 : 1;
}

int cmd_journe(const Common& common, const std::string& input, const std::string& delta, const std::string& epsilon,
               int coords) {
  auto cfg = common.load();
  RectCollection coll;
  try {
    coll = parse_collection(read_file(input));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("malformed collection " + input + ": " + e.what());
  }
  if (coll.empty()) throw ConfigError("empty collection in " + input);
  if (coll.n() != coords)
    throw ConfigError("collection has " + std::to_string(coll.n()) + " coordinates, --coords says " +
                      std::to_string(coords));
  JourneConfig jc;
  jc.delta = parse_rational(delta);
  jc.epsilon = parse_rational(epsilon);
  if (jc.delta <= 0 || jc.delta >= 1) throw ConfigError("--delta must lie in (0, 1)");
  if (jc.epsilon <= 0) throw ConfigError("--epsilon must be positive");

  auto res = journe_full(coll, jc);
  auto rng = trial_stream(cfg.seed, 0);
  std::bernoulli_distribution coin(0.5);
  std::vector<RectCollection> subsets = {coll};
  for (int s = 0; s < cfg.subsets; ++s) {
    std::vector<DyadicRectangle> sub;
    for (const auto& R : coll.rects())
      if (coin(rng)) sub.push_back(R);
    if (!sub.empty()) subsets.emplace_back(coll.n(), std::move(sub));
  }
  double fs = few_small_ratio(coll, res.V, jc.epsilon, subsets, 0);

  Rational growth = 1;
  for (int i = 0; i < coll.n(); ++i) growth *= 1 + jc.delta;
  ojson doc;
  doc["schema"] = "v1";
  doc["V_measure"] = to_string(res.V_measure);
  doc["shadow_measure"] = to_string(res.shadow_measure);
  doc["ratio"] = num(to_double(res.V_measure / res.shadow_measure));
  doc["per_rect"] = ojson::array();
  std::vector<std::string> violations;
  for (const auto& e : res.entries) {
    doc["per_rect"].push_back(
        {{"rect", serialize_rect(e.rect)}, {"emb", to_string(e.emb)}, {"iota", e.iota}, {"contained", e.contained}});
    if (!e.contained) violations.push_back("Emb(R) R outside V for " + serialize_rect(e.rect));
  }
  doc["few_small_ratio"] = num(fs);
  if (res.V_measure > growth * res.shadow_measure) violations.push_back("|V| exceeds (1+delta)^n |sh|");
  doc["violations"] = violations;
  write_file(cfg.out, doc.dump(2) + "\n");
  return violations.empty() ? 0 : 1;
}

int cmd_norms(const Common& common, const std::string& path, const std::string& mode, const std::string& strategy) {
  auto cfg = common.load();
  auto c = load_coeffs(path).pruned(0);
  if (c.map.empty()) throw ConfigError("no nonzero coefficients in " + path);
  BmoStrategy s;
  try {
    s = parse_strategy(strategy);
  } catch (const std::invalid_argument&) {
    throw ConfigError("unknown strategy " + strategy);
  }
  if (s == BmoStrategy::kExhaustive && c.map.size() > kExhaustiveLimit)
    throw ConfigError("exhaustive search is limited to " + std::to_string(kExhaustiveLimit) + " coefficients");
  BmoEstimate e;
  if (mode == "bmo") e = bmo_estimate(c, s);
  else if (mode == "bmo-1") e = bmo_minus1(c, s);
  else e = bmo_estimate(c, BmoStrategy::kSingleRect);
  write_file(cfg.out, estimate_to_json(e) + "\n");
  return 0;
}

int cmd_hankel(const Common& common, const std::string& path, int n, int N, const std::string& op) {
  auto cfg = common.load();
  if (n < 1 || N < 8 || (N & (N - 1))) throw ConfigError("--n must be positive and --N a power of two >= 8");
  auto sym = load_symbol(path, n, N);
  const auto& b = sym.b;
  ojson doc;
  doc["schema"] = "v1";
  doc["op"] = op;
  doc["n"] = n;
  doc["N"] = N;
  std::vector<std::string> violations;
  auto guard = [&] {
    if (2 * std::max(2, bandwidth(b)) >= N / 2)
      throw ConfigError("symbol bandwidth " + std::to_string(bandwidth(b)) + " too large for N=" + std::to_string(N) +
                        " (needs 2K < N/2)");
  };

  if (op == "norm") {
    guard();
    auto A = hankel_matrix(b);
    doc["K"] = static_cast<int>(std::lround(std::pow(A.M.cols(), 1.0 / n)));
    doc["rows"] = A.M.rows();
    doc["cols"] = A.M.cols();
    double nrm = operator_norm(A);
    doc["norm"] = num(nrm);
    if (sym.coeffs) {
      auto c = sym.coeffs->pruned(0);
      auto s = c.map.size() <= kExhaustiveLimit ? BmoStrategy::kExhaustive : BmoStrategy::kGreedy;
      auto e = bmo_estimate(c, s);
      doc["bmo"] = num(e.value);
      doc["bmo_strategy"] = to_string(s);
      doc["ratio"] = num(nrm / e.value);
    }
  } else if (op == "commutator-check") {
    if (has_inadmissible_mass(b)) throw ConfigError("commutator-check needs a symbol without mass at 0 or N/2");
    auto nested = commutator_matrix(b, CommutatorMethod::kNested);
    auto psum = commutator_matrix(b, CommutatorMethod::kProjectionSum);
    const double sign = n % 2 ? 1.0 : -1.0;
    double literal = (nested.M - psum.M).cwiseAbs().maxCoeff();
    double signed_delta = (nested.M - sign * psum.M).cwiseAbs().maxCoeff();
    double nn = operator_norm(nested);
    doc["norm_nested"] = num(nn);
    doc["norm_projection_sum"] = num(operator_norm(psum));
    doc["sign"] = sign;
    doc["max_delta_literal"] = num(literal);
    doc["max_delta_signed"] = num(signed_delta);
    if (signed_delta > 1e-12 * std::max(1.0, nn)) violations.push_back("nested and projection-sum forms disagree");
  } else if (op == "duality") {
    int K = N / 4 - 1;
    if (K < 1) throw ConfigError("duality needs N >= 8");
    auto rng = trial_stream(cfg.seed, 0);
    auto f = random_analytic(n, N, K, rng), g = random_analytic(n, N, K, rng);
    auto lhs = duality_pair(b, f, g);
    auto A = hankel_matrix(b, HankelOptions{K});
    Eigen::VectorXcd fv(A.M.cols()), gv(A.M.rows());
    for (Eigen::Index c = 0; c < fv.size(); ++c) fv(c) = coefficient(f, A.domain[c]);
    for (Eigen::Index r = 0; r < gv.size(); ++r) {
      auto xi = A.codomain[r];
      for (int& x : xi) x = -x;
      gv(r) = coefficient(g, xi);
    }
    cplx via = (A.M * fv).cwiseProduct(gv).sum();
    double delta = std::abs(lhs - via);
    doc["pairing"] = complex_json(lhs);
    doc["via_matrix"] = complex_json(via);
    doc["delta"] = num(delta);
    if (delta > 1e-10 * std::max(1.0, std::abs(lhs))) violations.push_back("duality pairing disagrees with the matrix");
  } else if (op == "factorize") {
    if (n == 1) {
      auto io = inner_outer_factor(b);
      auto [a, c] = balanced_factor(b);
      double l1 = b.norm(1.0), prod = a.norm() * c.norm();
      doc["residual"] = num(io.residual);
      doc["zero_order"] = io.zero_order;
      doc["roots"] = io.roots.size();
      doc["l1_norm"] = num(l1);
      doc["factor_norm_product"] = num(prod);
      doc["balance_delta"] = num(std::abs(prod - l1));
      doc["reassembly_delta"] = num((multiply(a, c) - b).norm() / b.norm());
      if (io.residual > 1e-8 || std::abs(prod - l1) > 1e-6 * l1) violations.push_back("factorization residual too large");
    } else {
      if (!sym.coeffs) throw ConfigError("factorize with n >= 2 needs a wavelet coefficient file");
      WaveletFamily fam(N, n);
      auto wf = weak_factorization_witness(*sym.coeffs, fam, b);
      doc["pairs"] = wf.pairs.size();
      doc["frozen_coord"] = wf.frozen_coord;
      doc["tensor_bound"] = num(wf.tensor_bound);
      doc["residual"] = num(wf.residual);
      doc["pairing_error"] = num(wf.pairing_error);
      if (wf.residual > 1e-6 || wf.pairing_error > 1e-10) violations.push_back("weak factorization residual too large");
    }
  } else {
    throw ConfigError("unknown --op " + op);
  }
  doc["violations"] = violations;
  write_file(cfg.out, doc.dump(2) + "\n");
  return violations.empty() ? 0 : 1;
}

int cmd_paraproduct(const Common& common, const std::string& path, const std::string& deltas_path, int max_depth) {
  auto cfg = common.load();
  if (!deltas_path.empty()) cfg = load_config(deltas_path, cfg);
  cfg.validate();
  auto c = load_coeffs(path).pruned(0);
  if (c.map.empty()) throw ConfigError("no nonzero coefficients in " + path);
  if (c.N == 0) c.N = cfg.N;
  WaveletFamily fam(c.N, c.n);
  for (const auto& [R, z] : c.map)
    if (!fam.admissible(R)) throw ConfigError("coefficient rectangle outside the family at N=" + std::to_string(c.N));
  JourneConfig jc;
  jc.delta = cfg.deltas.delta_journe;
  jc.epsilon = cfg.epsilon;
  BoundsOptions opt;
  opt.max_level = max_depth;
  opt.seed = cfg.seed;
  auto rep = bounds_report(c, fam, cfg.deltas, jc, opt);

  std::vector<std::string> violations = rep.violations;
  std::map<std::string, double> worst;
  for (const auto& row : rep.rows)
    if (!row.exact && std::isfinite(row.ratio())) worst[row.name] = std::max(worst[row.name], row.ratio());
  auto frozen = common.freeze ? FrozenConstants{} : load_frozen(cfg.frozen);
  ojson fz = ojson::object();
  FrozenConstants update;
  for (const auto& [name, q] : worst) {
    std::string key = "paraproduct." + name;
    ojson e = {{"measured", num(q)}};
    if (common.freeze) {
      update[key] = Bracket{0, q};
      e["status"] = "frozen";
    } else if (auto it = frozen.find(key); it == frozen.end()) {
      e["status"] = "missing";
    } else {
      bool ok = within_band(q, it->second);
      e["frozen"] = num(it->second.hi);
      e["status"] = ok ? "within" : "outside";
      if (!ok) violations.push_back(key + " above the frozen constant");
    }
    fz[key] = e;
  }
  if (common.freeze) save_frozen(cfg.frozen, update);

  ojson doc;
  doc["schema"] = "v1";
  doc["U"] = rep.uvw.U.size();
  doc["V"] = rep.uvw.Vcoll.size();
  doc["W"] = rep.uvw.Wcoll.size();
  doc["classes"] = rep.sets.size();
  doc["unclassified_pairs"] = rep.unclassified_pairs;
  doc["exact_witness"] = rep.uvw.exact_witness;
  doc["violations"] = violations;
  doc["frozen_constants"] = fz;
  auto csv = rows_to_csv(rep.rows);
  if (cfg.out.empty()) {
    doc["csv"] = csv;
    write_file("-", doc.dump(2) + "\n");
  } else {
    write_file(cfg.out + ".csv", csv);
    write_file(cfg.out + ".json", doc.dump(2) + "\n");
  }
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Product-BMO and Hankel operator experiments"};
  app.require_subcommand(1);

  Common c_verify, c_exp, c_journe, c_norms, c_hankel, c_para;

  auto* verify = app.add_subcommand("verify", "run every module's invariant checks");
  c_verify.attach(verify, false);

  auto* exp = app.add_subcommand("experiment", "seeded experiment sweep");
  c_exp.attach(exp, true);
  std::string kind;
  std::optional<int> trials;
  exp->add_option("--kind", kind, "equivalence | journe | paraproduct | verify")->required();
  exp->add_option("--trials", trials, "override the configured trial count");

  auto* journe = app.add_subcommand("journe", "Journe construction on a rectangle collection");
  c_journe.attach(journe, false);
  std::string input, delta = "1/8", epsilon = "1/2";
  int coords = 2;
  journe->add_option("--input", input, "collection file")->required();
  journe->add_option("--delta", delta, "delta as p/q");
  journe->add_option("--epsilon", epsilon, "epsilon as p/q");
  journe->add_option("--coords", coords, "number of coordinates");

  auto* norms = app.add_subcommand("norms", "BMO-type estimates of wavelet coefficients");
  c_norms.attach(norms, false);
  std::string coeffs, mode = "bmo", strategy = "greedy";
  norms->add_option("--coeffs", coeffs, "coefficient JSON file")->required();
  norms->add_option("--mode", mode)->check(CLI::IsMember({"bmo", "bmo-1", "rect"}));
  norms->add_option("--strategy", strategy)->check(CLI::IsMember({"single", "greedy", "exhaustive"}));

  auto* hankel = app.add_subcommand("hankel", "Hankel operator and commutator computations");
  c_hankel.attach(hankel, false);
  std::string symbol, op = "norm";
  int n = 2, N = 64;
  hankel->add_option("--symbol", symbol, "coefficient JSON or frequency list")->required();
  hankel->add_option("--n", n);
  hankel->add_option("--N", N);
  hankel->add_option("--op", op)->check(CLI::IsMember({"norm", "commutator-check", "duality", "factorize"}));

  auto* para = app.add_subcommand("paraproduct", "paraproduct bounds report");
  c_para.attach(para, true);
  std::string pcoeffs, deltas;
  int max_depth = -1;
  para->add_option("--coeffs", pcoeffs, "coefficient JSON file")->required();
  para->add_option("--deltas", deltas, "key = value file with delta_minus1, delta_journe, delta_2, delta_3");
  para->add_option("--max-depth", max_depth, "finest level of V and W rectangles (-1: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify) return cmd_experiment(c_verify, "verify", std::nullopt);
    if (*exp) return cmd_experiment(c_exp, kind, trials);
    if (*journe) return cmd_journe(c_journe, input, delta, epsilon, coords);
    if (*norms) return cmd_norms(c_norms, coeffs, mode, strategy);
    if (*hankel) return cmd_hankel(c_hankel, symbol, n, N, op);
    if (*para) return cmd_paraproduct(c_para, pcoeffs, deltas, max_depth);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
