#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "cliffordlab/commutant.hpp"
#include "cliffordlab/io.hpp"
#include "cliffordlab/norms.hpp"
#include "cliffordlab/testers.hpp"
#include "cliffordlab/verify.hpp"
#include "hash.hpp"

using namespace clab;
using io::ojson;

namespace {

enum Exit { kPass = 0, kInvariantFailure = 1, kUsage = 2, kBudget = 3 };

struct Common {
  std::string input;
  std::string output;
  std::optional<u64> seed;
  std::size_t jobs = 1;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Run {
 public:
  Run(std::string command, const Common& c) : common_(c), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.timestamps["started"] = utc_now();
    if (c.seed) manifest_.seed = *c.seed;
  }

  io::json load_input() {
    if (common_.input.empty()) throw InvalidInput(manifest_.command + ": --input is required");
    const std::string text = io::read_file(common_.input);
    manifest_.input_hash = tool::git_blob_hash(text);
    return io::parse_json_text(text, common_.input);
  }

  ojson& config() { return manifest_.config; }
  ojson& results() { return manifest_.results; }

  void emit() {
    manifest_.timestamps["finished"] = utc_now();
    manifest_.timestamps["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write(io::dump(io::to_json(manifest_)), common_.output);
  }

  static void write(const std::string& text, const std::string& path) {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << text;
  }

 private:
  const Common& common_;
  io::RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

u64 require_seed(const Common& c, const char* cmd) {
  if (!c.seed) throw InvalidInput(std::string(cmd) + ": --seed is required for stochastic runs");
  return *c.seed;
}

void add_common(CLI::App* app, Common& c, bool with_input = true) {
  if (with_input) app->add_option("--input", c.input, "input JSON file");
  app->add_option("--output", c.output, "write the report here instead of stdout");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------

int cmd_test4(const Common& c, std::size_t shots, std::optional<double> epsilon) {
  Run run("test4", c);
  const auto u = io::parse_unitary(run.load_input());
  TesterConfig cfg;
  cfg.seed = require_seed(c, "test4");
  cfg.shots = shots;
  cfg.jobs = c.jobs;
  if (epsilon) cfg.epsilon = *epsilon;
  run.config() = {{"n", u.n}, {"shots", shots}, {"epsilon", epsilon ? ojson(*epsilon) : ojson(nullptr)}};
  const auto rep = epsilon ? run_4query_repeated(u, *epsilon, cfg) : run_4query(u, cfg);
  run.results()["report"] = io::to_json(rep);
  run.emit();
  return kPass;
}

int cmd_sctest(const Common& c, double epsilon, std::optional<double> p_floor, double failure) {
  Run run("sctest", c);
  const auto u = io::parse_unitary(run.load_input());
  TesterConfig cfg;
  cfg.seed = require_seed(c, "sctest");
  cfg.epsilon = epsilon;
  cfg.p_floor = p_floor;
  const auto plan = single_copy_plan(u.n, cfg);
  run.config() = {{"n", u.n},
                  {"epsilon", epsilon},
                  {"p_floor", p_floor ? ojson(*p_floor) : ojson(nullptr)},
                  {"oracle_failure", failure}};
  OracleStabilizerTester oracle(failure);
  const auto rep = run_aux_free_single_copy(u, cfg, oracle);
  run.results()["plan"] = {{"trials", plan.trials},
                           {"delta", plan.delta},
                           {"copies_per_trial", plan.copies_per_trial},
                           {"total_queries", plan.total_queries()}};
  run.results()["report"] = io::to_json(rep);
  run.emit();
  return kPass;
}

int cmd_pacc(const Common& c, bool exact, std::size_t shots) {
  Run run("pacc", c);
  const auto u = io::parse_unitary(run.load_input());
  run.config() = {{"n", u.n}, {"exact", exact}, {"shots", exact ? ojson(nullptr) : ojson(shots)}};
  auto& r = run.results();
  if (exact) {
    r["pacc"] = pacc_exact(u);
    r["pacc_pi4"] = u.n <= 2 ? ojson(pacc_pi4(u)) : ojson(nullptr);
    r["pacc_gnw"] = pacc_gnw_choi(u);
    if (u.n <= 2) {
      const double fs = f_stab(choi_state(u));
      const double fc = f_cliff(u);
      r["f_cliff"] = fc;
      r["f_stab_choi"] = fs;
      r["upper_bound"] = (1.0 + fs) / 2.0;
      r["lower_bound"] = std::pow(fc, 4);
    }
  } else {
    TesterConfig cfg;
    cfg.seed = require_seed(c, "pacc");
    cfg.shots = shots;
    cfg.jobs = c.jobs;
    cfg.keep_log = false;
    const auto rep = run_4query(u, cfg);
    r["pacc_estimate"] = rep.rate;
    r["shots"] = rep.shots_used;
    r["pacc"] = *rep.exact;
  }
  run.emit();
  return kPass;
}

int cmd_discriminate(const Common& c, const std::string& strategy_path, std::optional<std::size_t> t) {
  Common cc = c;
  cc.input = strategy_path.empty() ? c.input : strategy_path;
  Run run("discriminate", cc);
  const auto st = io::parse_strategy(run.load_input());
  if (t && *t != st.rounds.size()) {
    throw InvalidInput("discriminate: --t " + std::to_string(*t) + " but the strategy has " +
                       std::to_string(st.rounds.size()) + " rounds");
  }
  run.config() = {{"t", st.rounds.size()}, {"n", st.n}};
  const auto cl = leaf_distribution(st, ChannelEnsemble::clifford, LeafMethod::group_average);
  const auto ce = leaf_distribution(st, ChannelEnsemble::clifford, LeafMethod::commutant_expansion);
  const auto dep = leaf_distribution(st, ChannelEnsemble::depolarizing);
  double agree = 0.0;
  for (std::size_t i = 0; i < cl.size(); ++i) agree = std::max(agree, std::abs(cl[i] - ce[i]));
  auto& r = run.results();
  r["clifford"] = cl;
  r["clifford_commutant_expansion"] = ce;
  r["depolarizing"] = dep;
  r["tv_distance"] = tv_distance(cl, dep);
  r["method_max_difference"] = agree;
  run.emit();
  return agree <= 1e-8 ? kPass : kInvariantFailure;
}

int cmd_norms(const Common& c) {
  Run run("norms", c);
  const auto j = run.load_input();
  auto& r = run.results();
  if (j.contains("state")) {
    const auto psi = io::parse_state(j);
    run.config() = {{"n", psi.n}, {"kind", "state"}};
    const double u3 = gowers_Uk(psi, 3).power;
    const double coll = static_cast<double>(pow2(psi.n)) * char_dist_state(psi).power_sum(2);
    r["u1"] = gowers_Uk(psi, 1).value;
    r["u2"] = gowers_Uk(psi, 2).value;
    r["u3"] = gowers_Uk(psi, 3).value;
    r["u3_collision_residual"] = std::abs(u3 - coll);
  } else {
    const auto u = io::parse_unitary(j);
    run.config() = {{"n", u.n}, {"kind", "unitary"}};
    const auto p = char_dist_unitary(u);
    double diag = 0.0;
    for (u64 x = 0; x < pow2(2 * u.n); ++x) diag += p.at(x, x);
    const auto q3 = Qk_norm(u, 3);
    r["q1"] = Qk_norm(u, 1).value;
    r["q2"] = Qk_norm(u, 2).value;
    r["q3"] = q3.value;
    r["q2_diagonal_residual"] = std::abs(Qk_norm(u, 2).power - diag);
    r["q3_collision_residual"] = std::abs(q3.power - static_cast<double>(pow2(2 * u.n)) * p.power_sum(2));
    if (2 * u.n <= 6) r["q3_choi_u3_residual"] = std::abs(q3.value - gowers_Uk(choi_state(u), 3).value);
  }
  run.emit();
  return kPass;
}

int cmd_chardist(const Common& c, bool choi) {
  Run run("chardist", c);
  const auto j = run.load_input();
  CharDist d;
  if (j.contains("state")) {
    const auto psi = io::parse_state(j);
    d = char_dist_state(psi);
    run.config() = {{"n", psi.n}, {"kind", "state"}};
  } else {
    const auto u = io::parse_unitary(j);
    d = choi ? char_dist_state(choi_state(u)) : char_dist_unitary(u);
    run.config() = {{"n", u.n}, {"kind", choi ? "choi_state" : "unitary"}};
  }
  run.results()["char_dist"] = io::to_json(d);
  run.results()["invariant_violation"] = d.invariant_violation();
  run.emit();
  return kPass;
}

int cmd_commutant_enum(const Common& c, std::size_t t, bool check_all, const std::string& family) {
  Run run("commutant enum", c);
  if (family != "sigma" && family != "sd") throw InvalidInput("commutant enum: --family must be sigma or sd");
  run.config() = {{"t", t}, {"family", family}, {"check_all", check_all}};
  std::vector<SelfDualCode> codes;
  if (family == "sigma") {
    for (const auto& l : enumerate_sigma_tt(t)) codes.push_back(l.code);
  } else {
    codes = enumerate_sd(t);
  }
  bool all_ok = true;
  ojson per_code = ojson::array();
  for (const auto& d : codes) {
    const auto res = unitary_partial_transpose(d);
    ojson e;
    e["code"] = d.generator().to_strings();
    ojson s = ojson::array();
    for (std::size_t i = 0; i < t; ++i) {
      if ((res.transposed >> i) & 1U) s.push_back(i);
    }
    e["S"] = s;
    e["O"] = res.orthogonal.to_strings();
    if (check_all) {
      const auto moved = partial_transpose_code(d, res.transposed);
      ojson inv;
      inv["self_dual"] = dual(d.space, Form::standard) == d.space;
      inv["contains_ones"] = d.space.contains(BitVec::ones(2 * t));
      inv["totally_isotropic"] = is_totally_isotropic(d.space);
      const auto [ra, rb] = block_ranks(d);
      inv["equal_block_ranks"] = ra == rb;
      inv["pair_ranks"] = min_pair_rank_slack(d) >= 0;
      inv["transpose_full_rank"] = rank(moved.left()) == t;
      inv["transpose_orthogonal"] = is_orthogonal(res.orthogonal) && moved == graph_code(res.orthogonal);
      if (t <= kMaxCopiesDense) {
        const Mat r = R_operator(d, 1);
        bool commutes = true;
        for (const auto& cm : clifford_matrices(1)) {
          const Mat ct = kron_power(cm, t);
          commutes = commutes && max_abs_diff(r * ct, ct * r) < 1e-12;
        }
        inv["commutes_with_cliffords"] = commutes;
        inv["transpose_unitary"] = is_unitary(partial_transpose_dense(r, res.transposed, 1), 1e-10);
      }
      // Stochastic-Lagrangian facts only apply to the sigma family.
      if (family == "sd") {
        inv.erase("contains_ones");
        inv.erase("totally_isotropic");
        inv.erase("commutes_with_cliffords");
      }
      bool ok = true;
      for (const auto& [k, v] : inv.items()) ok = ok && v.get<bool>();
      e["invariants"] = inv;
      all_ok = all_ok && ok;
    }
    per_code.push_back(e);
  }
  auto& r = run.results();
  r["count"] = codes.size();
  r["invariants_passed"] = check_all ? ojson(all_ok) : ojson(nullptr);
  r["per_code"] = per_code;
  run.emit();
  return all_ok ? kPass : kInvariantFailure;
}

int cmd_verify(const Common& c, const std::string& suite, std::optional<std::size_t> n, std::optional<int> seeds) {
  Run run("verify", c);
  VerifyOptions opt;
  opt.seed = c.seed.value_or(0);
  opt.n = n;
  opt.seeds = seeds;
  opt.jobs = c.jobs;
  run.config() = {{"suite", suite},
                  {"n", n ? ojson(*n) : ojson(nullptr)},
                  {"seeds", seeds ? ojson(*seeds) : ojson(nullptr)},
                  {"seed", opt.seed}};
  const auto rep = run_verify(suite, opt, [](const CheckResult& r) {
    std::cerr << (r.passed ? "PASS " : (r.asserted ? "FAIL " : "INFO ")) << r.name << "  margin=" << r.margin
              << "  samples=" << r.samples << "  " << r.seconds << "s" << (r.detail.empty() ? "" : "  " + r.detail)
              << '\n';
  });
  run.results()["verify"] = io::to_json(rep);
  run.emit();
  if (const auto* f = rep.first_failure()) {
    std::cerr << "first failing invariant: " << f->name << '\n';
    return kInvariantFailure;
  }
  return kPass;
}

int cmd_report(const Common& c, const std::string& format) {
  if (format != "json" && format != "csv") throw InvalidInput("report: --format must be json or csv");
  if (c.input.empty()) throw InvalidInput("report: --input manifest is required");
  const auto m = io::manifest_from_json(io::parse_manifest_text(io::read_file(c.input), c.input));
  Run::write(format == "json" ? io::dump(io::to_json(m)) : io::manifest_csv(m), c.output);
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clifford and stabilizer testing toolkit"};
  app.require_subcommand(1);

  Common common;

  auto* test4 = app.add_subcommand("test4", "run the four-query Clifford tester");
  add_common(test4, common);
  std::size_t shots = 1000;
  std::optional<double> epsilon4;
  test4->add_option("--shots", shots, "number of shots")->check(CLI::PositiveNumber);
  test4->add_option("--epsilon", epsilon4, "run the amplified tester for this distance");

  auto* sctest = app.add_subcommand("sctest", "run the single-copy auxiliary-free tester");
  add_common(sctest, common);
  double epsilon = 0.1;
  std::optional<double> p_floor;
  double failure = 0.0;
  sctest->add_option("--epsilon", epsilon, "distance parameter");
  sctest->add_option("--p-floor", p_floor, "per-trial detection floor (default epsilon/16)");
  sctest->add_option("--oracle-failure", failure, "injected failure probability of the stabilizer subroutine");

  auto* pacc = app.add_subcommand("pacc", "acceptance probability of the four-query tester");
  add_common(pacc, common);
  bool exact = false;
  std::size_t pacc_shots = 10000;
  pacc->add_flag("--exact", exact, "exact value and bounds");
  pacc->add_option("--shots", pacc_shots, "Monte Carlo shots when not exact")->check(CLI::PositiveNumber);

  auto* disc = app.add_subcommand("discriminate", "leaf distributions of a fixed strategy");
  add_common(disc, common);
  std::string strategy;
  std::optional<std::size_t> disc_t;
  disc->add_option("--strategy", strategy, "strategy JSON file");
  disc->add_option("--t", disc_t, "expected number of rounds");

  auto* norms = app.add_subcommand("norms", "Q^k norms of a unitary or Gowers norms of a state");
  add_common(norms, common);

  auto* chardist = app.add_subcommand("chardist", "characteristic distribution table");
  add_common(chardist, common);
  bool choi = false;
  chardist->add_flag("--choi", choi, "use the Choi state of the input unitary");

  auto* commutant = app.add_subcommand("commutant", "commutant code enumeration");
  commutant->require_subcommand(1);
  auto* cenum = commutant->add_subcommand("enum", "enumerate codes and their unitary partial transposes");
  add_common(cenum, common, false);
  std::size_t t = 2;
  bool check_all = false;
  std::string family = "sigma";
  cenum->add_option("--t", t, "copies")->required()->check(CLI::Range(1, 5));
  cenum->add_flag("--check-all", check_all, "evaluate every per-code invariant");
  cenum->add_option("--family", family, "sigma (stochastic Lagrangians) or sd (all self-dual codes)");

  auto* verify = app.add_subcommand("verify", "run the property suites");
  add_common(verify, common, false);
  std::string suite = "all";
  std::optional<std::size_t> vn;
  std::optional<int> seeds;
  verify->add_option("--suite", suite, "all|fidelity|norms|commutant|testers|appendixA");
  verify->add_option("--n", vn, "restrict sampled checks to this many qubits")->check(CLI::PositiveNumber);
  verify->add_option("--seeds", seeds, "samples per sampled check")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "re-serialize a run manifest");
  add_common(report, common);
  std::string format = "json";
  report->add_option("--format", format, "json|csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*test4) return cmd_test4(common, shots, epsilon4);
    if (*sctest) return cmd_sctest(common, epsilon, p_floor, failure);
    if (*pacc) return cmd_pacc(common, exact, pacc_shots);
    if (*disc) return cmd_discriminate(common, strategy, disc_t);
    if (*norms) return cmd_norms(common);
    if (*chardist) return cmd_chardist(common, choi);
    if (*cenum) return cmd_commutant_enum(common, t, check_all, family);
    if (*verify) return cmd_verify(common, suite, vn, seeds);
    if (*report) return cmd_report(common, format);
  } catch (const BudgetExceeded& e) {
    std::cerr << e.what() << '\n';
    return kBudget;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const io::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInvariantFailure;
  }
  return kUsage;
}
