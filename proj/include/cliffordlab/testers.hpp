#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "commutant.hpp"
#include "densesim.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "pauli.hpp"
#include "random.hpp"

namespace clab {

struct TesterConfig {
  double epsilon = 0.1;
  std::size_t shots = 1;
  std::optional<double> delta;    // per-trial failure budget; derived when unset
  u64 seed = 0;
  std::optional<double> p_floor;  // detection floor for the single-copy tester; default epsilon / 16
  std::size_t jobs = 1;
  bool keep_log = true;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("TesterConfig: epsilon must be in (0, 1)");
    if (shots < 1) throw InvalidInput("TesterConfig: shots must be >= 1");
    if (delta && !(*delta > 0.0 && *delta < 1.0)) throw InvalidInput("TesterConfig: delta must be in (0, 1)");
    if (p_floor && !(*p_floor > 0.0 && *p_floor <= 1.0)) throw InvalidInput("TesterConfig: p_floor must be in (0, 1]");
  }
};

/// One shot of the 4-query tester (x, y, y') or one trial of the single-copy
/// tester (x = sampled stabilizer index, y = copies used, y' unused).
struct ShotRecord {
  u64 x = 0;
  u64 y = 0;
  u64 y2 = 0;
  bool accept = false;
  bool operator==(const ShotRecord&) const = default;
};

struct TesterReport {
  bool accept = false;
  std::size_t shots_used = 0;
  std::size_t accepts = 0;
  double rate = 0.0;
  std::optional<double> exact;
  std::size_t queries = 0;
  std::vector<ShotRecord> log;
};

// ---------------------------------------------------------------------------
// Four-query tester
// ---------------------------------------------------------------------------

/// 2^{2n} sum_{x,y} p_U(x, y)^2.
inline double pacc_exact(const DenseUnitary& u) {
  require_budget(u.n <= 3, "pacc_exact: qubits <= 3");
  return static_cast<double>(pow2(2 * u.n)) * char_dist_unitary(u).power_sum(2);
}

/// 2^{-2n} tr(Pi4 U^{(x)4} Pi4 U^{dag (x)4}).
inline double pacc_pi4(const DenseUnitary& u) {
  require_budget(u.n >= 1 && u.n <= 2, "pacc_pi4: 1 <= qubits <= 2");
  const Mat p = pi4(u.n);
  const Mat u4 = kron_power(u.m, 4);
  return std::real((p * u4 * p * u4.adjoint()).trace()) / static_cast<double>(pow2(2 * u.n));
}

/// (1 + 2^{4n} sum p_U^3) / 2.
inline double pacc_gnw_choi(const DenseUnitary& u) {
  require_budget(u.n <= 3, "pacc_gnw_choi: qubits <= 3");
  return 0.5 * (1.0 + std::pow(2.0, 4.0 * static_cast<double>(u.n)) * char_dist_unitary(u).power_sum(3));
}

/// Bell outcome distribution of (U (x) U)(P_x (x) I)|Omega> for every x.
inline std::vector<std::vector<double>> four_query_outcome_tables(const DenseUnitary& u) {
  require_budget(u.n <= 3, "run_4query: qubits <= 3");
  const Mat uu = kron(u.m, u.m);
  std::vector<std::vector<double>> out;
  const u64 total = u64{1} << (2 * u.n);
  out.reserve(total);
  for (u64 x = 0; x < total; ++x) {
    const StateVector in = choi_state(DenseUnitary{u.n, weyl_matrix_code(u.n, x)});
    out.push_back(bell_probabilities(StateVector{2 * u.n, uu * in.amp}));
  }
  return out;
}

/// Shot i uses the substream stream_seed(seed, i).
inline TesterReport run_4query(const DenseUnitary& u, const TesterConfig& cfg) {
  cfg.validate();
  const auto tables = four_query_outcome_tables(u);
  std::vector<ShotRecord> log(cfg.shots);
  parallel_for(cfg.shots, cfg.jobs, [&](std::size_t i) {
    Rng rng(stream_seed(cfg.seed, i));
    ShotRecord r;
    r.x = rng.below(tables.size());
    r.y = sample_index(tables[r.x], rng);
    r.y2 = sample_index(tables[r.x], rng);
    r.accept = r.y == r.y2;
    log[i] = r;
  });
  TesterReport rep;
  rep.shots_used = cfg.shots;
  rep.accepts = static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [](const ShotRecord& r) { return r.accept; }));
  rep.rate = static_cast<double>(rep.accepts) / static_cast<double>(cfg.shots);
  rep.accept = rep.accepts == cfg.shots;
  rep.exact = pacc_exact(u);
  rep.queries = 4 * cfg.shots;
  if (cfg.keep_log) rep.log = std::move(log);
  return rep;
}

/// ceil(6 / min(1/4, eps/2)); (1 - min(1/4, eps/2))^reps <= e^{-6} < 1/3.
inline std::size_t four_query_repetitions(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InvalidInput("four_query_repetitions: epsilon must be in (0, 1]");
  return static_cast<std::size_t>(std::ceil(6.0 / std::min(0.25, epsilon / 2.0) - 1e-12));
}

/// Accept iff every one of four_query_repetitions(eps) shots accepts.
inline TesterReport run_4query_repeated(const DenseUnitary& u, double epsilon, TesterConfig cfg) {
  cfg.epsilon = epsilon;
  cfg.shots = four_query_repetitions(epsilon);
  return run_4query(u, cfg);
}

// ---------------------------------------------------------------------------
// Single-copy stabilizer tester (pluggable)
// ---------------------------------------------------------------------------

/// Copies prescribed for one run: ceil((n / eps^2) ln(1/delta)).
inline std::size_t stab_tester_copies(std::size_t n, double epsilon, double delta) {
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) / (epsilon * epsilon) * std::log(1.0 / delta) - 1e-9));
}

/// Contract: accept stabilizer inputs w.p. >= 1 - delta, reject inputs with
/// F_Stab <= 1 - eps w.p. >= 1 - delta. `copies` reports the queries used.
class StabilizerTester {
 public:
  virtual ~StabilizerTester() = default;
  virtual bool test(const StateVector& psi, double epsilon, double delta, Rng& rng, std::size_t& copies) = 0;
};

/// Decides by the exact stabilizer fidelity against 1 - eps; optionally flips
/// its verdict with probability `failure` (at most delta) to emulate a
/// statistical tester.
class OracleStabilizerTester : public StabilizerTester {
 public:
  explicit OracleStabilizerTester(double failure = 0.0) : failure_(failure) {
    if (failure < 0.0 || failure >= 1.0) throw InvalidInput("OracleStabilizerTester: failure must be in [0, 1)");
  }

  bool test(const StateVector& psi, double epsilon, double delta, Rng& rng, std::size_t& copies) override {
    copies = stab_tester_copies(psi.n, epsilon, delta);
    bool verdict = f_stab(psi) > 1.0 - epsilon + 1e-12;
    if (failure_ > 0.0 && rng.uniform() < std::min(failure_, delta)) verdict = !verdict;
    return verdict;
  }

 private:
  double failure_;
};

struct SingleCopyPlan {
  std::size_t trials = 0;            // m
  double delta = 0.0;                // per trial
  std::size_t copies_per_trial = 0;  // t_per_trial
  std::size_t total_queries() const { return trials * copies_per_trial; }
};

/// m = ceil(ln 3 / p_floor) + 1, delta = 1 / (3m).
inline SingleCopyPlan single_copy_plan(std::size_t n, const TesterConfig& cfg) {
  cfg.validate();
  const double p = cfg.p_floor.value_or(cfg.epsilon / 16.0);
  SingleCopyPlan plan;
  plan.trials = static_cast<std::size_t>(std::ceil(std::log(3.0) / p - 1e-12)) + 1;
  plan.delta = cfg.delta.value_or(1.0 / (3.0 * static_cast<double>(plan.trials)));
  plan.copies_per_trial = stab_tester_copies(n, cfg.epsilon, plan.delta);
  return plan;
}

/// Each trial draws a uniform stabilizer |S> and tests U|S>. Trial i uses the
/// substream stream_seed(seed, i); the run stops at the first rejection.
inline TesterReport run_aux_free_single_copy(const DenseUnitary& u, const TesterConfig& cfg,
                                             StabilizerTester& tester) {
  require_budget(u.n <= 2, "run_aux_free_single_copy: qubits <= 2");
  const auto plan = single_copy_plan(u.n, cfg);
  TesterReport rep;
  rep.accept = true;
  for (std::size_t i = 0; i < plan.trials; ++i) {
    Rng rng(stream_seed(cfg.seed, i));
    const auto s = random_stabilizer_state(u.n, rng);
    const StateVector in = stabilizer_state_vector(s);
    const StateVector out{u.n, u.m * in.amp};
    std::size_t copies = 0;
    const bool ok = tester.test(out, cfg.epsilon, plan.delta, rng, copies);
    rep.queries += copies;
    ++rep.shots_used;
    if (ok) ++rep.accepts;
    if (cfg.keep_log) rep.log.push_back({i, copies, 0, ok});
    if (!ok) {
      rep.accept = false;
      break;
    }
  }
  rep.rate = static_cast<double>(rep.accepts) / static_cast<double>(rep.shots_used);
  return rep;
}

inline TesterReport run_aux_free_single_copy(const DenseUnitary& u, const TesterConfig& cfg) {
  OracleStabilizerTester oracle;
  return run_aux_free_single_copy(u, cfg, oracle);
}

/// E over enumerated Stab(n) of F_Stab(U|S>).
inline double avg_stab_fidelity_exact(const DenseUnitary& u) {
  require_budget(u.n <= 2, "avg_stab_fidelity_exact: qubits <= 2");
  const auto& states = stabilizer_state_vectors(u.n);
  double acc = 0.0;
  for (const auto& s : states) acc += f_stab(StateVector{u.n, u.m * s});
  return acc / static_cast<double>(states.size());
}

/// ((F_Stab(|U>>) + 7) / 8 + 9 * 2^{-n})^{1/4}.
inline double avg_stab_fidelity_upper(double choi_fstab, std::size_t n) {
  return std::pow((choi_fstab + 7.0) / 8.0 + 9.0 / static_cast<double>(pow2(n)), 0.25);
}

// ---------------------------------------------------------------------------
// Discrimination harness: fixed (non-adaptive) auxiliary-free strategies
// ---------------------------------------------------------------------------

struct StrategyRound {
  Mat state;               // density matrix on n qubits
  std::vector<Mat> povm;   // effects summing to identity
};

struct Strategy {
  std::size_t n = 1;
  std::vector<StrategyRound> rounds;

  void validate() const {
    const auto d = static_cast<Eigen::Index>(pow2(n));
    for (const auto& r : rounds) {
      if (r.state.rows() != d || r.state.cols() != d) throw DimensionMismatch("Strategy: state size mismatch");
      if (std::abs(r.state.trace() - cplx(1.0)) > 1e-9 || max_abs_diff(r.state, r.state.adjoint()) > 1e-9) {
        throw InvalidInput("Strategy: state is not a unit-trace Hermitian matrix");
      }
      if (r.povm.empty()) throw InvalidInput("Strategy: empty measurement");
      Mat sum = Mat::Zero(d, d);
      for (const auto& e : r.povm) {
        if (e.rows() != d || e.cols() != d) throw DimensionMismatch("Strategy: effect size mismatch");
        sum += e;
      }
      if (max_abs_diff(sum, Mat::Identity(d, d)) > 1e-9) throw InvalidInput("Strategy: effects do not sum to identity");
    }
  }

  std::size_t leaves() const {
    std::size_t c = 1;
    for (const auto& r : rounds) c *= r.povm.size();
    return c;
  }
};

enum class ChannelEnsemble { clifford, depolarizing };
enum class LeafMethod { group_average, commutant_expansion };

namespace detail {

/// Outcome tuple of leaf index l, round 0 most significant.
inline std::vector<std::size_t> leaf_outcomes(const Strategy& s, std::size_t l) {
  std::vector<std::size_t> out(s.rounds.size());
  for (std::size_t i = s.rounds.size(); i-- > 0;) {
    out[i] = l % s.rounds[i].povm.size();
    l /= s.rounds[i].povm.size();
  }
  return out;
}

}  // namespace detail

/// Leaf probabilities p(l) = tr[M_l E^{(x)t}(rho_l)] averaged over the ensemble.
inline std::vector<double> leaf_distribution(const Strategy& s, ChannelEnsemble ens,
                                             LeafMethod method = LeafMethod::group_average) {
  s.validate();
  const std::size_t t = s.rounds.size();
  require_budget(s.n == 1 && t >= 1 && t <= 3, "leaf_distribution: qubits = 1, rounds <= 3");
  const std::size_t total = s.leaves();
  std::vector<double> p(total, 0.0);
  const double dim = static_cast<double>(pow2(s.n));
  if (ens == ChannelEnsemble::depolarizing) {
    for (std::size_t l = 0; l < total; ++l) {
      const auto o = detail::leaf_outcomes(s, l);
      double v = 1.0;
      for (std::size_t i = 0; i < t; ++i) v *= std::real(s.rounds[i].povm[o[i]].trace()) / dim;
      p[l] = v;
    }
    return p;
  }
  if (method == LeafMethod::group_average) {
    const auto& cs = clifford_matrices(s.n);
    for (const auto& c : cs) {
      std::vector<std::vector<double>> per_round(t);
      for (std::size_t i = 0; i < t; ++i) {
        const Mat out = c * s.rounds[i].state * c.adjoint();
        for (const auto& e : s.rounds[i].povm) per_round[i].push_back(std::real((e * out).trace()));
      }
      for (std::size_t l = 0; l < total; ++l) {
        const auto o = detail::leaf_outcomes(s, l);
        double v = 1.0;
        for (std::size_t i = 0; i < t; ++i) v *= per_round[i][o[i]];
        p[l] += v;
      }
    }
    for (auto& v : p) v /= static_cast<double>(cs.size());
    return p;
  }
  // sum_{T,T'} W_{T,T'} tr(R(T')^dag rho_l) tr(R(T) M_l)
  const CommutantProjector proj(s.n, t);
  Mat rho = Mat::Identity(1, 1);
  for (const auto& r : s.rounds) rho = kron(rho, r.state);
  const Mat twirled = proj(rho);
  for (std::size_t l = 0; l < total; ++l) {
    const auto o = detail::leaf_outcomes(s, l);
    Mat m = Mat::Identity(1, 1);
    for (std::size_t i = 0; i < t; ++i) m = kron(m, s.rounds[i].povm[o[i]]);
    p[l] = std::real((m * twirled).trace());
  }
  return p;
}

inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DimensionMismatch("tv_distance: support size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

// Single-qubit building blocks for strategies.

/// Named pure state: "0", "1", "+", "-", "+i", "-i".
inline Mat named_qubit_state(const std::string& name) {
  Vec v(2);
  const double h = 1.0 / std::sqrt(2.0);
  if (name == "0") {
    v << 1.0, 0.0;
  } else if (name == "1") {
    v << 0.0, 1.0;
  } else if (name == "+") {
    v << h, h;
  } else if (name == "-") {
    v << h, -h;
  } else if (name == "+i") {
    v << h, cplx(0.0, h);
  } else if (name == "-i") {
    v << h, cplx(0.0, -h);
  } else {
    throw InvalidInput("named_qubit_state: unknown state '" + name + "'");
  }
  return v * v.adjoint();
}

/// Projective measurement in the eigenbasis of "X", "Y" or "Z" (+1 outcome first).
inline std::vector<Mat> pauli_basis_povm(const std::string& axis) {
  if (axis == "Z") return {named_qubit_state("0"), named_qubit_state("1")};
  if (axis == "X") return {named_qubit_state("+"), named_qubit_state("-")};
  if (axis == "Y") return {named_qubit_state("+i"), named_qubit_state("-i")};
  throw InvalidInput("pauli_basis_povm: unknown axis '" + axis + "'");
}

}  // namespace clab
