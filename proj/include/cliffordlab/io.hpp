#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "densesim.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "testers.hpp"
#include "verify.hpp"

namespace clab::io {

using nlohmann::json;
// Keys keep insertion order so serialized reports read in a fixed layout.
using ojson = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Complex matrices: entries are numbers or [re, im] pairs.
// ---------------------------------------------------------------------------

inline cplx parse_entry(const json& e) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) return {e[0].get<double>(), e[1].get<double>()};
  throw InvalidInput("matrix entry must be a number or [re, im]");
}

inline Mat parse_matrix(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw InvalidInput("matrix must be a nonempty array of rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw InvalidInput("matrix rows must have equal length");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = parse_entry(row[static_cast<std::size_t>(j)]);
  }
  return m;
}

inline ojson matrix_json(const Mat& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline Mat named_gate(const std::string& g) {
  if (g == "I") return Mat::Identity(2, 2);
  if (g == "X") return weyl_matrix_code(1, 0b10);
  if (g == "Z") return weyl_matrix_code(1, 0b01);
  if (g == "Y") return weyl_matrix_code(1, 0b11);
  if (g == "H") return gates::hadamard();
  if (g == "S") return gates::phase_s();
  if (g == "T") return gates::t_gate();
  throw InvalidInput("unknown gate '" + g + "' (expected I, X, Y, Z, H, S or T)");
}

/// Unitary input. Accepted forms:
///   {"matrix": [[...], ...]}                 dense 2^n x 2^n
///   {"gates": ["T", "I"]}                    tensor product, qubit 0 first
///   {"haar": {"n": 2, "seed": 7}}            seeded Haar sample
inline DenseUnitary parse_unitary(const json& j) {
  if (!j.is_object()) throw InvalidInput("unitary input must be a JSON object");
  DenseUnitary u;
  if (j.contains("matrix")) {
    const Mat m = parse_matrix(j.at("matrix"));
    if (m.rows() != m.cols()) throw DimensionMismatch("unitary matrix must be square");
    std::size_t n = 0;
    while (pow2(n) < static_cast<std::size_t>(m.rows())) ++n;
    if (pow2(n) != static_cast<std::size_t>(m.rows()) || n == 0) throw DimensionMismatch("unitary dimension must be 2^n, n >= 1");
    u = {n, m};
  } else if (j.contains("gates")) {
    Mat m = Mat::Identity(1, 1);
    std::size_t n = 0;
    for (const auto& g : j.at("gates")) {
      m = kron(m, named_gate(g.get<std::string>()));
      ++n;
    }
    if (n == 0) throw InvalidInput("gates list is empty");
    u = {n, m};
  } else if (j.contains("haar")) {
    const auto& h = j.at("haar");
    const auto n = h.at("n").get<std::size_t>();
    if (n == 0) throw InvalidInput("haar: n must be >= 1");
    require_budget(n <= kMaxDenseQubits, "haar: qubits <= 6");
    Rng rng(h.at("seed").get<u64>());
    u = haar_dense_unitary(n, rng);
  } else {
    throw InvalidInput("unitary input needs one of 'matrix', 'gates', 'haar'");
  }
  if (j.contains("n") && j.at("n").get<std::size_t>() != u.n) throw DimensionMismatch("declared n does not match the matrix");
  if (!is_unitary(u.m, 1e-8)) throw InvalidInput("input matrix is not unitary");
  return u;
}

/// State input: {"state": [amplitudes]} (normalized on read).
inline StateVector parse_state(const json& j) {
  const auto& a = j.at("state");
  if (!a.is_array() || a.empty()) throw InvalidInput("state must be a nonempty array");
  std::size_t n = 0;
  while (pow2(n) < a.size()) ++n;
  if (pow2(n) != a.size() || n == 0) throw DimensionMismatch("state length must be 2^n, n >= 1");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_entry(a[i]);
  if (v.norm() == 0.0) throw InvalidInput("state has zero norm");
  return {n, v / v.norm()};
}

/// Strategy input: {"rounds": [{"state": "+" | matrix, "povm": "Z" | [matrix, ...]}, ...]}.
inline Strategy parse_strategy(const json& j) {
  Strategy s;
  s.n = j.value("n", std::size_t{1});
  for (const auto& r : j.at("rounds")) {
    StrategyRound round;
    const auto& st = r.at("state");
    round.state = st.is_string() ? named_qubit_state(st.get<std::string>()) : parse_matrix(st);
    const auto& pv = r.at("povm");
    if (pv.is_string()) {
      round.povm = pauli_basis_povm(pv.get<std::string>());
    } else {
      for (const auto& e : pv) round.povm.push_back(parse_matrix(e));
    }
    s.rounds.push_back(std::move(round));
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline ojson to_json(const TesterReport& r) {
  ojson j;
  j["verdict"] = r.accept ? "accept" : "reject";
  j["shots_used"] = r.shots_used;
  j["accepts"] = r.accepts;
  j["rate"] = r.rate;
  j["exact"] = r.exact ? ojson(*r.exact) : ojson(nullptr);
  j["queries"] = r.queries;
  ojson log = ojson::array();
  for (const auto& s : r.log) log.push_back({s.x, s.y, s.y2, s.accept});
  j["log"] = log;
  return j;
}

inline TesterReport tester_report_from_json(const json& j) {
  TesterReport r;
  const auto verdict = j.at("verdict").get<std::string>();
  if (verdict != "accept" && verdict != "reject") throw InvalidInput("verdict must be accept or reject");
  r.accept = verdict == "accept";
  r.shots_used = j.at("shots_used").get<std::size_t>();
  r.accepts = j.at("accepts").get<std::size_t>();
  r.rate = j.at("rate").get<double>();
  if (!j.at("exact").is_null()) r.exact = j.at("exact").get<double>();
  r.queries = j.at("queries").get<std::size_t>();
  for (const auto& s : j.at("log")) r.log.push_back({s.at(0).get<u64>(), s.at(1).get<u64>(), s.at(2).get<u64>(), s.at(3).get<bool>()});
  return r;
}

inline bool same_report(const TesterReport& a, const TesterReport& b) {
  return a.accept == b.accept && a.shots_used == b.shots_used && a.accepts == b.accepts && a.rate == b.rate &&
         a.exact == b.exact && a.queries == b.queries && a.log == b.log;
}

inline ojson to_json(const CharDist& d) {
  ojson j;
  j["kind"] = d.kind == DistKind::state ? "state" : "unitary";
  j["n"] = d.n;
  j["table"] = d.table;
  return j;
}

/// Margins of +inf (nothing sampled) serialize as null.
inline ojson to_json(const VerifyReport& rep) {
  ojson checks = ojson::array();
  for (const auto& c : rep.checks) {
    ojson j;
    j["suite"] = c.suite;
    j["name"] = c.name;
    j["statement"] = c.statement;
    j["passed"] = c.passed;
    j["asserted"] = c.asserted;
    j["margin"] = std::isfinite(c.margin) ? ojson(c.margin) : ojson(nullptr);
    j["samples"] = c.samples;
    j["detail"] = c.detail;
    checks.push_back(j);
  }
  ojson out;
  out["passed"] = rep.passed();
  const auto* f = rep.first_failure();
  out["first_failure"] = f ? ojson(f->name) : ojson(nullptr);
  out["checks"] = checks;
  return out;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Everything except `timestamps` is a deterministic function of the command,
/// its configuration and the input bytes.
struct RunManifest {
  std::string command;
  ojson config = ojson::object();
  std::string input_hash;  // git blob hash of the input file(s), empty if none
  u64 seed = 0;
  ojson timestamps = ojson::object();
  ojson results = ojson::object();
};

inline ojson to_json(const RunManifest& m) {
  ojson j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["input_hash"] = m.input_hash;
  j["seed"] = m.seed;
  j["timestamps"] = m.timestamps;
  j["results"] = m.results;
  return j;
}

inline RunManifest manifest_from_json(const ojson& j) {
  if (!j.is_object() || !j.contains("command") || !j.contains("results")) throw InvalidInput("not a run manifest");
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.value("config", ojson::object());
  m.input_hash = j.value("input_hash", std::string{});
  m.seed = j.value("seed", u64{0});
  m.timestamps = j.value("timestamps", ojson::object());
  m.results = j.at("results");
  return m;
}

/// Parses keeping the key order of the file, so a manifest re-serializes to
/// the same bytes.
inline ojson parse_manifest_text(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw InvalidInput(what + ": " + e.what());
  }
}

/// Fixed formatting so equal values always print the same bytes.
inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string csv_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

/// One header line plus one row per table entry, shot or check, depending on
/// what the manifest results hold.
inline std::string manifest_csv(const RunManifest& m) {
  const auto& r = m.results;
  std::ostringstream out;
  if (r.contains("char_dist")) {
    const auto& d = r.at("char_dist");
    const bool unitary = d.at("kind") == "unitary";
    const auto n = d.at("n").get<std::size_t>();
    const auto& table = d.at("table");
    out << (unitary ? "x,y,probability\n" : "x,probability\n");
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (unitary) {
        out << (i >> (2 * n)) << ',' << (i & (pow2(2 * n) - 1)) << ',';
      } else {
        out << i << ',';
      }
      out << csv_number(table[i].get<double>()) << '\n';
    }
  } else if (r.contains("report") && r.at("report").contains("log")) {
    out << "index,x,y,y2,accept\n";
    std::size_t i = 0;
    for (const auto& s : r.at("report").at("log")) {
      out << i++ << ',' << s[0].get<u64>() << ',' << s[1].get<u64>() << ',' << s[2].get<u64>() << ','
          << (s[3].get<bool>() ? 1 : 0) << '\n';
    }
  } else if (r.contains("verify")) {
    out << "suite,name,passed,asserted,margin,samples\n";
    for (const auto& c : r.at("verify").at("checks")) {
      out << c.at("suite").get<std::string>() << ',' << c.at("name").get<std::string>() << ','
          << (c.at("passed").get<bool>() ? 1 : 0) << ',' << (c.at("asserted").get<bool>() ? 1 : 0) << ','
          << (c.at("margin").is_null() ? std::string{} : csv_number(c.at("margin").get<double>())) << ','
          << c.at("samples").get<std::size_t>() << '\n';
    }
  } else {
    // Flat key,value listing of scalar results.
    out << "key,value\n";
    for (const auto& [k, v] : r.items()) {
      if (v.is_primitive()) out << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
  }
  return out.str();
}

}  // namespace clab::io
