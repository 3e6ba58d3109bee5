#pragma once

// JSON documents exchanged by the command-line tool.
//
// Every rational is written as a string, "p" or "p/q", so a document always
// re-parses to exactly the same values. On input, offsets may also be exact
// decimal strings or JSON integers; JSON floating-point numbers are rejected.

#include <clocksync/errors.hpp>
#include <clocksync/linalg.hpp>
#include <clocksync/phase.hpp>
#include <clocksync/recovery.hpp>
#include <clocksync/resilience.hpp>
#include <clocksync/sync_model.hpp>

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace clocksync::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "clocksync";
inline constexpr const char* kToolVersion = "0.1.0";

inline Json to_json(const Rational& r) { return r.to_string(); }

inline Rational rational_from_json(const Json& j, const std::string& what) {
  if (j.is_string()) {
    try {
      return Rational::parse(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw InputError(what + ": " + e.what());
    }
  }
  if (j.is_number_integer()) return Rational(j.get<long>());
  throw InputError(what + ": expected an exact number as a string (\"p/q\" or decimal) or an integer");
}

inline Json to_json(const Session& s) { return Json::array({s.i, s.j}); }

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(to_json(x));
  return out;
}

inline Json faults_to_json(const FaultAssignment& f) {
  Json out = Json::array();
  for (const auto& [s, e] : f.entries()) {
    Json item{{"i", s.i}, {"j", s.j}};
    if (e) item["magnitude"] = to_json(*e);
    out.push_back(std::move(item));
  }
  return out;
}

inline FaultAssignment faults_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("faults must be an array");
  FaultAssignment out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("i") || !item.contains("j")) throw InputError("fault entry needs i and j");
    const Session s(item.at("i").get<int>(), item.at("j").get<int>());
    if (item.contains("magnitude"))
      out.add(s, rational_from_json(item.at("magnitude"), "fault magnitude on " + s.to_string()));
    else
      out.add(s);
  }
  return out;
}

// ---- measurement file ------------------------------------------------------

struct MeasurementFile {
  Topology topology;
  std::string unit;
  MeasurementSet measurements;
};

inline Json measurement_file_json(const MeasurementSet& meas, const std::string& unit = "s") {
  const Topology& topo = meas.topology();
  Json list = Json::array();
  for (std::size_t r = 0; r < topo.sessions(); ++r) {
    const Session s = topo.session_at(r);
    list.push_back({{"i", s.i}, {"j", s.j}, {"offset", to_json(meas.by_row()[r])}});
  }
  return {{"n", topo.nodes()}, {"unit", unit}, {"measurements", std::move(list)}};
}

inline MeasurementFile parse_measurement_file(const Json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("n") || !doc.contains("measurements"))
      throw InputError("measurement file needs \"n\" and \"measurements\"");
    const Topology topo(doc.at("n").get<int>());
    std::vector<std::pair<Session, Rational>> entries;
    for (const auto& m : doc.at("measurements")) {
      const int i = m.at("i").get<int>();
      const int j = m.at("j").get<int>();
      if (i <= j) throw InputError("measurement entries must have i > j, got (" + std::to_string(i) + "," + std::to_string(j) + ")");
      const Session s(i, j);
      topo.require_valid(s);
      entries.emplace_back(s, rational_from_json(m.at("offset"), "offset of " + s.to_string()));
    }
    std::string unit = doc.contains("unit") ? doc.at("unit").get<std::string>() : std::string("s");
    MeasurementSet ms = MeasurementSet::from_entries(topo, entries);
    return {topo, std::move(unit), std::move(ms)};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed measurement file: ") + e.what());
  }
}

// ---- ground-truth sidecar --------------------------------------------------

struct TruthFile {
  GroundTruth truth;
  FaultAssignment faults;
  Rational period;
  std::optional<std::uint64_t> seed;
};

inline Json truth_file_json(const GroundTruth& truth, const FaultAssignment& faults, const Rational& period,
                            std::optional<std::uint64_t> seed) {
  Json offsets = Json::array();
  for (int v = 1; v < truth.nodes(); ++v) offsets.push_back({{"node", v}, {"offset", to_json(truth.offset(v))}});
  Json doc{{"n", truth.nodes()}, {"T", to_json(period)}};
  doc["seed"] = seed ? Json(*seed) : Json(nullptr);
  doc["offsets"] = std::move(offsets);
  doc["faults"] = faults_to_json(faults);
  return doc;
}

inline TruthFile parse_truth_file(const Json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    std::vector<std::optional<Rational>> slots(static_cast<std::size_t>(n > 1 ? n - 1 : 0));
    for (const auto& o : doc.at("offsets")) {
      const int v = o.at("node").get<int>();
      if (v < 1 || v >= n) throw InputError("truth offset for invalid node " + std::to_string(v));
      auto& slot = slots[static_cast<std::size_t>(v - 1)];
      if (slot) throw InputError("duplicate truth offset for node " + std::to_string(v));
      slot = rational_from_json(o.at("offset"), "offset of node " + std::to_string(v));
    }
    std::vector<Rational> offsets;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (!slots[k]) throw InputError("missing truth offset for node " + std::to_string(k + 1));
      offsets.push_back(*slots[k]);
    }
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed") && !doc.at("seed").is_null()) seed = doc.at("seed").get<std::uint64_t>();
    const Rational period = doc.contains("T") ? rational_from_json(doc.at("T"), "T") : Rational(1);
    FaultAssignment faults = faults_from_json(doc.at("faults"));
    faults.validate(Topology(n));
    return {GroundTruth(std::move(offsets)), std::move(faults), period, seed};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed truth file: ") + e.what());
  }
}

// ---- reports ---------------------------------------------------------------

inline Json report_header(const std::string& command) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"command", command}};
}

inline Json recovery_json(const RecoveryResult& r) {
  Json alts = Json::array();
  for (const auto& c : r.ambiguity)
    alts.push_back({{"faults", faults_to_json(c.faults)}, {"offsets", to_json(c.offsets)}});
  return {{"k_used", r.k_used},
          {"offsets", to_json(r.offsets)},
          {"faults", faults_to_json(r.fault_positions)},
          {"ambiguity", std::move(alts)},
          {"systems_solved", r.systems_solved}};
}

inline Json rank_check_json(const RankConditionCheck& c) {
  return {{"n", c.n},
          {"K", c.actual_count},
          {"k", c.estimated_count},
          {"actual", faults_to_json(c.actual)},
          {"estimated", faults_to_json(c.estimated)},
          {"l", c.correctly_positioned},
          {"rank_a_prime", c.rank_a_prime},
          {"expected_rank", c.expected_rank},
          {"holds", c.holds}};
}

inline Json resilience_json(const ResilienceReport& r, bool with_timing) {
  Json per_k = Json::array();
  for (const auto& v : r.per_k) {
    Json item{{"K", v.k_faults},
              {"verdict", v.verified ? "verified" : "failed"},
              {"classes_examined", v.classes_examined},
              {"rank_checks", v.rank_checks}};
    if (v.witness) item["witness"] = rank_check_json(*v.witness);
    per_k.push_back(std::move(item));
  }
  const Rational tol = tolerance_fraction(r);
  Json doc{{"n", r.n},
           {"mode", std::string(to_string(r.mode))},
           {"lower_bound", r.lower_bound},
           {"tolerance", to_json(tol)},
           {"tolerance_percent", tolerance_percent_rounded(tol)},
           {"complete", r.complete},
           {"capped", r.capped},
           {"per_K", std::move(per_k)},
           {"isomorphism_classes_examined", r.isomorphism_classes_examined},
           {"rank_checks_performed", r.rank_checks_performed}};
  if (with_timing) doc["runtime_seconds"] = r.elapsed_seconds;
  return doc;
}

inline Json solve_outcome_json(const SolveOutcome& o) {
  Json doc{{"kind", std::string(to_string(o.kind))}, {"rank_a", o.rank_a}, {"rank_augmented", o.rank_augmented}};
  if (o.kind == SolveKind::Unique) doc["solution"] = to_json(o.solution);
  if (o.kind == SolveKind::Infinite) {
    doc["nullity"] = o.nullity;
    doc["particular"] = to_json(o.particular);
    Json basis = Json::array();
    for (const auto& v : o.null_basis) basis.push_back(to_json(v));
    doc["null_basis"] = std::move(basis);
  }
  return doc;
}

inline Json counterexample_json(const Topology& topo, const UpperBoundCounterexample& c) {
  return {{"n", topo.nodes()},
          {"K", c.positions.size()},
          {"faults", faults_to_json(c.positions)},
          {"columns", c.columns},
          {"evidence", solve_outcome_json(c.evidence)}};
}

}  // namespace clocksync::io
