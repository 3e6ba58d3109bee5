// clocksync: recover clock offsets from all-pairs measurements with nT
// faults, and compute resilience bounds of the recovery procedure.
//
// Exit codes: 0 success, 2 validation or usage error, 3 unrecoverable
// measurements, 4 budget exhausted (partial report written).

#include <clocksync/clocksync.hpp>
#include <clocksync/io.hpp>

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>

namespace {

using namespace clocksync;
using io::Json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitUnrecoverable = 3;
constexpr int kExitIncomplete = 4;

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// "(2,0):2,(4,1):-1" -> positions with magnitudes n*T.
FaultAssignment parse_fault_spec(const std::string& spec, const Topology& topo, const Rational& period) {
  static const std::regex item(R"(\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*:\s*([-+]?\d+)\s*)");
  FaultAssignment out;
  if (spec.find_first_not_of(" \t") == std::string::npos) return out;
  std::string acc;
  // Split on commas that are outside parentheses.
  int depth = 0;
  std::vector<std::string> parts;
  for (char c : spec) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(acc);
      acc.clear();
    } else {
      acc.push_back(c);
    }
  }
  parts.push_back(acc);
  for (const auto& p : parts) {
    std::smatch m;
    if (!std::regex_match(p, m, item)) throw InputError("bad fault spec item '" + p + "', expected (i,j):n");
    const int a = std::stoi(m[1]);
    const int b = std::stoi(m[2]);
    const long n = std::stol(m[3]);
    if (a == b) throw InputError("bad fault spec item '" + p + "': endpoints must differ");
    const Session s(a, b);
    topo.require_valid(s);
    if (n == 0) throw InputError("fault on " + s.to_string() + " must be a nonzero multiple of T");
    // (i,j) with i < j denotes the same session measured the other way round.
    out.add(s, Rational(a > b ? n : -n) * period);
  }
  return out;
}

// ---- recover ---------------------------------------------------------------

struct RecoverArgs {
  std::string input;
  std::string truth;
  std::string format = "json";
  std::string out;
  bool force = false;
  bool no_scan = false;
};

std::string recover_table(const RecoveryResult& r, const Topology& topo, const std::optional<RecoveryVerdict>& verdict) {
  std::ostringstream os;
  os << "nodes            " << topo.nodes() << "\n";
  os << "faults assumed   " << r.k_used << "\n";
  for (int v = 1; v < topo.nodes(); ++v)
    os << "offset d" << v << "0" << std::string(v < 10 ? 8 : 7, ' ') << r.offsets[static_cast<std::size_t>(v - 1)] << "\n";
  for (const auto& [s, e] : r.fault_positions.entries()) os << "fault " << s.to_string() << std::string(s.i < 10 && s.j < 10 ? 5 : 3, ' ') << *e << "\n";
  os << "alternatives     " << r.ambiguity.size() << "\n";
  if (verdict) os << "verdict          " << (verdict->correct ? "CorrectRecovery" : "WrongRecovery") << "\n";
  return os.str();
}

int run_recover(const RecoverArgs& a) {
  const io::MeasurementFile file = io::parse_measurement_file(read_json(a.input));
  RecoveryOptions opts;
  opts.force = a.force;
  opts.scan_ambiguity = !a.no_scan;
  RecoveryResult result;
  try {
    result = recover(file.topology, file.measurements, opts);
  } catch (const UnrecoverableError& e) {
    Json doc = io::report_header("recover");
    doc["n"] = file.topology.nodes();
    doc["status"] = "unrecoverable";
    doc["error"] = e.what();
    write_text(a.out, dump(doc));
    return kExitUnrecoverable;
  }
  std::optional<RecoveryVerdict> verdict;
  if (!a.truth.empty()) {
    const io::TruthFile truth = io::parse_truth_file(read_json(a.truth));
    if (truth.truth.nodes() != file.topology.nodes()) throw InputError("truth file is for a different node count");
    verdict = verify_recovery(result, truth.truth, truth.faults);
  }
  if (a.format == "table") {
    write_text(a.out, recover_table(result, file.topology, verdict));
    return kExitOk;
  }
  Json doc = io::report_header("recover");
  doc["n"] = file.topology.nodes();
  doc["unit"] = file.unit;
  doc["status"] = "recovered";
  doc["result"] = io::recovery_json(result);
  if (verdict) {
    Json mism = Json::array();
    for (const auto& m : verdict->mismatches) mism.push_back(m);
    doc["verdict"] = {{"kind", verdict->correct ? "CorrectRecovery" : "WrongRecovery"}, {"mismatches", std::move(mism)}};
  }
  write_text(a.out, dump(doc));
  return kExitOk;
}

// ---- bound -----------------------------------------------------------------

struct BoundArgs {
  int n = 0;
  std::optional<int> from;
  std::string mode = "reduced";
  std::optional<std::size_t> max_k;
  double budget = 0;
  unsigned jobs = 1;
  std::string format = "json";
  std::string out;
  bool force = false;
  bool timing = false;
};

int run_bound(const BoundArgs& a) {
  if (a.n < 3) throw InputError("N must be at least 3");
  const int first = a.from.value_or(a.n);
  if (first < 3 || first > a.n) throw InputError("node range must satisfy 3 <= from <= N");
  BoundOptions opts;
  opts.mode = a.mode == "exhaustive" ? BoundMode::Exhaustive : BoundMode::Reduced;
  opts.max_k = a.max_k;
  opts.jobs = a.jobs == 0 ? 1 : a.jobs;
  opts.force = a.force;
  if (a.n > 12 && !a.force) throw InputError("N > 12 requires --force");

  std::vector<ResilienceReport> reports;
  bool complete = true;
  const auto started = std::chrono::steady_clock::now();
  for (int n = first; n <= a.n; ++n) {
    if (a.budget > 0) {
      const double used = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      opts.budget_seconds = a.budget - used;
      if (opts.budget_seconds <= 0) {
        complete = false;
        break;
      }
    }
    reports.push_back(lower_bound(Topology(n), opts));
    if (!reports.back().complete) {
      complete = false;
      break;
    }
  }

  if (a.format == "table") {
    std::ostringstream os;
    auto cell = [](const std::string& s) { return std::string(s.size() < 4 ? 4 - s.size() : 0, ' ') + s; };
    os << "N                        |";
    for (const auto& r : reports) os << cell(std::to_string(r.n));
    os << "\nlower bound of faults    |";
    for (const auto& r : reports) os << cell(std::to_string(r.lower_bound) + (r.complete ? "" : "?"));
    os << "\nlower bound of tolerance |";
    for (const auto& r : reports) os << cell(std::to_string(tolerance_percent_rounded(tolerance_fraction(r))));
    os << "\n";
    if (!complete) os << "incomplete: budget exhausted\n";
    write_text(a.out, os.str());
  } else {
    Json doc = io::report_header("bound");
    doc["complete"] = complete;
    if (reports.size() == 1 && !a.from) {
      doc["report"] = io::resilience_json(reports.front(), a.timing);
    } else {
      Json list = Json::array();
      for (const auto& r : reports) list.push_back(io::resilience_json(r, a.timing));
      doc["reports"] = std::move(list);
    }
    write_text(a.out, dump(doc));
  }
  return complete ? kExitOk : kExitIncomplete;
}

// ---- counterexample --------------------------------------------------------

int run_counterexample(int n, std::size_t k, const std::string& out) {
  const Topology topo(n);
  const UpperBoundCounterexample c = upper_bound_counterexample(topo, k);
  Json doc = io::report_header("counterexample");
  doc["counterexample"] = io::counterexample_json(topo, c);
  write_text(out, dump(doc));
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  int n = 0;
  std::string faults;
  std::optional<std::size_t> random_k;
  std::optional<std::uint64_t> seed;
  std::string period = "1";
  std::string truth_out;
  std::string out;
  long magnitude_bound = 5;
  std::string unit = "s";
};

int run_simulate(const SimulateArgs& a) {
  const Topology topo(a.n);
  const Rational period = Rational::parse(a.period);
  if (period.sign() <= 0) throw InputError("--T must be positive");
  if (a.random_k && !a.faults.empty()) throw InputError("use either --faults or --random-K, not both");
  if (a.random_k && !a.seed) throw InputError("--random-K requires --seed");

  std::mt19937_64 rng(a.seed.value_or(0));
  const GroundTruth truth = a.seed ? random_truth(topo, rng) : GroundTruth::zeros(topo);
  const FaultAssignment faults = a.random_k ? random_faults(topo, *a.random_k, period, rng, a.magnitude_bound)
                                            : parse_fault_spec(a.faults, topo, period);
  const MeasurementSet meas = simulate_measurements(topo, truth, faults, period);
  write_text(a.out, dump(io::measurement_file_json(meas, a.unit)));
  if (!a.truth_out.empty()) write_text(a.truth_out, dump(io::truth_file_json(truth, faults, period, a.seed)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault-tolerant network clock synchronization over all-pairs sessions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kToolVersion));

  RecoverArgs rec;
  auto* c_rec = app.add_subcommand("recover", "Recover offsets and faults from a measurement file");
  c_rec->add_option("file", rec.input, "Measurement file (JSON)")->required();
  c_rec->add_option("--truth", rec.truth, "Ground-truth sidecar; adds a correctness verdict");
  c_rec->add_option("--format", rec.format, "Output format")->check(CLI::IsMember({"json", "table"}));
  c_rec->add_option("-o,--out", rec.out, "Write the report here instead of stdout");
  c_rec->add_flag("--force", rec.force, "Allow N > 12");
  c_rec->add_flag("--no-ambiguity-scan", rec.no_scan, "Stop at the first acceptable placement");

  BoundArgs bnd;
  auto* c_bnd = app.add_subcommand("bound", "Compute the lower bound of maximum resilience");
  c_bnd->add_option("N", bnd.n, "Node count")->required();
  c_bnd->add_option("--from", bnd.from, "Also compute every node count from this value up to N");
  c_bnd->add_option("--mode", bnd.mode, "Actual-fault enumeration")->check(CLI::IsMember({"reduced", "exhaustive"}));
  c_bnd->add_option("--max-K", bnd.max_k, "Largest fault count to examine");
  c_bnd->add_option("--budget", bnd.budget, "Wall-clock budget in seconds (0 = unlimited)");
  c_bnd->add_option("--jobs", bnd.jobs, "Worker threads");
  c_bnd->add_option("--format", bnd.format, "Output format")->check(CLI::IsMember({"json", "table"}));
  c_bnd->add_option("-o,--out", bnd.out, "Write the report here instead of stdout");
  c_bnd->add_flag("--force", bnd.force, "Allow N > 12");
  c_bnd->add_flag("--timing", bnd.timing, "Include wall-clock runtime in the report");

  int ce_n = 0;
  std::size_t ce_k = 0;
  std::string ce_out;
  auto* c_ce = app.add_subcommand("counterexample", "Emit the upper-bound counterexample for N nodes and K faults");
  c_ce->add_option("N", ce_n, "Node count")->required();
  c_ce->add_option("K", ce_k, "Fault count (at least N-1)")->required();
  c_ce->add_option("-o,--out", ce_out, "Write the report here instead of stdout");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a measurement file from the nT fault model");
  c_sim->add_option("N", sim.n, "Node count")->required();
  c_sim->add_option("--faults", sim.faults, "Faults as \"(i,j):n,...\" with magnitude n*T");
  c_sim->add_option("--random-K", sim.random_k, "Number of random faults");
  c_sim->add_option("--seed", sim.seed, "Seed; also draws random true offsets");
  c_sim->add_option("--T", sim.period, "Signal period (exact decimal or p/q)");
  c_sim->add_option("--truth", sim.truth_out, "Write the ground-truth sidecar here");
  c_sim->add_option("--magnitude-bound", sim.magnitude_bound, "Random |n| upper bound");
  c_sim->add_option("--unit", sim.unit, "Unit label stored in the file");
  c_sim->add_option("-o,--out", sim.out, "Write the measurement file here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*c_rec) return run_recover(rec);
    if (*c_bnd) return run_bound(bnd);
    if (*c_ce) return run_counterexample(ce_n, ce_k, ce_out);
    if (*c_sim) return run_simulate(sim);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
