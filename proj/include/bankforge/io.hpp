#pragma once

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bankforge/search.hpp"

namespace bankforge {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  fail(errc::invalid_input, "problem file: " + path + ": " + what);
}

template <typename T>
T get_field(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) schema_error(path, "missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    schema_error(path + "." + key, "wrong type");
  }
}

inline Schedule parse_schedule(const std::string& s, const std::string& path) {
  if (s == "sequential") return Schedule::Sequential;
  if (s == "pipelined") return Schedule::Pipelined;
  if (s == "fork_join") return Schedule::ForkJoin;
  if (s == "fork") return Schedule::Fork;
  if (s == "streaming") return Schedule::Streaming;
  schema_error(path, "unknown schedule '" + s + "'");
}

inline UnrollStrategy parse_strategy(const std::string& s, const std::string& path) {
  if (s == "fop" || s == "fork_join_of_pipelines") return UnrollStrategy::ForkJoinOfPipelines;
  if (s == "pof" || s == "pipeline_of_fork_joins") return UnrollStrategy::PipelineOfForkJoins;
  schema_error(path, "unknown unroll strategy '" + s + "'");
}

inline IteratorDomain parse_counter(const json& j, const std::string& path) {
  IteratorDomain it;
  it.name = get_field<std::string>(j, path, "name");
  it.start = j.value("start", i64{0});
  it.step = j.value("step", i64{1});
  it.parallelization = j.value("par", i64{1});
  if (j.contains("stop") && j.at("stop").is_object()) {
    it.dynamic = true;
    const json& sym = j.at("stop");
    it.bound_symbol = get_field<std::string>(sym, path + ".stop", "symbol");
    if (sym.contains("args"))
      for (const auto& a : sym.at("args")) it.bound_args.push_back(a.get<std::string>());
    it.stop = it.start;  // replaced by the concrete bound or clamp
  } else {
    it.stop = get_field<i64>(j, path, "stop");
  }
  if (j.contains("sync")) {
    std::string s = j.at("sync").get<std::string>();
    if (s == "synchronized") it.sync_override = SyncClass::Synchronized;
    else if (s == "unsynchronized") it.sync_override = SyncClass::Unsynchronized;
    else if (s == "partially_synchronized") it.sync_override = SyncClass::PartiallySynchronized;
    else schema_error(path + ".sync", "unknown class '" + s + "'");
  }
  if (j.contains("partial_offsets")) {
    for (const auto& o : j.at("partial_offsets")) it.partial_offsets.push_back(o.get<i64>());
    if (!it.sync_override) it.sync_override = SyncClass::PartiallySynchronized;
  }
  return it;
}

inline Controller parse_controller(const json& j, const std::string& path) {
  Controller c;
  c.id = get_field<std::string>(j, path, "id");
  std::string level = get_field<std::string>(j, path, "level");
  if (level == "inner") c.level = Level::Inner;
  else if (level == "outer") c.level = Level::Outer;
  else schema_error(path + ".level", "expected 'inner' or 'outer'");
  c.schedule = parse_schedule(j.value("schedule", std::string(
                                  c.level == Level::Inner ? "pipelined" : "sequential")),
                              path + ".schedule");
  if (j.contains("counters"))
    for (std::size_t i = 0; i < j.at("counters").size(); ++i)
      c.counters.push_back(
          parse_counter(j.at("counters")[i], path + ".counters[" + std::to_string(i) + "]"));
  if (j.contains("ii")) c.initiation_interval = j.at("ii").get<i64>();
  if (j.contains("latency")) c.latency = j.at("latency").get<i64>();
  if (j.contains("unroll_strategy"))
    c.strategy = parse_strategy(j.at("unroll_strategy").get<std::string>(), path);
  if (j.contains("children"))
    for (std::size_t i = 0; i < j.at("children").size(); ++i)
      c.children.push_back(
          parse_controller(j.at("children")[i], path + ".children[" + std::to_string(i) + "]"));
  return c;
}

inline AffineAccess parse_access(const json& j, const std::string& path,
                                 const std::string& memory_id) {
  AffineAccess a;
  a.id = get_field<std::string>(j, path, "id");
  a.memory_id = j.value("memory", memory_id);
  std::string kind = get_field<std::string>(j, path, "kind");
  if (kind == "read") a.kind = AccessKind::Read;
  else if (kind == "write") a.kind = AccessKind::Write;
  else schema_error(path + ".kind", "expected 'read' or 'write'");
  a.controller = get_field<std::string>(j, path, "controller");
  for (const auto& row : get_field<json>(j, path, "matrix")) {
    std::vector<i64> r;
    for (const auto& v : row) r.push_back(v.get<i64>());
    a.matrix.push_back(std::move(r));
  }
  for (const auto& v : get_field<json>(j, path, "offsets")) a.offsets.push_back(v.get<i64>());
  for (const auto& col : get_field<json>(j, path, "columns")) {
    AccessColumn c;
    if (col.is_string()) {
      c.kind = AccessColumn::Kind::Iterator;
      c.name = col.get<std::string>();
    } else {
      c.kind = AccessColumn::Kind::Symbol;
      c.name = get_field<std::string>(col, path + ".columns", "symbol");
      if (col.contains("args"))
        for (const auto& g : col.at("args")) c.args.push_back(g.get<std::string>());
    }
    a.columns.push_back(std::move(c));
  }
  if (j.contains("cycle")) a.cycle = j.at("cycle").get<i64>();
  return a;
}

}  // namespace detail

inline Problem parse_problem(const json& j) {
  if (!j.contains("version") || j.at("version").get<i64>() != 1)
    fail(errc::invalid_input, "problem file: missing or unsupported 'version' (expected 1)");
  Problem p;
  const json& mem = detail::get_field<json>(j, "$", "memory");
  p.memory_id = detail::get_field<std::string>(mem, "memory", "id");
  for (const auto& d : detail::get_field<json>(mem, "memory", "dims"))
    p.dims.push_back(d.get<i64>());
  if (p.dims.empty() || p.dims.size() > 4)
    fail(errc::invalid_input, "memory rank must be between 1 and 4");
  for (i64 d : p.dims)
    if (d < 1) fail(errc::invalid_input, "memory extents must be positive");
  p.element_bits = mem.value("element_bits", i64{32});
  p.ports = mem.value("ports", i64{1});
  if (p.ports < 1) fail(errc::invalid_input, "ports must be >= 1");

  p.program.strategy =
      detail::parse_strategy(j.value("unroll_strategy", std::string("fop")), "$.unroll_strategy");
  p.program.root = detail::parse_controller(detail::get_field<json>(j, "$", "controllers"),
                                            "$.controllers");
  const json& accesses = detail::get_field<json>(j, "$", "accesses");
  for (std::size_t i = 0; i < accesses.size(); ++i) {
    AffineAccess a = detail::parse_access(accesses[i], "$.accesses[" + std::to_string(i) + "]",
                                          p.memory_id);
    if (a.matrix.size() != p.dims.size())
      fail(errc::invalid_input, "access '" + a.id + "' rank != memory rank");
    p.program.accesses.push_back(std::move(a));
  }

  if (j.contains("concrete_bounds"))
    for (const auto& [k, v] : j.at("concrete_bounds").items())
      p.concrete_bounds[k] = v.get<i64>();
  if (j.contains("symbols")) {
    // {"f": {"0": 3, "1,2": 7}} -> value of f at the comma-joined arguments.
    for (const auto& [name, table] : j.at("symbols").items()) {
      for (const auto& [args, value] : table.items()) {
        std::vector<i64> key;
        std::stringstream ss(args);
        std::string part;
        while (std::getline(ss, part, ','))
          if (!part.empty()) key.push_back(std::strtoll(part.c_str(), nullptr, 10));
        p.symbol_tables[name][key] = value.get<i64>();
      }
    }
  }
  if (j.contains("budget")) {
    const json& b = j.at("budget");
    p.budget.max_n = b.value("max_n", p.budget.max_n);
    p.budget.alpha_max = b.value("alpha_max", p.budget.alpha_max);
    p.budget.b_max = b.value("b_max", p.budget.b_max);
    p.budget.lcm_multiples = b.value("lcm_multiples", p.budget.lcm_multiples);
    p.budget.enum_budget = b.value("enum_budget", p.budget.enum_budget);
    p.budget.sim_budget = b.value("sim_budget", p.budget.sim_budget);
    p.budget.symbol_range = b.value("symbol_range", p.budget.symbol_range);
    p.budget.max_candidates = b.value("max_candidates", p.budget.max_candidates);
    p.budget.max_solutions = b.value("max_solutions", p.budget.max_solutions);
  }
  p.objective = j.value("objective", std::string("lut"));
  if (p.objective != "lut" && p.objective != "ff" && p.objective != "bram")
    fail(errc::invalid_input, "objective must be lut, ff or bram");
  return p;
}

inline Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::invalid_input, "cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(errc::invalid_input, "problem file is not valid JSON: " + std::string(e.what()));
  }
  return parse_problem(j);
}

// ---------------------------------------------------------------------------
// Scheme file.
// ---------------------------------------------------------------------------

inline json dag_to_json(const ResolutionDag& dag) {
  json nodes = json::array();
  for (const auto& n : dag.nodes) {
    json nj;
    nj["op"] = dag_op_name(n.op);
    if (!n.operands.empty()) nj["operands"] = n.operands;
    if (n.op == DagOp::Const || n.op == DagOp::Input) nj["value"] = n.value;
    if (!n.name.empty()) nj["name"] = n.name;
    nodes.push_back(std::move(nj));
  }
  return json{{"nodes", std::move(nodes)},
              {"bank_outputs", dag.bank_outputs},
              {"offset_output", dag.offset_output}};
}

inline ResolutionDag dag_from_json(const json& j) {
  ResolutionDag dag;
  for (const auto& nj : j.at("nodes")) {
    ResolutionDag::Node n;
    std::string op = nj.at("op").get<std::string>();
    bool found = false;
    for (DagOp candidate :
         {DagOp::Input, DagOp::Const, DagOp::Add, DagOp::Sub, DagOp::ShiftLeft, DagOp::ShiftRight,
          DagOp::And, DagOp::Mux, DagOp::Mul, DagOp::Div, DagOp::Mod})
      if (op == dag_op_name(candidate)) {
        n.op = candidate;
        found = true;
      }
    if (!found) fail(errc::invalid_input, "unknown DAG op '" + op + "'");
    if (nj.contains("operands")) n.operands = nj.at("operands").get<std::vector<i64>>();
    n.value = nj.value("value", i64{0});
    n.name = nj.value("name", std::string());
    dag.nodes.push_back(std::move(n));
  }
  dag.bank_outputs = j.at("bank_outputs").get<std::vector<i64>>();
  dag.offset_output = j.at("offset_output").get<i64>();
  return dag;
}

inline json solution_to_json(const Solution& s) {
  json j;
  j["style"] = s.geometry.flat() ? "flat" : "multidimensional";
  j["n"] = s.geometry.banks;
  j["b"] = s.geometry.blocking;
  j["alpha"] = s.geometry.alpha;
  j["p"] = s.geometry.region;
  j["dims"] = s.geometry.dims;
  j["delta"] = s.scheme_metrics.padding;
  j["capacity"] = s.scheme_metrics.bank_capacity;
  j["capacity_bound"] = s.scheme_metrics.capacity_bound;
  j["ports"] = s.ports;
  j["duplication"] = s.duplication;
  j["fan_out"] = s.scheme_metrics.fan_out;
  j["fan_in"] = s.scheme_metrics.fan_in;
  j["predicted"] = {{"lut", s.predicted_lut}, {"ff", s.predicted_ff}, {"bram", s.predicted_bram}};
  j["replay_verified"] = s.replay_verified;
  j["replay_exhaustive"] = s.replay_exhaustive;
  j["census"] = {{"add", s.dag_census.add}, {"sub", s.dag_census.sub},
                 {"shift", s.dag_census.shift}, {"mux", s.dag_census.mux},
                 {"mul", s.dag_census.mul}, {"div", s.dag_census.div},
                 {"mod", s.dag_census.mod}};
  j["dag"] = dag_to_json(s.dag);
  return j;
}

inline Solution solution_from_json(const json& j) {
  Solution s;
  s.geometry.style = j.at("style").get<std::string>() == "flat" ? GeometryStyle::Flat
                                                                 : GeometryStyle::Multidimensional;
  s.geometry.banks = j.at("n").get<std::vector<i64>>();
  s.geometry.blocking = j.at("b").get<std::vector<i64>>();
  s.geometry.alpha = j.at("alpha").get<std::vector<i64>>();
  s.geometry.region = j.at("p").get<std::vector<i64>>();
  s.geometry.dims = j.at("dims").get<std::vector<i64>>();
  s.scheme_metrics.padding = j.at("delta").get<std::vector<i64>>();
  s.scheme_metrics.bank_capacity = j.at("capacity").get<i64>();
  s.scheme_metrics.capacity_bound = j.at("capacity_bound").get<i64>();
  s.ports = j.at("ports").get<i64>();
  s.geometry.ports = s.ports;
  s.duplication = j.at("duplication").get<i64>();
  s.scheme_metrics.fan_out = j.at("fan_out").get<std::vector<i64>>();
  s.scheme_metrics.fan_in = j.at("fan_in").get<std::vector<i64>>();
  s.predicted_lut = j.at("predicted").at("lut").get<double>();
  s.predicted_ff = j.at("predicted").at("ff").get<double>();
  s.predicted_bram = j.at("predicted").at("bram").get<double>();
  s.replay_verified = j.value("replay_verified", false);
  s.replay_exhaustive = j.value("replay_exhaustive", false);
  const json& c = j.at("census");
  s.dag_census = {c.at("add").get<i64>(), c.at("sub").get<i64>(), c.at("shift").get<i64>(),
                  c.at("mux").get<i64>(), c.at("mul").get<i64>(), c.at("div").get<i64>(),
                  c.at("mod").get<i64>()};
  s.dag = dag_from_json(j.at("dag"));
  return s;
}

inline json scheme_to_json(const SolveResult& result, const Problem& problem) {
  json j;
  j["version"] = 1;
  j["memory"] = problem.memory_id;
  j["objective"] = problem.objective;
  j["chosen"] = solution_to_json(result.solutions.front());
  json alts = json::array();
  for (const Solution& s : result.solutions) alts.push_back(solution_to_json(s));
  j["alternatives"] = std::move(alts);
  j["stats"] = {{"flat_examined", result.stats.flat_examined},
                {"multidim_examined", result.stats.multidim_examined},
                {"emptiness_checks", result.stats.emptiness_checks},
                {"valid_geometries", result.stats.valid_geometries},
                {"elapsed_ms", result.stats.elapsed_ms},
                {"notes", result.stats.notes}};
  return j;
}

inline json report_to_json(const ConflictReport& r) {
  json j;
  switch (r.kind) {
    case ConflictReport::Kind::PortOverflow: j["kind"] = "port_overflow"; break;
    case ConflictReport::Kind::OffsetOverflow: j["kind"] = "offset_overflow"; break;
    case ConflictReport::Kind::DagMismatch: j["kind"] = "dag_mismatch"; break;
  }
  j["cycle"] = r.cycle;
  j["group"] = r.group;
  j["duplicate"] = r.duplicate;
  j["bank"] = r.bank;
  j["accesses"] = r.accesses;
  j["message"] = r.message;
  return j;
}

}  // namespace bankforge
