#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>

#include "bankforge/bankforge.hpp"

namespace bf = bankforge;

namespace {

bf::CostModels load_or_train_models(const std::string& lut_path, const std::string& ff_path,
                                    const std::string& bram_path, bf::u64 seed) {
  if (!lut_path.empty() && !ff_path.empty() && !bram_path.empty()) {
    auto load = [](const std::string& p) {
      std::ifstream in(p);
      if (!in) bf::fail(bf::errc::invalid_input, "cannot open model file: " + p);
      nlohmann::json j;
      in >> j;
      return bf::model_from_json(j);
    };
    return {load(lut_path), load(ff_path), load(bram_path)};
  }
  std::cerr << "training default cost models (seed " << seed << ")...\n";
  return bf::default_cost_models(seed);
}

int cmd_solve(const std::string& problem_path, const std::string& out_path, bf::i64 top,
              const std::string& objective, bool no_multidim, bf::u64 seed,
              const std::string& m_lut, const std::string& m_ff, const std::string& m_bram) {
  bf::Problem problem = bf::load_problem(problem_path);
  if (!objective.empty()) problem.objective = objective;
  if (no_multidim) problem.budget.multidim = false;
  problem.budget.seed = seed;

  bf::CostModels models = load_or_train_models(m_lut, m_ff, m_bram, seed);
  bf::SolveResult result = bf::solve(problem, &models);
  if (top > 0 && static_cast<bf::i64>(result.solutions.size()) > top)
    result.solutions.resize(static_cast<std::size_t>(top));

  std::cout << "solved " << problem.memory_id << ": " << result.stats.valid_geometries
            << " valid scheme(s), " << result.stats.flat_examined << " flat + "
            << result.stats.multidim_examined << " multidim candidates, "
            << result.stats.emptiness_checks << " emptiness checks, " << std::fixed
            << std::setprecision(1) << result.stats.elapsed_ms << " ms\n";
  for (const std::string& note : result.stats.notes) std::cout << "note: " << note << "\n";
  std::cout << "rank  geometry                                   ports dup  pred_" << problem.objective
            << "\n";
  for (std::size_t i = 0; i < result.solutions.size() && i < 10; ++i) {
    const bf::Solution& s = result.solutions[i];
    double obj = problem.objective == "ff"
                     ? s.predicted_ff
                     : (problem.objective == "bram" ? s.predicted_bram : s.predicted_lut);
    std::cout << std::setw(4) << i + 1 << "  " << std::setw(42) << std::left
              << s.geometry.signature() << std::right << std::setw(4) << s.ports << std::setw(4)
              << s.duplication << "  " << std::setprecision(1) << obj << "\n";
  }

  bf::json scheme = bf::scheme_to_json(result, problem);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) bf::fail(bf::errc::invalid_input, "cannot write scheme file: " + out_path);
    out << scheme.dump(2) << "\n";
    std::cout << "scheme written to " << out_path << "\n";
  } else {
    std::cout << scheme.dump(2) << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& problem_path, const std::string& scheme_path) {
  bf::Problem problem = bf::load_problem(problem_path);
  std::ifstream in(scheme_path);
  if (!in) bf::fail(bf::errc::invalid_input, "cannot open scheme file: " + scheme_path);
  bf::json sj;
  try {
    in >> sj;
  } catch (const nlohmann::json::exception& e) {
    bf::fail(bf::errc::invalid_input, "scheme file is not valid JSON: " + std::string(e.what()));
  }
  bf::Solution sol = bf::solution_from_json(sj.at("chosen"));

  bf::PreparedProblem prep = bf::prepare(problem);
  std::vector<std::vector<bf::AccessGroup>> dup_groups;
  if (sol.duplication == 1) {
    dup_groups.push_back(prep.groups);
  } else {
    for (const auto& subset :
         bf::detail::duplication_split(prep.unrolled.accesses, sol.duplication))
      dup_groups.push_back(
          bf::detail::group_subset(prep.unrolled.root, prep.unrolled.accesses, subset));
  }
  bf::ReplayOptions opts;
  opts.cycle_budget = problem.budget.sim_budget;
  opts.ports = sol.ports;
  opts.symbol_tables = problem.symbol_tables;
  bf::ReplayResult rr = bf::replay(dup_groups, prep.unrolled.accesses, sol.geometry, sol.dag,
                                   sol.scheme_metrics.bank_capacity, opts);
  if (rr.ok) {
    std::cout << "scheme verified: " << rr.trace.total_cycles << " cycle(s), "
              << (rr.trace.exhaustive ? "exhaustive" : "sampled, not exhaustive") << "\n";
    return 0;
  }
  std::cout << rr.report->to_string() << "\n";
  std::cout << bf::report_to_json(*rr.report).dump(2) << "\n";
  return 3;
}

int cmd_rewrite(bf::i64 mod_c, bf::i64 div_c, bf::i64 mul_c, int width, int radius) {
  if (width < 1 || width > 32) bf::fail(bf::errc::invalid_input, "--width must be in [1, 32]");
  int given = (mod_c > 0) + (div_c > 0) + (mul_c > 0);
  if (given != 1) bf::fail(bf::errc::invalid_input, "give exactly one of --mod, --div, --mul");

  bf::DagBuilder b;
  bf::i64 max_in = (bf::i64{1} << width) - 1;
  bf::i64 x = b.input("x", 0, max_in);
  bf::i64 out;
  std::string opname;
  if (mod_c > 0) {
    out = b.mod_const(x, mod_c);
    opname = "x mod " + std::to_string(mod_c);
  } else if (div_c > 0) {
    out = b.div_const(x, div_c);
    opname = "x / " + std::to_string(div_c);
  } else {
    out = b.mul_const(x, mul_c, radius);
    opname = "x * " + std::to_string(mul_c);
  }
  b.dag.bank_outputs.push_back(out);
  const bf::ResolutionDag& dag = b.dag;

  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    const auto& n = dag.nodes[i];
    std::cout << std::setw(3) << i << ": " << bf::dag_op_name(n.op);
    if (n.op == bf::DagOp::Const) std::cout << " " << n.value;
    if (n.op == bf::DagOp::Input) std::cout << " " << n.name;
    for (bf::i64 o : n.operands) std::cout << " %" << o;
    std::cout << "\n";
  }
  bf::DagCensus c = bf::census(dag);
  std::cout << "census: add=" << c.add << " sub=" << c.sub << " shift=" << c.shift
            << " mux=" << c.mux << " mul=" << c.mul << " div=" << c.div << " mod=" << c.mod
            << "\n";

  bf::i64 limit = bf::i64{1} << width;
  for (bf::i64 v = 0; v < limit; ++v) {
    bf::i64 got = dag.eval({v}).banks[0];
    bf::i64 want = mod_c > 0 ? bf::floor_mod(v, mod_c)
                             : (div_c > 0 ? bf::floor_div(v, div_c) : v * mul_c);
    if (got != want) {
      std::cout << "MISMATCH at x=" << v << ": dag=" << got << " direct=" << want << "\n";
      return 3;
    }
  }
  std::cout << opname << ": equivalent over [0," << limit << ")\n";
  return 0;
}

int cmd_cost_train(const std::string& csv_path, const std::string& target,
                   const std::string& out_path) {
  std::ifstream in(csv_path);
  if (!in) bf::fail(bf::errc::invalid_input, "cannot open dataset: " + csv_path);
  bf::Dataset data = bf::read_dataset_csv(in);
  std::vector<std::vector<double>> expanded;
  for (const auto& r : data.rows) expanded.push_back(bf::poly_expand(r));
  bf::GbtParams params;
  bf::GbtModel m0 = bf::train(expanded, data.target(target), params, target);
  bf::GbtModel m = bf::select_and_retrain(m0, expanded, data.target(target), 36);

  std::vector<double> pred;
  for (const auto& r : expanded) pred.push_back(m.predict(r));
  std::cout << "trained " << target << " model on " << data.rows.size()
            << " rows, train R^2 = " << bf::r_squared(data.target(target), pred) << "\n";
  std::ofstream out(out_path);
  if (!out) bf::fail(bf::errc::invalid_input, "cannot write model: " + out_path);
  out << bf::model_to_json(m).dump(2) << "\n";
  return 0;
}

int cmd_cost_predict(const std::string& model_path, const std::string& features_path) {
  std::ifstream min(model_path);
  if (!min) bf::fail(bf::errc::invalid_input, "cannot open model: " + model_path);
  nlohmann::json mj;
  min >> mj;
  bf::GbtModel m = bf::model_from_json(mj);

  std::ifstream fin(features_path);
  if (!fin) bf::fail(bf::errc::invalid_input, "cannot open features: " + features_path);
  nlohmann::json fj;
  fin >> fj;
  std::vector<double> raw(bf::kRawFeatureCount, 0.0);
  const auto& names = bf::feature_names();
  if (fj.is_array()) {
    if (fj.size() != names.size())
      bf::fail(bf::errc::invalid_input, "feature array must have " +
                                            std::to_string(names.size()) + " entries");
    for (std::size_t i = 0; i < names.size(); ++i) raw[i] = fj[i].get<double>();
  } else {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (fj.contains(names[i])) raw[i] = fj.at(names[i]).get<double>();
  }
  std::cout << m.target << " = " << m.predict(bf::poly_expand(raw)) << "\n";
  return 0;
}

int cmd_cost_curves(const std::string& csv_path, const std::string& target,
                    const std::string& out_path) {
  std::ifstream in(csv_path);
  if (!in) bf::fail(bf::errc::invalid_input, "cannot open dataset: " + csv_path);
  bf::Dataset data = bf::read_dataset_csv(in);
  bf::GbtParams params;
  auto curve = bf::cross_validate(data, params, target);
  std::ofstream out(out_path);
  if (!out) bf::fail(bf::errc::invalid_input, "cannot write curves: " + out_path);
  bf::write_curves_csv(curve, out);
  for (const auto& p : curve)
    std::cout << "fraction " << p.fraction << ": test R^2 = " << p.mean_test_r2 << " +- "
              << p.std_test_r2 << "\n";
  return 0;
}

int cmd_cost_synth(bf::i64 rows, bf::u64 seed, const std::string& out_path) {
  bf::Dataset data = bf::generate_dataset(static_cast<std::size_t>(rows), seed);
  if (out_path.empty()) {
    bf::write_dataset_csv(data, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) bf::fail(bf::errc::invalid_input, "cannot write dataset: " + out_path);
    bf::write_dataset_csv(data, out);
    std::cout << "wrote " << data.rows.size() << " rows to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bankforge: memory banking scheme solver for parallel on-chip arrays"};
  app.require_subcommand(1);

  // solve
  std::string problem_path, out_path, objective, m_lut, m_ff, m_bram;
  bf::i64 top = 0;
  bool no_multidim = false;
  bf::u64 seed = 30;
  auto* solve_cmd = app.add_subcommand("solve", "compute and rank banking schemes");
  solve_cmd->add_option("problem", problem_path, "problem JSON file")->required();
  solve_cmd->add_option("--out", out_path, "write the scheme JSON here");
  solve_cmd->add_option("--top", top, "keep only the best N alternatives (0 = all)");
  solve_cmd->add_option("--objective", objective, "lut, ff or bram");
  solve_cmd->add_flag("--no-multidim", no_multidim, "search flat geometries only");
  solve_cmd->add_option("--seed", seed, "seed for model training and sampling");
  solve_cmd->add_option("--model-lut", m_lut, "trained LUT model JSON");
  solve_cmd->add_option("--model-ff", m_ff, "trained FF model JSON");
  solve_cmd->add_option("--model-bram", m_bram, "trained BRAM model JSON");

  // verify
  std::string v_problem, v_scheme;
  auto* verify_cmd = app.add_subcommand("verify", "replay a scheme against its problem");
  verify_cmd->add_option("problem", v_problem, "problem JSON file")->required();
  verify_cmd->add_option("scheme", v_scheme, "scheme JSON file")->required();

  // rewrite
  bf::i64 r_mod = 0, r_div = 0, r_mul = 0;
  int r_width = 16, r_radius = 2;
  auto* rewrite_cmd = app.add_subcommand("rewrite", "dump and check a strength-reduced DAG");
  rewrite_cmd->add_option("--mod", r_mod, "build x mod M");
  rewrite_cmd->add_option("--div", r_div, "build x / M");
  rewrite_cmd->add_option("--mul", r_mul, "build x * C");
  rewrite_cmd->add_option("--width", r_width, "input bit width (default 16)");
  rewrite_cmd->add_option("--radius", r_radius, "shift-add radius (default 2)");

  // cost
  auto* cost_cmd = app.add_subcommand("cost", "resource model utilities");
  cost_cmd->require_subcommand(1);
  std::string c_csv, c_target = "lut", c_out, c_model, c_features;
  bf::i64 c_rows = 831;
  bf::u64 c_seed = 30;
  auto* train_cmd = cost_cmd->add_subcommand("train", "train a model from a CSV dataset");
  train_cmd->add_option("data", c_csv, "dataset CSV")->required();
  train_cmd->add_option("--target", c_target, "lut, ff or bram");
  train_cmd->add_option("--out", c_out, "model JSON output")->required();
  auto* predict_cmd = cost_cmd->add_subcommand("predict", "predict from a model");
  predict_cmd->add_option("model", c_model, "model JSON")->required();
  predict_cmd->add_option("features", c_features, "features JSON (named map or array)")
      ->required();
  auto* curves_cmd = cost_cmd->add_subcommand("curves", "cross-validation learning curves");
  curves_cmd->add_option("data", c_csv, "dataset CSV")->required();
  curves_cmd->add_option("--target", c_target, "lut, ff or bram");
  curves_cmd->add_option("--out", c_out, "curves CSV output")->required();
  auto* synth_cmd = cost_cmd->add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--rows", c_rows, "row count (default 831)");
  synth_cmd->add_option("--seed", c_seed, "generator seed (default 30)");
  synth_cmd->add_option("--out", c_out, "CSV output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed())
      return cmd_solve(problem_path, out_path, top, objective, no_multidim, seed, m_lut, m_ff,
                       m_bram);
    if (verify_cmd->parsed()) return cmd_verify(v_problem, v_scheme);
    if (rewrite_cmd->parsed()) return cmd_rewrite(r_mod, r_div, r_mul, r_width, r_radius);
    if (cost_cmd->parsed()) {
      if (train_cmd->parsed()) return cmd_cost_train(c_csv, c_target, c_out);
      if (predict_cmd->parsed()) return cmd_cost_predict(c_model, c_features);
      if (curves_cmd->parsed()) return cmd_cost_curves(c_csv, c_target, c_out);
      if (synth_cmd->parsed()) return cmd_cost_synth(c_rows, c_seed, c_out);
    }
  } catch (const bf::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
