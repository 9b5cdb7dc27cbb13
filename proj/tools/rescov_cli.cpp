// rescov: command-line entry points for pools, team selection, scenarios,
// experiments, the operator service, and the clique-cover tool.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rescov/clique_cover.hpp"
#include "rescov/http_service.hpp"
#include "rescov/scenario.hpp"
#include "rescov/service.hpp"
#include "rescov/team_selection.hpp"

namespace {

using nlohmann::json;
using namespace rescov;

constexpr int kExitInfeasible = 2;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kInvalidArgument, "cannot open " + path);
  return json::parse(in);
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::kInvalidArgument, "cannot write " + path);
  out << text;
}

ScenarioConfig load_config(const std::string& path) {
  return path.empty() ? ScenarioConfig{} : read_json_file(path).get<ScenarioConfig>();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw Error(Errc::kInvalidArgument, "empty list: " + text);
  return out;
}

// Accepts "x,y" or "id,x,y" rows; a non-numeric first row is a header.
struct PositionTable {
  std::vector<NodeId> ids;
  std::vector<Vec2> positions;
};

PositionTable read_positions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kInvalidArgument, "cannot open " + path);
  PositionTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    try {
      if (cols.size() == 2) {
        Vec2 p{std::stod(cols[0]), std::stod(cols[1])};
        table.ids.push_back(static_cast<NodeId>(table.ids.size()));
        table.positions.push_back(p);
      } else if (cols.size() == 3) {
        NodeId id = std::stoi(cols[0]);
        Vec2 p{std::stod(cols[1]), std::stod(cols[2])};
        table.ids.push_back(id);
        table.positions.push_back(p);
      } else {
        throw Error(Errc::kInvalidArgument, "expected x,y or id,x,y: " + line);
      }
    } catch (const std::invalid_argument&) {
      if (!first) throw Error(Errc::kInvalidArgument, "bad row: " + line);
    }
    first = false;
  }
  return table;
}

json selection_report(const SolveResult& r, const SpecMap& specs, const InitialSelectionParams& p) {
  double cost = 0.0, area = 0.0;
  std::vector<RobotSpec> team;
  for (RobotId id : r.selection.ids) {
    team.push_back(specs.at(id));
    cost += specs.at(id).cost;
    area += specs.at(id).sense_area;
  }
  return {{"status", to_string(r.status)},
          {"ids", r.selection.ids},
          {"size", r.selection.ids.size()},
          {"total_cost", cost},
          {"total_area", area},
          {"team_failure_probability", team.empty() ? 1.0 : team_failure_probability(team, 0.0, p.horizon)},
          {"nodes", r.nodes}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resilient multi-robot coverage: selection, placement, recovery"};
  app.require_subcommand(1);

  // pool gen
  auto* pool = app.add_subcommand("pool", "Robot pools");
  pool->require_subcommand(1);
  auto* pool_gen = pool->add_subcommand("gen", "Generate a heterogeneous pool");
  ScenarioConfig pool_cfg;
  std::string pool_out;
  pool_gen->add_option("--size", pool_cfg.pool_size, "Number of robots")->capture_default_str();
  pool_gen->add_option("--lifespan-mean", pool_cfg.lifespan_mean)->capture_default_str();
  pool_gen->add_option("--lifespan-std-frac", pool_cfg.lifespan_std_fraction)->capture_default_str();
  pool_gen->add_option("--max-cost", pool_cfg.max_cost)->capture_default_str();
  pool_gen->add_option("--max-area", pool_cfg.max_area)->capture_default_str();
  pool_gen->add_option("--decay", pool_cfg.decay)->capture_default_str();
  pool_gen->add_option("--seed", pool_cfg.seed)->capture_default_str();
  pool_gen->add_option("--out", pool_out, "Output file (stdout if omitted)");

  // select
  auto* select = app.add_subcommand("select", "Minimum-cardinality team selection");
  std::string select_pool;
  InitialSelectionParams sel;
  double time_limit = 5.0;
  std::string select_out;
  select->add_option("--pool", select_pool, "Pool JSON")->required();
  select->add_option("--beta", sel.budget)->capture_default_str();
  select->add_option("--alpha", sel.alpha)->capture_default_str();
  select->add_option("--delta", sel.redundancy)->capture_default_str();
  select->add_option("--area-q", sel.domain_area)->capture_default_str();
  select->add_option("--horizon", sel.horizon)->capture_default_str();
  select->add_option("--time-limit", time_limit, "Solver time limit in seconds")->capture_default_str();
  select->add_option("--out", select_out);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a scripted scenario and write its log");
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--config", sim_config, "Scenario config JSON");
  simulate->add_option("--seed", sim_seed, "Override the config seed");
  simulate->add_option("--out", sim_out, "NDJSON log (stdout if omitted)");

  // serve
  auto* serve = app.add_subcommand("serve", "Start the operator HTTP service");
  std::string serve_config, host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--config", serve_config, "Default scenario config for new sessions");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Trial experiments over neighborhood sizes");
  std::string exp_kind, exp_config, exp_out, exp_Ls = "10,15,20", exp_counts = "10,20,30,40";
  std::optional<std::uint64_t> exp_seed;
  ExperimentOptions exp_opt;
  experiment->add_option("kind", exp_kind, "coverage-vs-L | robots-vs-L | added-robots")
      ->required()
      ->check(CLI::IsMember({"coverage-vs-L", "robots-vs-L", "added-robots"}));
  experiment->add_option("--config", exp_config, "Scenario config JSON");
  experiment->add_option("--seed", exp_seed, "Override the config seed");
  experiment->add_option("--Ls", exp_Ls, "Comma-separated neighborhood sizes")->capture_default_str();
  experiment->add_option("--trials", exp_opt.trials)->capture_default_str();
  experiment->add_option("--jobs", exp_opt.jobs, "Parallel trials")->capture_default_str();
  experiment->add_option("--counts", exp_counts, "Added-robot counts")->capture_default_str();
  experiment->add_option("--out", exp_out, "CSV output (stdout if omitted)");

  // clique-cover
  auto* clique = app.add_subcommand("clique-cover", "Distributed non-overlapping clique cover");
  std::string clique_positions, clique_out;
  double clique_range = 0.0;
  std::size_t degree_cap = CliqueOptions{}.degree_cap;
  clique->add_option("--positions", clique_positions, "CSV of x,y or id,x,y")->required();
  clique->add_option("--range", clique_range, "Communication range")->required();
  clique->add_option("--degree-cap", degree_cap)->capture_default_str();
  clique->add_option("--out", clique_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (pool_gen->parsed()) {
      Rng rng(pool_cfg.seed);
      auto robots = generate_pool(pool_cfg, rng);
      write_output(pool_out, pool_json(robots).dump(2) + "\n");
    } else if (select->parsed()) {
      auto robots = pool_from_json(read_json_file(select_pool));
      SpecMap specs;
      for (const RobotSpec& r : robots) specs[r.id] = r;
      IlpProblem ilp = build_initial_ilp(robots, sel);
      SolveResult r = solve_min_cardinality(ilp, {time_limit});
      if (!r.has_solution()) {
        std::cerr << json{{"error", "SelectionInfeasible"},
                          {"status", to_string(r.status)},
                          {"nodes", r.nodes},
                          {"ilp", ilp}}
                         .dump()
                  << "\n";
        return kExitInfeasible;
      }
      write_output(select_out, selection_report(r, specs, sel).dump(2) + "\n");
    } else if (simulate->parsed()) {
      ScenarioConfig cfg = load_config(sim_config);
      if (sim_seed) cfg.seed = *sim_seed;
      if (cfg.operator_mode != OperatorMode::kScripted) {
        throw Error(Errc::kInvalidArgument, "simulate runs scripted scenarios; use serve for interactive ones");
      }
      RunLog log = run_scenario(cfg);
      write_output(sim_out, log.to_ndjson());
      if (log.count(EventType::kTeamSelected) == 0) {
        std::cerr << log.events().back().to_json().dump() << "\n";
        return kExitInfeasible;
      }
    } else if (serve->parsed()) {
      ScenarioConfig defaults = load_config(serve_config);
      SessionManager sessions;
      httplib::Server server;
      mount_routes(server, sessions, defaults);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        std::cerr << "cannot bind " << host << ":" << port << "\n";
        return 1;
      }
    } else if (experiment->parsed()) {
      ScenarioConfig cfg = load_config(exp_config);
      if (exp_seed) cfg.seed = *exp_seed;
      exp_opt.Ls = parse_list(exp_Ls);
      exp_opt.added_counts.clear();
      for (double c : parse_list(exp_counts)) exp_opt.added_counts.push_back(static_cast<int>(c));
      std::vector<TableRow> rows;
      if (exp_kind == "coverage-vs-L") {
        rows = experiment_coverage_vs_L(cfg, exp_opt);
      } else if (exp_kind == "robots-vs-L") {
        rows = experiment_robots_vs_L(cfg, exp_opt);
      } else {
        rows = experiment_added_robots(cfg, exp_opt);
      }
      write_output(exp_out, table_csv(rows));
    } else if (clique->parsed()) {
      PositionTable table = read_positions(clique_positions);
      CommGraph graph(table.ids, table.positions, clique_range);
      CliqueOptions opts;
      opts.degree_cap = degree_cap;
      CliqueCover cover = distributed_clique_cover(graph, opts);
      std::cerr << "messages: beacons=" << cover.messages.beacons
                << " neighborhood=" << cover.messages.neighborhood_messages
                << " clique=" << cover.messages.clique_messages << "\n";
      json out = blocks_json(cover.blocks);
      write_output(clique_out, out.dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return e.code() == Errc::kSelectionInfeasible ? kExitInfeasible : 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return EXIT_SUCCESS;
}
