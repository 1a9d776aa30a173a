/*
 * Copyright 2026 The costbo Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "costbo/experiments.hpp"

namespace fs = std::filesystem;
using namespace costbo;

namespace {

struct Shared {
  std::string suite;
  std::size_t seeds = 0;
  std::string out = "costbo_out";
  std::string config;
  int jobs = 0;
};

ExperimentSpec load_spec(const Shared& sh) {
  ExperimentSpec spec;
  if (!sh.config.empty()) {
    std::ifstream in(sh.config);
    if (!in) throw IoError("cannot open config " + sh.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(sh.config + ": " + e.what());
    }
    spec = ExperimentSpec::from_json(j);
  }
  if (!sh.suite.empty()) spec.suite = sh.suite;
  if (sh.seeds > 0) spec.seeds = sh.seeds;
  if (sh.jobs > 0) spec.jobs = sh.jobs;
  spec.validate();
  return spec;
}

void write_lines(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

void write_traces_and_summary(const fs::path& dir, const std::vector<StoredTrace>& traces) {
  std::vector<std::string> rows;
  for (const auto& t : traces) {
    write_trace_file(dir / "traces", t);
    rows.push_back(summary_row(t));
  }
  write_lines(dir / "summary.csv", kSummaryHeader, rows);
}

std::set<std::string> alpha_names(const ExperimentSpec& spec) {
  std::set<std::string> s;
  for (const auto& k : spec.alpha_grid()) s.insert(k.name());
  return s;
}

void write_ranks(const fs::path& dir, const ExperimentSpec& spec, const std::vector<StoredTrace>& traces) {
  const auto budgets = minimal_budgets(traces, alpha_names(spec));
  std::vector<std::string> brows;
  for (const auto& [p, b] : budgets) {
    std::ostringstream os;
    os.precision(17);
    os << p << ',' << b;
    brows.push_back(os.str());
  }
  write_lines(dir / "minimal_budget.csv", "problem,minimal_budget", brows);
  std::vector<std::string> rows;
  for (const auto& r : rank_table(traces, budgets, spec.multiples, spec.bootstrap_seed)) rows.push_back(csv_row(r));
  write_lines(dir / "ranks.csv", kRankHeader, rows);
  std::cout << "wrote " << (dir / "ranks.csv").string() << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = csv::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail(std::string_view kind, const std::string& message, int code) {
  nlohmann::json rec{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << rec.dump() << '\n';
  std::exit(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"costbo: cost-aware Bayesian optimization experiments"};
  app.require_subcommand(1);
  Shared sh;
  auto add_shared = [&](CLI::App* c) {
    c->add_option("--suite", sh.suite, "problem suite: default, expensive, or objective/surface list");
    c->add_option("--seeds", sh.seeds, "number of seeds");
    c->add_option("--out", sh.out, "output directory");
    c->add_option("--config", sh.config, "JSON experiment configuration");
    c->add_option("--jobs", sh.jobs, "concurrent runs");
  };

  // run
  auto* run_cmd = app.add_subcommand("run", "run BO on each problem and seed, writing JSON-lines traces");
  add_shared(run_cmd);
  std::string acquisition = "ei", cost_model, table, space_file;
  std::size_t iterations = 0;
  double cost_budget = 0.0;
  std::uint64_t first_seed = 0;
  run_cmd->add_option("--acquisition", acquisition, "ei, eipu, eicool, ei_alpha_<a>, cei_<l>");
  run_cmd->add_option("--cost-model", cost_model, "warped_gp, lv1..lv3, gplv, limited_gp3");
  run_cmd->add_option("--iterations", iterations, "evaluation budget");
  run_cmd->add_option("--cost-budget", cost_budget, "simulated cost budget");
  run_cmd->add_option("--first-seed", first_seed, "seed of the first run");
  run_cmd->add_option("--table", table, "replay a tabulated CSV (columns per dimension, y, cost)");
  run_cmd->add_option("--space", space_file, "JSON search space for --table (default: XGBoost space)");

  auto* biopt_cmd = app.add_subcommand("biopt", "accuracy/cost trade-off of the acquisition grid vs EI");
  add_shared(biopt_cmd);

  auto* alloc_cmd = app.add_subcommand("time-alloc", "rank methods at multiples of the minimal budget");
  add_shared(alloc_cmd);

  auto* rank_cmd = app.add_subcommand("rank", "recompute the rank table from stored traces in --out");
  add_shared(rank_cmd);

  auto* cost_cmd = app.add_subcommand("cost-eval", "held-out log-RMSE of every cost model");
  add_shared(cost_cmd);
  std::string n_train = "4,8,16,32", kinds, data_file;
  cost_cmd->add_option("--n-train", n_train, "comma list of training sizes");
  cost_cmd->add_option("--models", kinds, "comma list of cost model kinds (default: all)");
  cost_cmd->add_option("--data", data_file, "cost CSV over the XGBoost space (optional meta columns)");

  auto* pareto_cmd = app.add_subcommand("pareto-trace", "per-iteration Pareto fronts of one run");
  add_shared(pareto_cmd);
  std::string problem = "branin/expensive_optimum";
  std::uint64_t pseed = 0;
  pareto_cmd->add_option("--problem", problem, "objective/surface");
  pareto_cmd->add_option("--acquisition", acquisition, "acquisition kind");
  pareto_cmd->add_option("--iterations", iterations, "evaluation budget");
  pareto_cmd->add_option("--seed", pseed, "run seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what(), 2);
  }

  try {
    const fs::path out(sh.out);
    if (*run_cmd) {
      const auto spec = load_spec(sh);
      RunConfig base = spec.run_config(AcquisitionKind::parse(acquisition), 0,
                                       Budget::iterations_of(iterations > 0 ? iterations : spec.iterations));
      if (!cost_model.empty()) base.cost_model = CostModelKind::parse(cost_model);
      if (cost_budget > 0.0) {
        base.budget = Budget::simulated_cost(cost_budget);
        base.max_evaluations = spec.max_evaluations;
      }
      std::vector<StoredTrace> traces;
      if (!table.empty()) {
        SearchSpace space = xgboost_space();
        if (!space_file.empty()) {
          std::ifstream in(space_file);
          if (!in) throw IoError("cannot open " + space_file);
          space = space_from_json(nlohmann::json::parse(in));
        }
        for (std::size_t s = 0; s < spec.seeds; ++s) {
          auto box = load_tabular(table, space);
          RunConfig c = base;
          c.seed = first_seed + s;
          traces.push_back(stored_trace(run(*box, c), box->known_minimum()));
        }
      } else {
        std::vector<RunJob> jobs;
        for (const auto& p : make_suite(spec.suite)) {
          for (std::size_t s = 0; s < spec.seeds; ++s) {
            RunConfig c = base;
            c.seed = first_seed + s;
            jobs.push_back({p, c});
          }
        }
        traces = run_jobs(jobs, spec.jobs);
      }
      write_traces_and_summary(out, traces);
      std::cout << "wrote " << traces.size() << " traces to " << (out / "traces").string() << '\n';
    } else if (*biopt_cmd) {
      const auto spec = load_spec(sh);
      write_traces_and_summary(out, run_jobs(biopt_jobs(spec), spec.jobs));
      const auto traces = read_trace_dir(out / "traces");
      std::vector<std::string> rows;
      for (const auto& r : tradeoff_rows(traces, spec.bootstrap_seed)) rows.push_back(csv_row(r));
      write_lines(out / "tradeoff.csv", kTradeoffHeader, rows);
      std::cout << "wrote " << (out / "tradeoff.csv").string() << '\n';
    } else if (*alloc_cmd) {
      const auto spec = load_spec(sh);
      const auto ref = run_jobs(reference_jobs(spec), spec.jobs);
      const auto budgets = minimal_budgets(ref, alpha_names(spec));
      auto all = ref;
      for (auto& t : run_jobs(allocation_jobs(spec, budgets), spec.jobs)) all.push_back(std::move(t));
      write_traces_and_summary(out, all);
      write_ranks(out, spec, read_trace_dir(out / "traces"));
    } else if (*rank_cmd) {
      const auto spec = load_spec(sh);
      write_ranks(out, spec, read_trace_dir(out / "traces"));
    } else if (*cost_cmd) {
      const auto spec = load_spec(sh);
      CostEvalSpec ce;
      ce.seeds = spec.seeds;
      ce.bootstrap_seed = spec.bootstrap_seed;
      ce.n_train.clear();
      for (const auto& s : split_list(n_train)) {
        try {
          ce.n_train.push_back(std::stoul(s));
        } catch (const std::exception&) {
          throw ConfigError("--n-train: bad size '" + s + "'");
        }
      }
      if (!kinds.empty()) {
        ce.kinds.clear();
        for (const auto& k : split_list(kinds)) ce.kinds.push_back(CostModelKind::parse(k));
      }
      std::vector<std::string> warnings;
      if (!data_file.empty()) {
        const auto csv = read_cost_csv(data_file, xgboost_space());
        const bool has_meta = std::all_of(csv.meta.begin(), csv.meta.end(), [](const auto& m) { return m.has_value(); });
        if (has_meta) {
          ce.data = to_transfer_dataset(csv);
        } else {
          ce.data = TransferDataset{TransferTask{MetaFeatures{}, csv.samples}};
        }
        if (ce.data->size() < 2) {
          std::erase_if(ce.kinds, [&](const CostModelKind& k) {
            if (k.is_transfer()) warnings.push_back(k.name() + ": needs at least two tasks; skipped");
            return k.is_transfer();
          });
        }
      }
      std::vector<std::string> rows;
      for (const auto& r : cost_eval(ce, &warnings)) rows.push_back(csv_row(r));
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      write_lines(out / "cost_eval.csv", kCostEvalHeader, rows);
      std::cout << "wrote " << (out / "cost_eval.csv").string() << '\n';
    } else if (*pareto_cmd) {
      const auto spec = load_spec(sh);
      const auto problems = make_suite(problem);
      if (problems.size() != 1) throw ConfigError("--problem takes a single objective/surface pair");
      auto box = problems[0].make(pseed);
      RunConfig c = spec.run_config(AcquisitionKind::parse(acquisition), pseed,
                                    Budget::iterations_of(iterations > 0 ? iterations : spec.iterations));
      const auto res = pareto_trace(*box, c);
      fs::create_directories(out);
      {
        std::ofstream t(out / "trace.jsonl", std::ios::binary);
        write_trace(t, res.trace);
      }
      auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
      };
      std::vector<std::string> rows;
      for (const auto& f : res.fronts) {
        rows.push_back(std::to_string(f.iteration) + ',' + num(f.ei) + ',' + num(f.cost) + ',' +
                       (f.survived ? (*f.survived ? "1" : "0") : ""));
      }
      write_lines(out / "fronts.csv", "iteration,ei,cost,survived_flag", rows);
      rows.clear();
      for (const auto& m : res.markers) {
        rows.push_back(std::to_string(m.iteration) + ',' + num(m.alpha) + ',' + std::to_string(m.index) + ',' +
                       num(m.ei) + ',' + num(m.cost));
      }
      write_lines(out / "markers.csv", "iteration,alpha,candidate_index,ei,cost", rows);
      rows.clear();
      for (const auto& p : res.persistence) {
        rows.push_back(std::to_string(p.iteration) + ',' + std::to_string(p.survived) + ',' + std::to_string(p.total));
      }
      write_lines(out / "persistence.csv", "iteration,survived,total", rows);
      rows.clear();
      for (const auto& i : res.implied) {
        rows.push_back(std::to_string(i.iteration) + ',' +
                       (i.implied ? num(i.implied->lower) + ',' + num(i.implied->upper) + ',' + num(i.implied->value)
                                  : std::string(",,")));
      }
      write_lines(out / "implied_alpha.csv", "iteration,alpha_lower,alpha_upper,alpha", rows);
      std::cout << "wrote Pareto trace to " << out.string() << '\n';
    }
  } catch (const Error& e) {
    const bool user = e.kind() == ErrorKind::kConfig || e.kind() == ErrorKind::kUsage;
    fail(to_string(e.kind()), e.what(), user ? 2 : 1);
  } catch (const std::exception& e) {
    fail("internal", e.what(), 1);
  }
  return 0;
}
