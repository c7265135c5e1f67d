// jssl: joint survival super learner command-line tool.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jssl/benchmark.hpp"
#include "jssl/data.hpp"
#include "jssl/error.hpp"
#include "jssl/prediction.hpp"
#include "jssl/selection.hpp"
#include "jssl/simulation.hpp"
#include "jssl/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code(jssl::ErrorKind k) {
  switch (k) {
    case jssl::ErrorKind::usage: return kExitUsage;
    case jssl::ErrorKind::data: return kExitData;
    case jssl::ErrorKind::numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw jssl::SchemaError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw jssl::SchemaError(path + ": " + e.what());
  }
}

std::ofstream open_output(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw jssl::SchemaError("cannot write " + path);
  return out;
}

// --seed beats JSSL_SEED, which beats the config file.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv("JSSL_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw jssl::InvalidConfiguration(std::string("JSSL_SEED is not an unsigned integer: ") + env);
    }
  }
  return config_seed;
}

// ---- simulate ----

struct SimulateArgs {
  std::string scenario;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string latent;
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.n == 0) throw jssl::InvalidConfiguration("--n must be positive");
  const auto s = jssl::load_scenario(a.scenario);
  const auto seed = resolve_seed(a.seed, 1);
  const auto sim = jssl::simulate_dataset(s, a.n, seed);
  {
    auto out = open_output(a.out);
    jssl::write_dataset(out, sim.data);
  }
  if (!a.latent.empty()) {
    auto out = open_output(a.latent);
    out << "T,D,C\n" << std::setprecision(17);
    for (const auto& r : sim.latent) out << r.event_time << ',' << r.cause << ',' << r.censor_time << '\n';
  }
  std::size_t events = 0, cause1 = 0, censored_by_tau = 0, latent_event = 0, latent_censor = 0;
  for (const auto& r : sim.latent) {
    if (r.observed.status != jssl::kCensored) ++events;
    if (r.observed.status == jssl::kCause1) ++cause1;
    if (r.observed.status == jssl::kCensored && r.observed.time <= s.tau) ++censored_by_tau;
    if (r.event_time <= s.tau && r.cause == jssl::kCause1) ++latent_event;
    if (r.censor_time <= s.tau) ++latent_censor;
  }
  const double n = static_cast<double>(a.n);
  std::cout << std::fixed << std::setprecision(4) << "observed event fraction: " << events / n
            << "\nobserved cause-1 fraction: " << cause1 / n << "\nobserved censored by tau: " << censored_by_tau / n
            << "\nlatent P(T<=tau, D=1): " << latent_event / n << "\nlatent P(C<=tau): " << latent_censor / n << '\n';
  return kExitOk;
}

// ---- calibrate ----

struct CalibrateArgs {
  std::string scenario;
  double event_rate = 0.246;
  double censor_rate = 0.619;
  double horizon = 36.0;
  std::size_t n = 50000;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string name;
  std::string mode;
};

int cmd_calibrate(const CalibrateArgs& a) {
  auto templ = jssl::load_scenario(a.scenario);
  if (!a.mode.empty()) {
    if (a.mode == "dependent") templ.mode = jssl::CensoringMode::dependent;
    else if (a.mode == "independent") templ.mode = jssl::CensoringMode::independent;
    else throw jssl::InvalidConfiguration("--mode must be dependent or independent");
  }
  jssl::CalibrationOptions opt;
  opt.n = a.n;
  opt.seed = resolve_seed(a.seed, opt.seed);
  auto s = jssl::calibrate_scenario({a.event_rate, a.censor_rate, a.horizon}, templ, opt);
  if (!a.name.empty()) s.name = a.name;
  jssl::save_scenario(a.out, s);
  const auto rates = jssl::marginal_rates(s, a.horizon, opt.n, opt.seed);
  std::cout << std::setprecision(6) << "cause1 scale " << s.cause1.scale << ", censoring scale " << s.censoring.scale
            << "\nevent rate " << rates.event_rate << ", censoring rate " << rates.censor_rate << '\n';
  return kExitOk;
}

// ---- select ----

struct SelectArgs {
  std::string data;
  std::string config;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> repetitions;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string table;
  std::string table_json;
  std::string manifest;
  bool product_limit = false;
};

int cmd_select(const SelectArgs& a) {
  const auto config = read_json(a.config);
  const auto specs = jssl::LibrarySpecs::from_json(config.contains("libraries") ? config["libraries"] : config);
  const auto libraries = specs.build();
  const std::size_t folds = a.folds.value_or(config.value("folds", std::size_t{5}));
  const std::size_t reps = a.repetitions.value_or(config.value("repetitions", std::size_t{1}));
  if (!a.tau && !config.contains("tau")) throw jssl::InvalidConfiguration("tau must be given by --tau or the config");
  const double tau = a.tau.value_or(config.value("tau", 0.0));
  const auto seed = resolve_seed(a.seed, config.value("seed", std::uint64_t{1}));

  const auto d = jssl::load_dataset(a.data);
  if (d.empty()) throw jssl::EmptyInputError(a.data + " has no observations");
  const auto plan = jssl::make_folds(d.size(), folds, reps, seed);
  jssl::SelectionOptions options;
  options.jobs = a.jobs;
  options.composition.product_limit = a.product_limit;
  const auto selection = jssl::select_discrete_jssl(libraries, d, plan, tau, seed, options);

  {
    auto out = open_output(a.table);
    selection.table.write_csv(out);
  }
  if (!a.table_json.empty()) {
    auto out = open_output(a.table_json);
    out << selection.table.to_json().dump(2) << '\n';
  }

  // Refit the selected triple on the full data set.
  const auto& key = selection.selected;
  json models = json::array();
  const std::array<const jssl::LearnerPtr*, 3> chosen{&libraries.cause1[key.a1], &libraries.cause2[key.a2],
                                                     &libraries.censoring[key.b]};
  const std::array<jssl::Target, 3> targets{jssl::Target::cause1, jssl::Target::cause2, jssl::Target::censoring};
  const std::array<const std::vector<jssl::LearnerSpec>*, 3> role_specs{&specs.cause1, &specs.cause2, &specs.censoring};
  const std::array<std::size_t, 3> index{key.a1, key.a2, key.b};
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& learner = *chosen[r];
    const auto hazard =
        learner->fit(d, targets[r], jssl::fit_seed(seed, jssl::kFullDataRepetition, 0, learner->name()));
    models.push_back({{"role", jssl::to_string(targets[r])},
                      {"learner", (*role_specs[r])[index[r]].to_json()},
                      {"hazard", hazard->to_json()}});
  }
  json manifest{{"tau", tau},
                {"seed", seed},
                {"folds", folds},
                {"repetitions", reps},
                {"covariates", d.covariate_names()},
                {"selected", {key.names[0], key.names[1], key.names[2]}},
                {"loss", selection.table.rows.front().loss},
                {"product_limit", a.product_limit},
                {"models", models}};
  {
    auto out = open_output(a.manifest);
    out << manifest.dump() << '\n';
  }
  std::cout << "selected: " << key.names[0] << " & " << key.names[1] << " & " << key.names[2] << " (loss "
            << std::setprecision(6) << selection.table.rows.front().loss << ", " << selection.table.rows.size()
            << " triples, " << selection.fits_per_fold << " fits per fold)\n";
  return kExitOk;
}

// ---- predict ----

struct PredictArgs {
  std::string manifest;
  std::string query;
  std::string out;
  std::string time_column = "t";
};

// Query CSV: optional row_id, the time column, and every model covariate by name.
int cmd_predict(const PredictArgs& a) {
  const auto manifest = read_json(a.manifest);
  std::vector<std::string> covariates;
  std::map<std::string, jssl::HazardPtr> hazards;
  double tau = 0.0;
  bool product_limit = false;
  try {
    covariates = manifest.at("covariates").get<std::vector<std::string>>();
    tau = manifest.at("tau").get<double>();
    product_limit = manifest.value("product_limit", false);
    for (const auto& m : manifest.at("models")) hazards[m.at("role").get<std::string>()] = jssl::hazard_from_json(m.at("hazard"));
  } catch (const json::exception& e) {
    throw jssl::SchemaError(a.manifest + ": " + e.what());
  }
  for (const char* role : {"cause1", "cause2", "censoring"}) {
    if (!hazards.count(role)) throw jssl::SchemaError(a.manifest + ": no model for role " + role);
  }
  jssl::CompositionOptions options;
  options.product_limit = product_limit;
  const jssl::RiskPredictionModel model(hazards["cause1"], hazards["cause2"], hazards["censoring"], tau, options);

  std::ifstream in(a.query);
  if (!in) throw jssl::SchemaError("cannot open " + a.query);
  std::string line;
  if (!std::getline(in, line)) throw jssl::EmptyInputError(a.query + " is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(0, 1);
      out.push_back(cell);
    }
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  const auto header = split(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t k = 0; k < header.size(); ++k) column[header[k]] = k;
  if (!column.count(a.time_column)) throw jssl::SchemaError(a.query + ": missing time column '" + a.time_column + "'");
  std::vector<std::size_t> cov_columns;
  for (const auto& name : covariates) {
    if (!column.count(name)) throw jssl::SchemaError(a.query + ": missing covariate column '" + name + "'");
    cov_columns.push_back(column[name]);
  }
  const bool has_id = column.count("row_id") > 0;

  auto out = open_output(a.out);
  out << "row_id,t,risk_cause1,risk_cause2,event_free_survival,censoring_survival,error\n" << std::setprecision(10);
  std::size_t row = 0, failures = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto cells = split(line);
    const std::string id = has_id && column["row_id"] < cells.size() ? cells[column["row_id"]] : std::to_string(row);
    const auto number = [&](std::size_t c) {
      if (c >= cells.size()) throw jssl::ParseError("missing field", row);
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        throw jssl::ParseError("non-numeric field '" + cells[c] + "'", row);
      }
      if (used != cells[c].size()) throw jssl::ParseError("non-numeric field '" + cells[c] + "'", row);
      return v;
    };
    const double t = number(column[a.time_column]);
    std::vector<double> x;
    for (std::size_t c : cov_columns) x.push_back(number(c));
    try {
      const auto p = model.predict_all(t, x);
      out << id << ',' << t << ',' << p.risk_cause1 << ',' << p.risk_cause2 << ',' << p.event_free_survival << ','
          << p.censoring_survival << ",\n";
    } catch (const jssl::OutOfRangeError& e) {
      ++failures;
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      out << id << ',' << t << ",NA,NA,NA,NA," << msg << '\n';
    }
  }
  if (failures > 0) {
    std::cerr << "jssl predict: " << failures << " of " << row << " rows could not be predicted\n";
    return kExitData;
  }
  return kExitOk;
}

// ---- benchmark ----

struct BenchmarkArgs {
  std::string config;
  std::size_t jobs = 1;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repetitions;
  bool quiet = false;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  const auto j = read_json(a.config);
  auto config = jssl::BenchmarkConfig::from_json(j, fs::path(a.config).parent_path().string());
  config.seed = resolve_seed(a.seed, config.seed);
  if (a.repetitions) config.repetitions = *a.repetitions;
  if (!a.out.empty()) config.output_dir = a.out;
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  const auto result = jssl::run_benchmark(config, a.jobs, a.quiet ? nullptr : &std::cerr);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(config.output_dir);
  {
    auto out = open_output((fs::path(config.output_dir) / "benchmark_tidy.csv").string());
    result.write_tidy(out);
  }
  {
    auto out = open_output((fs::path(config.output_dir) / "benchmark_aggregate.csv").string());
    result.write_aggregate(out);
  }
  result.write_aggregate(std::cout);
  std::size_t failures = 0;
  for (const auto& r : result.rows) failures += r.error.empty() ? 0 : 1;
  std::cerr << "benchmark finished in " << std::fixed << std::setprecision(1) << seconds << " s; " << failures
            << " failed method runs\n";
  return kExitOk;
}

// ---- verify ----

struct VerifyArgs {
  std::string scenario;
  std::size_t m = 10000;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

int cmd_verify(const VerifyArgs& a) {
  const auto s = jssl::load_scenario(a.scenario);
  const auto seed = resolve_seed(a.seed, 1);
  const auto report = jssl::verify_scoring_rule(s, a.m, seed, true, a.jobs);
  std::cout << std::setprecision(6) << "observations: " << report.observations
            << "\nrisk of the true model: " << report.risk_true << "\n\nproperness (gap > 3 SE):\n";
  for (const auto& p : report.properness) {
    std::cout << "  " << (p.pass ? "PASS " : "FAIL ") << p.model << ": gap " << p.gap << " se " << p.se << '\n';
  }
  std::cout << "\nexcess risk = squared distance (|diff| <= 3 combined SE):\n";
  for (const auto& e : report.excess_risk) {
    std::cout << "  " << (e.pass ? "PASS " : "FAIL ") << e.model << ": excess " << e.excess << " (se " << e.excess_se
              << "), norm " << e.norm << " (se " << e.norm_se << ")\n";
  }
  return report.properness_passed() && report.excess_risk_passed() ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint survival super learner for competing risks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a data set from a scenario");
  simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--n", sim.n, "Number of observations")->required();
  simulate->add_option("--seed", sim.seed, "Seed (overrides JSSL_SEED)");
  simulate->add_option("--out", sim.out, "Observed data CSV")->required();
  simulate->add_option("--latent", sim.latent, "Optional latent CSV (T, D, C)");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate scenario scales to marginal rates");
  calibrate->add_option("--scenario", cal.scenario, "Template scenario JSON")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--event-rate", cal.event_rate, "Target P(T <= h, D = 1)");
  calibrate->add_option("--censor-rate", cal.censor_rate, "Target P(C <= h)");
  calibrate->add_option("--horizon", cal.horizon, "Horizon h");
  calibrate->add_option("--n", cal.n, "Monte Carlo sample size");
  calibrate->add_option("--seed", cal.seed, "Seed (overrides JSSL_SEED)");
  calibrate->add_option("--mode", cal.mode, "Override censoring mode: dependent or independent");
  calibrate->add_option("--name", cal.name, "Name of the calibrated scenario");
  calibrate->add_option("--out", cal.out, "Output scenario JSON")->required();

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "Rank all learner triples and refit the best one");
  select->add_option("--data", sel.data, "Data CSV (time, status, covariates)")->required()->check(CLI::ExistingFile);
  select->add_option("--config", sel.config, "Library config JSON")->required()->check(CLI::ExistingFile);
  select->add_option("--folds", sel.folds, "Number of folds K");
  select->add_option("--repetitions", sel.repetitions, "Number of fold repetitions R");
  select->add_option("--tau", sel.tau, "Time horizon");
  select->add_option("--seed", sel.seed, "Seed (overrides JSSL_SEED)");
  select->add_option("--jobs", sel.jobs, "Worker threads")->check(CLI::PositiveNumber);
  select->add_option("--table", sel.table, "Risk table CSV")->required();
  select->add_option("--table-json", sel.table_json, "Risk table JSON with per-repetition detail");
  select->add_option("--manifest", sel.manifest, "Selected-triple manifest JSON")->required();
  select->add_flag("--product-limit", sel.product_limit, "Product-limit at-risk probability");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Predict risks from a selected-triple manifest");
  predict->add_option("--manifest", pred.manifest, "Manifest written by select")->required()->check(CLI::ExistingFile);
  predict->add_option("--query", pred.query, "Query CSV with covariates and a time column")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred.out, "Prediction CSV")->required();
  predict->add_option("--time-column", pred.time_column, "Name of the time column");

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Compare JSSL, IPCW super learners and the oracle");
  benchmark->add_option("--config", bench.config, "Benchmark config JSON")->required()->check(CLI::ExistingFile);
  benchmark->add_option("--jobs", bench.jobs, "Worker threads")->check(CLI::PositiveNumber);
  benchmark->add_option("--out", bench.out, "Output directory (overrides the config)");
  benchmark->add_option("--seed", bench.seed, "Seed (overrides JSSL_SEED)");
  benchmark->add_option("--repetitions", bench.repetitions, "Monte Carlo repetitions (overrides the config)");
  benchmark->add_flag("--quiet", bench.quiet, "No progress output");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Monte Carlo check of properness and the excess-risk identity");
  verify->add_option("--scenario", ver.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--m", ver.m, "Number of simulated observations");
  verify->add_option("--seed", ver.seed, "Seed (overrides JSSL_SEED)");
  verify->add_option("--jobs", ver.jobs, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*calibrate) return cmd_calibrate(cal);
    if (*select) return cmd_select(sel);
    if (*predict) return cmd_predict(pred);
    if (*benchmark) return cmd_benchmark(bench);
    if (*verify) return cmd_verify(ver);
  } catch (const jssl::SelectionError& e) {
    std::cerr << "jssl: " << e.what() << '\n';
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << '\n';
    return kExitNumerical;
  } catch (const jssl::Error& e) {
    std::cerr << "jssl: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "jssl: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "jssl: unexpected error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
