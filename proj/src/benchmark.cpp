#include "jssl/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include "jssl/error.hpp"
#include "jssl/parallel.hpp"
#include "jssl/stats.hpp"

namespace jssl {

namespace {

const std::set<std::string> kMethods{"jssl", "ipcw_km", "ipcw_cox", "oracle"};
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::vector<LearnerSpec> specs_from_json(const nlohmann::json& j, Target target) {
  std::vector<LearnerSpec> out;
  for (const auto& item : j) {
    auto spec = LearnerSpec::from_json(item);
    spec.target = target;
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<LearnerPtr> build_all(const std::vector<LearnerSpec>& specs) {
  std::vector<LearnerPtr> out;
  for (const auto& s : specs) out.push_back(make_learner(s));
  return out;
}

// Position of the first spec of `kind` with default hyperparameters, or kNone.
std::size_t find_kind(const std::vector<LearnerSpec>& specs, LearnerKind kind) {
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].kind == kind && specs[k].hyperparameters.empty()) return k;
  }
  return kNone;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

struct CellOutput {
  std::vector<BenchmarkRow> rows;
};

}  // namespace

LearnerLibraries LibrarySpecs::build() const {
  return {build_all(cause1), build_all(cause2), build_all(censoring)};
}

nlohmann::json LibrarySpecs::to_json() const {
  const auto dump = [](const std::vector<LearnerSpec>& specs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : specs) a.push_back(s.to_json());
    return a;
  };
  return {{"cause1", dump(cause1)}, {"cause2", dump(cause2)}, {"censoring", dump(censoring)}};
}

LibrarySpecs LibrarySpecs::from_json(const nlohmann::json& j) {
  LibrarySpecs out;
  try {
    out.cause1 = specs_from_json(j.at("cause1"), Target::cause1);
    out.cause2 = specs_from_json(j.at("cause2"), Target::cause2);
    out.censoring = specs_from_json(j.at("censoring"), Target::censoring);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfiguration(std::string("malformed libraries: ") + e.what());
  }
  return out;
}

LibrarySpecs default_benchmark_libraries(std::size_t n_trees) {
  const auto spec = [](LearnerKind kind, Target target, nlohmann::json h = nlohmann::json::object()) {
    LearnerSpec s;
    s.kind = kind;
    s.target = target;
    s.hyperparameters = std::move(h);
    s.name = kind == LearnerKind::nelson_aalen ? "Nelson-Aalen" : kind == LearnerKind::cox ? "Cox" : "random forest";
    return s;
  };
  LibrarySpecs out;
  for (Target t : {Target::cause1, Target::censoring}) {
    auto& lib = t == Target::cause1 ? out.cause1 : out.censoring;
    lib.push_back(spec(LearnerKind::nelson_aalen, t));
    lib.push_back(spec(LearnerKind::cox, t));
    lib.push_back(spec(LearnerKind::survival_forest, t, {{"n_trees", n_trees}}));
  }
  out.cause2.push_back(spec(LearnerKind::nelson_aalen, Target::cause2));
  return out;
}

void BenchmarkConfig::validate() const {
  scenario.validate();
  if (sizes.empty()) throw InvalidConfiguration("benchmark needs at least one sample size");
  if (repetitions < 1) throw InvalidConfiguration("benchmark needs at least one repetition");
  if (folds < 2 || cv_repetitions < 1) throw InvalidConfiguration("benchmark needs K >= 2 and R >= 1");
  for (std::size_t n : sizes) {
    if (n < 2 * folds) throw InvalidConfiguration("sample size " + std::to_string(n) + " is below 2K");
  }
  if (methods.empty()) throw InvalidConfiguration("benchmark needs at least one method");
  for (const auto& m : methods) {
    if (!kMethods.count(m)) throw InvalidConfiguration("unknown method '" + m + "'");
  }
  if (!(tau > 0.0) || !(t_star > 0.0) || t_star > tau) throw InvalidConfiguration("need 0 < t* <= tau");
  if (test_size < 1) throw InvalidConfiguration("test_size must be positive");
  if (libraries.cause1.empty() || libraries.cause2.empty() || libraries.censoring.empty()) {
    throw InvalidConfiguration("every learner library needs at least one learner");
  }
  libraries.build().validate();
}

nlohmann::json BenchmarkConfig::to_json() const {
  return {{"scenario", scenario.to_json()},
          {"sizes", sizes},
          {"repetitions", repetitions},
          {"methods", methods},
          {"libraries", libraries.to_json()},
          {"folds", folds},
          {"cv_repetitions", cv_repetitions},
          {"tau", tau},
          {"t_star", t_star},
          {"seed", seed},
          {"test_size", test_size},
          {"output_dir", output_dir},
          {"positivity_epsilon", ipcw.epsilon},
          {"truncate_weights", ipcw.truncate}};
}

BenchmarkConfig BenchmarkConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  BenchmarkConfig c;
  try {
    const auto& s = j.at("scenario");
    if (s.is_string()) {
      std::filesystem::path p = s.get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      c.scenario = load_scenario(p.string());
    } else {
      c.scenario = SimulationScenario::from_json(s);
    }
    c.sizes = j.value("sizes", c.sizes);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.methods = j.value("methods", c.methods);
    c.libraries = j.contains("libraries") ? LibrarySpecs::from_json(j["libraries"]) : default_benchmark_libraries();
    c.folds = j.value("folds", c.folds);
    c.cv_repetitions = j.value("cv_repetitions", c.cv_repetitions);
    c.tau = j.value("tau", c.scenario.tau);
    c.t_star = j.value("t_star", c.tau);
    c.seed = j.value("seed", c.seed);
    c.test_size = j.value("test_size", c.test_size);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.ipcw.epsilon = j.value("positivity_epsilon", c.ipcw.epsilon);
    c.ipcw.truncate = j.value("truncate_weights", c.ipcw.truncate);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfiguration(std::string("malformed benchmark config: ") + e.what());
  }
  c.validate();
  return c;
}

void BenchmarkResult::write_tidy(std::ostream& out) const {
  out << "scenario,n,repetition,seed,method,ipa,brier,null_brier,selected,oracle_agreement,error\n";
  for (const auto& r : rows) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << r.scenario << ',' << r.n << ',' << r.repetition << ',' << r.seed << ',' << r.method << ','
        << csv_number(r.ipa) << ',' << csv_number(r.brier) << ',' << csv_number(r.null_brier) << ',' << r.selected
        << ',' << (r.agrees_with_oracle ? 1 : 0) << ',' << error << '\n';
  }
}

void BenchmarkResult::write_aggregate(std::ostream& out) const {
  out << "scenario,n,method,mean_ipa,se_ipa,oracle_agreement,repetitions,failures\n";
  for (const auto& a : aggregate) {
    out << a.scenario << ',' << a.n << ',' << a.method << ',' << csv_number(a.mean_ipa) << ',' << csv_number(a.se_ipa)
        << ',' << csv_number(a.oracle_agreement) << ',' << a.repetitions << ',' << a.failures << '\n';
  }
}

const BenchmarkAggregate& BenchmarkResult::find(std::size_t n, const std::string& method) const {
  for (const auto& a : aggregate) {
    if (a.n == n && a.method == method) return a;
  }
  throw InvalidConfiguration("no aggregate for n=" + std::to_string(n) + " method " + method);
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::size_t jobs, std::ostream* progress) {
  config.validate();
  const auto names = config.scenario.covariate_names();
  const Dataset test =
      latent_dataset(simulate_dataset(config.scenario, config.test_size, derive_seed(config.seed, {0x7E57u})).latent,
                     names);
  const auto libraries = config.libraries.build();

  // IPCW censoring models come from the censoring library when it holds them.
  auto fit_specs = config.libraries;
  std::size_t km_index = find_kind(fit_specs.censoring, LearnerKind::nelson_aalen);
  std::size_t cox_index = find_kind(fit_specs.censoring, LearnerKind::cox);
  const auto needs = [&](const char* m) { return std::count(config.methods.begin(), config.methods.end(), m) > 0; };
  const auto add_censor = [&](std::size_t& index, LearnerKind kind, const char* name) {
    if (index != kNone) return;
    LearnerSpec s;
    s.kind = kind;
    s.target = Target::censoring;
    s.name = name;
    index = fit_specs.censoring.size();
    fit_specs.censoring.push_back(s);
  };
  if (needs("ipcw_km")) add_censor(km_index, LearnerKind::nelson_aalen, "Kaplan-Meier (IPCW)");
  if (needs("ipcw_cox")) add_censor(cox_index, LearnerKind::cox, "Cox (IPCW)");
  const auto fit_libraries = fit_specs.build();

  const std::size_t reps = config.repetitions;
  const std::size_t cells = config.sizes.size() * reps;
  std::vector<CellOutput> outputs(cells);
  std::mutex progress_mutex;
  std::size_t done = 0;

  parallel_for(cells, jobs, [&](std::size_t cell) {
    const std::size_t n = config.sizes[cell / reps];
    const std::size_t rep = cell % reps;
    const std::uint64_t cell_seed = derive_seed(config.seed, {n, rep});
    auto& rows = outputs[cell].rows;
    for (const auto& m : config.methods) {
      BenchmarkRow r;
      r.scenario = config.scenario.name;
      r.n = n;
      r.repetition = rep;
      r.seed = cell_seed;
      r.method = m;
      r.ipa = r.brier = r.null_brier = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(r);
    }
    try {
      const auto sim = simulate_dataset(config.scenario, n, cell_seed);
      const auto& d = sim.data;
      const auto plan = make_folds(n, config.folds, config.cv_repetitions, derive_seed(cell_seed, {1}));
      const auto fits = FoldFits::fit(fit_libraries, d, plan, cell_seed, 1);

      // Full-data refits of the event learners, and cached test-set risks per (a1, a2).
      const auto full_fit = [&](const LearnerPtr& l, Target t) {
        return l->fit(d, t, fit_seed(cell_seed, kFullDataRepetition, 0, l->name()));
      };
      std::vector<HazardPtr> full1, full2;
      for (const auto& l : libraries.cause1) full1.push_back(full_fit(l, Target::cause1));
      for (const auto& l : libraries.cause2) full2.push_back(full_fit(l, Target::cause2));
      const HazardPtr zero = std::make_shared<ZeroHazard>();
      std::map<std::pair<std::size_t, std::size_t>, EvaluationReport> reports;
      const auto report = [&](std::size_t a1, std::size_t a2) -> const EvaluationReport& {
        const auto key = std::make_pair(a1, a2);
        auto it = reports.find(key);
        if (it == reports.end()) {
          const StateOccupationModel m(full1[a1], a2 == kNone ? zero : full2[a2], zero);
          it = reports.emplace(key, ipa(m, test, config.t_star)).first;
        }
        return it->second;
      };

      std::pair<std::size_t, std::size_t> oracle{0, 0};
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a1 = 0; a1 < full1.size(); ++a1) {
        for (std::size_t a2 = 0; a2 < full2.size(); ++a2) {
          const double v = report(a1, a2).ipa;
          if (v > best) {
            best = v;
            oracle = {a1, a2};
          }
        }
      }

      for (auto& r : rows) {
        try {
          std::size_t a1 = 0, a2 = kNone;
          if (r.method == "jssl") {
            const auto s = select_discrete_jssl(libraries, fits, d, plan, config.tau);
            a1 = s.selected.a1;
            a2 = s.selected.a2;
          } else if (r.method == "ipcw_km" || r.method == "ipcw_cox") {
            const std::size_t index = r.method == "ipcw_km" ? km_index : cox_index;
            a1 = select_ipcw_sl(fit_libraries, fits, index, d, plan, config.t_star, config.ipcw).selected;
          } else {
            std::tie(a1, a2) = oracle;
          }
          const auto& e = report(a1, a2);
          r.ipa = e.ipa;
          r.brier = e.brier;
          r.null_brier = e.null_brier;
          r.selected = libraries.cause1[a1]->name() + "|" + (a2 == kNone ? std::string("none") : libraries.cause2[a2]->name());
          r.agrees_with_oracle = a1 == oracle.first && (a2 == kNone || a2 == oracle.second);
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (auto& r : rows) r.error = e.what();
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      *progress << "cell " << ++done << "/" << cells << " (n=" << n << ", repetition " << rep + 1 << ")\n"
                << std::flush;
    }
  });

  BenchmarkResult result;
  for (auto& c : outputs) {
    for (auto& r : c.rows) result.rows.push_back(std::move(r));
  }
  for (std::size_t n : config.sizes) {
    for (const auto& m : config.methods) {
      BenchmarkAggregate a;
      a.scenario = config.scenario.name;
      a.n = n;
      a.method = m;
      RunningStats stats;
      std::size_t agree = 0;
      for (const auto& r : result.rows) {
        if (r.n != n || r.method != m) continue;
        ++a.repetitions;
        if (!r.error.empty()) {
          ++a.failures;
          continue;
        }
        stats.add(r.ipa);
        agree += r.agrees_with_oracle ? 1 : 0;
      }
      const auto ok = stats.count();
      a.mean_ipa = ok > 0 ? stats.mean() : std::numeric_limits<double>::quiet_NaN();
      a.se_ipa = ok > 1 ? stats.standard_error() : std::numeric_limits<double>::quiet_NaN();
      a.oracle_agreement = ok > 0 ? static_cast<double>(agree) / static_cast<double>(ok)
                                  : std::numeric_limits<double>::quiet_NaN();
      result.aggregate.push_back(a);
    }
  }
  return result;
}

}  // namespace jssl
