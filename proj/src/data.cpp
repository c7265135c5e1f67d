#include "jssl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "jssl/error.hpp"
#include "jssl/random.hpp"

namespace jssl {

Dataset::Dataset(std::vector<std::string> covariate_names) : names_(std::move(covariate_names)) {}

void Dataset::add(double time, int status, std::span<const double> covariates) {
  const std::size_t row = size() + 1;
  if (!std::isfinite(time) || time < 0.0) throw ParseError("time must be finite and non-negative", row);
  if (status < kCensored || status > kCause2) throw ParseError("status must be 0, 1 or 2", row);
  if (covariates.size() != dimension()) {
    throw SchemaError("observation has " + std::to_string(covariates.size()) +
                      " covariates, dataset declares " + std::to_string(dimension()));
  }
  for (double v : covariates) {
    if (!std::isfinite(v)) throw ParseError("covariate values must be finite", row);
  }
  times_.push_back(time);
  statuses_.push_back(status);
  covariates_.insert(covariates_.end(), covariates.begin(), covariates.end());
}

Observation Dataset::observation(std::size_t i) const {
  const auto x = covariates(i);
  return {times_[i], statuses_[i], {x.begin(), x.end()}};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(names_);
  out.times_.reserve(rows.size());
  out.statuses_.reserve(rows.size());
  out.covariates_.reserve(rows.size() * dimension());
  for (std::size_t r : rows) {
    out.times_.push_back(times_[r]);
    out.statuses_.push_back(statuses_[r]);
    const auto x = covariates(r);
    out.covariates_.insert(out.covariates_.end(), x.begin(), x.end());
  }
  return out;
}

void Dataset::set_status(std::size_t i, int status) {
  if (status < kCensored || status > kCause2) throw ParseError("status must be 0, 1 or 2", i + 1);
  statuses_[i] = status;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

bool parse_double(const std::string& field, double& value) {
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Dataset parse_dataset(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw EmptyInputError("input has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = split_csv_line(line);

  const auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = column(schema.time_column);
  const std::size_t status_col = column(schema.status_column);

  std::vector<std::string> names;
  std::vector<std::size_t> covariate_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == time_col || c == status_col) continue;
    names.push_back(header[c]);
    covariate_cols.push_back(c);
  }

  Dataset d(std::move(names));
  std::vector<double> x(covariate_cols.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row);
    }
    double time = 0.0;
    if (!parse_double(fields[time_col], time) || !std::isfinite(time) || time < 0.0) {
      throw ParseError("time '" + fields[time_col] + "' is not a non-negative number", row);
    }
    double status_value = 0.0;
    if (!parse_double(fields[status_col], status_value) ||
        (status_value != 0.0 && status_value != 1.0 && status_value != 2.0)) {
      throw ParseError("status '" + fields[status_col] + "' is not one of 0, 1, 2", row);
    }
    for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
      const auto& field = fields[covariate_cols[k]];
      if (!parse_double(field, x[k]) || !std::isfinite(x[k])) {
        throw ParseError("covariate '" + header[covariate_cols[k]] + "' value '" + field +
                             "' is missing or not numeric",
                         row);
      }
    }
    d.add(time, static_cast<int>(status_value), x);
  }
  if (d.empty()) throw EmptyInputError("input has no data rows");
  return d;
}

Dataset load_dataset(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return parse_dataset(in, schema);
}

void write_dataset(std::ostream& out, const Dataset& d, const CsvSchema& schema) {
  out << schema.time_column << ',' << schema.status_column;
  for (const auto& name : d.covariate_names()) out << ',' << name;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << d.time(i) << ',' << d.status(i);
    for (double v : d.covariates(i)) out << ',' << v;
    out << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& d, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  write_dataset(out, d, schema);
}

Dataset reverse_roles(const Dataset& d) {
  Dataset out = d;
  for (std::size_t i = 0; i < out.size(); ++i) out.set_status(i, d.status(i) == kCensored ? kCause1 : kCensored);
  return out;
}

FoldPlan::FoldPlan(std::size_t folds, std::uint64_t seed, std::vector<std::vector<int>> assignments)
    : folds_(folds), seed_(seed), assignments_(std::move(assignments)) {
  if (folds_ < 2) throw InvalidConfiguration("fold count must be at least 2");
  if (assignments_.empty()) throw InvalidConfiguration("fold plan needs at least one repetition");
  for (const auto& a : assignments_) {
    if (a.size() != assignments_.front().size()) throw InvalidConfiguration("repetitions differ in length");
    for (int f : a) {
      if (f < 1 || static_cast<std::size_t>(f) > folds_) throw InvalidConfiguration("fold label out of range");
    }
  }
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t repetition, int fold) const {
  std::vector<std::size_t> rows;
  const auto& a = assignments_.at(repetition);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t repetition, int fold) const {
  std::vector<std::size_t> rows;
  const auto& a = assignments_.at(repetition);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != fold) rows.push_back(i);
  }
  return rows;
}

nlohmann::json FoldPlan::to_json() const {
  return {{"seed", seed_}, {"K", folds_}, {"repetitions", assignments_}};
}

FoldPlan FoldPlan::from_json(const nlohmann::json& j) {
  return FoldPlan(j.at("K").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
                  j.at("repetitions").get<std::vector<std::vector<int>>>());
}

FoldPlan make_folds(std::size_t n, std::size_t folds, std::size_t repetitions, std::uint64_t seed,
                    const FoldOptions& options, std::span<const int> statuses) {
  if (folds < 2 || folds > n) {
    throw InvalidConfiguration("fold count " + std::to_string(folds) + " must lie in [2, " +
                               std::to_string(n) + "]");
  }
  if (repetitions < 1) throw InvalidConfiguration("at least one repetition is required");
  if (options.stratify_by_status && statuses.size() != n) {
    throw InvalidConfiguration("stratified folds need one status per observation");
  }

  std::vector<std::vector<int>> assignments;
  for (std::size_t r = 0; r < repetitions; ++r) {
    Rng rng(derive_seed(seed, {r}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

    std::vector<int> a(n);
    if (options.stratify_by_status) {
      // Group the shuffled order by status, then deal round-robin so every fold sees each
      // status in near-equal numbers and fold sizes still differ by at most one.
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t i, std::size_t j) { return statuses[i] < statuses[j]; });
      for (std::size_t pos = 0; pos < n; ++pos) a[order[pos]] = static_cast<int>(pos % folds) + 1;
    } else {
      const std::size_t base = n / folds;
      const std::size_t extra = n % folds;
      std::size_t pos = 0;
      for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t size = base + (k < extra ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) a[order[pos++]] = static_cast<int>(k) + 1;
      }
    }
    assignments.push_back(std::move(a));
  }
  return FoldPlan(folds, seed, std::move(assignments));
}

}  // namespace jssl
