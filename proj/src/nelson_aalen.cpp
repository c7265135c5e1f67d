#include "jssl/nelson_aalen.hpp"

#include <algorithm>
#include <numeric>

#include "jssl/error.hpp"

namespace jssl {

EventTable event_table(const Dataset& d, Target target, std::span<const double> weights) {
  const std::size_t n = d.size();
  if (!weights.empty() && weights.size() != n) throw InvalidConfiguration("one weight per observation required");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d.time(a) > d.time(b); });

  EventTable table;
  double risk = 0.0;
  std::size_t pos = 0;
  while (pos < n) {
    const double t = d.time(order[pos]);
    double events = 0.0;
    for (; pos < n && d.time(order[pos]) == t; ++pos) {
      const std::size_t i = order[pos];
      risk += weights.empty() ? 1.0 : weights[i];
      if (is_target_event(d.status(i), target)) events += 1.0;
    }
    if (events > 0.0) {
      if (t <= 0.0) throw FitError("events at time 0 are not supported");
      table.times.push_back(t);
      table.events.push_back(events);
      table.risk_total.push_back(risk);
    }
  }
  std::reverse(table.times.begin(), table.times.end());
  std::reverse(table.events.begin(), table.events.end());
  std::reverse(table.risk_total.begin(), table.risk_total.end());
  return table;
}

std::vector<double> breslow_cumulative(const EventTable& table) {
  std::vector<double> cumulative(table.times.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < cumulative.size(); ++k) {
    sum += table.events[k] / table.risk_total[k];
    cumulative[k] = sum;
  }
  return cumulative;
}

HazardPtr fit_nelson_aalen(const Dataset& d, Target target) {
  auto table = event_table(d, target);
  auto cumulative = breslow_cumulative(table);
  return std::make_shared<MarginalStepHazard>(std::move(table.times), std::move(cumulative));
}

}  // namespace jssl
