#include "gevsel/selection.hpp"

#include <algorithm>

namespace gevsel {

std::string to_string(SelectionStatus s) {
  switch (s) {
    case SelectionStatus::Converged: return "ok";
    case SelectionStatus::NotFound: return "not_found";
    case SelectionStatus::Fallback: return "fallback";
  }
  return "unknown";
}

SelectionResult finalize_selection(const CovariancePair& pair, std::vector<int> sensors, int K) {
  std::sort(sensors.begin(), sensors.end());
  SelectionResult r;
  const CovariancePair reduced = reduce_pair(pair, sensors);
  r.solution = solve_gevd(reduced, K);
  r.sensors = std::move(sensors);
  return r;
}

}  // namespace gevsel
