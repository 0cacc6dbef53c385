#include "gevsel/methods.hpp"

#include <array>
#include <stdexcept>

namespace gevsel {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kNames{{
    {Method::Gs, "gs"},
    {Method::GsDiag, "gs-diag"},
    {Method::Backward, "be"},
    {Method::Forward, "fs"},
    {Method::Stecs, "stecs"},
    {Method::Exhaustive, "exhaustive"},
    {Method::Random, "random"},
}};

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [id, name] : kNames)
    if (id == m) return name;
  throw std::invalid_argument("unknown method id");
}

Method parse_method(std::string_view name) {
  for (const auto& [id, n] : kNames)
    if (n == name) return id;
  std::string msg = "unknown method '" + std::string(name) + "' (expected one of:";
  for (const auto& kv : kNames) msg += " " + std::string(kv.second);
  throw std::invalid_argument(msg + ")");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> v = [] {
    std::vector<Method> out;
    for (const auto& kv : kNames) out.push_back(kv.first);
    return out;
  }();
  return v;
}

MethodOutcome run_method(Method m, const CovariancePair& pair, const ProblemDims& dims, const MethodOptions& options) {
  MethodOutcome out;
  switch (m) {
    case Method::Gs:
      out.selection = gs_select(pair, dims, options.gs);
      break;
    case Method::GsDiag:
      out.selection = gs_select(pair, dims, options.gs_diag);
      break;
    case Method::Backward:
      out.selection = backward_elimination(pair, dims).selection;
      break;
    case Method::Forward:
      out.selection = forward_selection(pair, dims).selection;
      break;
    case Method::Stecs:
      out.selection = stecs_select(pair, dims, options.stecs);
      break;
    case Method::Exhaustive:
      out.selection = exhaustive(pair, dims, options.exhaustive);
      break;
    case Method::Random:
      out.grq_db = random_baseline(pair, dims, options.random);
      return out;
  }
  out.grq_db = out.selection.sensors.empty() ? 0.0 : out.selection.grq_db();
  return out;
}

}  // namespace gevsel
