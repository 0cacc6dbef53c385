#pragma once

// Name-based dispatch over every selector, shared by the CLI and the
// benchmark harness.

#include "gevsel/baselines.hpp"
#include "gevsel/gs_select.hpp"
#include "gevsel/stecs.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gevsel {

enum class Method { Gs, GsDiag, Backward, Forward, Stecs, Exhaustive, Random };

/// gs, gs-diag, be, fs, stecs, exhaustive, random
std::string_view method_name(Method m);
/// Throws std::invalid_argument listing the valid names.
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();

struct MethodOptions {
  GsConfig gs;
  GsConfig gs_diag = GsConfig::diag_blocks();
  StecsConfig stecs;
  ExhaustiveOptions exhaustive;
  RandomOptions random;
};

/// For `random` the selection is empty and `grq_db` is the draw average.
struct MethodOutcome {
  SelectionResult selection;
  double grq_db = 0.0;
};

MethodOutcome run_method(Method m, const CovariancePair& pair, const ProblemDims& dims,
                         const MethodOptions& options = {});

}  // namespace gevsel
