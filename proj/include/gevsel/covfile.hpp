#pragma once

// Plain-text covariance files:
//
//   # C=<int> L=<int>
//   <CL lines of CL space-separated decimal floats>
//
// Readers check symmetry to 1e-9 relative to the largest entry and then
// symmetrize.

#include "gevsel/linalg.hpp"

#include <iosfwd>
#include <string>

namespace gevsel {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CovarianceFile {
  int C = 0;
  int L = 0;
  SymMatrix matrix;
};

CovarianceFile read_covariance(std::istream& in, const std::string& source = "<stream>");
CovarianceFile read_covariance_file(const std::string& path);

void write_covariance(std::ostream& out, int C, int L, const SymMatrix& m);
void write_covariance_file(const std::string& path, int C, int L, const SymMatrix& m);

/// Reads an R1/R2 file pair and checks that both headers agree.
CovariancePair read_pair_files(const std::string& r1_path, const std::string& r2_path, int K = 1);

}  // namespace gevsel
