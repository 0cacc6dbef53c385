#include "gevsel/covfile.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gevsel {

CovarianceFile read_covariance(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError(source + ": empty file");
  CovarianceFile f;
  if (std::sscanf(header.c_str(), "# C=%d L=%d", &f.C, &f.L) != 2 || f.C < 1 || f.L < 1)
    throw FormatError(source + ": expected header '# C=<int> L=<int>', got '" + header + "'");

  const int n = f.C * f.L;
  Matrix m(n, n);
  std::string line;
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      std::ostringstream os;
      os << source << ": expected " << n << " rows, found " << i;
      throw FormatError(os.str());
    }
    std::istringstream row(line);
    for (int j = 0; j < n; ++j) {
      if (!(row >> m(i, j))) {
        std::ostringstream os;
        os << source << ": row " << i << " has fewer than " << n << " values";
        throw FormatError(os.str());
      }
    }
    double extra = 0.0;
    if (row >> extra) {
      std::ostringstream os;
      os << source << ": row " << i << " has more than " << n << " values";
      throw FormatError(os.str());
    }
  }
  if (!m.allFinite()) throw FormatError(source + ": non-finite entry");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale) {
    std::ostringstream os;
    os << source << ": matrix is not symmetric (max |a_ij - a_ji| = " << asym << ")";
    throw FormatError(os.str());
  }
  f.matrix = SymMatrix(m);
  return f;
}

CovarianceFile read_covariance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_covariance(in, path);
}

void write_covariance(std::ostream& out, int C, int L, const SymMatrix& m) {
  if (m.size() != C * L) throw DimensionError("covariance size does not match C*L");
  out << "# C=" << C << " L=" << L << '\n';
  char buf[32];
  for (int i = 0; i < m.size(); ++i) {
    for (int j = 0; j < m.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void write_covariance_file(const std::string& path, int C, int L, const SymMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_covariance(out, C, L, m);
  if (!out) throw std::runtime_error("I/O error while writing " + path);
}

CovariancePair read_pair_files(const std::string& r1_path, const std::string& r2_path, int K) {
  CovarianceFile f1 = read_covariance_file(r1_path);
  CovarianceFile f2 = read_covariance_file(r2_path);
  if (f1.C != f2.C || f1.L != f2.L) {
    std::ostringstream os;
    os << "header mismatch: " << r1_path << " has C=" << f1.C << " L=" << f1.L << ", " << r2_path
       << " has C=" << f2.C << " L=" << f2.L;
    throw FormatError(os.str());
  }
  ProblemDims dims{f1.C, f1.L, K, std::nullopt};
  return CovariancePair::make(dims, std::move(f1.matrix), std::move(f2.matrix));
}

}  // namespace gevsel
