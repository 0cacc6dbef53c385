#include "gevsel/bench.hpp"
#include "gevsel/covfile.hpp"
#include "gevsel/methods.hpp"
#include "gevsel/simkit.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace gevsel;

namespace {

CovariancePair make_pair(const Matrix& r1, const Matrix& r2, int C, int L, int K) {
  return CovariancePair::make(ProblemDims{C, L, K, std::nullopt}, SymMatrix(r1), SymMatrix(r2));
}

py::dict outcome_dict(Method m, const MethodOutcome& o) {
  py::dict d;
  d["method"] = std::string(method_name(m));
  if (m != Method::Random) {
    d["status"] = to_string(o.selection.status);
    d["sensors"] = o.selection.sensors;
    d["mu"] = o.selection.mu_final;
    d["probes"] = o.selection.trace.size();
  } else {
    d["status"] = "ok";
  }
  const bool has_value = m == Method::Random || !o.selection.sensors.empty();
  d["grq_db"] = has_value ? py::cast(o.grq_db) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sensor subset selection for generalized eigenvalue filters";

  py::register_exception<LinalgError>(m, "LinalgError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  m.def(
      "solve_gevd",
      [](const Matrix& r1, const Matrix& r2, int K) {
        const GevdSolution s = solve_gevd(make_pair(r1, r2, static_cast<int>(r1.rows()), 1, K), K);
        return py::make_tuple(s.w, s.lambdas, s.grq_db);
      },
      py::arg("r1"), py::arg("r2"), py::arg("K") = 1,
      "Leading K generalized eigenpairs. Returns (W, lambdas, grq_db).");

  m.def(
      "grq_db",
      [](const Matrix& r1, const Matrix& r2, const Matrix& w) {
        return grq_db(make_pair(r1, r2, static_cast<int>(r1.rows()), 1, 1), w);
      },
      py::arg("r1"), py::arg("r2"), py::arg("w"));

  m.def("methods", [] {
    std::vector<std::string> out;
    for (Method x : all_methods()) out.emplace_back(method_name(x));
    return out;
  });

  m.def(
      "select",
      [](const Matrix& r1, const Matrix& r2, int C, int L, int K, int M, const std::string& method,
         std::uint64_t seed, int draws) {
        const Method meth = parse_method(method);
        const CovariancePair pair = make_pair(r1, r2, C, L, K);
        MethodOptions opts;
        opts.random.seed = seed;
        opts.random.draws = draws;
        MethodOutcome o;
        {
          py::gil_scoped_release release;
          o = run_method(meth, pair, ProblemDims{C, L, K, M}, opts);
        }
        return outcome_dict(meth, o);
      },
      py::arg("r1"), py::arg("r2"), py::arg("C"), py::arg("L"), py::arg("K") = 1, py::arg("M"),
      py::arg("method") = "gs", py::arg("seed") = 0, py::arg("draws") = 1000);

  m.def(
      "eval_subset",
      [](const Matrix& r1, const Matrix& r2, int C, int L, int K, std::vector<int> sensors) {
        const SelectionResult r = finalize_selection(make_pair(r1, r2, C, L, K), std::move(sensors), K);
        return py::make_tuple(r.sensors, r.grq_db());
      },
      py::arg("r1"), py::arg("r2"), py::arg("C"), py::arg("L"), py::arg("K") = 1, py::arg("sensors"));

  m.def(
      "simulate",
      [](int C, int L, std::uint64_t seed, int T, std::optional<int> n1, std::optional<int> n2,
         std::optional<int> n2_max, bool rectangular) {
        sim::SceneConfig c;
        c.C = C;
        c.L = L;
        c.T = T;
        c.n1 = n1;
        c.n2 = n2;
        c.n2_max = n2_max;
        c.allow_rectangular = rectangular;
        sim::Scene scene;
        CovariancePair p;
        {
          py::gil_scoped_release release;
          p = sim::simulate(c, seed, &scene);
        }
        std::ostringstream manifest;
        sim::write_manifest(manifest, scene, c);
        return py::make_tuple(p.r1.mat(), p.r2.mat(), manifest.str());
      },
      py::arg("C") = 9, py::arg("L") = 2, py::arg("seed") = 0, py::arg("T") = 10000, py::arg("n1") = py::none(),
      py::arg("n2") = py::none(), py::arg("n2_max") = py::none(), py::arg("rectangular") = false,
      "Returns (R1, R2, manifest_json).");

  m.def(
      "read_covariance",
      [](const std::string& path) {
        const CovarianceFile f = read_covariance_file(path);
        return py::make_tuple(f.C, f.L, f.matrix.mat());
      },
      py::arg("path"));
  m.def(
      "write_covariance",
      [](const std::string& path, int C, int L, const Matrix& m) { write_covariance_file(path, C, L, SymMatrix(m)); },
      py::arg("path"), py::arg("C"), py::arg("L"), py::arg("matrix"));

  m.def(
      "run_benchmark",
      [](const std::string& config_json) {
        const bench::BenchConfig c = bench::config_from_json(config_json);
        bench::BenchmarkReport r;
        {
          py::gil_scoped_release release;
          r = bench::run_benchmark(c);
        }
        std::ostringstream os;
        bench::write_records_csv(os, r.records);
        return os.str();
      },
      py::arg("config_json"), "Runs a benchmark config (JSON text) and returns records.csv as text.");
}
