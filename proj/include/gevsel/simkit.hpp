#pragma once

// Point-source sensor-network simulator. Sensors sit on a sqrt(C) x sqrt(C)
// grid with unit spacing (or, on request, the most square rows x cols
// grid). Every source is band-limited Gaussian noise that reaches each
// sensor with an exponentially decaying gain and an integer sample delay,
// both proportional to distance. Class-1 sources make up x1,
// class-2 sources (stronger by power_ratio) make up x2, and each stream gets
// its own white sensor noise.

#include "gevsel/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace gevsel::sim {

struct SceneConfig {
  int C = 9;
  int L = 2;
  double fs = 20.0;
  double band_lo = 1.0;
  double band_hi = 9.0;
  double min_bandwidth = 1.0;
  double max_attenuation = 0.005;
  double max_delay = 0.1;  // seconds
  double power_ratio = 150.0;
  double noise_amp = 0.01;  // standard deviation
  /// Source counts; drawn uniformly from [1, 2C] when unset. Zero is allowed
  /// for noise-only scenes.
  std::optional<int> n1;
  std::optional<int> n2;
  /// Upper bound for a drawn N2, used to force ill-conditioned R2.
  std::optional<int> n2_max;
  int T = 10000;
  int fir_order = 128;
  /// Lay out non-square C on the most square rows x cols grid (rows <= cols)
  /// instead of rejecting it.
  bool allow_rectangular = false;

  void validate() const;
  /// {rows, cols}. Throws std::invalid_argument for non-square C unless
  /// allow_rectangular is set.
  std::pair<int, int> grid_shape() const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Source {
  Point pos;
  double f_lo = 0.0;
  double f_hi = 0.0;
  int cls = 1;  // 1 -> x1, 2 -> x2
};

struct Scene {
  std::uint64_t seed = 0;
  int rows = 1;
  int cols = 1;
  std::vector<Point> sensors;  // row-major over the grid, sensor c at (c % cols, c / cols)
  std::vector<Source> sources;

  int count(int cls) const;
  /// Grid diagonal; the largest possible sensor-source distance.
  double d_max() const;
};

struct SignalSet {
  Matrix x1;  // T x CL
  Matrix x2;
};

/// Throws std::invalid_argument when C is not a perfect square (and
/// rectangular grids are not allowed) or the configuration is otherwise invalid.
Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Propagation gain max_attenuation^(d / d_max): 1 at d = 0 and exactly
/// max_attenuation at d = d_max.
double propagation_gain(double d, double d_max, double max_attenuation);

/// round(d / d_max * max_delay * fs).
int propagation_delay(double d, double d_max, double max_delay, double fs);

/// Linear-phase bandpass, Hamming-windowed sinc with order + 1 taps.
/// Throws std::invalid_argument when the band is narrower than fs / order.
std::vector<double> bandpass_taps(double f_lo, double f_hi, double fs, int order);

SignalSet synthesize(const Scene& scene, const SceneConfig& config);

CovariancePair make_pair(const SignalSet& signals, int C, int L);

/// generate_scene + synthesize + make_pair.
CovariancePair simulate(const SceneConfig& config, std::uint64_t seed, Scene* scene_out = nullptr);

/// Ratio of largest to smallest eigenvalue (inf when singular).
double condition_number(const SymMatrix& m);

/// JSON manifest: seed, grid, source positions, bands and classes.
void write_manifest(std::ostream& out, const Scene& scene, const SceneConfig& config);

}  // namespace gevsel::sim
