#include "gevsel/simkit.hpp"

#include "gevsel/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gevsel::sim {

namespace {

// Substreams of a scene seed.
constexpr std::uint64_t kLayoutStream = 0;
constexpr std::uint64_t kSourceStream = 0x10000;
constexpr std::uint64_t kNoiseStream = 0x20000;


double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

std::pair<int, int> SceneConfig::grid_shape() const {
  if (C < 1) throw std::invalid_argument("sensor count C must be >= 1");
  int rows = static_cast<int>(std::sqrt(static_cast<double>(C)));
  while (rows * rows > C) --rows;
  while ((rows + 1) * (rows + 1) <= C) ++rows;
  if (rows * rows == C) return {rows, rows};
  if (!allow_rectangular) {
    std::ostringstream os;
    os << "sensor count C=" << C << " is not a perfect square";
    throw std::invalid_argument(os.str());
  }
  while (C % rows != 0) --rows;
  return {rows, C / rows};
}

void SceneConfig::validate() const {
  grid_shape();
  if (L < 1) throw std::invalid_argument("SceneConfig: L must be >= 1");
  if (!(fs > 0.0)) throw std::invalid_argument("SceneConfig: fs must be positive");
  if (!(band_lo >= 0.0 && band_hi <= fs / 2.0 && band_hi - band_lo >= min_bandwidth && min_bandwidth > 0.0))
    throw std::invalid_argument("SceneConfig: band limits must satisfy 0 <= lo, hi <= fs/2, hi - lo >= min_bandwidth > 0");
  if (!(max_attenuation > 0.0 && max_attenuation <= 1.0))
    throw std::invalid_argument("SceneConfig: max_attenuation must be in (0, 1]");
  if (!(max_delay >= 0.0)) throw std::invalid_argument("SceneConfig: max_delay must be non-negative");
  if (!(power_ratio > 0.0)) throw std::invalid_argument("SceneConfig: power_ratio must be positive");
  if (!(noise_amp >= 0.0)) throw std::invalid_argument("SceneConfig: noise_amp must be non-negative");
  if ((n1 && *n1 < 0) || (n2 && *n2 < 0)) throw std::invalid_argument("SceneConfig: source counts must be >= 0");
  if (n2_max && *n2_max < 1) throw std::invalid_argument("SceneConfig: n2_max must be >= 1");
  if (fir_order < 2 || fir_order % 2 != 0) throw std::invalid_argument("SceneConfig: fir_order must be even and >= 2");
  if (T < C * L) {
    std::ostringstream os;
    os << "SceneConfig: T=" << T << " is smaller than CL=" << C * L;
    throw std::invalid_argument(os.str());
  }
}

int Scene::count(int cls) const {
  int n = 0;
  for (const auto& s : sources) n += s.cls == cls;
  return n;
}

double Scene::d_max() const { return std::hypot(cols - 1, rows - 1); }

Scene generate_scene(const SceneConfig& config, std::uint64_t seed) {
  config.validate();
  const auto [rows, cols] = config.grid_shape();
  CounterRng rng(derive_seed(seed, kLayoutStream));

  Scene scene;
  scene.seed = seed;
  scene.rows = rows;
  scene.cols = cols;
  for (int c = 0; c < config.C; ++c) scene.sensors.push_back({double(c % cols), double(c / cols)});

  const int n1 = config.n1 ? *config.n1 : rng.uniform_int(1, 2 * config.C);
  const int n2 = config.n2 ? *config.n2 : rng.uniform_int(1, config.n2_max ? std::min(*config.n2_max, 2 * config.C) : 2 * config.C);
  const double span = config.band_hi - config.band_lo;
  for (int i = 0; i < n1 + n2; ++i) {
    Source s;
    s.cls = i < n1 ? 1 : 2;
    s.pos = {(cols - 1) * rng.uniform(), (rows - 1) * rng.uniform()};
    s.f_lo = config.band_lo + (span - config.min_bandwidth) * rng.uniform();
    s.f_hi = s.f_lo + config.min_bandwidth + (config.band_hi - s.f_lo - config.min_bandwidth) * rng.uniform();
    scene.sources.push_back(s);
  }
  return scene;
}

double propagation_gain(double d, double d_max, double max_attenuation) {
  if (d_max <= 0.0) return 1.0;
  return std::pow(max_attenuation, d / d_max);
}

int propagation_delay(double d, double d_max, double max_delay, double fs) {
  if (d_max <= 0.0) return 0;
  return static_cast<int>(std::lround(d / d_max * max_delay * fs));
}

std::vector<double> bandpass_taps(double f_lo, double f_hi, double fs, int order) {
  if (!(f_hi - f_lo >= fs / order) || f_lo < 0.0 || f_hi > fs / 2.0) {
    std::ostringstream os;
    os << "degenerate band [" << f_lo << ", " << f_hi << "] Hz for a " << order << "-order filter at fs=" << fs;
    throw std::invalid_argument(os.str());
  }
  const double pi = std::numbers::pi;
  const double a = f_lo / fs;
  const double b = f_hi / fs;
  auto lowpass = [pi](double fc, double m) { return m == 0.0 ? 2.0 * fc : std::sin(2.0 * pi * fc * m) / (pi * m); };
  std::vector<double> h(order + 1);
  for (int n = 0; n <= order; ++n) {
    const double m = n - order / 2.0;
    const double window = 0.54 - 0.46 * std::cos(2.0 * pi * n / order);
    h[n] = window * (lowpass(b, m) - lowpass(a, m));
  }
  return h;
}

SignalSet synthesize(const Scene& scene, const SceneConfig& config) {
  config.validate();
  const int C = config.C;
  const int L = config.L;
  const int T = config.T;
  if (static_cast<int>(scene.sensors.size()) != C) throw std::invalid_argument("scene does not match config.C");
  const double dmax = scene.d_max();
  const int max_lag = propagation_delay(dmax, dmax, config.max_delay, config.fs);
  // Sensor series are built on T + L - 1 samples so that every lagged row is
  // fully populated; sources need max_lag extra samples in front.
  const int n_out = T + L - 1;
  const int n_src = n_out + max_lag;
  const int order = config.fir_order;

  Matrix y1 = Matrix::Zero(n_out, C);
  Matrix y2 = Matrix::Zero(n_out, C);
  std::vector<double> white(n_src + order);
  std::vector<double> sig(n_src);
  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    const Source& src = scene.sources[s];
    const std::vector<double> h = bandpass_taps(src.f_lo, src.f_hi, config.fs, order);
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double power = src.cls == 2 ? config.power_ratio : 1.0;
    const double scale = std::sqrt(power / energy);

    CounterRng rng(derive_seed(scene.seed, kSourceStream + s));
    for (double& v : white) v = rng.normal();
    for (int t = 0; t < n_src; ++t) {
      double acc = 0.0;
      for (int k = 0; k <= order; ++k) acc += h[k] * white[t + order - k];
      sig[t] = scale * acc;
    }

    Matrix& y = src.cls == 2 ? y2 : y1;
    for (int c = 0; c < C; ++c) {
      const double d = distance(scene.sensors[c], src.pos);
      const double g = propagation_gain(d, dmax, config.max_attenuation);
      const int delay = propagation_delay(d, dmax, config.max_delay, config.fs);
      for (int t = 0; t < n_out; ++t) y(t, c) += g * sig[t + max_lag - delay];
    }
  }

  for (int cls = 1; cls <= 2; ++cls) {
    CounterRng rng(derive_seed(scene.seed, kNoiseStream + cls));
    Matrix& y = cls == 2 ? y2 : y1;
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < n_out; ++t) y(t, c) += config.noise_amp * rng.normal();
  }

  SignalSet out;
  out.x1.resize(T, C * L);
  out.x2.resize(T, C * L);
  for (int c = 0; c < C; ++c)
    for (int l = 0; l < L; ++l) {
      out.x1.col(c * L + l) = y1.col(c).segment(L - 1 - l, T);
      out.x2.col(c * L + l) = y2.col(c).segment(L - 1 - l, T);
    }
  return out;
}

CovariancePair make_pair(const SignalSet& signals, int C, int L) {
  if (signals.x1.cols() != C * L || signals.x2.cols() != C * L) throw DimensionError("signal matrices must have CL columns");
  if (signals.x1.rows() < C * L || signals.x2.rows() < C * L) throw DimensionError("need at least CL samples");
  ProblemDims dims;
  dims.C = C;
  dims.L = L;
  return CovariancePair::make(dims, estimate_covariance(signals.x1), estimate_covariance(signals.x2));
}

CovariancePair simulate(const SceneConfig& config, std::uint64_t seed, Scene* scene_out) {
  const Scene scene = generate_scene(config, seed);
  const CovariancePair pair = make_pair(synthesize(scene, config), config.C, config.L);
  if (scene_out) *scene_out = scene;
  return pair;
}

double condition_number(const SymMatrix& m) {
  const SymEigen e = jacobi_eigen(m);
  const double lo = e.values(e.values.size() - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return e.values(0) / lo;
}

void write_manifest(std::ostream& out, const Scene& scene, const SceneConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = scene.seed;
  j["C"] = config.C;
  j["L"] = config.L;
  j["T"] = config.T;
  j["fs"] = config.fs;
  j["grid_rows"] = scene.rows;
  j["grid_cols"] = scene.cols;
  j["max_attenuation"] = config.max_attenuation;
  j["max_delay"] = config.max_delay;
  j["power_ratio"] = config.power_ratio;
  j["noise_amp"] = config.noise_amp;
  j["n1"] = scene.count(1);
  j["n2"] = scene.count(2);
  auto sensors = nlohmann::ordered_json::array();
  for (const auto& p : scene.sensors) sensors.push_back({p.x, p.y});
  j["sensors"] = sensors;
  auto sources = nlohmann::ordered_json::array();
  for (const auto& s : scene.sources)
    sources.push_back({{"class", s.cls}, {"x", s.pos.x}, {"y", s.pos.y}, {"f_lo", s.f_lo}, {"f_hi", s.f_hi}});
  j["sources"] = sources;
  out << j.dump(2) << "\n";
}

}  // namespace gevsel::sim
