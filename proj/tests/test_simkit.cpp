#include "gevsel/simkit.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace gevsel;
using namespace gevsel::sim;

namespace {

SceneConfig small(int C = 4, int L = 2) {
  SceneConfig c;
  c.C = C;
  c.L = L;
  c.T = 2000;
  return c;
}

// Fraction of periodogram power in [lo, hi], by direct DFT on positive bins.
double in_band_fraction(const Eigen::VectorXd& x, double fs, double lo, double hi) {
  const int n = static_cast<int>(x.size());
  double in = 0.0, total = 0.0;
  for (int k = 1; k < n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (int t = 0; t < n; ++t) {
      const double a = 2.0 * std::numbers::pi * k * t / n;
      re += x(t) * std::cos(a);
      im -= x(t) * std::sin(a);
    }
    const double p = re * re + im * im;
    const double f = fs * k / n;
    total += p;
    if (f >= lo && f <= hi) in += p;
  }
  return in / total;
}

}  // namespace

TEST_CASE("grid layout") {
  SceneConfig c = small(16);
  const Scene s = generate_scene(c, 1);
  CHECK(s.rows == 4);
  CHECK(s.cols == 4);
  REQUIRE(s.sensors.size() == 16);
  CHECK(s.sensors[5].x == 1.0);
  CHECK(s.sensors[5].y == 1.0);
  CHECK(s.d_max() == doctest::Approx(3.0 * std::sqrt(2.0)));

  c.C = 6;
  CHECK_THROWS_AS(generate_scene(c, 1), std::invalid_argument);
  c.allow_rectangular = true;
  CHECK(c.grid_shape() == std::pair<int, int>{2, 3});
}

TEST_CASE("scene draws respect counts, bounds and bands") {
  SceneConfig c = small(9);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate_scene(c, seed);
    CHECK(s.count(1) >= 1);
    CHECK(s.count(1) <= 18);
    CHECK(s.count(2) >= 1);
    CHECK(s.count(2) <= 18);
    for (const auto& src : s.sources) {
      CHECK(src.pos.x >= 0.0);
      CHECK(src.pos.x <= 2.0);
      CHECK(src.pos.y >= 0.0);
      CHECK(src.pos.y <= 2.0);
      CHECK(src.f_lo >= 1.0);
      CHECK(src.f_hi <= 9.0);
      CHECK(src.f_hi - src.f_lo >= 1.0 - 1e-12);
    }
  }
  c.n1 = 1;
  c.n2 = 1;
  CHECK(generate_scene(c, 3).sources.size() == 2);
  c.n2.reset();
  c.n2_max = 4;
  for (std::uint64_t seed = 0; seed < 30; ++seed) CHECK(generate_scene(c, seed).count(2) <= 4);
}

TEST_CASE("propagation model") {
  CHECK(propagation_gain(0.0, 3.0, 0.005) == 1.0);
  CHECK(propagation_gain(3.0, 3.0, 0.005) == 0.005);
  CHECK(propagation_gain(1.5, 3.0, 0.005) == doctest::Approx(std::sqrt(0.005)));
  // The exponential form exp(-d / sigma) with exp(-d_max / sigma) = 0.005.
  const double sigma = -3.0 / std::log(0.005);
  for (double d : {0.3, 1.1, 2.9}) CHECK(propagation_gain(d, 3.0, 0.005) == doctest::Approx(std::exp(-d / sigma)));
  for (double d = 0.0; d <= 3.0; d += 0.01) CHECK(propagation_delay(d, 3.0, 0.1, 20.0) <= 2);
  CHECK(propagation_delay(3.0, 3.0, 0.1, 20.0) == 2);
  CHECK(propagation_delay(0.0, 3.0, 0.1, 20.0) == 0);
}

TEST_CASE("bandpass taps") {
  const auto h = bandpass_taps(2.0, 5.0, 20.0, 128);
  REQUIRE(h.size() == 129);
  for (int i = 0; i <= 64; ++i) CHECK(h[i] == doctest::Approx(h[128 - i]));
  CHECK_THROWS_AS(bandpass_taps(2.0, 2.1, 20.0, 128), std::invalid_argument);
  CHECK_THROWS_AS(bandpass_taps(2.0, 11.0, 20.0, 128), std::invalid_argument);
}

TEST_CASE("single source at a sensor: unit gain there, 0.005 at the far corner") {
  SceneConfig c = small(9, 1);
  c.noise_amp = 0.0;
  Scene s;
  s.seed = 5;
  s.rows = s.cols = 3;
  for (int i = 0; i < 9; ++i) s.sensors.push_back({double(i % 3), double(i / 3)});
  s.sources.push_back({{0.0, 0.0}, 2.0, 6.0, 1});
  const SignalSet sig = synthesize(s, c);
  const Eigen::VectorXd near = sig.x1.col(0);
  const Eigen::VectorXd far = sig.x1.col(8);
  // Far sensor: same waveform scaled by 0.005 and delayed two samples.
  CHECK((far.tail(c.T - 2) - 0.005 * near.head(c.T - 2)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(sig.x2.isZero(0.0));
}

TEST_CASE("co-located sensors see the same waveform up to sensor noise") {
  SceneConfig c = small(4, 1);
  Scene s;
  s.seed = 8;
  s.rows = s.cols = 2;
  s.sensors = {{0, 0}, {0, 0}, {1, 0}, {1, 1}};  // first two coincide
  s.sources.push_back({{0.4, 0.7}, 1.5, 4.0, 1});
  const SignalSet sig = synthesize(s, c);
  const Eigen::VectorXd diff = sig.x1.col(0) - sig.x1.col(1);
  const double rms = std::sqrt(diff.squaredNorm() / c.T);
  CHECK(rms == doctest::Approx(std::sqrt(2.0) * c.noise_amp).epsilon(0.1));
}

TEST_CASE("source spectra stay in band") {
  SceneConfig c = small(4, 1);
  c.T = 2048;
  c.noise_amp = 0.0;
  c.n1 = 1;
  c.n2 = 0;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Scene s = generate_scene(c, seed);
    s.sources[0].pos = s.sensors[0];
    const SignalSet sig = synthesize(s, c);
    const double frac = in_band_fraction(sig.x1.col(0), c.fs, s.sources[0].f_lo, s.sources[0].f_hi);
    CAPTURE(seed);
    CAPTURE(s.sources[0].f_lo);
    CAPTURE(s.sources[0].f_hi);
    CHECK(frac >= 0.9);
    ++checked;
  }
  CHECK(checked == 8);
}

TEST_CASE("per-source power ratio") {
  SceneConfig c = small(4, 1);
  c.T = 20000;
  c.noise_amp = 0.0;
  Scene s;
  s.seed = 21;
  s.rows = s.cols = 2;
  s.sensors = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  s.sources.push_back({{0.5, 0.5}, 2.0, 5.0, 1});
  s.sources.push_back({{0.5, 0.5}, 3.0, 7.0, 2});
  const CovariancePair p = make_pair(synthesize(s, c), 4, 1);
  const double ratio = p.r2.trace() / p.r1.trace();
  CHECK(ratio >= 100.0);
  CHECK(ratio <= 225.0);
  CHECK(ratio == doctest::Approx(150.0).epsilon(0.1));
}

TEST_CASE("noise-only scene gives noise_amp^2 I") {
  SceneConfig c = small(4, 2);
  c.T = 10000;
  c.n1 = 0;
  c.n2 = 0;
  const CovariancePair p = simulate(c, 4);
  const double s2 = c.noise_amp * c.noise_amp;
  const double tol = 5.0 / std::sqrt(double(c.T)) * s2;
  CHECK((p.r1.mat() - s2 * Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= tol);
  CHECK((p.r2.mat() - s2 * Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= tol);
}

TEST_CASE("lag structure is exact") {
  SceneConfig c = small(4, 3);
  const SignalSet sig = synthesize(generate_scene(c, 9), c);
  for (int ch = 0; ch < 4; ++ch)
    for (int l = 1; l < 3; ++l)
      for (int t = l; t < c.T; ++t) {
        CHECK(sig.x1(t, ch * 3 + l) == sig.x1(t - l, ch * 3));
        if (sig.x2(t, ch * 3 + l) != sig.x2(t - l, ch * 3)) FAIL("x2 lag mismatch");
      }
}

TEST_CASE("determinism and PSD over seeds") {
  SceneConfig c = small(9, 2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Scene sa, sb;
    const CovariancePair a = simulate(c, seed, &sa);
    const CovariancePair b = simulate(c, seed, &sb);
    CHECK(a.r1.mat() == b.r1.mat());
    CHECK(a.r2.mat() == b.r2.mat());
    CHECK(a.r1.mat() == a.r1.mat().transpose());
    CHECK(is_psd(a.r1, 1e-12));
    CHECK(is_psd(a.r2, 1e-12));
    std::ostringstream ma, mb;
    write_manifest(ma, sa, c);
    write_manifest(mb, sb, c);
    CHECK(ma.str() == mb.str());
  }
  CHECK(simulate(c, 1).r1.mat() != simulate(c, 2).r1.mat());
}

TEST_CASE("fewer class-2 sources make R2 worse conditioned") {
  SceneConfig c = small(9, 2);
  double few = 0.0, many = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    c.n2 = 1;
    few += std::log10(condition_number(simulate(c, seed).r2));
    c.n2 = 18;
    many += std::log10(condition_number(simulate(c, seed).r2));
  }
  CHECK(few > many);
}

TEST_CASE("relabeling sensors permutes covariance blocks") {
  SceneConfig c = small(4, 2);
  c.noise_amp = 0.0;  // noise is drawn in sensor order, so it does not follow the relabeling
  const Scene s = generate_scene(c, 12);
  const int perm[4] = {2, 0, 3, 1};
  Scene t = s;
  for (int i = 0; i < 4; ++i) t.sensors[i] = s.sensors[perm[i]];
  const CovariancePair a = make_pair(synthesize(s, c), 4, 2);
  const CovariancePair b = make_pair(synthesize(t, c), 4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(b.r1.mat().block(2 * i, 2 * j, 2, 2) == a.r1.mat().block(2 * perm[i], 2 * perm[j], 2, 2));
}

TEST_CASE("manifest fields") {
  SceneConfig c = small(4, 2);
  const Scene s = generate_scene(c, 77);
  std::ostringstream os;
  write_manifest(os, s, c);
  const std::string m = os.str();
  for (const char* key : {"\"seed\": 77", "\"grid_rows\": 2", "\"sources\"", "\"f_lo\"", "\"class\""})
    CHECK(m.find(key) != std::string::npos);
}
