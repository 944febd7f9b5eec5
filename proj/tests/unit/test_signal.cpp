#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "signal/denoise.hpp"
#include "signal/noise.hpp"
#include "signal/pedometer.hpp"
#include "signal/spectrogram.hpp"
#include "signal/synth.hpp"
#include "signal/trace.hpp"

using namespace gaitfuse;
using namespace gaitfuse::signal;

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gaitfuse_signal_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

SensorTrace constant_trace(std::size_t n, double v, double rate = 50.0) {
  SensorTrace t;
  t.sample_rate = rate;
  for (auto& a : t.axes) a.assign(n, v);
  return t;
}

SyntheticSubjectSpec one_tone(double f, double amp, int axis = 0) {
  SyntheticSubjectSpec s;
  s.fundamental_hz = f;
  for (int a = 0; a < 3; ++a) {
    s.amplitudes[a] = {a == axis ? amp : 0.0};
    s.phases[a] = {0.0};
  }
  return s;
}

double total_variation(const std::vector<double>& x) {
  double tv = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) tv += std::abs(x[i] - x[i - 1]);
  return tv;
}

// Dual of the TV prox: min 0.5*||x - D^T z||^2 over |z_i| <= lambda, solved by
// projected Gauss-Seidel sweeps; u = x - D^T z. D is the forward difference.
std::vector<double> tv_qp_oracle(const std::vector<double>& x, double lambda) {
  const std::size_t n = x.size();
  std::vector<double> z(n - 1, 0.0);
  auto dtz = [&](std::size_t i) {  // (D^T z)_i
    double v = 0.0;
    if (i > 0) v += z[i - 1];
    if (i + 1 < n) v -= z[i];
    return v;
  };
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      // Residual u = x - D^T z; the objective in z_j alone has curvature 2.
      const double uj = x[j] - dtz(j), uj1 = x[j + 1] - dtz(j + 1);
      const double grad = -(uj1 - uj);
      const double next = std::clamp(z[j] - grad / 2.0, -lambda, lambda);
      change = std::max(change, std::abs(next - z[j]));
      z[j] = next;
    }
    if (change < 1e-14) break;
  }
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = x[i] - dtz(i);
  return u;
}

// Row energies (sum of squared magnitudes over frames) of the first axis block.
std::vector<double> row_energy(const nn::Tensor& raw, double floor) {
  std::vector<double> e(11, 0.0);
  for (std::size_t r = 0; r < 11; ++r)
    for (std::size_t c = 0; c < kImageCols; ++c) {
      const double v = raw[r * kImageCols + c];
      if (v > floor) e[r] += std::exp(2.0 * v);
    }
  return e;
}

}  // namespace

TEST_CASE("ingest_csv basics and errors") {
  const auto ok = temp_file("ok.csv");
  write_text(ok, "t,ax,ay,az\n0,1,2,3\n0.1,1,2,3\n0.2,1,2,3\n0.3,1,2,3\n");
  const SensorTrace t = ingest_csv(ok);
  CHECK(t.size() == 4);
  CHECK(t.sample_rate == doctest::Approx(10.0));

  const auto back = temp_file("back.csv");
  write_text(back, "t,ax,ay,az\n0,1,2,3\n0.2,1,2,3\n0.1,1,2,3\n");
  auto code_of = [](const fs::path& p) {
    try {
      ingest_csv(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of(back) == ErrorCode::NonMonotoneTime);
  const auto missing = temp_file("missing.csv");
  write_text(missing, "t,ax,ay\n0,1,2\n");
  CHECK(code_of(missing) == ErrorCode::MissingColumns);
  const auto empty = temp_file("empty.csv");
  write_text(empty, "");
  CHECK(code_of(empty) == ErrorCode::EmptyInput);
  const auto header_only = temp_file("header_only.csv");
  write_text(header_only, "t,ax,ay,az\n");
  CHECK(code_of(header_only) == ErrorCode::EmptyInput);
}

TEST_CASE("ingest_csv resampling matches linear interpolation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> ts, xs[3];
  std::string csv = "t,ax,ay,az\n";
  for (int i = 0; i < 200; ++i) {
    const double t = 0.25 + i * 0.01;
    ts.push_back(t);
    csv += std::to_string(t);
    for (auto& x : xs) {
      x.push_back(u(rng));
      csv += "," + std::to_string(x.back());
    }
    csv += "\n";
  }
  // Re-read the printed values so the oracle sees the same numbers.
  const auto p = temp_file("rate.csv");
  write_text(p, csv);
  {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    for (int i = 0; i < 200; ++i) {
      std::getline(in, line);
      double v[4];
      std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]);
      ts[i] = v[0];
      for (int a = 0; a < 3; ++a) xs[a][i] = v[a + 1];
    }
  }
  for (double rate : {50.0, 30.0}) {
    const SensorTrace t = ingest_csv(p, rate);
    CHECK(t.sample_rate == rate);
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double tj = ts.front() + static_cast<double>(j) / rate;
      std::size_t k = 0;
      while (k + 2 < ts.size() && ts[k + 1] <= tj) ++k;
      const double w = (tj - ts[k]) / (ts[k + 1] - ts[k]);
      for (int a = 0; a < 3; ++a) {
        const double want = xs[a][k] + w * (xs[a][k + 1] - xs[a][k]);
        CHECK(std::abs(t.axes[a][j] - want) <= 1e-12);
      }
    }
  }
}

TEST_CASE("csv round trip") {
  const SensorTrace t = synth_gait(random_subject(3, "s3"), 4.0, 50.0);
  const auto p = temp_file("roundtrip.csv");
  write_csv(t, p);
  const SensorTrace back = ingest_csv(p, 50.0);
  REQUIRE(back.size() == t.size());
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.axes[a][i] == doctest::Approx(t.axes[a][i]).epsilon(1e-12));
}

TEST_CASE("spectrogram shape, floor and errors") {
  STFTConfig cfg;
  cfg.hop = 8;
  const auto zero = constant_trace(cfg.required_length(8), 0.0);
  const nn::Tensor raw = raw_log_spectrogram(zero, cfg);
  CHECK(raw.shape() == nn::Shape{1, 33, 42});
  for (double v : raw.values()) CHECK(v == cfg.log_floor);

  const auto imgs = spectrogram(synth_gait(random_subject(1, "a"), 30.0, 50.0), cfg);
  CHECK(imgs.size() == (1500 - 32) / 8 / 42 + 0);
  for (const auto& im : imgs) {
    CHECK(im.pixels.shape() == nn::Shape{1, 33, 42});
    double mean = 0.0, sq = 0.0;
    for (double v : im.pixels.values()) mean += v;
    mean /= 1386.0;
    for (double v : im.pixels.values()) sq += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(sq / 1386.0) - 1.0) < 1e-6);
  }

  try {
    spectrogram(constant_trace(100, 1.0), cfg);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("360") != std::string::npos);
  }
  STFTConfig bad = cfg;
  bad.freq_bins_kept = 10;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("bin-centred sinusoid concentration") {
  // Bin 3 of a 32-point FFT at 50 Hz: 3 * 50 / 32 Hz.
  STFTConfig cfg;
  cfg.hop = 8;
  SensorTrace t = constant_trace(cfg.required_length(8), 0.0);
  const double f = 3.0 * 50.0 / 32.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    t.axes[0][i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / 50.0 + 0.3);

  cfg.window = WindowKind::Rectangular;
  auto e = row_energy(raw_log_spectrogram(t, cfg), cfg.log_floor);
  double total = 0.0;
  for (double v : e) total += v;
  CHECK(e[3] / total >= 0.90);

  // Periodic Hann: the centre bin keeps 1 of 1 + 2 * (1/2)^2 in energy.
  cfg.window = WindowKind::Hann;
  e = row_energy(raw_log_spectrogram(t, cfg), cfg.log_floor);
  total = 0.0;
  for (double v : e) total += v;
  CHECK(e[3] / total == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(std::max_element(e.begin(), e.end()) - e.begin() == 3);
}

TEST_CASE("spectrogram shifts by one column per hop") {
  STFTConfig cfg;
  cfg.hop = 8;
  const SensorTrace t = synth_gait(random_subject(7, "x"), 10.0, 50.0);
  const nn::Tensor a = raw_log_spectrogram(t, cfg);
  const nn::Tensor b = raw_log_spectrogram(t.slice(8, t.size() - 8), cfg);
  for (std::size_t r = 0; r < 33; ++r)
    for (std::size_t c = 0; c + 1 < 42; ++c)
      CHECK(std::abs(b[r * 42 + c] - a[r * 42 + c + 1]) <= 1e-9);
}

TEST_CASE("synth_gait") {
  const SensorTrace s = synth_gait(one_tone(2.0, 1.0), 2.0, 50.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.axes[0][i] == doctest::Approx(std::sin(2.0 * std::numbers::pi * 2.0 * i / 50.0)).epsilon(1e-9));
    CHECK(s.axes[1][i] == 0.0);
  }
  const auto spec = random_subject(12, "p");
  CHECK(synth_gait(spec, 5.0, 50.0) == synth_gait(spec, 5.0, 50.0));
  CHECK_THROWS_AS(synth_gait(one_tone(3.5, 1.0), 1.0, 50.0), Error);

  // At 25 Hz a 32-point bin is 0.78 Hz wide, so the tones land in different rows.
  STFTConfig cfg;
  cfg.hop = 4;
  auto dominant = [&](double f) {
    const auto raw = raw_log_spectrogram(synth_gait(one_tone(f, 1.0, 2), 10.0, 25.0), cfg);
    std::vector<double> e(11, 0.0);
    for (std::size_t r = 1; r < 11; ++r)
      for (std::size_t c = 0; c < 42; ++c) e[r] += std::exp(2.0 * raw[(22 + r) * 42 + c]);
    return std::max_element(e.begin(), e.end()) - e.begin();
  };
  // DFT oracle: nearest bin to f * 32 / 25.
  CHECK(dominant(1.6) == std::lround(1.6 * 32 / 25));
  CHECK(dominant(2.2) == std::lround(2.2 * 32 / 25));
  CHECK(dominant(1.6) != dominant(2.2));
}

TEST_CASE("inject_noise") {
  const SensorTrace t = synth_gait(random_subject(2, "n"), 20.0, 50.0);
  NoiseSpec zero;
  zero.std_scale = 0.0;
  CHECK(inject_noise(t, zero) == t);
  NoiseSpec sz;
  sz.kind = NoiseKind::Sinusoid;
  sz.sinusoid_amp_ratio = 0.0;
  CHECK(inject_noise(t, sz) == t);

  NoiseSpec g;
  CHECK(inject_noise(constant_trace(500, 0.0), g) == constant_trace(500, 0.0));

  for (auto kind : {NoiseKind::Gaussian, NoiseKind::Laplacian, NoiseKind::Uniform}) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    SensorTrace w = constant_trace(10000, 0.0);
    for (auto& a : w.axes)
      for (double& v : a) v = n01(rng);
    NoiseSpec s;
    s.kind = kind;
    s.seed = 4;
    const SensorTrace out = inject_noise(w, s);
    CHECK(out.size() == w.size());
    CHECK(out.sample_rate == w.sample_rate);
    double sq = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mean += out.axes[0][i] - w.axes[0][i];
    mean /= 10000.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = out.axes[0][i] - w.axes[0][i] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / 9999.0);
    CHECK(sd >= 0.9);
    CHECK(sd <= 1.1);
  }

  NoiseSpec sin_spec = fingerprint_spec(42);
  CHECK(sin_spec.sinusoid_freq >= 1.4);
  CHECK(sin_spec.sinusoid_freq <= 2.6);
  const SensorTrace fp = inject_noise(t, sin_spec);
  CHECK(fp.size() == t.size());
  CHECK(inject_noise(t, sin_spec) == fp);
}

TEST_CASE("moving window std") {
  const std::vector<double> x{1, 3, 1, 3, 5, 5, 5};
  const auto s = moving_window_std(x, 2);
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] == doctest::Approx(1.0));
  CHECK(s[4] == doctest::Approx(1.0));
  CHECK(s[6] == doctest::Approx(0.0));
}

TEST_CASE("tv_denoise") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::vector<double> x(50);
  for (double& v : x) v = n01(rng);
  const auto tiny = tv_denoise(x, 1e-12);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(tiny[i] - x[i]) <= 1e-9);

  const std::vector<double> flat(20, 2.5);
  CHECK(tv_denoise(flat, 3.0) == flat);
  CHECK(tv_denoise(std::vector<double>{4.0}, 1.0) == std::vector<double>{4.0});
  CHECK_THROWS_AS(tv_denoise(flat, 0.0), Error);

  std::vector<double> spike(40, 0.0);
  for (std::size_t i = 20; i < 40; ++i) spike[i] = 2.0;
  spike[10] = 5.0;
  for (double lambda : {0.3, 1.0, 2.0}) {
    const auto got = tv_denoise(spike, lambda);
    const auto want = tv_qp_oracle(spike, lambda);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-8);
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> y(1 + trial * 3);
    for (double& v : y) v = 3.0 * n01(rng);
    const double lambda = 0.05 + 0.2 * trial;
    const auto got = tv_denoise(y, lambda);
    const auto want = tv_qp_oracle(y, lambda);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-8);
    CHECK(total_variation(got) <= total_variation(y) + 1e-12);
  }
}

TEST_CASE("gaussian_filter") {
  const std::vector<double> flat(30, -1.25);
  for (double v : gaussian_filter(flat, 2.0)) CHECK(v == doctest::Approx(-1.25).epsilon(1e-14));

  const auto k = gaussian_kernel(1.5);
  CHECK(k.size() == 2 * 6 + 1);
  std::vector<double> impulse(41, 0.0);
  impulse[20] = 1.0;
  const auto resp = gaussian_filter(impulse, 1.5);
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(resp[20 - 6 + i] == doctest::Approx(k[i]).epsilon(1e-14));
  double ksum = 0.0;
  for (double v : k) ksum += v;
  CHECK(ksum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k[6] / k[7] == doctest::Approx(std::exp(0.5 / 2.25)).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> w(5000);
  for (double& v : w) v = n01(rng);
  auto var = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= double(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size());
  };
  const auto smooth = gaussian_filter(w, 5.0);
  CHECK(var(smooth) < var(w));
  double m_in = 0.0, m_out = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    m_in += w[i];
    m_out += smooth[i];
  }
  CHECK(std::abs(m_in - m_out) / double(w.size()) <= 1e-9);
}

TEST_CASE("pedometer") {
  CHECK(count_steps(constant_trace(500, 0.0)) == 0);
  CHECK(count_steps(constant_trace(500, 9.81)) == 0);
  SyntheticSubjectSpec walk = one_tone(2.0, 3.0, 2);
  walk.offset = {0.0, 0.0, kGravity};
  const SensorTrace t = synth_gait(walk, 10.0, 50.0);
  const auto steps = count_steps(t);
  CHECK(steps >= 19);
  CHECK(steps <= 21);
  CHECK(pedometer_error(t, t) == 0.0);
  CHECK_THROWS_AS(count_steps(constant_trace(20, 0.0)), Error);

  auto gait = random_subject(31, "w");
  gait.noise_std = 0.0;
  gait.cadence_jitter = 0.0;
  const SensorTrace g = synth_gait(gait, 10.0, 50.0);
  const double expected = gait.fundamental_hz * 10.0;
  CHECK(std::abs(double(count_steps(g)) - expected) <= 1.5);
}
