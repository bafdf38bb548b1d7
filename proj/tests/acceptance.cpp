// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is the
// number of failures. Tolerances and frozen thresholds are pinned below.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aobs/drem/drem.hpp"
#include "aobs/errors.hpp"
#include "aobs/estimator/estimator.hpp"
#include "aobs/harness/output.hpp"
#include "aobs/harness/scenario.hpp"
#include "aobs/harness/simulation.hpp"
#include "aobs/matkit/linalg.hpp"
#include "oracles.hpp"

using namespace aobs;
using namespace aobs::harness;
using namespace aobs::matkit;
namespace fs = std::filesystem;

namespace {

// 1
constexpr double kAdjTol = 1e-10;
constexpr double kAdjRuntime = 1.0;
// 2
constexpr double kErrorDynTol = 1e-6;
constexpr double kErrorDynRuntime = 5.0;
// 3, 4
constexpr double kIdentityTol = 1e-6;
// 5
constexpr double kAnnihilationTol = 1e-9;
// 6
constexpr double kJacobiTol = 1e-3;
// 7: steady-state mean ‖θ̃‖ at T = 30, frozen after the first validated run (0.1367).
constexpr double kThetaThreshold = 0.15;
constexpr double kRunRuntime = 60.0;
// 8
constexpr double kOmegaFloorLo = -135.0, kOmegaFloorHi = -110.0;
// 9
constexpr double kKappaTol = 1e-3;
// 10: runs count as converged when the steady-state mean ‖θ̃‖ is below this.
constexpr double kConvergedTheta = 0.02;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- long runs, executed up front on a small worker pool ----

struct Job {
  Scenario s;
  RunResult r;
  double seconds = 0.0;
  std::string error;
};

void run_jobs(std::vector<Job*>& jobs) {
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto t0 = Clock::now();
      try {
        jobs[i]->r = run_scenario(jobs[i]->s);
      } catch (const std::exception& e) {
        jobs[i]->error = e.what();
      }
      jobs[i]->seconds = since(t0);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

// ---- criteria ----

Verdict c1_matrix_identities() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mag(-3.0, 3.0);
  double worst = 0.0;
  for (std::size_t n : {2u, 3u, 4u})
    for (int i = 0; i < 1000; ++i) {
      const Mat m = std::pow(10.0, mag(rng)) * oracle::random_mat(rng, n, n);
      const Mat r = adjugate(m) * m - det(m).to_double() * Mat::identity(n);
      double fr = 0.0, fm = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          fr += r(a, b) * r(a, b);
          fm += m(a, b) * m(a, b);
        }
      const double bound = kAdjTol * std::pow(std::max(1.0, std::sqrt(fm)), static_cast<double>(n - 1));
      worst = std::max(worst, std::sqrt(fr) / bound);
    }
  const double secs = since(t0);
  return {worst <= 1.0 && secs < kAdjRuntime,
          "3000 matrices, worst residual/bound " + fmt("%.3g", worst) + ", " + fmt("%.3f", secs) + " s"};
}

Verdict c2_error_dynamics() {
  const auto t0 = Clock::now();
  Scenario s = duffing_scenario();
  s.plant.delta = plant::Signal::zero(1);
  s.clock.t_end = 10.0;
  const Vec theta = s.plant.theta_true;
  Vec e0 = s.drem.chi0 - s.plant.x0;
  double worst = 0.0;
  run_scenario(s, [&](const Simulation& sim) {
    const auto& b = sim.bank();
    const auto st = sim.bank_state();
    const auto chi = b.chi(st), pf = b.pf(st);
    const Vec om = b.omega(st) * theta;
    const auto x = sim.x();
    const Vec ref = oracle::expm(b.AK(), sim.time() - s.clock.t0) * e0;
    for (std::size_t i = 0; i < x.size(); ++i)
      worst = std::max(worst, std::abs(chi[i] + pf[i] + om[i] - x[i] - ref[i]));
  });
  const double secs = since(t0);
  return {worst <= kErrorDynTol && secs < kErrorDynRuntime,
          "max |e - exp(A_K t) e0| over [0,10] = " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

struct IdentityResult {
  double reg = 0.0, ext = 0.0;
  std::size_t steps = 0;
};

IdentityResult identity_run() {
  Scenario s = duffing_scenario();
  s.truth = true;
  s.clock.t_end = 50.0;
  const Vec& th = s.plant.theta_true;
  const std::size_t q = th.size();
  Vec big(2 * q);
  for (std::size_t i = 0; i < q; ++i) {
    big[i] = th[i];
    big[q + i] = -th[i];
  }
  IdentityResult out;
  run_scenario(s, [&](const Simulation& sim) {
    const auto phi = sim.phi_stack();
    double pt = 0.0;
    for (std::size_t i = 0; i < q; ++i) pt += phi[i] * th[i];
    out.reg = std::max(out.reg, std::abs(sim.z() - pt - sim.w()));
    const Vec pb = sim.Phi() * big;
    const auto Y = sim.Y();
    const auto W = sim.W();
    for (std::size_t i = 0; i < 2 * q; ++i) out.ext = std::max(out.ext, std::abs(Y[i] - pb[i] - W[i]));
    ++out.steps;
  });
  return out;
}

Verdict c5_annihilation() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), th(-5.0, 5.0);
  const auto cfg = drem::AnnihilatorConfig::duffing();
  double worst = 0.0;
  int used = 0, skipped = 0;
  for (int i = 0; i < 1000; ++i) {
    Mat phi(4, 4);
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a; b < 4; ++b) phi(a, b) = phi(b, a) = u(rng);
    const double t1 = th(rng), t2 = th(rng);
    const Vec big{t1, t2, -t1, -t2};
    const Vec Y = phi * big;
    const drem::Annihilated a = drem::annihilate(cfg, Y, phi);
    if (a.M.is_zero()) {
      ++skipped;
      continue;
    }
    const Mat om = a.omega_mat.to_mat();
    const Mat lm = a.lambda.to_mat();
    Vec lam(4);
    for (std::size_t k = 0; k < 4; ++k) lam[k] = lm(k, 0);
    const Vec ot = om * big;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      num += (lam[k] - ot[k]) * (lam[k] - ot[k]);
      den += ot[k] * ot[k];
    }
    worst = std::max(worst, std::sqrt(num) / std::sqrt(den));
    ++used;
  }
  return {worst <= kAnnihilationTol, std::to_string(used) + " instances (" + std::to_string(skipped) +
                                          " with M = 0 skipped), worst relative residual " + fmt("%.3g", worst)};
}

// Centered running median over a sliding window, kept in two balanced multisets.
class SlidingMedian {
 public:
  void insert(double v) {
    if (lo_.empty() || v <= *lo_.rbegin()) lo_.insert(v);
    else hi_.insert(v);
    balance();
  }
  void erase(double v) {
    if (auto it = lo_.find(v); it != lo_.end()) lo_.erase(it);
    else hi_.erase(hi_.find(v));
    balance();
  }
  double median() const {
    if (lo_.size() == hi_.size()) return 0.5 * (*lo_.rbegin() + *hi_.begin());
    return *lo_.rbegin();
  }

 private:
  void balance() {
    if (lo_.size() > hi_.size() + 1) {
      hi_.insert(*lo_.rbegin());
      lo_.erase(std::prev(lo_.end()));
    } else if (hi_.size() > lo_.size()) {
      lo_.insert(*hi_.begin());
      hi_.erase(hi_.begin());
    }
  }
  std::multiset<double> lo_, hi_;
};

Verdict c6_jacobi() {
  Scenario s = duffing_scenario();
  s.clock.t_end = 50.0;
  const double dt = s.clock.dt;
  std::vector<ScaledScalar> w, wd;
  run_scenario(s, [&](const Simulation& sim) {
    w.push_back(sim.omega());
    wd.push_back(sim.omega_dot());
  });
  // log10|ω| with exact zeros mapped below every real value.
  std::vector<double> lw(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) lw[i] = w[i].is_zero() ? -1e300 : w[i].log10_abs();
  // Running median: centered, over one window length T.
  const std::size_t half = s.window_steps() / 2;
  SlidingMedian med;
  const std::size_t n = w.size();
  for (std::size_t i = 0; i <= std::min(half, n - 1); ++i) med.insert(lw[i]);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && i + half < n) med.insert(lw[i + half]);
    if (i > half) med.erase(lw[i - half - 1]);
    if (i == 0 || i + 1 >= n || w[i].is_zero() || !(lw[i] > med.median())) continue;
    const ScaledScalar cd = (w[i + 1] - w[i - 1]) * ScaledScalar(1.0 / (2.0 * dt));
    // Relative to |ω̇|, floored at |ω|·1 s⁻¹: samples above the median sit near peaks of ω where ω̇ → 0.
    const ScaledScalar scale = std::max(wd[i].abs(), w[i].abs());
    worst = std::max(worst, std::abs(((cd - wd[i]) / scale).to_double()));
    ++checked;
  }
  return {checked > 1000 && worst <= kJacobiTol,
          std::to_string(checked) + " samples above the running median, worst relative error " + fmt("%.3g", worst)};
}

Verdict c9_kappa() {
  estimator::EstimatorConfig cfg;
  cfg.gamma = 100.0;
  const estimator::GaugedEstimator est(cfg);
  auto omega = [](double t) { return 1.0 + 0.5 * std::sin(t); };
  auto omega_dot = [](double t) { return 0.5 * std::cos(t); };
  const double dt = 1e-3;
  double k = est.initial_k(), worst = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double t = i * dt;
    if (t > 5.0) worst = std::max(worst, std::abs(est.kappa(k).to_double() * omega(t) - 1.0));
    estimator::OmegaSamples smp;
    const double ts[5] = {t, t + dt / 2, t + dt / 2, t + dt, t + dt};
    for (int j = 0; j < 5; ++j) {
      smp.omega[j] = omega(ts[j]);
      smp.omega_dot[j] = omega_dot(ts[j]);
    }
    k = est.step(k, smp, dt).next;
  }
  return {worst <= kKappaTol, "max |kappa*omega - 1| for t in (5, 20] = " + fmt("%.3g", worst)};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments restrict the run to the listed criteria.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto want = [&](int c) { return only.empty() || only.count(c) > 0; };
  int failures = 0, reported = 0;
  const auto start = Clock::now();
  auto report = [&](int id, const char* title, const Verdict& v) {
    std::printf("%s  criterion %2d  %s: %s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str());
    std::fflush(stdout);
    ++reported;
    if (!v.pass) ++failures;
  };

  if (want(1)) report(1, "matrix identities", c1_matrix_identities());
  if (want(2)) report(2, "closed-form error dynamics", c2_error_dynamics());
  if (want(3) || want(4)) {
    const IdentityResult id = identity_run();
    if (want(3))
      report(3, "regression identity",
             {id.reg <= kIdentityTol, "max |z - phi'theta - w| over " + std::to_string(id.steps) + " steps = " +
                                          fmt("%.3g", id.reg)});
    if (want(4))
      report(4, "extension identity",
             {id.ext <= kIdentityTol, "max |Y - Phi Theta - W| over " + std::to_string(id.steps) + " steps = " +
                                          fmt("%.3g", id.ext)});
  }
  if (want(5)) report(5, "annihilation algebra", c5_annihilation());
  if (want(6)) report(6, "Jacobi derivative", c6_jacobi());

  // Long runs.
  auto at = [](double amp, double T) {
    Scenario s = duffing_scenario(amp);
    s.drem.T = T;
    return s;
  };
  Job t10{at(2.5, 10)}, t20{at(2.5, 20)}, t30{at(2.5, 30)}, t30b{at(2.5, 30)}, a05{at(0.5, 30)}, a15{at(1.5, 30)};
  // μ sweep: T = 100 so that θ̂ is converged; dt = 5e-4 keeps μ = 125 inside the RK4 stability interval.
  auto mu_run = [](double mu) {
    Scenario s = duffing_scenario(2.5);
    s.drem.T = 100.0;
    s.clock.t_end = 600.0;
    s.clock.dt = 5e-4;
    s.output.decimation = 200;
    s.observer.mu = mu;
    return s;
  };
  Job m5{mu_run(5)}, m25{mu_run(25)}, m125{mu_run(125)};
  std::vector<Job*> jobs;
  if (want(7) || want(8) || want(11)) jobs.push_back(&t30);
  if (want(7)) jobs.insert(jobs.end(), {&t10, &t20});
  if (want(11)) jobs.push_back(&t30b);
  if (want(8)) jobs.insert(jobs.end(), {&a05, &a15});
  if (want(10)) jobs.insert(jobs.end(), {&m5, &m25, &m125});
  run_jobs(jobs);
  for (const Job* j : jobs)
    if (!j->error.empty()) std::printf("note: run %s T=%g faulted: %s\n", j->s.name.c_str(), j->s.drem.T, j->error.c_str());

  auto ok = [](const Job& j) { return j.error.empty(); };
  if (want(7)) {
    Verdict v;
    if (ok(t10) && ok(t20) && ok(t30)) {
      const double e10 = t10.r.metrics.errtheta_mean, e20 = t20.r.metrics.errtheta_mean,
                   e30 = t30.r.metrics.errtheta_mean;
      const double slowest = std::max({t10.seconds, t20.seconds, t30.seconds});
      v.pass = e30 < kThetaThreshold && e30 < e10 && e30 < e20 && slowest < kRunRuntime;
      v.detail = "steady mean |theta err| T=10: " + fmt("%.4g", e10) + ", T=20: " + fmt("%.4g", e20) +
                 ", T=30: " + fmt("%.4g", e30) + " (threshold " + fmt("%.3g", kThetaThreshold) +
                 "), slowest run " + fmt("%.1f", slowest) + " s";
    } else {
      v.detail = "a run faulted";
    }
    report(7, "end-to-end convergence", v);
  }
  if (want(8)) {
    Verdict v;
    if (ok(a05) && ok(a15) && ok(t30)) {
      const double f05 = a05.r.metrics.log10_omega_floor, f15 = a15.r.metrics.log10_omega_floor,
                   f25 = t30.r.metrics.log10_omega_floor;
      v.pass = f05 < f15 && f15 < f25 && f25 >= kOmegaFloorLo && f25 <= kOmegaFloorHi;
      v.detail = "log10|omega| floor A=0.5: " + fmt("%.2f", f05) + ", A=1.5: " + fmt("%.2f", f15) +
                 ", A=2.5: " + fmt("%.2f", f25) + " (band [" + fmt("%g", kOmegaFloorLo) + ", " +
                 fmt("%g", kOmegaFloorHi) + "])";
    } else {
      v.detail = "a run faulted";
    }
    report(8, "omega amplitude ordering", v);
  }
  if (want(9)) report(9, "kappa tracking", c9_kappa());
  if (want(10)) {
    Verdict v;
    if (ok(m5) && ok(m25) && ok(m125)) {
      const double d5 = m5.r.metrics.errdelta_mean, d25 = m25.r.metrics.errdelta_mean,
                   d125 = m125.r.metrics.errdelta_mean;
      const double th = std::max({m5.r.metrics.errtheta_mean, m25.r.metrics.errtheta_mean, m125.r.metrics.errtheta_mean});
      v.pass = th <= kConvergedTheta && d5 >= d25 && d25 >= d125;
      v.detail = "steady mean |delta err| mu=5: " + fmt("%.4g", d5) + ", mu=25: " + fmt("%.4g", d25) +
                 ", mu=125: " + fmt("%.4g", d125) + " (T=100, dt=5e-4; |theta err| " + fmt("%.3g", th) + ")";
    } else {
      v.detail = "a run faulted";
    }
    report(10, "disturbance estimate vs mu", v);
  }
  if (want(11)) {
    Verdict v;
    if (ok(t30) && ok(t30b)) {
      const fs::path dir = fs::temp_directory_path() / "aobs_acceptance";
      fs::create_directories(dir);
      const fs::path a = dir / "run_a.csv", b = dir / "run_b.csv";
      write_csv(a, t30.r.log);
      write_csv(b, t30b.r.log);
      const std::string ba = read_bytes(a), bb = read_bytes(b);
      v.pass = !ba.empty() && ba == bb;
      v.detail = std::to_string(ba.size()) + " vs " + std::to_string(bb.size()) + " bytes, " +
                 (ba == bb ? "identical" : "different");
    } else {
      v.detail = "a run faulted";
    }
    report(11, "determinism", v);
  }

  std::printf("%d of %d criteria passed, %.1f s total\n", reported - failures, reported, since(start));
  return failures;
}
