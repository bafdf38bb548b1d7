// Command-line front end: run, sweep and check scenario files.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

#include "aobs/errors.hpp"
#include "aobs/harness/output.hpp"
#include "aobs/harness/scenario.hpp"
#include "aobs/harness/simulation.hpp"
#include "aobs/matkit/linalg.hpp"
#include "aobs/observer/observer.hpp"

namespace fs = std::filesystem;
using namespace aobs;
using namespace aobs::harness;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kRuntime = 3;

void print_metrics(const MetricsReport& m) {
  const auto names = MetricsReport::names();
  const auto values = m.values();
  for (std::size_t i = 0; i < names.size(); ++i) std::printf("  %-22s %s\n", names[i].c_str(), format_double(values[i]).c_str());
}

int report_validation(const ValidationError& e) {
  std::fprintf(stderr, "invalid scenario:\n");
  for (const auto& p : e.problems()) std::fprintf(stderr, "  - %s\n", p.c_str());
  return kValidation;
}

int cmd_run(const std::string& file, const std::string& csv, const std::string& metrics, bool plot) {
  Scenario s;
  try {
    s = load_scenario(file);
    if (!csv.empty()) s.output.csv = csv;
    if (!metrics.empty()) s.output.metrics = metrics;
    if (plot) s.output.plot_script = true;
    s.validate();
    check_output_paths(s);
  } catch (const ValidationError& e) {
    return report_validation(e);
  } catch (const IoError& e) {
    std::fprintf(stderr, "output error: %s\n", e.what());
    return kValidation;
  }
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r = run_scenario(s);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Emitted e = emit_outputs(r, s);
    std::printf("%s: %zu rows, %zu stiff estimator steps, %.1f s\n", s.name.c_str(), r.log.rows.size(), r.stiff_steps,
                secs);
    print_metrics(r.metrics);
    for (const auto& f : e.files) std::printf("wrote %s\n", f.string().c_str());
  } catch (const IntegrationFault& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_sweep(const std::string& file, std::string param, const std::optional<std::string>& values_text,
              std::string table, unsigned threads, bool plot) {
  Scenario s;
  std::vector<std::string> values;
  std::vector<SweepEntry> entries;
  try {
    s = load_scenario(file);
    if (param.empty()) param = s.sweep.param;
    values = values_text ? split_list(*values_text) : s.sweep.values;
    if (param.empty()) throw ValidationError({"no sweep parameter given (--param or sweep.param)"});
    const auto& ok = sweep_params();
    if (std::find(ok.begin(), ok.end(), param) == ok.end())
      throw ValidationError({"sweep parameter '" + param + "' is not one of T, A_amp, mu, gamma, k, alpha"});
    s.validate();
    if (table.empty()) {
      const fs::path base = s.output.csv.empty() ? fs::path(".") : fs::path(s.output.csv).parent_path();
      table = (base / (s.name + "_sweep_" + param + ".csv")).string();
    }
    check_writable(table);
    if (plot && s.output.csv.empty()) throw IoError("a sweep plot script needs output.csv to be set");
    const auto t0 = std::chrono::steady_clock::now();
    entries = run_sweep(s, param, values, threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("sweep %s over %zu values, %.1f s\n", param.c_str(), values.size(), secs);
  } catch (const ValidationError& e) {
    return report_validation(e);
  } catch (const IoError& e) {
    std::fprintf(stderr, "output error: %s\n", e.what());
    return kValidation;
  }
  bool any_fault = false;
  std::vector<PlotSeries> series;
  try {
    write_text_atomic(table, sweep_table(param, entries));
    std::printf("wrote %s\n", table.c_str());
    for (const auto& e : entries) {
      if (e.ok) {
        std::printf("  %s=%s  errtheta_mean=%s  errdelta_mean=%s  log10_omega_floor=%s\n", param.c_str(),
                    e.value.c_str(), format_double(e.metrics.errtheta_mean).c_str(),
                    format_double(e.metrics.errdelta_mean).c_str(), format_double(e.metrics.log10_omega_floor).c_str());
        if (!e.csv.empty()) series.push_back({param + "=" + e.value, e.csv});
      } else {
        any_fault = true;
        std::fprintf(stderr, "  %s=%s  fault: %s\n", param.c_str(), e.value.c_str(), e.error.c_str());
      }
    }
    if (plot && !series.empty()) {
      fs::path script = table;
      script.replace_extension(".plot.py");
      const fs::path dir = script.has_parent_path() ? script.parent_path() : fs::path(".");
      for (auto& p : series) {
        std::error_code ec;
        const fs::path rel = fs::relative(fs::absolute(p.csv), fs::absolute(dir), ec);
        if (!ec && !rel.empty()) p.csv = rel;
      }
      write_text_atomic(script, plot_script(series, s.name + ": sweep over " + param));
      std::printf("wrote %s\n", script.string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kRuntime;
  }
  return any_fault ? kRuntime : kOk;
}

int cmd_check(const std::string& file) {
  Scenario s;
  try {
    s = load_scenario(file);
    s.validate();
  } catch (const ValidationError& e) {
    return report_validation(e);
  } catch (const IoError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kValidation;
  }
  std::printf("%s", describe(s).c_str());
  const auto& k = s.plant.known;
  std::printf("\noutput matching:\n");
  try {
    const auto sug = observer::suggest_matching(k.A, k.C, k.D, s.observer.L);
    const auto rep = observer::verify_matching(k.A, k.C, k.D, s.observer.L, sug.P, sug.Q, sug.M);
    std::printf("  best Q = diag(");
    for (std::size_t i = 0; i < sug.Q.rows(); ++i) std::printf("%s%g", i ? ", " : "", sug.Q(i, i));
    std::printf(")\n  implied M =");
    for (std::size_t i = 0; i < sug.M.rows(); ++i)
      for (std::size_t j = 0; j < sug.M.cols(); ++j) std::printf(" %.6g", sug.M(i, j));
    std::printf("\n  configured M =");
    for (std::size_t i = 0; i < s.observer.M.rows(); ++i)
      for (std::size_t j = 0; j < s.observer.M.cols(); ++j) std::printf(" %.6g", s.observer.M(i, j));
    std::printf("\n  relative matching residual = %.3g\n", sug.relative_residual);
    std::printf("  lyapunov residual = %.3g, P > 0: %s, Q > 0: %s\n", rep.lyapunov_residual,
                rep.p_positive ? "yes" : "no", rep.q_positive ? "yes" : "no");
    std::printf("  verdict: %s\n", sug.relative_residual < 1e-3 && rep.p_positive && rep.q_positive
                                       ? "matching holds (to grid accuracy)"
                                       : "matching not established");
  } catch (const std::exception& e) {
    std::printf("  verifier failed: %s\n", e.what());
  }
  std::printf("\nmonitors:\n");
  try {
    Simulation sim(s);
    std::printf("  window steps N = %zu, state dimension %zu, gauge exponent %lld\n", s.window_steps(),
                sim.bank().dim(), static_cast<long long>(sim.estimator().gauge()));
    const auto b = sim.c1();
    std::printf("  at t0: C1 bounds [%s, %s], log10 C3 = %s, C4 = %s\n", format_double(b.lower).c_str(),
                format_double(b.upper).c_str(), format_double(sim.c3().log10_abs()).c_str(),
                sim.c4().to_string().c_str());
    std::printf("  C4 eta = %s, gate threshold = %s (%s)\n", s.estimator.eta.to_string().c_str(),
                format_double(s.estimator.gate_threshold).c_str(),
                s.estimator.gate_threshold > 0 ? "gated" : "no gating");
    std::printf("  C2 independence integrals: %s\n", s.truth ? "logged (truth channel on)" : "off (needs truth: true)");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kRuntime;
  }
  try {
    check_output_paths(s);
  } catch (const IoError& e) {
    std::fprintf(stderr, "output error: %s\n", e.what());
    return kValidation;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive observer simulator"};
  app.require_subcommand(1);

  std::string file, csv, metrics, param, table;
  std::optional<std::string> values;
  bool plot = false;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "Simulate one scenario");
  run->add_option("scenario", file, "Scenario file (YAML)")->required();
  run->add_option("--csv", csv, "Trajectory CSV path (overrides output.csv)");
  run->add_option("--metrics", metrics, "Metrics CSV path (overrides output.metrics)");
  run->add_flag("--plot-script", plot, "Also write a matplotlib script next to the CSV");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario once per parameter value");
  sweep->add_option("scenario", file, "Scenario file (YAML)")->required();
  sweep->add_option("--param", param, "T, A_amp, mu, gamma, k or alpha (default: sweep.param)");
  sweep->add_option("--values", values, "Comma-separated values (default: sweep.values)");
  sweep->add_option("--table", table, "Comparison CSV path");
  sweep->add_option("--threads", threads, "Worker threads (default: hardware concurrency)");
  sweep->add_flag("--plot-script", plot, "Write a matplotlib script overlaying all runs");

  auto* check = app.add_subcommand("check", "Validate a scenario and report matching and monitor setup");
  check->add_option("scenario", file, "Scenario file (YAML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }
  if (*run) return cmd_run(file, csv, metrics, plot);
  if (*sweep) return cmd_sweep(file, param, values, table, threads, plot);
  return cmd_check(file);
}
