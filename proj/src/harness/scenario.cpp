#include "aobs/harness/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aobs/drem/drem.hpp"
#include "aobs/errors.hpp"
#include "aobs/matkit/linalg.hpp"
#include "aobs/simkit/simkit.hpp"

namespace aobs::harness {

using plant::Expr;
using plant::Signal;
using plant::SignalChannel;
using plant::Sinusoid;

namespace {

// Collects problems instead of throwing on the first one.
struct Reader {
  std::vector<std::string> problems;

  bool number(const YAML::Node& n, const std::string& where, double& out) {
    if (!n.IsScalar()) {
      problems.push_back(where + ": expected a number");
      return false;
    }
    const std::string& s = n.Scalar();
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || ptr != e || !std::isfinite(out)) {
      problems.push_back(where + ": '" + s + "' is not a finite number");
      return false;
    }
    return true;
  }

  bool scaled(const YAML::Node& n, const std::string& where, ScaledScalar& out) {
    if (!n.IsScalar()) {
      problems.push_back(where + ": expected a number");
      return false;
    }
    try {
      out = ScaledScalar::parse(n.Scalar());
      return true;
    } catch (const std::exception&) {
      problems.push_back(where + ": '" + n.Scalar() + "' is not a number");
      return false;
    }
  }

  bool integer(const YAML::Node& n, const std::string& where, std::size_t& out) {
    double v = 0.0;
    if (!number(n, where, v)) return false;
    if (v < 0 || v != std::floor(v) || v > 1e12) {
      problems.push_back(where + ": expected a non-negative integer");
      return false;
    }
    out = static_cast<std::size_t>(v);
    return true;
  }

  bool boolean(const YAML::Node& n, const std::string& where, bool& out) {
    try {
      out = n.as<bool>();
      return true;
    } catch (const YAML::Exception&) {
      problems.push_back(where + ": expected true or false");
      return false;
    }
  }

  bool text(const YAML::Node& n, const std::string& where, std::string& out) {
    if (!n.IsScalar()) {
      problems.push_back(where + ": expected a string");
      return false;
    }
    out = n.Scalar();
    return true;
  }

  bool vec(const YAML::Node& n, const std::string& where, Vec& out) {
    if (!n.IsSequence()) {
      problems.push_back(where + ": expected a list of numbers");
      return false;
    }
    Vec v;
    bool ok = true;
    for (std::size_t i = 0; i < n.size(); ++i) {
      double x = 0.0;
      ok = number(n[i], where + "[" + std::to_string(i) + "]", x) && ok;
      v.push_back(x);
    }
    if (ok) out = std::move(v);
    return ok;
  }

  bool mat(const YAML::Node& n, const std::string& where, Mat& out) {
    if (!n.IsSequence() || n.size() == 0) {
      problems.push_back(where + ": expected a non-empty list of rows");
      return false;
    }
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < n.size(); ++i) {
      Vec r;
      if (!vec(n[i], where + " row " + std::to_string(i + 1), r)) return false;
      rows.push_back(std::move(r));
    }
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows)
      if (r.size() != cols || cols == 0) {
        problems.push_back(where + ": rows must be non-empty and equally long");
        return false;
      }
    Mat m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    out = std::move(m);
    return true;
  }

  bool signal(const YAML::Node& n, const std::string& where, Signal& out) {
    if (!n.IsSequence()) {
      problems.push_back(where + ": expected a list of channels");
      return false;
    }
    std::vector<SignalChannel> channels;
    bool ok = true;
    for (std::size_t c = 0; c < n.size(); ++c) {
      const std::string cw = where + " channel " + std::to_string(c + 1);
      const YAML::Node ch = n[c];
      SignalChannel sc;
      if (!ch.IsMap()) {
        problems.push_back(cw + ": expected a map with 'constant' and/or 'terms'");
        ok = false;
        continue;
      }
      if (ch["constant"]) ok = number(ch["constant"], cw + ".constant", sc.constant) && ok;
      if (const YAML::Node terms = ch["terms"]) {
        if (!terms.IsSequence()) {
          problems.push_back(cw + ".terms: expected a list");
          ok = false;
        } else {
          for (std::size_t k = 0; k < terms.size(); ++k) {
            const std::string tw = cw + " term " + std::to_string(k + 1);
            const YAML::Node t = terms[k];
            Sinusoid s{0.0, 1.0, 0.0, Sinusoid::Wave::Sin};
            if (t["amplitude"]) ok = number(t["amplitude"], tw + ".amplitude", s.amplitude) && ok;
            if (t["frequency"]) ok = number(t["frequency"], tw + ".frequency", s.frequency) && ok;
            if (t["phase"]) ok = number(t["phase"], tw + ".phase", s.phase) && ok;
            if (t["wave"]) {
              std::string w;
              if (text(t["wave"], tw + ".wave", w)) {
                if (w == "sin") s.wave = Sinusoid::Wave::Sin;
                else if (w == "cos") s.wave = Sinusoid::Wave::Cos;
                else {
                  problems.push_back(tw + ".wave: expected sin or cos");
                  ok = false;
                }
              }
            }
            sc.terms.push_back(s);
          }
        }
      }
      channels.push_back(std::move(sc));
    }
    if (ok) out = Signal(std::move(channels));
    return ok;
  }

  std::vector<std::string> strings(const YAML::Node& n, const std::string& where) {
    std::vector<std::string> out;
    if (!n.IsSequence()) {
      problems.push_back(where + ": expected a list of expressions");
      return out;
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n[i].IsSequence()) {
        for (std::size_t j = 0; j < n[i].size(); ++j) {
          std::string s;
          if (text(n[i][j], where, s)) out.push_back(s);
        }
      } else {
        std::string s;
        if (text(n[i], where, s)) out.push_back(s);
      }
    }
    return out;
  }
};

void check_keys(Reader& r, const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!n.IsMap()) {
    r.problems.push_back(where + ": expected a map");
    return;
  }
  for (const auto& kv : n) {
    const std::string key = kv.first.Scalar();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      r.problems.push_back(where + ": unknown key '" + key + "'");
  }
}

Mat default_l1t(std::size_t q, std::size_t m) {
  Mat l(2 * m, 2 * q);
  for (std::size_t j = 0; j < m && m <= q; ++j) {
    l(j, q - m + j) = 1.0;
    l(m + j, 2 * q - m + j) = 1.0;
  }
  return l;
}

void parse_plant(Reader& r, const YAML::Node& p, Scenario& s) {
  check_keys(r, p, "plant",
             {"preset", "A", "C", "D", "phi", "G", "theta", "x0", "delta", "input", "input_amplitude"});
  if (!p.IsMap()) return;
  if (p["preset"]) {
    std::string preset;
    if (r.text(p["preset"], "plant.preset", preset) && preset != "duffing")
      r.problems.push_back("plant.preset: only 'duffing' is built in");
  }
  auto& k = s.plant.known;
  if (p["A"]) r.mat(p["A"], "plant.A", k.A);
  if (p["C"]) r.mat(p["C"], "plant.C", k.C);
  if (p["D"]) r.mat(p["D"], "plant.D", k.D);
  if (p["theta"]) r.vec(p["theta"], "plant.theta", s.plant.theta_true);
  if (p["x0"]) r.vec(p["x0"], "plant.x0", s.plant.x0);
  if (p["delta"]) r.signal(p["delta"], "plant.delta", s.plant.delta);
  if (p["input"]) r.signal(p["input"], "plant.input", s.plant.input);
  if (p["input_amplitude"]) {
    double a = 0.0;
    if (r.number(p["input_amplitude"], "plant.input_amplitude", a)) {
      try {
        set_param(s, "A_amp", p["input_amplitude"].Scalar());
      } catch (const ValidationError& e) {
        for (const auto& m : e.problems()) r.problems.push_back("plant.input_amplitude: " + m);
      }
    }
  }

  if (p["phi"] || p["G"] || p["A"] || p["C"]) {
    const std::size_t n = k.A.rows(), outs = k.C.rows(), ins = s.plant.input.width();
    std::vector<std::string> phi_src(n, "0"), g_src;
    if (p["phi"]) phi_src = r.strings(p["phi"], "plant.phi");
    std::size_t q = k.maps.q();
    if (p["G"]) {
      g_src = r.strings(p["G"], "plant.G");
      if (p["G"].IsSequence() && p["G"].size() > 0 && p["G"][0].IsSequence()) q = p["G"][0].size();
      if (p["G"].IsSequence() && p["G"].size() != n)
        r.problems.push_back("plant.G: expected n = " + std::to_string(n) + " rows");
    } else if (n == k.maps.n()) {
      return;  // keep preset maps when only A/C changed shape-compatibly
    } else {
      r.problems.push_back("plant.G: required when the state dimension differs from the preset");
      return;
    }
    std::vector<Expr> phi, g;
    try {
      for (const auto& e : phi_src) phi.push_back(Expr::parse(e, outs, ins));
      for (const auto& e : g_src) g.push_back(Expr::parse(e, outs, ins));
      k.maps = plant::OutputMaps(n, q, std::move(phi), std::move(g));
    } catch (const std::exception& e) {
      r.problems.push_back(std::string("plant.phi/G: ") + e.what());
    }
  }
}

}  // namespace

std::size_t Scenario::total_steps() const { return simkit::steps_in(clock.t_end - clock.t0, clock.dt); }
std::size_t Scenario::window_steps() const { return simkit::steps_in(drem.T, clock.dt); }

std::vector<std::string> Scenario::problems() const {
  std::vector<std::string> p = plant.problems();
  const auto& k = plant.known;
  const bool shapes_ok = p.empty();
  if (shapes_ok) {
    for (auto& m : observer.problems(k)) p.push_back(m);
    if (drem.K.rows() != k.n() || drem.K.cols() != k.p()) {
      p.push_back("drem.K must be n×p");
    } else if (!matkit::is_hurwitz(k.A - drem.K * k.C)) {
      p.push_back("A − K·C is not Hurwitz");
    }
    if (drem.chi0.size() != k.n()) p.push_back("drem.chi0 must have n entries");
    const std::size_t q = k.q();
    if (drem.L1t.cols() != 2 * q) p.push_back("drem.L1t must have 2q = " + std::to_string(2 * q) + " columns");
    if (drem.L1t.rows() != 2 * drem.m) p.push_back("drem.L1t must have 2m = " + std::to_string(2 * drem.m) + " rows");
    for (auto& m : drem::AnnihilatorConfig::problems(drem.L1t, drem.Ht)) p.push_back("drem: " + m);
    if (q > 8) p.push_back("at most 8 unknown parameters are supported");
  }
  if (drem.m == 0) p.push_back("drem.m must be at least 1");
  if (!(drem.alpha > 0.0)) p.push_back("drem.alpha must be positive");
  if (!(drem.T > 0.0)) p.push_back("drem.T must be positive");
  if (!(drem.k > 0.0)) p.push_back("drem.k must be positive");
  if (drem.s_norm.sign() <= 0) p.push_back("drem.s_norm must be positive");
  for (auto& m : estimator.problems()) p.push_back(m);
  if (!(clock.dt > 0.0)) {
    p.push_back("clock.dt must be positive");
  } else {
    if (!(clock.t_end > clock.t0)) {
      p.push_back("clock.t_end must exceed clock.t0");
    } else {
      try {
        (void)total_steps();
      } catch (const std::exception&) {
        p.push_back("clock.dt must divide t_end − t0");
      }
    }
    if (drem.T > 0.0) {
      try {
        (void)window_steps();
      } catch (const std::exception&) {
        p.push_back("clock.dt must divide drem.T");
      }
    }
  }
  if (output.decimation == 0) p.push_back("output.decimation must be at least 1");
  if (!(output.steady_fraction > 0.0 && output.steady_fraction <= 1.0))
    p.push_back("output.steady_fraction must lie in (0, 1]");
  if (!sweep.param.empty()) {
    const auto& ok = sweep_params();
    if (std::find(ok.begin(), ok.end(), sweep.param) == ok.end())
      p.push_back("sweep.param '" + sweep.param + "' is not one of T, A_amp, mu, gamma, k, alpha");
  }
  return p;
}

void Scenario::validate() const {
  if (auto p = problems(); !p.empty()) throw ValidationError(std::move(p));
}

Scenario duffing_scenario(double amplitude) {
  Scenario s;
  s.name = "duffing";
  s.plant = plant::duffing_preset(amplitude);
  s.observer = observer::duffing_observer();
  s.drem.K = Mat{{30.5749}, {64.3579}};
  s.drem.L1t = Mat{{0, 1, 0, 0}, {0, 0, 0, 1}};
  s.drem.Ht = Mat{{1, 0, 1, 0}, {0, 1, 0, 1}};
  s.drem.chi0 = {0.0, 0.0};
  return s;
}

const std::vector<std::string>& sweep_params() {
  static const std::vector<std::string> names{"T", "A_amp", "mu", "gamma", "k", "alpha"};
  return names;
}

void set_param(Scenario& s, const std::string& param, const std::string& value) {
  auto as_double = [&]() {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v))
      throw ValidationError({"value '" + value + "' for " + param + " is not a finite number"});
    return v;
  };
  if (param == "T") {
    s.drem.T = as_double();
  } else if (param == "A_amp") {
    const double a = as_double();
    std::vector<SignalChannel> ch = s.plant.input.channels();
    if (ch.empty() || ch.front().terms.empty())
      throw ValidationError({"A_amp needs an input with at least one sinusoid"});
    ch.front().terms.front().amplitude = a;
    s.plant.input = Signal(std::move(ch));
  } else if (param == "mu") {
    s.observer.mu = as_double();
  } else if (param == "gamma") {
    try {
      s.estimator.gamma = ScaledScalar::parse(value);
    } catch (const std::exception&) {
      throw ValidationError({"value '" + value + "' for gamma is not a number"});
    }
  } else if (param == "k") {
    s.drem.k = as_double();
  } else if (param == "alpha") {
    s.drem.alpha = as_double();
  } else {
    throw ValidationError({"unknown parameter '" + param + "'"});
  }
}

Scenario parse_scenario(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ValidationError({std::string("YAML syntax: ") + e.what()});
  }
  Scenario s = duffing_scenario();
  if (!root || root.IsNull()) return s;
  Reader r;
  check_keys(r, root, "scenario",
             {"name", "plant", "observer", "drem", "estimator", "clock", "output", "sweep", "truth",
              "feed_true_theta"});
  if (!root.IsMap()) throw ValidationError(std::move(r.problems));

  if (root["name"]) r.text(root["name"], "name", s.name);
  if (const auto p = root["plant"]) parse_plant(r, p, s);

  const std::size_t n = s.plant.known.n();
  bool drem_m_set = false, l1t_set = false, ht_set = false, chi0_set = false, xhat0_set = false;

  if (const auto o = root["observer"]) {
    check_keys(r, o, "observer", {"L", "M", "mu", "xhat0"});
    if (o["L"]) r.mat(o["L"], "observer.L", s.observer.L);
    if (o["M"]) r.mat(o["M"], "observer.M", s.observer.M);
    if (o["mu"]) r.number(o["mu"], "observer.mu", s.observer.mu);
    if (o["xhat0"]) xhat0_set = r.vec(o["xhat0"], "observer.xhat0", s.observer.xhat0);
  }
  if (const auto d = root["drem"]) {
    check_keys(r, d, "drem", {"K", "alpha", "T", "k", "m", "L1t", "Ht", "chi0", "s_norm"});
    if (d["K"]) r.mat(d["K"], "drem.K", s.drem.K);
    if (d["alpha"]) r.number(d["alpha"], "drem.alpha", s.drem.alpha);
    if (d["T"]) r.number(d["T"], "drem.T", s.drem.T);
    if (d["k"]) r.number(d["k"], "drem.k", s.drem.k);
    if (d["m"]) drem_m_set = r.integer(d["m"], "drem.m", s.drem.m);
    if (d["L1t"]) l1t_set = r.mat(d["L1t"], "drem.L1t", s.drem.L1t);
    if (d["Ht"]) ht_set = r.mat(d["Ht"], "drem.Ht", s.drem.Ht);
    if (d["chi0"]) chi0_set = r.vec(d["chi0"], "drem.chi0", s.drem.chi0);
    if (d["s_norm"]) r.scaled(d["s_norm"], "drem.s_norm", s.drem.s_norm);
  }
  // Structure-dependent defaults follow the plant when not given explicitly.
  const std::size_t q = s.plant.known.q();
  if (!chi0_set) s.drem.chi0.assign(n, 0.0);
  if (!xhat0_set) s.observer.xhat0.assign(n, 0.0);
  if (s.drem.m >= 1 && (drem_m_set || q != 2)) {
    if (!l1t_set) s.drem.L1t = default_l1t(q, s.drem.m);
    if (!ht_set) s.drem.Ht = drem::AnnihilatorConfig::default_ht(q, s.drem.m);
  }

  if (const auto e = root["estimator"]) {
    check_keys(r, e, "estimator", {"gamma", "kappa0", "eta", "gate_threshold"});
    if (e["gamma"]) r.scaled(e["gamma"], "estimator.gamma", s.estimator.gamma);
    if (e["kappa0"]) r.scaled(e["kappa0"], "estimator.kappa0", s.estimator.kappa0);
    if (e["eta"]) r.scaled(e["eta"], "estimator.eta", s.estimator.eta);
    if (e["gate_threshold"]) r.number(e["gate_threshold"], "estimator.gate_threshold", s.estimator.gate_threshold);
  }
  if (const auto c = root["clock"]) {
    check_keys(r, c, "clock", {"t0", "dt", "t_end"});
    if (c["t0"]) r.number(c["t0"], "clock.t0", s.clock.t0);
    if (c["dt"]) r.number(c["dt"], "clock.dt", s.clock.dt);
    if (c["t_end"]) r.number(c["t_end"], "clock.t_end", s.clock.t_end);
  }
  auto resolve = [&](std::string& path) {
    if (!path.empty() && std::filesystem::path(path).is_relative() && !base_dir.empty())
      path = (base_dir / path).lexically_normal().string();
  };
  if (const auto o = root["output"]) {
    check_keys(r, o, "output", {"csv", "metrics", "decimation", "plot_script", "steady_fraction"});
    if (o["csv"]) r.text(o["csv"], "output.csv", s.output.csv);
    if (o["metrics"]) r.text(o["metrics"], "output.metrics", s.output.metrics);
    if (o["decimation"]) r.integer(o["decimation"], "output.decimation", s.output.decimation);
    if (o["plot_script"]) r.boolean(o["plot_script"], "output.plot_script", s.output.plot_script);
    if (o["steady_fraction"]) r.number(o["steady_fraction"], "output.steady_fraction", s.output.steady_fraction);
    resolve(s.output.csv);
    resolve(s.output.metrics);
  }
  if (const auto w = root["sweep"]) {
    check_keys(r, w, "sweep", {"param", "values"});
    if (w["param"]) r.text(w["param"], "sweep.param", s.sweep.param);
    if (w["values"]) s.sweep.values = r.strings(w["values"], "sweep.values");
  }
  if (root["truth"]) r.boolean(root["truth"], "truth", s.truth);
  if (root["feed_true_theta"]) r.boolean(root["feed_true_theta"], "feed_true_theta", s.feed_true_theta);

  if (!r.problems.empty()) throw ValidationError(std::move(r.problems));
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

std::string describe(const Scenario& s) {
  std::ostringstream o;
  o.precision(10);
  const auto& k = s.plant.known;
  o << "scenario: " << s.name << "\n";
  o << "plant: n=" << k.n() << " p=" << k.p() << " s=" << k.s() << " q=" << k.q() << " inputs=" << s.plant.m()
    << "\n";
  o << "observer: mu=" << s.observer.mu << "\n";
  o << "drem: alpha=" << s.drem.alpha << " T=" << s.drem.T << " k=" << s.drem.k << " m=" << s.drem.m
    << " s_norm=" << s.drem.s_norm.to_string() << "\n";
  o << "estimator: gamma=" << s.estimator.gamma.to_string() << " kappa0=" << s.estimator.kappa0.to_string()
    << " eta=" << s.estimator.eta.to_string() << " gate_threshold=" << s.estimator.gate_threshold << "\n";
  o << "clock: t0=" << s.clock.t0 << " dt=" << s.clock.dt << " t_end=" << s.clock.t_end << "\n";
  o << "output: csv=" << (s.output.csv.empty() ? "-" : s.output.csv)
    << " metrics=" << (s.output.metrics.empty() ? "-" : s.output.metrics) << " decimation=" << s.output.decimation
    << " plot_script=" << (s.output.plot_script ? "yes" : "no") << " steady_fraction=" << s.output.steady_fraction
    << "\n";
  o << "truth channel: " << (s.truth ? "on" : "off") << "  feed_true_theta: " << (s.feed_true_theta ? "on" : "off")
    << "\n";
  if (!s.sweep.param.empty()) {
    o << "sweep: " << s.sweep.param << " over";
    for (const auto& v : s.sweep.values) o << " " << v;
    o << "\n";
  }
  return o.str();
}

}  // namespace aobs::harness
