#include "aobs/harness/output.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "aobs/errors.hpp"

namespace aobs::harness {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void check_writable(const fs::path& file) {
  const fs::path dir = file.has_parent_path() ? file.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
  }
  if (fs::is_directory(file, ec)) throw IoError("output path is a directory: " + file.string());
  const fs::path probe = dir / (".aobs_probe_" + file.filename().string());
  {
    std::ofstream o(probe);
    if (!o) throw IoError("cannot write to " + dir.string());
  }
  fs::remove(probe, ec);
}

void check_output_paths(const Scenario& s) {
  if (!s.output.csv.empty()) check_writable(s.output.csv);
  if (!s.output.metrics.empty()) check_writable(s.output.metrics);
  if (s.output.plot_script && s.output.csv.empty())
    throw IoError("output.plot_script needs output.csv to be set");
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw IoError("cannot open " + tmp.string());
    o.write(text.data(), static_cast<std::streamsize>(text.size()));
    o.flush();
    if (!o) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path.string());
  }
}

std::string csv_text(const TrajectoryLog& log) {
  std::string out;
  out.reserve(log.rows.size() * log.columns.size() * 20 + 512);
  for (std::size_t j = 0; j < log.columns.size(); ++j) {
    if (j) out += ',';
    out += log.columns[j];
  }
  out += '\n';
  for (const auto& r : log.rows) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out += ',';
      out += format_double(r[j]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const fs::path& path, const TrajectoryLog& log) { write_text_atomic(path, csv_text(log)); }

namespace {

double parse_cell(std::string_view c, const fs::path& path, std::size_t line) {
  if (c == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (c == "inf") return std::numeric_limits<double>::infinity();
  if (c == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
  if (ec != std::errc() || ptr != c.data() + c.size())
    throw IoError(path.string() + ":" + std::to_string(line) + ": bad number '" + std::string(c) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

TrajectoryLog read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  TrajectoryLog log;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  for (auto c : split(line)) log.columns.emplace_back(c);
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != log.columns.size())
      throw IoError(path.string() + ":" + std::to_string(n) + ": wrong number of columns");
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) row.push_back(parse_cell(c, path, n));
    log.rows.push_back(std::move(row));
  }
  return log;
}

void write_metrics(const fs::path& path, const MetricsReport& m) {
  TrajectoryLog t;
  t.columns = MetricsReport::names();
  t.rows.push_back(m.values());
  write_csv(path, t);
}

std::string plot_script(const std::vector<PlotSeries>& series, const std::string& title) {
  std::ostringstream o;
  o << "#!/usr/bin/env python3\n"
       "# Regenerate the figure from the trajectory CSVs next to this script.\n"
       "import csv\n"
       "import os\n"
       "import sys\n"
       "\n"
       "import matplotlib\n"
       "matplotlib.use(\"Agg\")\n"
       "import matplotlib.pyplot as plt\n"
       "\n"
       "HERE = os.path.dirname(os.path.abspath(__file__))\n"
       "SERIES = [\n";
  for (const auto& s : series) {
    std::string label = s.label, file = s.csv.generic_string();
    for (auto* str : {&label, &file}) {
      std::string esc;
      for (char c : *str) {
        if (c == '\\' || c == '"') esc += '\\';
        esc += c;
      }
      *str = esc;
    }
    o << "    (\"" << label << "\", \"" << file << "\"),\n";
  }
  o << "]\n"
       "TITLE = \"";
  for (char c : title) {
    if (c == '\\' || c == '"') o << '\\';
    o << c;
  }
  o << "\"\n"
       "\n"
       "\n"
       "def load(path):\n"
       "    with open(os.path.join(HERE, path), newline=\"\") as f:\n"
       "        rows = list(csv.reader(f))\n"
       "    head = rows[0]\n"
       "    return {name: [float(r[i]) for r in rows[1:]] for i, name in enumerate(head)}\n"
       "\n"
       "\n"
       "def main():\n"
       "    fig, ax = plt.subplots(2, 2, figsize=(11, 7), sharex=True)\n"
       "    for label, path in SERIES:\n"
       "        d = load(path)\n"
       "        t = d[\"t\"]\n"
       "        ax[0][0].plot(t, d[\"log10_abs_omega\"], label=label)\n"
       "        ax[0][1].plot(t, d[\"errtheta\"], label=label)\n"
       "        ax[1][0].plot(t, d[\"theta1hat\"], label=label + \" theta1\")\n"
       "        ax[1][0].plot(t, d[\"theta2hat\"], \"--\", label=label + \" theta2\")\n"
       "        ax[1][1].plot(t, d[\"errx\"], label=label)\n"
       "    ax[0][0].set_ylabel(\"log10 |omega|\")\n"
       "    ax[0][1].set_ylabel(\"|theta error|\")\n"
       "    ax[0][1].set_yscale(\"log\")\n"
       "    ax[1][0].set_ylabel(\"theta estimate\")\n"
       "    ax[1][1].set_ylabel(\"|state error|\")\n"
       "    ax[1][1].set_yscale(\"log\")\n"
       "    for a in ax.flat:\n"
       "        a.grid(True, alpha=0.3)\n"
       "        a.legend(fontsize=7)\n"
       "    for a in ax[1]:\n"
       "        a.set_xlabel(\"t [s]\")\n"
       "    fig.suptitle(TITLE)\n"
       "    fig.tight_layout()\n"
       "    out = sys.argv[1] if len(sys.argv) > 1 else os.path.splitext(os.path.abspath(__file__))[0] + \".png\"\n"
       "    fig.savefig(out, dpi=120)\n"
       "    print(out)\n"
       "\n"
       "\n"
       "if __name__ == \"__main__\":\n"
       "    main()\n";
  return o.str();
}

namespace {

fs::path script_path_for(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".plot.py");
  return p;
}

fs::path relative_to_script(const fs::path& csv, const fs::path& script) {
  const fs::path dir = script.has_parent_path() ? script.parent_path() : fs::path(".");
  std::error_code ec;
  fs::path rel = fs::relative(fs::absolute(csv), fs::absolute(dir), ec);
  return ec || rel.empty() ? csv : rel;
}

}  // namespace

Emitted emit_outputs(const RunResult& r, const Scenario& s) {
  Emitted e;
  if (!s.output.csv.empty()) {
    write_csv(s.output.csv, r.log);
    e.files.emplace_back(s.output.csv);
  }
  if (!s.output.metrics.empty()) {
    write_metrics(s.output.metrics, r.metrics);
    e.files.emplace_back(s.output.metrics);
  }
  if (s.output.plot_script && !s.output.csv.empty()) {
    const fs::path script = script_path_for(s.output.csv);
    write_text_atomic(script, plot_script({{s.name, relative_to_script(s.output.csv, script)}}, s.name));
    e.files.push_back(script);
  }
  return e;
}

namespace {

std::string with_suffix(const std::string& path, const std::string& suffix) {
  if (path.empty()) return path;
  fs::path p(path);
  fs::path out = p.parent_path() / (p.stem().string() + suffix + p.extension().string());
  return out.string();
}

std::string safe_token(const std::string& v) {
  std::string out;
  for (char c : v) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') ? c : '_';
  return out;
}

}  // namespace

Scenario sweep_variant(const Scenario& s, const std::string& param, const std::string& value) {
  Scenario v = s;
  set_param(v, param, value);
  const std::string suffix = "_" + param + "_" + safe_token(value);
  v.name = s.name + suffix;
  v.output.csv = with_suffix(s.output.csv, suffix);
  v.output.metrics = with_suffix(s.output.metrics, suffix);
  v.output.plot_script = false;
  v.sweep = {};
  return v;
}

std::vector<SweepEntry> run_sweep(const Scenario& s, const std::string& param, const std::vector<std::string>& values,
                                  unsigned threads) {
  std::vector<SweepEntry> out(values.size());
  if (values.empty()) return out;
  // Build and validate every variant first so configuration errors surface before any run.
  std::vector<Scenario> variants;
  variants.reserve(values.size());
  for (const auto& v : values) {
    variants.push_back(sweep_variant(s, param, v));
    variants.back().validate();
    check_output_paths(variants.back());
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(values.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      SweepEntry& e = out[i];
      e.value = values[i];
      try {
        const RunResult r = run_scenario(variants[i]);
        emit_outputs(r, variants[i]);
        e.metrics = r.metrics;
        e.stiff_steps = r.stiff_steps;
        e.csv = variants[i].output.csv;
        e.ok = true;
      } catch (const std::exception& ex) {
        e.error = ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

std::string sweep_table(const std::string& param, const std::vector<SweepEntry>& entries) {
  std::string o = param + ",status";
  for (const auto& n : MetricsReport::names()) o += "," + n;
  o += ",stiff_steps,error\n";
  for (const auto& e : entries) {
    o += e.value + (e.ok ? ",ok" : ",fault");
    for (double v : e.metrics.values()) o += "," + (e.ok ? format_double(v) : std::string());
    o += "," + (e.ok ? std::to_string(e.stiff_steps) : std::string()) + ",";
    std::string err = e.error;
    for (char& c : err)
      if (c == '"' || c == '\n') c = '\'';
    if (!err.empty()) o += "\"" + err + "\"";
    o += "\n";
  }
  return o;
}

}  // namespace aobs::harness
