#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "checks.hpp"
#include "nlab/band.hpp"
#include "nlab/csv.hpp"
#include "nlab/dynamics.hpp"
#include "nlab/phases.hpp"

namespace nlab::cli {

namespace {

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Options {
  double B = 1.0;
  std::optional<double> p;
  std::optional<double> g;
  std::string radius = "0.02pi";
  double eps = 1e-3;
  double dt = 1e-3;
  std::string out = ".";
  int workers = 1;
  std::string config;
  std::uint64_t seed = 1;
  std::string schedule = "linear";

  // spectrum
  std::string grid;
  std::string k2_section = "0.1pi:201";
  bool appendix_panels = false;

  // sweep
  std::string p_list = "0.5,1,1.5,2,2.5,3";
  double g_min = -4.0;
  double g_max = 4.0;
  int g_steps = 161;
  bool numeric = false;
  int numeric_steps = 17;

  // evolve
  bool deviation = false;

  // check
  std::string suite = "all";
};

const std::set<std::string> flag_keys = {"appendix-panels", "numeric", "deviation"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return v;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  if (n == 1) return {a};
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

// "L:N" -> (L, N)
std::pair<double, int> parse_extent(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("expected L:N, got '" + text + "'");
  double L = 0.0;
  double n = 0.0;
  try {
    L = parse_angle(text.substr(0, colon));
    n = parse_double(text.substr(colon + 1));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (n < 1 || n != std::floor(n)) throw UsageError("empty k-grid: '" + text + "'");
  if (!(L >= 0) || !std::isfinite(L)) throw UsageError("bad grid extent: '" + text + "'");
  return {L, static_cast<int>(n)};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_double(item));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

ModelParams make_params(const Options& o) {
  if (!o.p || !o.g) throw UsageError("--p and --g are required");
  try {
    return ModelParams::qwz(o.B, *o.g, *o.p);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

PathSpec make_path(const Options& o) {
  PathSpec spec;
  try {
    spec.radius = parse_angle(o.radius);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.epsilon = o.eps;
  spec.dt = o.dt;
  if (o.schedule == "linear") {
    spec.schedule = Schedule::linear;
  } else if (o.schedule == "smooth") {
    spec.schedule = Schedule::smooth;
  } else {
    throw UsageError("--schedule must be linear or smooth");
  }
  return spec;
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw UsageError("cannot create output directory " + dir);
  return dir;
}

void write_out(const std::filesystem::path& path, const std::string& contents) {
  try {
    csv::write_file(path.string(), contents);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// ---- spectrum ----

int cmd_spectrum(const Options& o, std::ostream& out, std::ostream& err) {
  struct Job {
    double p, g;
  };
  std::vector<Job> jobs;
  if (o.appendix_panels) {
    for (double gb : {-2.5, -2.0, 1.0, 2.0, 2.5}) jobs.push_back({2.0, gb * o.B});
  } else {
    if (!o.p || !o.g) throw UsageError("--p and --g are required (or --appendix-panels)");
    jobs.push_back({*o.p, *o.g});
  }

  std::vector<Momentum> kpath;
  if (!o.grid.empty()) {
    const auto [L, n] = parse_extent(o.grid);
    const auto ks = linspace(-L, L, n);
    for (double k2 : ks)
      for (double k1 : ks) kpath.push_back({k1, k2});
  } else {
    const auto [L, n] = parse_extent(o.k2_section);
    for (double k2 : linspace(-L, L, n)) kpath.push_back({0.0, k2});
  }

  const auto dir = prepare_dir(o.out);
  int status = ok;
  for (const auto& job : jobs) {
    Options jo = o;
    jo.p = job.p;
    jo.g = job.g;
    const ModelParams params = make_params(jo);
    const auto file = dir / ("spectrum_p" + fmt_g(job.p) + "_g" + fmt_g(job.g / o.B) + ".csv");

    // solve point by point first so a failure can name its k
    bool failed = false;
    for (const auto& k : kpath) {
      try {
        (void)solve_all_x(k, params);
      } catch (const SolverError& e) {
        err << "spectrum: p=" << fmt_g(job.p) << " g=" << fmt_g(job.g) << " k=(" << csv::number(k.k1) << ","
            << csv::number(k.k2) << "): " << e.what() << "\n";
        failed = true;
      }
    }
    if (failed) {
      status = numerical_failure;
      continue;
    }
    write_out(file, spectrum_csv(spectrum_slice(kpath, params)));
    out << file.string() << "\n";
  }
  return status;
}

// ---- cone ----

int cmd_cone(const Options& o, std::ostream& out, std::ostream&) {
  const ModelParams params = make_params(o);
  const ConeSolution c = solve_x0(params);
  out << csv::join({c.exists ? "1" : "0", csv::number(c.x0), csv::number(c.E0)}) << "\n";
  return ok;
}

// ---- sweep ----

struct NumericCell {
  double p = 0.0;
  double g = 0.0;
  std::optional<PhaseRow> row;
  std::string error;
};

std::string numeric_csv_header() { return phase_csv_header() + ",error"; }

std::string numeric_csv_row(const NumericCell& c, double B) {
  if (c.row) return phase_csv_row(*c.row) + ",";
  std::string msg = c.error;
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return csv::join({csv::number(c.p), csv::number(c.g / B), "", "", "", "", "", msg});
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto ps = parse_list(o.p_list);
  if (o.g_steps < 2) throw UsageError("--g-steps must be >= 2");
  if (o.numeric && o.numeric_steps < 2) throw UsageError("--numeric-steps must be >= 2");
  if (!std::isfinite(o.g_min) || !std::isfinite(o.g_max) || o.g_min > o.g_max) throw UsageError("bad g range");
  if (o.workers < 1) throw UsageError("--workers must be >= 1");
  for (double p : ps) {
    Options po = o;
    po.p = p;
    po.g = 0.0;
    (void)make_params(po);
  }
  const auto dir = prepare_dir(o.out);

  const auto gs = linspace(o.g_min, o.g_max, o.g_steps);
  std::string all = phase_csv_header() + "\n";
  for (double p : ps) {
    std::string one = phase_csv_header() + "\n";
    for (double gb : gs) {
      const ModelParams params = ModelParams::qwz(o.B, gb * o.B, p);
      const ConeSolution cone = solve_x0(params);
      const std::string line = phase_csv_row({p, gb, cone.x0, ab_phase_leading(cone, params)}) + "\n";
      one += line;
      all += line;
    }
    const auto file = dir / ("phases_p" + fmt_g(p) + ".csv");
    write_out(file, one);
    out << file.string() << "\n";
  }
  write_out(dir / "phases_all.csv", all);
  out << (dir / "phases_all.csv").string() << "\n";

  if (!o.numeric) return ok;

  PathSpec base = make_path(o);
  std::vector<NumericCell> cells;
  for (double p : ps)
    for (double gb : linspace(o.g_min, o.g_max, o.numeric_steps)) cells.push_back({p, gb * o.B, {}, {}});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      NumericCell& c = cells[i];
      try {
        const ModelParams params = ModelParams::qwz(o.B, c.g, c.p);
        base.validate(params);
        const NumericAB ab = ab_phase_numeric(params, base);
        c.row = PhaseRow{c.p, c.g / o.B, solve_x0(params).x0, ab.phases};
      } catch (const std::exception& e) {
        c.error = e.what();
      }
    }
  };
  const int n_threads = std::min<int>(o.workers, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int status = ok;
  std::string nall = numeric_csv_header() + "\n";
  for (double p : ps) {
    std::string one = numeric_csv_header() + "\n";
    for (const auto& c : cells) {
      if (c.p != p) continue;
      if (!c.row) {
        status = numerical_failure;
        err << "sweep: p=" << fmt_g(c.p) << " g/B=" << fmt_g(c.g / o.B) << ": " << c.error << "\n";
      }
      const std::string line = numeric_csv_row(c, o.B) + "\n";
      one += line;
      nall += line;
    }
    const auto file = dir / ("phases_numeric_p" + fmt_g(p) + ".csv");
    write_out(file, one);
    out << file.string() << "\n";
  }
  write_out(dir / "phases_numeric_all.csv", nall);
  out << (dir / "phases_numeric_all.csv").string() << "\n";
  return status;
}

// ---- evolve ----

int cmd_evolve(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelParams params = make_params(o);
  const PathSpec base = make_path(o);
  try {
    base.validate(params);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto dir = prepare_dir(o.out);

  NumericAB ab;
  try {
    ab = ab_phase_numeric(params, base);
  } catch (const EvolutionError& e) {
    err << "evolve: " << e.what() << " after " << e.trace().size() << " samples";
    if (!e.trace().empty()) {
      const auto& last = e.trace().back();
      err << " (t=" << csv::number(last.t) << ", overlap=" << csv::number(last.overlap) << ")";
      write_out(dir / "trace_failed.csv", trace_csv(e.trace()));
    }
    err << "\n";
    return numerical_failure;
  } catch (const SolverError& e) {
    err << "evolve: " << e.what() << "\n";
    return numerical_failure;
  }

  write_out(dir / "trace_east.csv", trace_csv(ab.east.trace));
  write_out(dir / "trace_west.csv", trace_csv(ab.west.trace));

  if (o.deviation) {
    const PathSpec east = base.with_orientation(Orientation::east);
    std::vector<DeviationCheck> rows;
    try {
      for (double f : {0.25, 0.5, 0.75}) rows.push_back(deviation_check(east, params, f * east.duration()));
    } catch (const std::exception& e) {
      err << "evolve: deviation check failed: " << e.what() << "\n";
      return numerical_failure;
    }
    write_out(dir / "deviation.csv", deviation_csv(rows));
  }

  const auto& ph = ab.phases;
  out << "theta_AB=" << csv::number(ph.theta_AB()) << " theta_AB_mod=" << csv::number(ph.theta_AB_mod())
      << " theta_B=" << csv::number(ph.theta_B()) << " delta_theta_D=" << csv::number(ph.delta_theta_D())
      << " overlap_east=" << csv::number(ab.east.final_overlap)
      << " overlap_west=" << csv::number(ab.west.final_overlap)
      << " norm_drift=" << csv::number(std::max(ab.east.max_norm_drift, ab.west.max_norm_drift))
      << " int_E_east=" << csv::number(ab.east.energy_integral)
      << " int_E_west=" << csv::number(ab.west.energy_integral) << "\n";
  return ok;
}

// ---- check ----

int cmd_check(const Options& o, std::ostream& out, std::ostream&) {
  if (!known_suite(o.suite)) throw UsageError("unknown suite '" + o.suite + "'");
  const auto results = run_checks(o.suite, o.seed);
  std::size_t w_suite = 5, w_name = 5;
  for (const auto& r : results) {
    w_suite = std::max(w_suite, r.suite.size());
    w_name = std::max(w_name, r.name.size());
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size() + 2, ' '); };
  out << pad("suite", w_suite) << pad("check", w_name) << "status  detail\n";
  bool all_ok = true;
  for (const auto& r : results) {
    all_ok = all_ok && r.passed;
    out << pad(r.suite, w_suite) << pad(r.name, w_name) << (r.passed ? "PASS    " : "FAIL    ") << r.detail << "\n";
  }
  return all_ok ? ok : numerical_failure;
}

// ---- config ----

bool has_flag(const std::vector<std::string>& args, const std::string& key) {
  const std::string f = "--" + key;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == f || a.rfind(f + "=", 0) == 0; });
}

std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    entries[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  const std::vector<std::string> given = args;
  for (const auto& [key, value] : entries) {
    if (key == "config" || has_flag(given, key)) continue;
    if (flag_keys.count(key)) {
      if (value == "true" || value == "1") args.push_back("--" + key);
      else if (value != "false" && value != "0") throw UsageError("config: " + key + " expects true or false");
    } else {
      args.push_back("--" + key);
      args.push_back(value);
    }
  }
  return args;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--B", o.B, "energy scale B")->capture_default_str();
  sub->add_option("--p", o.p, "nonlinearity power");
  sub->add_option("--g", o.g, "nonlinearity strength (units of energy)");
  sub->add_option("--radius", o.radius, "path radius, e.g. 0.02pi")->capture_default_str();
  sub->add_option("--eps", o.eps, "angular speed")->capture_default_str();
  sub->add_option("--dt", o.dt, "time step")->capture_default_str();
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_option("--workers", o.workers, "worker threads")->capture_default_str();
  sub->add_option("--config", o.config, "key=value file; flags win");
  sub->add_option("--seed", o.seed, "random seed")->capture_default_str();
  sub->add_option("--schedule", o.schedule, "linear or smooth")->capture_default_str();
}

}  // namespace

double parse_angle(const std::string& text) {
  std::string t = trim(text);
  if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    std::string head = trim(t.substr(0, t.size() - 2));
    if (!head.empty() && head.back() == '*') head.pop_back();
    if (head.empty() || head == "+") return pi;
    if (head == "-") return -pi;
    return parse_double(head) * pi;
  }
  return parse_double(t);
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"nonlinear QWZ bands, cones and Aharonov-Bohm phases", "nlab"};
  app.require_subcommand(1);

  auto* spectrum = app.add_subcommand("spectrum", "eigenenergies over a k-grid or a k1 = 0 section");
  add_common(spectrum, o);
  spectrum->add_option("--grid", o.grid, "square grid L:N, e.g. 0.1pi:41");
  spectrum->add_option("--k2-section", o.k2_section, "k1 = 0 section L:N")->capture_default_str();
  spectrum->add_flag("--appendix-panels", o.appendix_panels, "p = 2, g/B in {-2.5, -2, 1, 2, 2.5}");

  auto* cone = app.add_subcommand("cone", "print exists,x0,E0");
  add_common(cone, o);

  auto* sweep = app.add_subcommand("sweep", "phase breakdown against g");
  add_common(sweep, o);
  sweep->add_option("--p-list", o.p_list, "comma-separated powers")->capture_default_str();
  sweep->add_option("--g-min", o.g_min, "g/B lower end")->capture_default_str();
  sweep->add_option("--g-max", o.g_max, "g/B upper end")->capture_default_str();
  sweep->add_option("--g-steps", o.g_steps, "analytic points")->capture_default_str();
  sweep->add_flag("--numeric", o.numeric, "also run both paths on a sparser grid");
  sweep->add_option("--numeric-steps", o.numeric_steps, "numeric points")->capture_default_str();

  auto* evolve_cmd = app.add_subcommand("evolve", "run both half-circle paths");
  add_common(evolve_cmd, o);
  evolve_cmd->add_flag("--deviation", o.deviation, "write deviation.csv at t = T/4, T/2, 3T/4 on the east path");

  auto* check = app.add_subcommand("check", "invariant suites");
  add_common(check, o);
  check->add_option("--suite", o.suite, "all, model, band, phases or dynamics")->capture_default_str();

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "nlab: " << e.what() << "\n";
    return usage_error;
  } catch (const UsageError& e) {
    err << "nlab: " << e.what() << "\n";
    return usage_error;
  }

  try {
    if (spectrum->parsed()) return cmd_spectrum(o, out, err);
    if (cone->parsed()) return cmd_cone(o, out, err);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (evolve_cmd->parsed()) return cmd_evolve(o, out, err);
    if (check->parsed()) return cmd_check(o, out, err);
  } catch (const UsageError& e) {
    err << "nlab: " << e.what() << "\n";
    return usage_error;
  } catch (const std::exception& e) {
    err << "nlab: " << e.what() << "\n";
    return numerical_failure;
  }
  return usage_error;
}

}  // namespace nlab::cli
