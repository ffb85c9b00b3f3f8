#include "gkpft/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "gkpft/analytics.hpp"
#include "gkpft/det_fusion.hpp"
#include "gkpft/gkp_core.hpp"
#include "gkpft/matching.hpp"

#ifndef GKPFT_VERSION
#define GKPFT_VERSION "0.0.0"
#endif

namespace gkpft {

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const char* mode_name(SimMode m) {
  switch (m) {
    case SimMode::Faithful: return "faithful";
    case SimMode::Ledger: return "ledger";
    case SimMode::Previous: return "previous";
  }
  return "?";
}

// thrown on --help so cli_main can exit 0 with the text
struct CliHelp : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- config file (TOML-style subset: [section], key = value, # comments)

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw std::invalid_argument(key + ": not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& v, const std::string& key) {
  const double x = to_double(v, key);
  if (x != std::floor(x))
    throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
  return static_cast<long long>(x);
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument(key + ": expected true/false, got '" + v + "'");
}

std::vector<int> parse_d_list(std::string v, const std::string& key) {
  std::erase_if(v, [](char c) { return c == '[' || c == ']' || c == '"' || c == ' '; });
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(int(to_int(item, key)));
  if (out.empty()) throw std::invalid_argument(key + ": empty distance list");
  return out;
}

void apply_key(RunConfig& cfg, const std::string& section, const std::string& key,
               const std::string& val) {
  const std::string k = section + "." + key;
  if (section == "physics") {
    if (key == "sigma") { cfg.sigma = to_double(val, k); return; }
    if (key == "squeezing_db") { cfg.squeezing_db = to_double(val, k); return; }
    if (key == "loss") { cfg.loss = to_double(val, k); return; }
    if (key == "sv_squeezing_db") { cfg.sv_squeezing_db = to_double(val, k); return; }
    if (key == "R") { cfg.reflectivity = to_double(val, k); return; }
    if (key == "v_up") { cfg.v_up = to_double(val, k); return; }
    if (key == "L") { cfg.L = int(to_int(val, k)); return; }
    if (key == "m") { cfg.m = int(to_int(val, k)); return; }
    if (key == "me_iters") { cfg.me_iters = int(to_int(val, k)); return; }
  } else if (section == "sim") {
    if (key == "d") { cfg.d_list = parse_d_list(val, k); return; }
    if (key == "trials") { cfg.n_trials = int(to_int(val, k)); return; }
    if (key == "mode") { cfg.mode = unquote(val); return; }
    if (key == "analog") { cfg.analog = to_bool(val, k); return; }
    if (key == "seed") { cfg.seed = std::uint64_t(to_int(val, k)); return; }
    if (key == "workers") { cfg.workers = int(to_int(val, k)); return; }
    if (key == "points") { cfg.sweep_points = int(to_int(val, k)); return; }
    if (key == "span") { cfg.sweep_span = to_double(val, k); return; }
    if (key == "method") { cfg.method = unquote(val); return; }
  } else if (section == "out") {
    if (key == "csv") { cfg.csv_path = unquote(val); return; }
    if (key == "json") { cfg.json_path = unquote(val); return; }
    if (key == "svg") { cfg.svg_path = unquote(val); return; }
  }
  throw std::invalid_argument("unknown config key " + k);
}

void check_range(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// ---- provenance

nlohmann::ordered_json config_obj(const RunConfig& cfg) {
  nlohmann::ordered_json physics;
  if (cfg.sigma) {
    physics["sigma"] = *cfg.sigma;
    physics["squeezing_db"] = variance_to_squeezing(*cfg.sigma * *cfg.sigma);
  } else if (cfg.squeezing_db) {
    physics["sigma"] = std::sqrt(squeezing_to_variance(*cfg.squeezing_db));
    physics["squeezing_db"] = *cfg.squeezing_db;
  }
  physics["loss"] = cfg.loss;
  physics["sv_squeezing_db"] = cfg.sv_squeezing_db;
  physics["R"] = cfg.reflectivity;
  physics["v_up"] = cfg.v_up;
  physics["L"] = cfg.L;
  physics["m"] = cfg.m;
  physics["me_iters"] = cfg.me_iters;
  nlohmann::ordered_json sim;
  sim["d"] = cfg.d_list;
  sim["trials"] = cfg.n_trials;
  sim["mode"] = cfg.mode;
  sim["analog"] = cfg.analog;
  sim["seed"] = cfg.seed;
  sim["workers"] = cfg.workers;
  sim["points"] = cfg.sweep_points;
  sim["span"] = cfg.sweep_span;
  nlohmann::ordered_json j;
  j["command"] = cfg.command;
  if (cfg.command == "leading-order") j["method"] = cfg.method;
  j["physics"] = physics;
  j["sim"] = sim;
  j["out"] = {{"csv", cfg.csv_path}, {"json", cfg.json_path}, {"svg", cfg.svg_path}};
  return j;
}

nlohmann::ordered_json point_obj(const SweepPoint& p) {
  nlohmann::ordered_json j;
  j["l"] = p.loss;
  j["sigma"] = p.sigma;
  j["squeezing_db"] = p.squeezing_db;
  j["d"] = p.d;
  j["n_trials"] = p.n_trials;
  j["failures"] = p.failures;
  j["failure_rate"] = p.failure_rate;
  j["ci_low"] = p.ci_low;
  j["ci_high"] = p.ci_high;
  j["mode"] = mode_name(p.mode);
  j["analog"] = p.analog;
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output path " + path);
  out << content;
  if (!out.good()) throw std::runtime_error("short write to " + path);
}

QndConfig qnd_of(const RunConfig& cfg) {
  QndConfig q;
  q.reflectivity = cfg.reflectivity;
  q.sv_variance = squeezing_to_variance(cfg.sv_squeezing_db);
  return q;
}

SweepPoint make_point(const RunConfig& cfg, double sigma, int d,
                      const TrialsResult& r) {
  SweepPoint p;
  p.sigma = sigma;
  p.loss = cfg.loss;
  p.squeezing_db = variance_to_squeezing(sigma * sigma);
  p.d = d;
  p.n_trials = r.n_trials;
  p.failures = r.failures;
  p.failure_rate = r.failure_rate;
  p.ci_low = r.ci_low;
  p.ci_high = r.ci_high;
  p.mode = cfg.sim_mode();
  p.analog = cfg.analog;
  return p;
}

std::vector<double> sigma_grid(double center, double span, int points) {
  std::vector<double> g(points);
  const double lo = center * (1.0 - span), hi = center * (1.0 + span);
  for (int i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * i / (points - 1);
  return g;
}

}  // namespace

// ---- RunConfig

double RunConfig::resolved_sigma() const {
  if (sigma) return *sigma;
  if (squeezing_db) return std::sqrt(squeezing_to_variance(*squeezing_db));
  throw std::logic_error("sigma requested but neither sigma nor squeezing_db is set");
}

SimMode RunConfig::sim_mode() const {
  if (mode == "ledger") return SimMode::Ledger;
  if (mode == "previous") return SimMode::Previous;
  if (mode == "faithful") return SimMode::Faithful;
  throw std::invalid_argument("mode must be ledger, previous, or faithful (got '" +
                              mode + "')");
}

TopoConfig RunConfig::topo(int d) const {
  TopoConfig t;
  t.d = d;
  t.mode = sim_mode();
  t.analog = analog;
  t.pipeline.sigma2 = resolved_sigma() * resolved_sigma();
  t.pipeline.me_iters = me_iters;
  t.pipeline.L = L;
  t.pipeline.m = m;
  t.pipeline.hrm.v_up = v_up;
  t.pipeline.loss.loss = loss;
  t.pipeline.qnd = qnd_of(*this);
  return t;
}

void apply_config_file(RunConfig& cfg, const std::string& text,
                       const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "physics" && section != "sim" && section != "out")
        fail("unknown config section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) fail("expected key = value");
    if (section.empty()) fail("key '" + key + "' outside any section");
    try {
      apply_key(cfg, section, key, val);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
}

void validate_config(const RunConfig& cfg) {
  if (cfg.sigma && cfg.squeezing_db)
    throw std::invalid_argument("give exactly one of sigma and squeezing_db");
  if (!cfg.sigma && !cfg.squeezing_db &&
      (cfg.command == "simulate" || cfg.command == "sweep"))
    throw std::invalid_argument("sigma or squeezing_db is required for " +
                                cfg.command);
  if (cfg.sigma) check_range(*cfg.sigma > 0 && *cfg.sigma <= 1.5,
                             "sigma must be in (0, 1.5]");
  if (cfg.squeezing_db)
    check_range(*cfg.squeezing_db > 0 && *cfg.squeezing_db <= 30,
                "squeezing_db must be in (0, 30]");
  check_range(cfg.loss >= 0 && cfg.loss < 0.5, "loss must be in [0, 0.5)");
  check_range(cfg.sv_squeezing_db > 0 && cfg.sv_squeezing_db <= 40,
              "sv_squeezing_db must be in (0, 40]");
  check_range(cfg.reflectivity > 0 && cfg.reflectivity < 1,
              "R must be in (0, 1)");
  check_range(cfg.v_up > 0 && cfg.v_up <= kSqrtPi,
              "v_up must be in (0, sqrt(pi)]");
  check_range(cfg.L >= 1 && cfg.L <= 64, "L must be in [1, 64]");
  check_range(cfg.m >= 1 && cfg.m <= 63, "m must be in [1, 63]");
  if (cfg.m % 2 == 0) throw std::invalid_argument("m must be odd");
  check_range(cfg.me_iters >= 0 && cfg.me_iters <= 64,
              "me_iters must be in [0, 64]");
  check_range(!cfg.d_list.empty(), "d: empty distance list");
  for (int d : cfg.d_list)
    check_range(d >= 3 && d % 2 == 1, "d values must be odd and >= 3");
  if (cfg.command == "threshold" &&
      (cfg.d_list.size() != 2 || cfg.d_list[0] >= cfg.d_list[1]))
    throw std::invalid_argument(
        "threshold needs exactly two increasing distances (e.g. --d 5,7)");
  check_range(cfg.n_trials >= 1, "trials must be >= 1");
  check_range(cfg.workers >= 0, "workers must be >= 0");
  check_range(cfg.sweep_points >= 4, "points must be >= 4");
  check_range(cfg.sweep_span > 0 && cfg.sweep_span <= 0.5,
              "span must be in (0, 0.5]");
  cfg.sim_mode();  // rejects unknown mode names
  if (cfg.method != "previous" && cfg.method != "proposed")
    throw std::invalid_argument("method must be previous or proposed (got '" +
                                cfg.method + "')");
}

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"GKP-qubit fault-tolerance calculator and simulator"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "TOML-style config file");

  RunConfig f;  // flag values land here; merged below by presence
  double sigma = 0.0, squeezing = 0.0;
  std::string d_csv, method;
  app.add_option("--sigma", sigma, "peak width sigma");
  app.add_option("--squeezing-db", squeezing, "squeezing level in dB");
  app.add_option("--loss", f.loss, "photon loss fraction per homodyne");
  app.add_option("--sv-squeezing-db", f.sv_squeezing_db, "gate ancilla squeezing");
  app.add_option("--reflectivity,--R", f.reflectivity, "gate beam-splitter R");
  app.add_option("--v-up", f.v_up, "reliable-window half width");
  app.add_option("--bell-pairs,--L", f.L, "Bell pairs per fusion port");
  app.add_option("--ancillae,--m", f.m, "ancillae per encoded leaf (odd)");
  app.add_option("--me-iters", f.me_iters, "estimation rounds per qubit");
  app.add_option("--d", d_csv, "comma-separated code distances");
  app.add_option("--trials", f.n_trials, "Monte Carlo trials per point");
  app.add_option("--mode", f.mode, "ledger | previous | faithful");
  app.add_flag("--analog,!--no-analog", f.analog, "analog (soft) decoding weights");
  app.add_option("--seed", f.seed, "master RNG seed");
  app.add_option("--workers", f.workers, "worker threads (0 = GKPFT_WORKERS)");
  app.add_option("--points", f.sweep_points, "sigma points per sweep");
  app.add_option("--span", f.sweep_span, "relative half width of the sigma grid");
  app.add_option("--csv", f.csv_path, "CSV output path");
  app.add_option("--json", f.json_path, "JSON output path");
  app.add_option("--svg", f.svg_path, "SVG output path");

  auto* lo = app.add_subcommand("leading-order", "closed-form threshold estimate");
  lo->add_option("--method", method, "previous | proposed");
  auto* sim = app.add_subcommand("simulate", "failure rate at one operating point");
  auto* thr = app.add_subcommand("threshold", "sigma sweep plus crossing fit");
  auto* swp = app.add_subcommand("sweep", "failure-rate sweep, no fit");
  auto* sft = app.add_subcommand("selftest", "built-in oracle checks");
  for (auto* s : {lo, sim, thr, swp, sft}) s->fallthrough();

  std::vector<const char*> argv{"gkpft"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw CliHelp(app.help());
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(e.what());
  }

  RunConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot read config file " + config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_file(cfg, ss.str(), config_path);
  }

  const auto set = [&](const char* name) { return app.count(name) > 0; };
  const bool fs = set("--sigma"), fq = set("--squeezing-db");
  if (fs) cfg.sigma = sigma;
  if (fq) cfg.squeezing_db = squeezing;
  if (fs && !fq) cfg.squeezing_db.reset();
  if (fq && !fs) cfg.sigma.reset();
  if (set("--loss")) cfg.loss = f.loss;
  if (set("--sv-squeezing-db")) cfg.sv_squeezing_db = f.sv_squeezing_db;
  if (set("--reflectivity")) cfg.reflectivity = f.reflectivity;
  if (set("--v-up")) cfg.v_up = f.v_up;
  if (set("--bell-pairs")) cfg.L = f.L;
  if (set("--ancillae")) cfg.m = f.m;
  if (set("--me-iters")) cfg.me_iters = f.me_iters;
  if (set("--d")) cfg.d_list = parse_d_list(d_csv, "--d");
  if (set("--trials")) cfg.n_trials = f.n_trials;
  if (set("--mode")) cfg.mode = f.mode;
  if (set("--analog")) cfg.analog = f.analog;
  if (set("--seed")) cfg.seed = f.seed;
  if (set("--workers")) cfg.workers = f.workers;
  if (set("--points")) cfg.sweep_points = f.sweep_points;
  if (set("--span")) cfg.sweep_span = f.sweep_span;
  if (set("--csv")) cfg.csv_path = f.csv_path;
  if (set("--json")) cfg.json_path = f.json_path;
  if (set("--svg")) cfg.svg_path = f.svg_path;

  cfg.command = app.get_subcommands().front()->get_name();
  if (lo->count("--method") > 0) cfg.method = method;

  validate_config(cfg);
  return cfg;
}

// ---- writers

std::string sweep_csv(const std::vector<SweepPoint>& pts) {
  std::string s =
      "l,sigma,squeezing_db,d,n_trials,failures,failure_rate,ci_low,ci_high,"
      "mode,analog\n";
  for (const auto& p : pts)
    s += fmt("%.9g,%.9g,%.9g,%d,%d,%d,%.9g,%.9g,%.9g,%s,%d\n", p.loss, p.sigma,
             p.squeezing_db, p.d, p.n_trials, p.failures, p.failure_rate,
             p.ci_low, p.ci_high, mode_name(p.mode), p.analog ? 1 : 0);
  return s;
}

std::string config_json(const RunConfig& cfg) {
  return config_obj(cfg).dump(2) + "\n";
}

std::string threshold_json(const RunConfig& cfg, const ThresholdEstimate& est) {
  nlohmann::ordered_json j;
  j["sigma_threshold"] = est.sigma_threshold;
  j["squeezing_db"] = est.squeezing_db;
  // wider sigma means less squeezing, so the dB bounds swap sides
  j["ci"] = {{"sigma_low", est.sigma_ci_low},
             {"sigma_high", est.sigma_ci_high},
             {"squeezing_db_low",
              variance_to_squeezing(est.sigma_ci_high * est.sigma_ci_high)},
             {"squeezing_db_high",
              variance_to_squeezing(est.sigma_ci_low * est.sigma_ci_low)}};
  j["config"] = config_obj(cfg);
  j["seed"] = cfg.seed;
  j["version"] = GKPFT_VERSION;
  j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : est.points) j["points"].push_back(point_obj(p));
  return j.dump(2) + "\n";
}

std::string threshold_svg(const ThresholdEstimate& est) {
  const double W = 640, H = 440, ml = 72, mr = 30, mt = 52, mb = 58;
  const double pw = W - ml - mr, ph = H - mt - mb;

  std::set<int> dset;
  double xmin = 1e9, xmax = -1e9, ymax = 0.0;
  for (const auto& p : est.points) {
    dset.insert(p.d);
    xmin = std::min(xmin, p.sigma);
    xmax = std::max(xmax, p.sigma);
    ymax = std::max(ymax, p.ci_high);
  }
  if (est.points.empty()) {
    xmin = 0.1;
    xmax = 0.3;
  }
  ymax = std::max(ymax * 1.08, 1e-3);
  const double pad = (xmax - xmin) * 0.03 + 1e-9;
  xmin -= pad;
  xmax += pad;
  auto px = [&](double s) { return ml + (s - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double r) { return mt + ph - r / ymax * ph; };

  std::string s = fmt(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
      "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H, W, H);
  s += fmt("<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n", W, H);

  // bootstrap band and crossing marker under the data
  if (est.sigma_ci_high > est.sigma_ci_low)
    s += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
             "fill=\"#dddddd\"/>\n",
             px(est.sigma_ci_low), mt, px(est.sigma_ci_high) - px(est.sigma_ci_low),
             ph);
  s += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
           "stroke=\"#555555\" stroke-dasharray=\"5,4\"/>\n",
           px(est.sigma_threshold), mt, px(est.sigma_threshold), mt + ph);
  s += fmt("<text x=\"%.2f\" y=\"%.2f\" fill=\"#333333\">threshold sigma %.4f "
           "(%.2f dB)</text>\n",
           ml + 6, mt + 16, est.sigma_threshold, est.squeezing_db);

  // axes with sigma below and the squeezing scale above
  s += fmt("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
           "stroke=\"black\"/>\n",
           ml, mt, pw, ph);
  for (int i = 0; i <= 4; ++i) {
    const double sv = xmin + (xmax - xmin) * i / 4.0;
    const double x = px(sv);
    s += fmt("<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"black\"/>\n",
             x, mt + ph, x, mt + ph + 5);
    s += fmt("<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%.3f</text>\n", x,
             mt + ph + 20, sv);
    s += fmt("<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"black\"/>\n",
             x, mt, x, mt - 5);
    s += fmt("<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%.1f</text>\n", x,
             mt - 10, variance_to_squeezing(sv * sv));
    const double rv = ymax * i / 4.0;
    const double y = py(rv);
    s += fmt("<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"black\"/>\n",
             ml - 5, y, ml, y);
    s += fmt("<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%.3f</text>\n", ml - 9,
             y + 4, rv);
  }
  s += fmt("<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">peak width "
           "sigma</text>\n",
           ml + pw / 2, H - 16);
  s += fmt("<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">squeezing "
           "(dB)</text>\n",
           ml + pw / 2, 16.0);
  s += fmt("<text x=\"16\" y=\"%.2f\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 %.2f)\">logical failure rate</text>\n",
           mt + ph / 2, mt + ph / 2);

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#8c564b", "#e377c2"};
  int ci = 0;
  for (int d : dset) {
    const char* col = kColors[ci % 6];
    std::vector<const SweepPoint*> series;
    for (const auto& p : est.points)
      if (p.d == d) series.push_back(&p);
    std::sort(series.begin(), series.end(),
              [](const SweepPoint* a, const SweepPoint* b) {
                return a->sigma < b->sigma;
              });
    std::string poly;
    for (const auto* p : series) {
      poly += fmt("%.2f,%.2f ", px(p->sigma), py(p->failure_rate));
      s += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
               "stroke=\"%s\"/>\n",
               px(p->sigma), py(p->ci_low), px(p->sigma), py(p->ci_high), col);
      s += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
               px(p->sigma), py(p->failure_rate), col);
    }
    s += fmt("<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" "
             "stroke-width=\"1.5\"/>\n",
             poly.c_str(), col);
    s += fmt("<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"%s\" "
             "stroke-width=\"2\"/>\n",
             ml + 10, mt + ph - 14.0 - 16.0 * ci, ml + 30,
             mt + ph - 14.0 - 16.0 * ci, col);
    s += fmt("<text x=\"%g\" y=\"%.2f\">d = %d</text>\n", ml + 36,
             mt + ph - 10.0 - 16.0 * ci, d);
    ++ci;
  }
  s += "</svg>\n";
  return s;
}

// ---- selftest

int run_selftest(std::ostream& out) {
  int passed = 0, failed = 0;
  auto check = [&](const char* name, bool ok) {
    out << (ok ? "ok   " : "FAIL ") << name << "\n";
    (ok ? passed : failed) += 1;
  };

  {
    // central-bin misidentification against a numeric tail integral
    bool ok = true;
    for (double sg : {0.1, 0.2, 0.35, 0.5}) {
      const double a = kHalfSqrtPi;
      const int n = 4000;
      const double b = a + 12.0 * sg;
      double tail = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x0 = a + (b - a) * i / n, x1 = a + (b - a) * (i + 1) / n;
        const double xm = 0.5 * (x0 + x1);
        auto dens = [&](double x) {
          return std::exp(-x * x / (2 * sg * sg)) /
                 (sg * kSqrtPi * std::sqrt(2.0));
        };
        tail += (dens(x0) + 4 * dens(xm) + dens(x1)) * (x1 - x0) / 6.0;
      }
      ok = ok && std::abs(error_prob(sg * sg) - 2 * tail) < 1e-9;
    }
    check("central-bin error probability matches numeric quadrature", ok);
  }
  {
    // binned flip probability against a direct window sum
    bool ok = true;
    for (double sg : {0.2, 0.35, 0.6}) {
      double sum = 0.0;
      for (int k = 0; k < 40; ++k) {
        const double lo = (2 * k + 0.5) * kSqrtPi, hi = (2 * k + 1.5) * kSqrtPi;
        sum += std::erf(hi / (sg * std::sqrt(2.0))) -
               std::erf(lo / (sg * std::sqrt(2.0)));
      }
      ok = ok && std::abs(error_prob_binned(sg * sg) - sum) < 1e-9;
    }
    check("binned flip probability matches the lattice window sum", ok);
  }
  check("golden-ratio reflectivity gives unit cross-coupling",
        std::abs(QndConfig{}.coupling() - 1.0) < 1e-12);
  {
    // soft repetition decoding should not lose to plain majority
    Rng rng(4242);
    const double var = 0.3;
    int maj_err = 0, ana_err = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      std::vector<int> bits(3);
      std::vector<double> devs(3);
      for (int j = 0; j < 3; ++j) {
        const MeasurementOutcome o = decide_bit(rng.normal(std::sqrt(var)));
        bits[j] = o.bit;
        devs[j] = o.dev_m;
      }
      maj_err += majority_decode(bits) != 0;
      ana_err += analog_repetition_decode(bits, devs, var).bit != 0;
    }
    const double se = std::sqrt(double(maj_err) + ana_err) / n;
    check("analog repetition decoding beats majority",
          double(ana_err) / n <= double(maj_err) / n + 2.0 * se);
  }
  {
    // matcher optimality on small random instances
    Rng rng(77);
    bool ok = true;
    for (int rep = 0; rep < 30 && ok; ++rep) {
      const int n = 2 * (1 + int(rng.raw() % 4));
      std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, 0));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          w[i][j] = w[j][i] = std::int64_t(1 + rng.raw() % 1000);
      const auto pairs = min_weight_perfect_matching(w);
      std::int64_t best = INT64_MAX;
      std::vector<int> idx(n);
      for (int i = 0; i < n; ++i) idx[i] = i;
      auto rec = [&](auto&& self, std::vector<int> r, std::int64_t acc) -> void {
        if (r.empty()) {
          best = std::min(best, acc);
          return;
        }
        const int a = r[0];
        for (std::size_t j = 1; j < r.size(); ++j) {
          std::vector<int> next;
          for (std::size_t k2 = 1; k2 < r.size(); ++k2)
            if (k2 != j) next.push_back(r[k2]);
          self(self, next, acc + w[a][r[j]]);
        }
      };
      rec(rec, idx, 0);
      ok = matching_weight(pairs, w) == best;
    }
    check("matching equals exhaustive pairing on small instances", ok);
  }
  {
    // every decoded correction closes its syndrome
    const RhgLattice lat = build_lattice(5);
    TopoConfig tc;
    tc.pipeline.sigma2 = 0.07;
    Rng rng(99);
    bool ok = true;
    for (int i = 0; i < 40 && ok; ++i) {
      const auto recs = sample_qubit_noise(lat, tc, rng);
      const auto corr = decode_mwpm(lat, recs, true);
      std::vector<QubitNoiseRecord> res(lat.n_qubits());
      for (int e = 0; e < lat.n_qubits(); ++e)
        res[e].true_flip = recs[e].true_flip;
      for (int e : corr) res[e].true_flip ^= 1;
      ok = syndrome_defects(lat, res).empty();
    }
    check("decoded corrections close the syndrome", ok);
  }
  {
    TopoConfig tc;
    tc.pipeline.sigma2 = 0.0676;
    const TrialsResult a = run_trials(tc, 48, 2026, 1);
    const TrialsResult b = run_trials(tc, 48, 2026, 3);
    check("parallel trials equal serial trials", a.per_trial == b.per_trial);
  }
  {
    const auto [lo, hi] = wilson_interval(5, 10);
    check("wilson interval brackets the estimate",
          lo > 0.23 && lo < 0.24 && hi > 0.76 && hi < 0.77 &&
              wilson_interval(0, 50).first == 0.0 &&
              wilson_interval(50, 50).second == 1.0);
  }
  {
    HrmConfig hc;
    const double v = 0.06;
    const HrmProbabilities p = hrm_probabilities(v, hc);
    check("reliability window trades acceptance for error",
          p.accept() < 1.0 && p.accept() > 0.0 &&
              hrm_conditional_error(v, hc) < error_prob(v));
  }
  {
    const ThresholdResult prev = threshold_previous(LossConfig{}, QndConfig{});
    const ThresholdResult prop =
        threshold_proposed(LossConfig{}, QndConfig{}, BudgetConfig{});
    check("lossless leading-order anchors sit where expected",
          prev.achievable && std::abs(prev.squeezing_db - 11.6) < 1.2 &&
              prop.achievable && std::abs(prop.squeezing_db - 8.9) < 1.2);
  }

  out << passed << " passed, " << failed << " failed\n";
  return failed;
}

// ---- commands

namespace {

int run_leading_order(const RunConfig& cfg, std::ostream& out) {
  LossConfig lc;
  lc.loss = cfg.loss;
  const QndConfig qc = qnd_of(cfg);
  ThresholdResult r;
  if (cfg.method == "previous") {
    r = threshold_previous(lc, qc);
  } else {
    BudgetConfig bc;
    bc.L = cfg.L;
    bc.m = cfg.m;
    bc.hrm.v_up = cfg.v_up;
    r = threshold_proposed(lc, qc, bc);
  }
  if (r.achievable) {
    out << fmt("leading-order (%s, loss %g): threshold %.2f dB  (sigma %.4f)\n",
               cfg.method.c_str(), cfg.loss, r.squeezing_db,
               std::sqrt(r.sigma2));
  } else {
    out << fmt("leading-order (%s, loss %g): unachievable at any squeezing",
               cfg.method.c_str(), cfg.loss);
    if (cfg.method == "previous")
      out << fmt("  (loss ceiling %.4f)", previous_loss_ceiling(qc));
    out << "\n";
  }
  if (!cfg.json_path.empty()) {
    nlohmann::ordered_json j;
    j["method"] = cfg.method;
    j["loss"] = cfg.loss;
    j["achievable"] = r.achievable;
    j["squeezing_db"] = r.squeezing_db;
    j["sigma"] = std::sqrt(r.sigma2);
    j["config"] = config_obj(cfg);
    j["seed"] = cfg.seed;
    j["version"] = GKPFT_VERSION;
    write_file(cfg.json_path, j.dump(2) + "\n");
    out << "wrote " << cfg.json_path << "\n";
  }
  return 0;
}

void print_point(const SweepPoint& p, std::ostream& out) {
  out << fmt("  sigma %.4f (%.2f dB)  d=%d  %d/%d failures  rate %.5f  ci "
             "[%.5f, %.5f]\n",
             p.sigma, p.squeezing_db, p.d, p.failures, p.n_trials,
             p.failure_rate, p.ci_low, p.ci_high);
}

int run_simulate(const RunConfig& cfg, std::ostream& out) {
  const double s = cfg.resolved_sigma();
  out << fmt("simulate: mode %s, analog %s, loss %g, %d trials\n",
             cfg.mode.c_str(), cfg.analog ? "on" : "off", cfg.loss,
             cfg.n_trials);
  std::vector<SweepPoint> pts;
  for (int d : cfg.d_list) {
    TopoConfig tc = cfg.topo(d);
    const TrialsResult r = run_trials(tc, cfg.n_trials, cfg.seed, cfg.workers);
    pts.push_back(make_point(cfg, s, d, r));
    print_point(pts.back(), out);
  }
  if (!cfg.csv_path.empty()) {
    write_file(cfg.csv_path, sweep_csv(pts));
    out << "wrote " << cfg.csv_path << "\n";
  }
  if (!cfg.json_path.empty()) {
    nlohmann::ordered_json j;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : pts) j["points"].push_back(point_obj(p));
    j["config"] = config_obj(cfg);
    j["seed"] = cfg.seed;
    j["version"] = GKPFT_VERSION;
    write_file(cfg.json_path, j.dump(2) + "\n");
    out << "wrote " << cfg.json_path << "\n";
  }
  return 0;
}

int run_sweep(const RunConfig& cfg, std::ostream& out) {
  const double center = cfg.resolved_sigma();
  const auto grid = sigma_grid(center, cfg.sweep_span, cfg.sweep_points);
  out << fmt("sweep: %d sigma points in [%.4f, %.4f], %d trials each\n",
             cfg.sweep_points, grid.front(), grid.back(), cfg.n_trials);
  std::vector<SweepPoint> pts;
  for (int d : cfg.d_list)
    for (double s : grid) {
      RunConfig at = cfg;
      at.sigma = s;
      at.squeezing_db.reset();
      TopoConfig tc = at.topo(d);
      const TrialsResult r = run_trials(tc, cfg.n_trials, cfg.seed, cfg.workers);
      pts.push_back(make_point(cfg, s, d, r));
      print_point(pts.back(), out);
    }
  const std::string csv = cfg.csv_path.empty() ? "sweep.csv" : cfg.csv_path;
  write_file(csv, sweep_csv(pts));
  out << "wrote " << csv << "\n";
  if (!cfg.json_path.empty()) {
    nlohmann::ordered_json j;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : pts) j["points"].push_back(point_obj(p));
    j["config"] = config_obj(cfg);
    j["seed"] = cfg.seed;
    j["version"] = GKPFT_VERSION;
    write_file(cfg.json_path, j.dump(2) + "\n");
    out << "wrote " << cfg.json_path << "\n";
  }
  return 0;
}

int run_threshold(const RunConfig& cfg, std::ostream& out) {
  RunConfig eff = cfg;
  if (!cfg.sigma && !cfg.squeezing_db) {
    // bracket the sweep around the closed-form estimate
    if (cfg.mode == "previous")
      throw std::runtime_error(
          "previous-mode threshold needs an explicit sigma or squeezing_db "
          "center (the closed-form budget brackets only the encoded build)");
    LossConfig lc;
    lc.loss = cfg.loss;
    BudgetConfig bc;
    bc.L = cfg.L;
    bc.m = cfg.m;
    bc.hrm.v_up = cfg.v_up;
    const ThresholdResult r = threshold_proposed(lc, qnd_of(cfg), bc);
    if (!r.achievable)
      throw std::runtime_error(fmt(
          "cannot auto-bracket: leading-order threshold unachievable at loss "
          "%g; give sigma explicitly",
          cfg.loss));
    // the closed-form budget union-bounds the channels, so the simulated
    // crossing lands above it; lift the center so the grid brackets it
    eff.sigma = std::sqrt(r.sigma2) * 1.12;
  } else {
    eff.sigma = cfg.resolved_sigma();
  }
  eff.squeezing_db.reset();

  const auto grid = sigma_grid(*eff.sigma, eff.sweep_span, eff.sweep_points);
  out << fmt(
      "threshold: d {%d, %d}, %d sigma points in [%.4f, %.4f], %d trials "
      "each, mode %s\n",
      eff.d_list[0], eff.d_list[1], eff.sweep_points, grid.front(), grid.back(),
      eff.n_trials, eff.mode.c_str());
  const ThresholdEstimate est =
      estimate_threshold(eff.topo(eff.d_list[0]), grid, eff.d_list, eff.n_trials,
                         eff.seed, eff.workers);
  for (const auto& p : est.points) print_point(p, out);
  out << fmt("threshold sigma %.4f (%.2f dB), sigma ci [%.4f, %.4f]\n",
             est.sigma_threshold, est.squeezing_db, est.sigma_ci_low,
             est.sigma_ci_high);

  const std::string csv = eff.csv_path.empty() ? "threshold.csv" : eff.csv_path;
  const std::string jsn = eff.json_path.empty() ? "threshold.json" : eff.json_path;
  const std::string svg = eff.svg_path.empty() ? "threshold.svg" : eff.svg_path;
  write_file(csv, sweep_csv(est.points));
  write_file(jsn, threshold_json(eff, est));
  write_file(svg, threshold_svg(est));
  out << "wrote " << csv << ", " << jsn << ", " << svg << "\n";
  return 0;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out) {
  if (cfg.command == "leading-order") return run_leading_order(cfg, out);
  if (cfg.command == "simulate") return run_simulate(cfg, out);
  if (cfg.command == "sweep") return run_sweep(cfg, out);
  if (cfg.command == "threshold") return run_threshold(cfg, out);
  if (cfg.command == "selftest") return run_selftest(out) == 0 ? 0 : 1;
  throw std::invalid_argument("unknown command '" + cfg.command + "'");
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const CliHelp& h) {
    std::fputs(h.what(), stdout);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  try {
    std::cout.setf(std::ios::unitbuf);
    return run(cfg, std::cout);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace gkpft
