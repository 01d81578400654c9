#pragma once

// Named experiments driven by INI configuration files. Each run writes CSV
// tables, SVG plots and a manifest.json into its output directory.

#include "qchimera/chain_model.hpp"
#include "qchimera/classical_chain.hpp"
#include "qchimera/dynamics.hpp"
#include "qchimera/eigensystem.hpp"
#include "qchimera/errors.hpp"
#include "qchimera/observables.hpp"
#include "qchimera/report.hpp"
#include "qchimera/spectral_stats.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qchimera {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// "1.46", "pi", "pi/2", "-3*pi/4"
inline double parse_angle(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  const auto pos = s.find("pi");
  try {
    if (pos == std::string::npos) {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    }
    double factor = 1.0, divisor = 1.0;
    std::string pre = s.substr(0, pos), post = s.substr(pos + 2);
    if (pre == "-") factor = -1.0;
    else if (!pre.empty()) {
      if (pre.back() != '*') throw std::invalid_argument(s);
      factor = std::stod(pre.substr(0, pre.size() - 1));
    }
    if (!post.empty()) {
      if (post.front() != '/') throw std::invalid_argument(s);
      divisor = std::stod(post.substr(1));
    }
    return factor * std::numbers::pi / divisor;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse angle '" + text + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    const auto a = cur.find_first_not_of(" \t"), b = cur.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(cur.substr(a, b - a + 1));
  }
  return out;
}

// "1-10" or "1,4,7"
inline std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  try {
    for (const auto& item : split_list(s)) {
      const auto dash = item.find('-');
      if (dash != std::string::npos && dash > 0) {
        const auto a = std::stoull(item.substr(0, dash)), b = std::stoull(item.substr(dash + 1));
        if (b < a || b - a > 100000) throw std::invalid_argument(item);
        for (auto k = a; k <= b; ++k) out.push_back(k);
      } else {
        out.push_back(std::stoull(item));
      }
    }
  } catch (const std::exception&) {
    throw ConfigError("cannot parse seed list '" + s + "'");
  }
  return out;
}

struct ExperimentConfig {
  std::string name = "run";
  std::string kind; // eigenstate-report | scatter | lsd | survival | classical
  fs::path base_dir;
  fs::path out_dir;

  // [chain]
  int sites = 12, range = 3;
  double nu = 1.0, alpha = 1.46;
  std::string profile = "linear";
  double omega = 1.0;
  fs::path omegas_file;

  // [eigenstate]
  std::optional<double> chi;
  double chi_tol = 1e-9;
  std::string side = "right";
  int husimi_theta = 64, husimi_phi = 128;

  // [regions]
  RegionThresholds thresholds;

  // [scatter]
  std::vector<std::string> models{"chimera"};
  std::optional<double> ising_j;
  fs::path vectors_file;
  int max_points = 4096;

  // [lsd]
  int stride = 10, bins = 30;
  double hist_lo = 0.0, hist_hi = 4.0;
  std::string spline = "monotone";
  double degeneracy_tol = 1e-9;
  fs::path spectrum_file;

  // [survival]
  std::string pattern;
  TimeGrid grid;
  std::string pairing = "biorthogonal";
  std::string path = "spectral";
  std::string on_no_match = "error";

  // [classical]
  OscillatorParams classical;
  std::vector<std::uint64_t> seeds{1};
  double t_end_classical = 100.0, dt_classical = 0.01;
  int n_res = 20, radius = 5;

  Json echo; // resolved configuration as read

  FrequencyProfile frequency_profile() const {
    if (profile == "uniform") return FrequencyProfile::uniform(omega);
    if (profile == "linear") return FrequencyProfile::linear();
    if (profile == "sine") return FrequencyProfile::sine();
    if (profile == "file") {
      const auto values = read_spectrum_file_unsorted(resolve(omegas_file));
      return FrequencyProfile::list(values);
    }
    throw ConfigError("unknown frequency profile '" + profile + "'");
  }

  ChainParams chain() const {
    try {
      return ChainParams::make(sites, range, nu, alpha, frequency_profile());
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    } catch (const IngestionError& e) {
      throw ConfigError(e.what());
    }
  }

  fs::path resolve(const fs::path& p) const {
    if (p.empty()) throw ConfigError("missing file path");
    return p.is_absolute() ? p : base_dir / p;
  }

  void validate() const {
    static const std::vector<std::string> kinds{"eigenstate-report", "scatter", "lsd", "survival", "classical"};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw ConfigError("unknown experiment kind '" + kind + "'");
    if (kind != "classical") {
      if (profile != "file") (void)chain();
    }
    if (side != "left" && side != "right") throw ConfigError("side must be left or right");
    if (!(chi_tol > 0.0)) throw ConfigError("chi_tol must be positive");
    if (!(degeneracy_tol >= 0.0)) throw ConfigError("degeneracy tolerance must be nonnegative");
    if (husimi_theta < 1 || husimi_phi < 1) throw ConfigError("Husimi grid needs positive step counts");
    try {
      thresholds.validate();
      grid.validate();
      if (kind == "classical") classical.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    if (stride < 1 || bins < 1 || !(hist_hi > hist_lo)) throw ConfigError("invalid histogram or stride settings");
    if (spline != "monotone" && spline != "natural") throw ConfigError("spline must be monotone or natural");
    if (pairing != "biorthogonal" && pairing != "transpose") throw ConfigError("pairing must be biorthogonal or transpose");
    if (path != "spectral" && path != "direct") throw ConfigError("path must be spectral or direct");
    if (on_no_match != "error" && on_no_match != "best") throw ConfigError("on_no_match must be error or best");
    if (kind == "survival" && pattern.empty()) throw ConfigError("survival needs an initial-state pattern");
    if (kind == "survival" && static_cast<int>(pattern.size()) != sites)
      throw ConfigError("pattern length " + std::to_string(pattern.size()) + " does not match N=" + std::to_string(sites));
    for (const auto& m : models)
      if (m != "chimera" && m != "ising_z" && m != "external") throw ConfigError("unknown scatter model '" + m + "'");
    if (kind == "eigenstate-report" && !chi) throw ConfigError("eigenstate-report needs a target eigenvalue chi");
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (!(t_end_classical > 0.0) || !(dt_classical > 0.0)) throw ConfigError("classical times must be positive");
    if (n_res < 1 || radius < 0) throw ConfigError("invalid entropy resolution or radius");
  }

  static std::vector<double> read_spectrum_file_unsorted(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path.string(), 0);
    std::vector<double> out;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ss(line);
      double v;
      std::string rest;
      if (!(ss >> v) || (ss >> rest) || !std::isfinite(v)) throw IngestionError("expected one finite number", no);
      out.push_back(v);
    }
    return out;
  }
};

inline ExperimentConfig parse_config(std::istream& in, const fs::path& base_dir = ".") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  c.base_dir = base_dir;
  static const std::vector<std::string> sections{"experiment", "chain", "eigenstate", "regions", "scatter",
                                                 "lsd",        "time",  "survival",   "classical", "output"};
  for (const auto& [section, body] : tree) {
    if (std::find(sections.begin(), sections.end(), section) == sections.end())
      throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) c.echo[section][key] = value.data();
  }
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto v = tree.get_optional<std::string>(key);
    return v ? std::optional<std::string>(*v) : std::nullopt;
  };
  auto num = [&](const char* key, auto& target) {
    if (auto v = get(key)) {
      try {
        std::size_t used = 0;
        using T = std::decay_t<decltype(target)>;
        if constexpr (std::is_integral_v<T>) target = static_cast<T>(std::stoll(*v, &used));
        else target = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
      } catch (const std::exception&) {
        throw ConfigError(std::string("config key ") + key + ": cannot parse '" + *v + "'");
      }
    }
  };
  auto str = [&](const char* key, std::string& target) {
    if (auto v = get(key)) target = *v;
  };
  auto path = [&](const char* key, fs::path& target) {
    if (auto v = get(key)) target = *v;
  };

  str("experiment.name", c.name);
  str("experiment.kind", c.kind);
  num("chain.sites", c.sites);
  num("chain.range", c.range);
  num("chain.nu", c.nu);
  if (auto v = get("chain.alpha")) c.alpha = parse_angle(*v);
  str("chain.profile", c.profile);
  num("chain.omega", c.omega);
  path("chain.omegas_file", c.omegas_file);

  if (auto v = get("eigenstate.chi")) {
    double x = 0.0;
    num("eigenstate.chi", x);
    c.chi = x;
    (void)v;
  }
  num("eigenstate.chi_tol", c.chi_tol);
  str("eigenstate.side", c.side);
  num("eigenstate.husimi_theta", c.husimi_theta);
  num("eigenstate.husimi_phi", c.husimi_phi);

  num("regions.high", c.thresholds.high);
  num("regions.low", c.thresholds.low);

  if (auto v = get("scatter.models")) c.models = split_list(*v);
  if (get("scatter.ising_j")) {
    double j = 0.0;
    num("scatter.ising_j", j);
    c.ising_j = j;
  }
  path("scatter.vectors_file", c.vectors_file);
  num("scatter.max_points", c.max_points);

  num("lsd.stride", c.stride);
  num("lsd.bins", c.bins);
  num("lsd.lo", c.hist_lo);
  num("lsd.hi", c.hist_hi);
  str("lsd.spline", c.spline);
  num("lsd.degeneracy_tol", c.degeneracy_tol);
  path("lsd.spectrum_file", c.spectrum_file);

  num("time.t_end", c.grid.t_end);
  num("time.samples", c.grid.samples);

  str("survival.pattern", c.pattern);
  str("survival.side", c.side);
  str("survival.pairing", c.pairing);
  str("survival.path", c.path);
  str("survival.on_no_match", c.on_no_match);

  num("classical.sites", c.classical.sites);
  num("classical.range", c.classical.range);
  num("classical.omega", c.classical.omega);
  num("classical.nu", c.classical.nu);
  if (auto v = get("classical.alpha")) c.classical.alpha = parse_angle(*v);
  if (auto v = get("classical.seeds")) c.seeds = parse_seeds(*v);
  num("classical.t_end", c.t_end_classical);
  num("classical.dt", c.dt_classical);
  num("classical.n_res", c.n_res);
  num("classical.radius", c.radius);

  path("output.dir", c.out_dir);
  return c;
}

inline ExperimentConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  return parse_config(in, file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

// Command-line overrides applied on top of a config file.
struct Overrides {
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> chi;
  std::optional<std::string> pattern, side, profile;

  void apply(ExperimentConfig& c) const {
    if (out) c.out_dir = *out;
    if (seed) c.seeds = {*seed};
    if (chi) c.chi = *chi;
    if (pattern) c.pattern = *pattern;
    if (side) c.side = *side;
    if (profile) c.profile = *profile;
    if (seed) c.echo["override"]["seed"] = *seed;
    if (chi) c.echo["override"]["chi"] = *chi;
    if (pattern) c.echo["override"]["pattern"] = *pattern;
    if (side) c.echo["override"]["side"] = *side;
    if (profile) c.echo["override"]["profile"] = *profile;
  }
};

// Output directory, manifest and timings of one run.
class RunContext {
public:
  explicit RunContext(const ExperimentConfig& c) : config_(c), start_(Clock::now()) {
    dir_ = c.out_dir.empty() ? fs::path("out") / c.name : c.out_dir;
    fs::create_directories(dir_);
    manifest_["experiment"] = c.name;
    manifest_["kind"] = c.kind;
    manifest_["version"] = kVersion;
    manifest_["config"] = c.echo;
    manifest_["derived"] = Json::object();
    manifest_["outputs"] = Json::array();
    manifest_["timings_s"] = Json::object();
  }

  const fs::path& dir() const { return dir_; }
  fs::path file(const std::string& name) {
    manifest_["outputs"].push_back(name);
    return dir_ / name;
  }
  Json& derived() { return manifest_["derived"]; }

  template <class F>
  auto timed(const std::string& label, F&& f) {
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      manifest_["timings_s"][label] = seconds_since(t0);
    } else {
      auto r = f();
      manifest_["timings_s"][label] = seconds_since(t0);
      return r;
    }
  }

  void finish(const std::string& status = "ok") {
    manifest_["status"] = status;
    manifest_["timings_s"]["total"] = seconds_since(start_);
    std::ofstream out(dir_ / "manifest.json");
    out << manifest_.dump(2) << '\n';
  }

  void diagnostics(const std::string& what) {
    Json d{{"error", what}, {"experiment", config_.name}, {"derived", manifest_["derived"]}};
    std::ofstream out(dir_ / "diagnostics.json");
    out << d.dump(2) << '\n';
    finish("numerical_failure");
  }

private:
  using Clock = std::chrono::steady_clock;
  static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }

  const ExperimentConfig& config_;
  Clock::time_point start_;
  fs::path dir_;
  Json manifest_;
};

// ---------------------------------------------------------------- eigenstates

struct EigenstateSummary {
  std::size_t index = 0;
  double eigenvalue = 0.0;
  std::string labels;
  int entangled_runs = 0;
  int indeterminate = 0;
  bool chimera = false;
  double mean_entropy = 0.0;
  double margin = 0.0; // sum of squared distances of S_i to the nearer of 0 and 1/2
};

inline EigenstateSummary summarize_state(const StateVector& v, std::size_t index, double eigenvalue,
                                         const RegionThresholds& th) {
  const SpinProfile prof = chain_profile(v / v.norm(), {}, false);
  const auto labels = classify_regions(prof, th);
  EigenstateSummary s;
  s.index = index;
  s.eigenvalue = eigenvalue;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.labels += label_char(labels[i]);
    s.mean_entropy += prof.entropy[i] / double(labels.size());
    const double d = std::min(prof.entropy[i], 0.5 - prof.entropy[i]);
    s.margin += d * d;
  }
  s.entangled_runs = circular_runs(labels, SpinLabel::entangled);
  s.indeterminate = static_cast<int>(std::count(labels.begin(), labels.end(), SpinLabel::indeterminate));
  s.chimera = is_chimera_pattern(labels);
  return s;
}

// Eigenstates of a cluster on one side, best chimera representatives first.
inline std::vector<EigenstateSummary> cluster_states(const BiorthogonalSystem& sys, std::size_t cluster, bool left_side,
                                                     const RegionThresholds& th) {
  std::vector<EigenstateSummary> out;
  for (std::size_t n : sys.cluster_columns(cluster, left_side)) {
    const StateVector v = left_side ? sys.left_vector(n) : sys.right_vector(n);
    if (v.norm() == 0.0) continue;
    out.push_back(summarize_state(v, n, sys.eigenvalue(n), th));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.chimera != b.chimera) return a.chimera;
    if (a.indeterminate != b.indeterminate) return a.indeterminate < b.indeterminate;
    return a.margin < b.margin;
  });
  return out;
}

inline void write_profile_files(RunContext& ctx, const SpinProfile& prof, const std::string& stem,
                                const std::string& title) {
  CsvWriter pc(ctx.file(stem + "_profile.csv"), {"site", "population", "coherence", "entropy"});
  for (int i = 0; i < prof.sites(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    pc.row(i + 1, prof.population[k], prof.coherence[k], prof.entropy[k]);
  }
  if (prof.husimi.empty()) return;
  const auto& g = prof.grid;
  CsvWriter hc(ctx.file(stem + "_husimi.csv"), {"site", "theta", "phi", "value"});
  for (int i = 0; i < prof.sites(); ++i)
    for (int t = 0; t < g.theta_steps; ++t)
      for (int f = 0; f < g.phi_steps; ++f)
        hc.row(i + 1, g.theta(t), g.phi(f),
               prof.husimi[static_cast<std::size_t>(i)][static_cast<std::size_t>(t * g.phi_steps + f)]);

  const int n = prof.sites();
  // phi = 0 slice: site vs theta
  {
    svg::Figure fig(640, 360, title + ": Husimi h_i(theta, 0)");
    const int p = fig.panel(60, 40, 540, 270, {0.5, n + 0.5}, {0.0, std::numbers::pi}, "spin i", "theta");
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < g.theta_steps; ++t) {
        const double th0 = g.theta_steps > 1 ? std::numbers::pi * (t - 0.5) / (g.theta_steps - 1) : 0.0;
        const double th1 = g.theta_steps > 1 ? std::numbers::pi * (t + 0.5) / (g.theta_steps - 1) : std::numbers::pi;
        fig.cell(p, i + 0.5, i + 1.5, std::max(0.0, th0), std::min(std::numbers::pi, th1),
                 prof.husimi[static_cast<std::size_t>(i)][static_cast<std::size_t>(t * g.phi_steps)]);
      }
    fig.save(ctx.file(stem + "_husimi_phi0.svg"));
  }
  // azimuthal projection centred on theta = 0, limit circle theta = pi
  {
    const int cols = std::min(n, 6), rows = (n + cols - 1) / cols;
    svg::Figure fig(120 * cols + 40, 130 * rows + 40, title + ": Husimi projection per spin");
    for (int i = 0; i < n; ++i) {
      const double cx = 20 + 120 * (i % cols), cy = 30 + 130 * (i / cols);
      const int p = fig.panel(cx + 10, cy + 10, 90, 90, {-1.0, 1.0}, {-1.0, 1.0}, "spin " + std::to_string(i + 1), "");
      const int ts = std::max(1, g.theta_steps / 16), fs_ = std::max(1, g.phi_steps / 32);
      for (int t = 0; t < g.theta_steps; t += ts)
        for (int f = 0; f < g.phi_steps; f += fs_) {
          const double r = g.theta(t) / std::numbers::pi, ph = g.phi(f);
          const double x = r * std::cos(ph), y = r * std::sin(ph);
          fig.cell(p, x - 0.045, x + 0.045, y - 0.045, y + 0.045,
                   prof.husimi[static_cast<std::size_t>(i)][static_cast<std::size_t>(t * g.phi_steps + f)]);
        }
    }
    fig.save(ctx.file(stem + "_husimi_projection.svg"));
  }
  // populations, coherences, entropies
  {
    svg::Figure fig(640, 360, title + ": populations, coherences, linear entropies");
    const int p = fig.panel(60, 40, 540, 270, {0.5, n + 0.5}, {0.0, 1.0}, "spin i", "value");
    std::vector<double> l, r, zero;
    for (int i = 0; i < n; ++i) {
      l.push_back(i + 0.6);
      r.push_back(i + 0.85);
    }
    auto shift = [](std::vector<double> v, double d) {
      for (double& x : v) x += d;
      return v;
    };
    fig.bars(p, l, r, prof.population, "#1f77b4");
    fig.bars(p, shift(l, 0.25), shift(r, 0.25), prof.coherence, "#ff7f0e");
    fig.bars(p, shift(l, 0.5), shift(r, 0.5), prof.entropy, "#2ca02c");
    fig.legend(p, 0, "population", "#1f77b4");
    fig.legend(p, 1, "coherence", "#ff7f0e");
    fig.legend(p, 2, "entropy", "#2ca02c");
    fig.save(ctx.file(stem + "_profile.svg"));
  }
}

class RequestError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

inline void run_eigenstate_report(const ExperimentConfig& c, RunContext& ctx) {
  const ChainParams params = c.chain();
  const SparseOperator h = ctx.timed("build", [&] { return build_hamiltonian(params); });
  const BiorthogonalSystem sys = ctx.timed("eigensystem", [&] { return solve_biorthogonal(h); });
  const double chi = *c.chi;
  const auto cluster = sys.spectrum.find_cluster(chi, c.chi_tol);
  if (!cluster) {
    std::ostringstream msg;
    msg << "no eigenvalue within " << c.chi_tol << " of " << chi << "; nearest:";
    for (double v : sys.spectrum.nearest_values(chi, 5)) msg << ' ' << fmt17(v);
    throw RequestError(msg.str());
  }
  const bool left = c.side == "left";
  const auto& cl = sys.spectrum.clusters[*cluster];
  auto& d = ctx.derived();
  d["eigenvalue"] = cl.value;
  d["multiplicity"] = cl.multiplicity();
  d["cluster_defective"] = bool(sys.cluster_defective[*cluster]);
  d["side"] = c.side;
  d["defective_clusters_total"] = sys.defective_cluster_count();
  const auto extremal = extremal_right_eigenstates(h);
  d["extremal_right_eigenstates"] = extremal;
  d["orientation"] = orientation_name(sys.spectrum.orientation);

  const auto states = cluster_states(sys, *cluster, left, c.thresholds);
  CsvWriter sc(ctx.file("eigenstates.csv"),
               {"index", "eigenvalue", "labels", "entangled_runs", "indeterminate", "chimera", "mean_entropy"});
  CsvWriter ec(ctx.file("eigenstate_entropies.csv"), {"index", "site", "population", "coherence", "entropy"});
  int contiguous = 0, split = 0;
  for (const auto& s : states) {
    sc.row(s.index, s.eigenvalue, s.labels, s.entangled_runs, s.indeterminate, int(s.chimera), s.mean_entropy);
    const StateVector v = left ? sys.left_vector(s.index) : sys.right_vector(s.index);
    const SpinProfile prof = chain_profile(v / v.norm(), {}, false);
    for (int i = 0; i < prof.sites(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      ec.row(s.index, i + 1, prof.population[k], prof.coherence[k], prof.entropy[k]);
    }
    if (s.chimera && s.entangled_runs == 1) ++contiguous;
    if (s.chimera && s.entangled_runs > 1) ++split;
  }
  d["states"] = states.size();
  d["chimera_contiguous"] = contiguous;
  d["chimera_noncontiguous"] = split;
  if (states.empty()) throw NumericalError("cluster has no eigenvectors on the requested side");
  const auto& best = states.front();
  d["representative"] = {{"index", best.index}, {"labels", best.labels}, {"chimera", best.chimera}};
  const StateVector v = left ? sys.left_vector(best.index) : sys.right_vector(best.index);
  const SpinProfile prof = chain_profile(v / v.norm(), HusimiGrid{c.husimi_theta, c.husimi_phi}, true);
  std::ostringstream title;
  title << (left ? "left" : "right") << " eigenstate chi=" << chi;
  write_profile_files(ctx, prof, "representative", title.str());
}

// ---------------------------------------------------------------- scatter

inline void run_scatter(const ExperimentConfig& c, RunContext& ctx) {
  CsvWriter out(ctx.file("scatter.csv"), {"model", "index", "eigenvalue", "mean_entropy", "disorder"});
  std::vector<std::pair<std::string, std::pair<std::vector<double>, std::vector<double>>>> series;
  auto& d = ctx.derived();
  for (const auto& model : c.models) {
    std::vector<double> xs, ys;
    auto add = [&](std::size_t idx, double ev, const StateVector& v) {
      const DisorderPoint p = disorder_entanglement(v / v.norm());
      out.row(model, idx, ev, p.mean_entropy, p.disorder);
      xs.push_back(p.mean_entropy);
      ys.push_back(p.disorder);
    };
    if (model == "external") {
      const auto vecs = read_state_vectors_file(c.resolve(c.vectors_file));
      for (std::size_t k = 0; k < vecs.size(); ++k) add(k, std::nan(""), vecs[k]);
    } else {
      const ChainParams params = c.chain();
      const std::size_t dim = basis_dimension(params.sites);
      const std::size_t stride = std::max<std::size_t>(1, dim / static_cast<std::size_t>(std::max(1, c.max_points)));
      if (model == "ising_z") {
        const double j = c.ising_j.value_or(default_ising_coupling(params));
        d["ising_j"] = j;
        const SparseOperator h = build_ising_z(params, j);
        const BiorthogonalSystem sys = ctx.timed("eigensystem_ising", [&] { return solve_biorthogonal(h); });
        for (std::size_t n = 0; n < sys.size(); n += stride)
          if (sys.has_right[n]) add(n, sys.eigenvalue(n), sys.right_vector(n));
      } else {
        const SparseOperator h = build_hamiltonian(params);
        const BiorthogonalSystem sys = ctx.timed("eigensystem_chimera", [&] { return solve_biorthogonal(h); });
        d["defective_clusters"] = sys.defective_cluster_count();
        for (std::size_t n = 0; n < sys.size(); n += stride)
          if (sys.has_right[n]) add(n, sys.eigenvalue(n), sys.right_vector(n));
      }
      d["stride_" + model] = stride;
    }
    const double max_s = xs.empty() ? 0.0 : *std::max_element(xs.begin(), xs.end());
    const double min_s = xs.empty() ? 0.0 : *std::min_element(xs.begin(), xs.end());
    d["points_" + model] = xs.size();
    d["max_mean_entropy_" + model] = max_s;
    d["min_mean_entropy_" + model] = min_s;
    series.push_back({model, {std::move(xs), std::move(ys)}});
  }
  svg::Figure fig(560, 440, "entanglement <S> vs disorder D");
  const int p = fig.panel(70, 40, 440, 340, {-0.02, 0.52}, {-0.02, 0.52}, "<S>", "D");
  const std::vector<std::string> colors{"#d62728", "#1f77b4", "#2ca02c"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    fig.points(p, series[k].second.first, series[k].second.second, colors[k % colors.size()]);
    fig.legend(p, static_cast<int>(k), series[k].first, colors[k % colors.size()]);
  }
  fig.save(ctx.file("scatter.svg"));
}

// ---------------------------------------------------------------- level spacing

inline void run_lsd(const ExperimentConfig& c, RunContext& ctx) {
  auto& d = ctx.derived();
  std::vector<double> spectrum;
  if (!c.spectrum_file.empty()) {
    spectrum = read_spectrum_file(c.resolve(c.spectrum_file));
    d["source"] = "file";
  } else {
    const ChainParams params = c.chain();
    const SparseOperator h = build_hamiltonian(params);
    spectrum = ctx.timed("spectrum", [&] { return graded_spectrum(h).values; });
    d["source"] = "chain";
  }
  const double tol = default_degeneracy_tolerance(spectrum, c.degeneracy_tol);
  const auto levels = remove_degeneracies(spectrum, tol);
  d["levels"] = spectrum.size();
  d["distinct_levels"] = levels.size();
  d["removed_degeneracies"] = spectrum.size() - levels.size();
  d["degeneracy_tolerance"] = tol;
  d["normalization"] = "density";
  const SplineKind kind = c.spline == "natural" ? SplineKind::natural : SplineKind::monotone;
  d["spline"] = spline_name(kind);
  d["stride"] = c.stride;

  std::vector<std::size_t> counts;
  if (levels.size() < 2 * static_cast<std::size_t>(c.stride) || levels.size() < 3) {
    d["degenerate_peaks"] = true;
    throw NumericalError("only " + std::to_string(levels.size()) + " distinct levels; spacing statistics undefined");
  }
  UnfoldedSpectrum u;
  try {
    u = unfold(levels, c.stride, kind);
  } catch (const UnfoldingError& e) {
    d["unfolding_failure"] = {{"interval", {e.interval_begin(), e.interval_end()}}, {"message", e.what()}};
    throw;
  }
  const auto hist = lsd(u, c.bins, c.hist_lo, c.hist_hi);
  const double dwd = distribution_distance(hist, ReferenceKind::wigner_dyson);
  const double dp = distribution_distance(hist, ReferenceKind::poisson);
  d["mean_spacing"] = u.mean_spacing();
  d["distance_wigner_dyson"] = dwd;
  d["distance_poisson"] = dp;
  d["closer_to"] = dwd < dp ? "wigner_dyson" : "poisson";
  d["spacings_outside_range"] = hist.outside;

  {
    CsvWriter lc(ctx.file("levels.csv"), {"n", "level", "unfolded"});
    for (std::size_t k = 0; k < levels.size(); ++k) lc.row(k + 1, levels[k], u.values[k]);
  }
  CsvWriter hc(ctx.file("histogram.csv"), {"bin_left", "bin_right", "density"});
  for (std::size_t b = 0; b < hist.bins(); ++b) hc.row(hist.edges[b], hist.edges[b + 1], hist.density[b]);
  CsvWriter rc(ctx.file("reference.csv"), {"s", "wigner_dyson", "poisson"});
  std::vector<double> s, wd, po;
  for (int k = 0; k <= 400; ++k) {
    const double x = c.hist_lo + (c.hist_hi - c.hist_lo) * k / 400.0;
    s.push_back(x);
    wd.push_back(reference_density(ReferenceKind::wigner_dyson, std::max(0.0, x)));
    po.push_back(reference_density(ReferenceKind::poisson, std::max(0.0, x)));
    rc.row(x, wd.back(), po.back());
  }
  double ymax = 1.0;
  for (double v : hist.density) ymax = std::max(ymax, v);
  svg::Figure fig(560, 400, "level spacing distribution");
  const int p = fig.panel(70, 40, 440, 300, {c.hist_lo, c.hist_hi}, {0.0, ymax * 1.05}, "s", "P(s)");
  std::vector<double> left(hist.edges.begin(), hist.edges.end() - 1), right(hist.edges.begin() + 1, hist.edges.end());
  fig.bars(p, left, right, hist.density, "#7f7f7f");
  fig.line(p, s, wd, "#d62728", 2.0);
  fig.line(p, s, po, "#2ca02c", 2.0);
  fig.legend(p, 0, "Wigner-Dyson", "#d62728");
  fig.legend(p, 1, "Poisson", "#2ca02c");
  fig.save(ctx.file("lsd.svg"));
}

// ---------------------------------------------------------------- survival

inline void write_survival_svg(const fs::path& path, const SurvivalSeries& s, const std::string& title) {
  svg::Figure fig(620, 560, title);
  const svg::Range tr{0.0, s.times.back()};
  const int p1 = fig.panel(70, 40, 500, 200, tr, {0.0, 1.0}, "t", "p_surv");
  fig.line(p1, s.times, s.p_surv, "#1f77b4");
  const int p2 = fig.panel(70, 310, 500, 200, tr, {0.0, std::max(1e-12, s.p_cum.back()) * 1.05}, "t", "p_cum");
  fig.line(p2, s.times, s.p_cum, "#d62728");
  fig.save(path);
}

// First drop below `low`, then number of upward crossings of `high`.
struct SurvivalShape {
  double minimum = 1.0;
  double first_below = -1.0;
  int resurgences = 0;
  double floor_after_drop = 0.0; // minimum after the first drop
};

inline SurvivalShape survival_shape(const SurvivalSeries& s, double low = 0.05, double high = 0.1) {
  SurvivalShape sh;
  std::size_t k0 = s.p_surv.size();
  for (std::size_t k = 0; k < s.p_surv.size(); ++k) {
    sh.minimum = std::min(sh.minimum, s.p_surv[k]);
    if (k0 == s.p_surv.size() && s.p_surv[k] < low) k0 = k;
  }
  if (k0 == s.p_surv.size()) return sh;
  sh.first_below = s.times[k0];
  sh.floor_after_drop = s.p_surv[k0];
  bool above = false;
  for (std::size_t k = k0; k < s.p_surv.size(); ++k) {
    sh.floor_after_drop = std::min(sh.floor_after_drop, s.p_surv[k]);
    if (!above && s.p_surv[k] > high) {
      above = true;
      ++sh.resurgences;
    } else if (above && s.p_surv[k] < low) {
      above = false;
    }
  }
  return sh;
}

inline void run_survival(const ExperimentConfig& c, RunContext& ctx) {
  const ChainParams params = c.chain();
  const SparseOperator h = ctx.timed("build", [&] { return build_hamiltonian(params); });
  auto& d = ctx.derived();
  const bool chimera = c.pattern.find('*') != std::string::npos;
  std::optional<BiorthogonalSystem> sys;
  if (c.path == "spectral" || chimera || c.pairing == "biorthogonal")
    sys = ctx.timed("eigensystem", [&] { return solve_biorthogonal(h); });
  if (sys) d["defective_clusters"] = sys->defective_cluster_count();

  StateVector psi0;
  if (chimera) {
    const auto sel = ctx.timed("select", [&] { return select_chimera_initial(*sys, c.side == "left", c.pattern, c.thresholds); });
    Json ranked = Json::array();
    for (const auto& r : sel.ranked)
      ranked.push_back({{"index", r.index}, {"eigenvalue", r.eigenvalue}, {"score", r.score}, {"labels", r.labels}});
    d["candidates"] = ranked;
    d["side"] = c.side;
    if (sel.found) {
      psi0 = sel.state;
      d["initial_state"] = {{"index", sel.best.index}, {"eigenvalue", sel.best.eigenvalue}, {"labels", sel.best.labels},
                            {"match", "pattern"}};
    } else if (c.on_no_match == "best" && !sel.ranked.empty()) {
      const auto& b = sel.ranked.front();
      const StateVector v = c.side == "left" ? sys->left_vector(b.index) : sys->right_vector(b.index);
      psi0 = v / v.norm();
      d["initial_state"] = {{"index", b.index}, {"eigenvalue", b.eigenvalue}, {"labels", b.labels},
                            {"match", "closest_score"}};
    } else {
      std::ostringstream msg;
      msg << "no " << c.side << " eigenvector matches pattern " << c.pattern << "; best scores:";
      for (const auto& r : sel.ranked) msg << ' ' << r.labels << '=' << r.score;
      throw RequestError(msg.str());
    }
  } else {
    try {
      psi0 = build_product_state(c.pattern);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    d["initial_state"] = {{"pattern", c.pattern}};
  }

  const Pairing pairing = c.pairing == "transpose" ? Pairing::transpose : Pairing::biorthogonal;
  const bool spectral = c.path == "spectral";
  const BiorthogonalSystem* sp = sys ? &*sys : nullptr;
  if (pairing == Pairing::biorthogonal && (!sp || sp->defective()))
    throw NumericalError("biorthogonal pairing needs a non-defective eigensystem; use pairing = transpose");
  const SurvivalSeries s = ctx.timed("propagate", [&] { return survival(h, sp, psi0, c.grid, pairing, spectral); });
  d["pairing"] = pairing_name(pairing);
  d["path"] = path_name(s.info.path);
  d["fell_back"] = s.info.fell_back;
  if (s.info.fell_back) d["fallback_reason"] = s.info.note;
  if (s.info.path == PropagationPath::direct) {
    d["direct_dt"] = s.info.dt;
    d["direct_refinements"] = s.info.refinements;
    d["direct_refinement_change"] = s.info.refinement_change;
  }
  d["self_orthogonal"] = s.self_orthogonal;
  d["window"] = {0.0, c.grid.t_end};
  d["samples"] = c.grid.samples;
  const SurvivalShape shape = survival_shape(s);
  d["shape"] = {{"minimum", shape.minimum},
                {"first_below_0.05", shape.first_below},
                {"resurgences_above_0.1", shape.resurgences},
                {"floor_after_drop", shape.floor_after_drop},
                {"p_cum_end", s.p_cum.back()}};

  CsvWriter out(ctx.file("survival.csv"), {"t", "p_surv", "p_cum"});
  for (std::size_t k = 0; k < s.times.size(); ++k) out.row(s.times[k], s.p_surv[k], s.p_cum[k]);
  write_survival_svg(ctx.file("survival.svg"), s, "survival " + c.pattern + " (" + pairing_name(pairing) + ")");

  // the other pairing, reported when it differs
  if (sp && !sp->defective()) {
    const Pairing other = pairing == Pairing::transpose ? Pairing::biorthogonal : Pairing::transpose;
    const SurvivalSeries a = ctx.timed("propagate_alternative", [&] { return survival(h, sp, psi0, c.grid, other, spectral); });
    double diff = 0.0;
    for (std::size_t k = 0; k < a.p_surv.size(); ++k) diff = std::max(diff, std::abs(a.p_surv[k] - s.p_surv[k]));
    d["alternative"] = {{"pairing", pairing_name(other)}, {"max_difference", diff}};
    if (diff > 1e-6) {
      CsvWriter alt(ctx.file(std::string("survival_") + pairing_name(other) + ".csv"), {"t", "p_surv", "p_cum"});
      for (std::size_t k = 0; k < a.times.size(); ++k) alt.row(a.times[k], a.p_surv[k], a.p_cum[k]);
    }
  }
}

// ---------------------------------------------------------------- classical

inline void run_classical(const ExperimentConfig& c, RunContext& ctx) {
  auto& d = ctx.derived();
  const bool sweep = c.seeds.size() > 1;
  std::optional<CsvWriter> summary;
  if (sweep)
    summary.emplace(ctx.file("seeds.csv"),
                    std::vector<std::string>{"seed", "coherent_block", "incoherent_block", "chimera", "max_entropy"});
  Json per_seed = Json::array();
  for (std::uint64_t seed : c.seeds) {
    const ChimeraSnapshot s = ctx.timed("seed_" + std::to_string(seed), [&] {
      return chimera_snapshot(c.classical, seed, c.t_end_classical, c.dt_classical, c.n_res, c.radius);
    });
    const auto lo = longest_circular_run(s.entropy, [](double x) { return x < 0.3; });
    const auto hi = longest_circular_run(s.entropy, [](double x) { return x > 1.5; });
    const bool chim = has_chimera_blocks(s.entropy);
    const double mx = *std::max_element(s.entropy.begin(), s.entropy.end());
    per_seed.push_back({{"seed", seed}, {"coherent_block", lo.second}, {"incoherent_block", hi.second}, {"chimera", chim}});
    if (summary) summary->row(seed, lo.second, hi.second, int(chim), mx);
    const std::string stem = sweep ? "snapshot_seed" + std::to_string(seed) : "snapshot";
    CsvWriter out(ctx.file(stem + ".csv"), {"i", "theta", "s_loc"});
    for (std::size_t i = 0; i < s.phases.size(); ++i) out.row(i + 1, s.phases[i], s.entropy[i]);
    if (!sweep || seed == c.seeds.front()) {
      std::vector<double> idx;
      for (std::size_t i = 0; i < s.phases.size(); ++i) idx.push_back(double(i + 1));
      svg::Figure fig(620, 560, "classical chain, seed " + std::to_string(seed) + ", t = " + fmt17(s.t_end));
      const svg::Range xr{0.0, double(s.phases.size() + 1)};
      const int p1 = fig.panel(70, 40, 500, 200, xr, {-std::numbers::pi, std::numbers::pi}, "i", "theta_i");
      fig.points(p1, idx, s.phases, "#1f77b4", 1.8);
      const int p2 = fig.panel(70, 310, 500, 200, xr, {0.0, std::log(double(std::min(c.n_res, 2 * c.radius + 1))) * 1.05},
                               "i", "S_loc");
      fig.line(p2, idx, s.entropy, "#d62728");
      fig.save(ctx.file(stem + ".svg"));
    }
  }
  d["seeds"] = per_seed;
  d["rng"] = "mt19937_64, uniform phases on [0, 2pi]";
  d["dt"] = c.dt_classical / std::abs(c.classical.nu == 0.0 ? 1.0 : c.classical.nu);
}

inline void run_experiment(const ExperimentConfig& c, RunContext& ctx) {
  if (c.kind == "eigenstate-report") run_eigenstate_report(c, ctx);
  else if (c.kind == "scatter") run_scatter(c, ctx);
  else if (c.kind == "lsd") run_lsd(c, ctx);
  else if (c.kind == "survival") run_survival(c, ctx);
  else if (c.kind == "classical") run_classical(c, ctx);
  else throw ConfigError("unknown experiment kind '" + c.kind + "'");
}

} // namespace qchimera
