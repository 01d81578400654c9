#pragma once

// File formats: CSV tables, static SVG plots, eigensystem dumps and
// external state-vector files.

#include "qchimera/eigensystem.hpp"
#include "qchimera/errors.hpp"
#include "qchimera/spin_ops.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qchimera {

inline constexpr const char* kVersion = "0.1.0";

// Shortest text that reads back to the same double.
inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path), path_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row_strings(header);
  }

  template <class... T>
  void row(const T&... v) {
    std::vector<std::string> cells{cell(v)...};
    row_strings(cells);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }

  const std::filesystem::path& path() const { return path_; }

private:
  static std::string cell(double x) { return fmt17(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
  static std::enable_if_t<std::is_integral_v<I>, std::string> cell(I i) { return std::to_string(i); }

  std::ofstream out_;
  std::filesystem::path path_;
};

// Minimal static SVG plots.
namespace svg {

struct Range {
  double lo = 0.0, hi = 1.0;
  static Range of(const std::vector<double>& v, double pad = 0.05) {
    if (v.empty()) return {};
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double lo = *mn, hi = *mx;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double p = (hi - lo) * pad;
    return {lo - p, hi + p};
  }
};

inline std::string color_map(double t) {
  t = std::clamp(t, 0.0, 1.0);
  // dark blue -> green -> yellow
  const int r = static_cast<int>(std::lround(255 * std::clamp(2.0 * t - 1.0, 0.0, 1.0)));
  const int g = static_cast<int>(std::lround(40 + 200 * t));
  const int b = static_cast<int>(std::lround(120 * (1.0 - t)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

class Figure {
public:
  Figure(int width, int height, std::string title) : w_(width), h_(height) {
    body_ << "<text x='" << width / 2 << "' y='18' text-anchor='middle' font-size='14'>" << escape(title)
          << "</text>\n";
  }

  // Axes box of a panel; returns its index.
  int panel(double x0, double y0, double pw, double ph, Range xr, Range yr, const std::string& xlabel,
            const std::string& ylabel) {
    panels_.push_back({x0, y0, pw, ph, xr, yr});
    body_ << "<rect x='" << x0 << "' y='" << y0 << "' width='" << pw << "' height='" << ph
          << "' fill='none' stroke='black'/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = xr.lo + (xr.hi - xr.lo) * k / 4.0, yv = yr.lo + (yr.hi - yr.lo) * k / 4.0;
      body_ << "<text x='" << x0 + pw * k / 4.0 << "' y='" << y0 + ph + 14 << "' text-anchor='middle' font-size='10'>"
            << tick(xv) << "</text>\n";
      body_ << "<text x='" << x0 - 4 << "' y='" << y0 + ph - ph * k / 4.0 + 3
            << "' text-anchor='end' font-size='10'>" << tick(yv) << "</text>\n";
    }
    body_ << "<text x='" << x0 + pw / 2 << "' y='" << y0 + ph + 30 << "' text-anchor='middle' font-size='12'>"
          << escape(xlabel) << "</text>\n";
    body_ << "<text transform='translate(" << x0 - 38 << "," << y0 + ph / 2
          << ") rotate(-90)' text-anchor='middle' font-size='12'>" << escape(ylabel) << "</text>\n";
    return static_cast<int>(panels_.size()) - 1;
  }

  void line(int p, const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
            double width = 1.2) {
    body_ << "<polyline fill='none' stroke='" << color << "' stroke-width='" << width << "' points='";
    for (std::size_t k = 0; k < x.size() && k < y.size(); ++k) body_ << px(p, x[k]) << ',' << py(p, y[k]) << ' ';
    body_ << "'/>\n";
  }

  void points(int p, const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
              double r = 2.0) {
    for (std::size_t k = 0; k < x.size() && k < y.size(); ++k)
      body_ << "<circle cx='" << px(p, x[k]) << "' cy='" << py(p, y[k]) << "' r='" << r << "' fill='" << color
            << "' fill-opacity='0.7'/>\n";
  }

  // Bars over [left_k, right_k] from 0 to height_k.
  void bars(int p, const std::vector<double>& left, const std::vector<double>& right, const std::vector<double>& height,
            const std::string& color) {
    for (std::size_t k = 0; k < height.size(); ++k) {
      const double x0 = px(p, left[k]), x1 = px(p, right[k]);
      const double y0 = py(p, 0.0), y1 = py(p, height[k]);
      body_ << "<rect x='" << std::min(x0, x1) << "' y='" << std::min(y0, y1) << "' width='" << std::abs(x1 - x0)
            << "' height='" << std::abs(y1 - y0) << "' fill='" << color << "' fill-opacity='0.6' stroke='" << color
            << "'/>\n";
    }
  }

  // Cell (x0..x1, y0..y1) in data coordinates filled by value in [0, 1].
  void cell(int p, double x0, double x1, double y0, double y1, double value) {
    const double a = px(p, x0), b = px(p, x1), c = py(p, y0), d = py(p, y1);
    body_ << "<rect x='" << std::min(a, b) << "' y='" << std::min(c, d) << "' width='" << std::abs(b - a) + 0.3
          << "' height='" << std::abs(d - c) + 0.3 << "' fill='" << color_map(value) << "'/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 11) {
    body_ << "<text x='" << x << "' y='" << y << "' font-size='" << size << "'>" << escape(s) << "</text>\n";
  }

  void legend(int p, int slot, const std::string& label, const std::string& color) {
    const auto& q = panels_[static_cast<std::size_t>(p)];
    const double y = q.y0 + 14 + 14 * slot;
    body_ << "<line x1='" << q.x0 + q.w - 120 << "' y1='" << y - 4 << "' x2='" << q.x0 + q.w - 100 << "' y2='"
          << y - 4 << "' stroke='" << color << "' stroke-width='2'/>\n";
    text(q.x0 + q.w - 96, y, label, 10);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w_ << "' height='" << h_ << "' font-family='sans-serif'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << body_.str() << "</svg>\n";
  }

private:
  struct Panel {
    double x0, y0, w, h;
    Range xr, yr;
  };

  double px(int p, double x) const {
    const auto& q = panels_[static_cast<std::size_t>(p)];
    return q.x0 + (x - q.xr.lo) / (q.xr.hi - q.xr.lo) * q.w;
  }
  double py(int p, double y) const {
    const auto& q = panels_[static_cast<std::size_t>(p)];
    return q.y0 + q.h - (std::clamp(y, q.yr.lo, q.yr.hi) - q.yr.lo) / (q.yr.hi - q.yr.lo) * q.h;
  }
  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
  }
  static std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }

  int w_, h_;
  std::ostringstream body_;
  std::vector<Panel> panels_;
};

} // namespace svg

// JSON header (schema, eigenvalues as 17-digit strings, clusters, flags)
// plus the right and left vectors as raw little-endian doubles in a
// sidecar file `<path>.bin`, right block first, column-major.
inline constexpr int kSystemSchema = 1;

inline void write_system(const std::filesystem::path& path, const BiorthogonalSystem& sys) {
  nlohmann::json j;
  j["schema"] = "qchimera.biorthogonal_system";
  j["schema_version"] = kSystemSchema;
  j["sites"] = sys.sites();
  j["dimension"] = sys.dimension();
  j["orientation"] = orientation_name(sys.spectrum.orientation);
  j["cluster_tolerance"] = fmt17(sys.spectrum.tolerance);
  std::vector<std::string> vals;
  for (double v : sys.spectrum.values) vals.push_back(fmt17(v));
  j["eigenvalues"] = vals;
  j["seed"] = sys.spectrum.seed;
  auto bools = [](const std::vector<bool>& b) { return std::vector<int>(b.begin(), b.end()); };
  j["has_right"] = bools(sys.has_right);
  j["has_left"] = bools(sys.has_left);
  j["paired"] = bools(sys.paired);
  nlohmann::json clusters = nlohmann::json::array();
  for (std::size_t c = 0; c < sys.spectrum.clusters.size(); ++c) {
    const auto& cl = sys.spectrum.clusters[c];
    clusters.push_back({{"begin", cl.begin},
                        {"end", cl.end},
                        {"value", fmt17(cl.value)},
                        {"defective", bool(sys.cluster_defective[c])},
                        {"pairing_condition", fmt17(sys.pairing_condition[c])}});
  }
  j["clusters"] = clusters;
  const std::string bin = path.filename().string() + ".bin";
  j["vectors_file"] = bin;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
  std::ofstream vb(path.parent_path() / bin, std::ios::binary);
  vb.write(reinterpret_cast<const char*>(sys.right.data()), static_cast<std::streamsize>(sys.right.size() * 8));
  vb.write(reinterpret_cast<const char*>(sys.left.data()), static_cast<std::streamsize>(sys.left.size() * 8));
  if (!vb) throw std::runtime_error("cannot write vectors of " + path.string());
}

inline BiorthogonalSystem read_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open system file " + path.string(), 0);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestionError(std::string("malformed system JSON: ") + e.what(), 0);
  }
  if (j.value("schema", "") != "qchimera.biorthogonal_system" || j.value("schema_version", 0) != kSystemSchema)
    throw IngestionError("unsupported system schema in " + path.string(), 0);
  BiorthogonalSystem sys;
  auto& sp = sys.spectrum;
  sp.sites = j.at("sites");
  const std::string o = j.at("orientation");
  sp.orientation = o == "raising" ? Orientation::raising : o == "lowering" ? Orientation::lowering : Orientation::diagonal;
  sp.tolerance = std::stod(j.at("cluster_tolerance").get<std::string>());
  for (const auto& v : j.at("eigenvalues")) sp.values.push_back(std::stod(v.get<std::string>()));
  sp.seed = j.at("seed").get<std::vector<std::uint32_t>>();
  auto bools = [&](const char* key) {
    const auto v = j.at(key).get<std::vector<int>>();
    return std::vector<bool>(v.begin(), v.end());
  };
  sys.has_right = bools("has_right");
  sys.has_left = bools("has_left");
  sys.paired = bools("paired");
  sp.cluster_of.resize(sp.values.size());
  for (const auto& c : j.at("clusters")) {
    GradedSpectrum::Cluster cl{c.at("begin"), c.at("end"), std::stod(c.at("value").get<std::string>())};
    for (std::size_t n = cl.begin; n < cl.end; ++n) sp.cluster_of[n] = sp.clusters.size();
    sp.clusters.push_back(cl);
    sys.cluster_defective.push_back(c.at("defective").get<bool>());
    sys.pairing_condition.push_back(std::stod(c.at("pairing_condition").get<std::string>()));
  }
  const Eigen::Index dim = j.at("dimension");
  if (static_cast<std::size_t>(dim) != sp.values.size()) throw IngestionError("dimension does not match eigenvalue count", 0);
  sys.right.resize(dim, dim);
  sys.left.resize(dim, dim);
  std::ifstream vb(path.parent_path() / j.at("vectors_file").get<std::string>(), std::ios::binary);
  vb.read(reinterpret_cast<char*>(sys.right.data()), static_cast<std::streamsize>(sys.right.size() * 8));
  vb.read(reinterpret_cast<char*>(sys.left.data()), static_cast<std::streamsize>(sys.left.size() * 8));
  if (!vb) throw IngestionError("truncated vector file for " + path.string(), 0);
  return sys;
}

// State vectors in text form:
//   sites N
//   <2^N real amplitudes>            or
//   <2^N pairs "re im">              (one state per line)
// Blank lines and lines starting with '#' are ignored.
inline std::vector<StateVector> read_state_vectors(std::istream& in) {
  std::vector<StateVector> out;
  std::string line;
  std::size_t no = 0;
  int sites = -1;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    if (sites < 0) {
      std::string key;
      if (!(ss >> key >> sites) || key != "sites" || sites < 1 || sites > kMaxSites)
        throw IngestionError("expected header 'sites N' with 1 <= N <= " + std::to_string(kMaxSites), no);
      dim = basis_dimension(sites);
      continue;
    }
    std::vector<double> nums;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        nums.push_back(v);
      } catch (const std::exception&) {
        throw IngestionError("not a finite number: '" + tok + "'", no);
      }
    }
    StateVector v(static_cast<Eigen::Index>(dim));
    if (nums.size() == dim) {
      for (std::size_t k = 0; k < dim; ++k) v(static_cast<Eigen::Index>(k)) = nums[k];
    } else if (nums.size() == 2 * dim) {
      for (std::size_t k = 0; k < dim; ++k) v(static_cast<Eigen::Index>(k)) = Complex{nums[2 * k], nums[2 * k + 1]};
    } else {
      throw IngestionError("expected " + std::to_string(dim) + " real or " + std::to_string(2 * dim) +
                               " interleaved complex amplitudes, got " + std::to_string(nums.size()),
                           no);
    }
    if (v.norm() == 0.0) throw IngestionError("zero state vector", no);
    out.push_back(std::move(v));
  }
  if (sites < 0) throw IngestionError("missing 'sites N' header", no);
  return out;
}

inline std::vector<StateVector> read_state_vectors_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open vectors file " + path.string(), 0);
  return read_state_vectors(in);
}

} // namespace qchimera
