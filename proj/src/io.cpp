#include "cklab/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cklab {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt_vec(const Vec& v, char sep) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += fmt(v[i]);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << content;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

std::string report_csv_header(int n) {
  std::vector<std::string> cells;
  for (int i = 0; i + 1 < n; ++i) cells.push_back("x" + std::to_string(i));
  cells.push_back("t");
  for (int i = 0; i + 1 < n; ++i) cells.push_back("xi" + std::to_string(i));
  cells.insert(cells.end(),
               {"h1_sigma_min", "h2_det", "h2_posdef", "lambda_hat", "residual"});
  return csv_row(cells);
}

std::string report_csv_row(const ConditionReport& r) {
  std::vector<std::string> cells;
  for (int i = 0; i < r.x.size(); ++i) cells.push_back(fmt(r.x[i]));
  cells.push_back(fmt(r.t));
  for (int i = 0; i < r.xi.size(); ++i) cells.push_back(fmt(r.xi[i]));
  cells.push_back(fmt(r.h1_sigma_min));
  cells.push_back(fmt(r.h2_det));
  cells.push_back(r.h2_posdef ? "1" : "0");
  cells.push_back(fmt(r.bourgain_lambda_hat));
  cells.push_back(fmt(r.bourgain_residual));
  return csv_row(cells);
}

std::string tube_family_jsonl(const TubeFamily& family) {
  std::string out;
  for (const auto& mem : family.members) {
    out += "{\"xi\":[" + fmt_vec(mem.tube.param.xi, ',') + "],\"v\":[" +
           fmt_vec(mem.tube.param.v, ',') + "],\"delta\":" + fmt(mem.tube.delta) +
           ",\"shading\":[";
    for (size_t i = 0; i < mem.shading.intervals.size(); ++i) {
      if (i) out += ',';
      out += "[" + fmt(mem.shading.intervals[i].first) + "," +
             fmt(mem.shading.intervals[i].second) + "]";
    }
    out += "]}\n";
  }
  return out;
}

namespace {

struct PlotFrame {
  double x0, x1, y0, y1;
  static constexpr double W = 640, H = 420, ML = 70, MR = 20, MT = 20, MB = 50;
  double px(double x) const { return ML + (x - x0) / (x1 - x0 + 1e-300) * (W - ML - MR); }
  double py(double y) const { return H - MB - (y - y0) / (y1 - y0 + 1e-300) * (H - MT - MB); }
};

std::string svg_open_axes(const PlotFrame& f, const std::string& xl, const std::string& yl) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << PlotFrame::W << "\" height=\""
    << PlotFrame::H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x1)
    << "\" y2=\"" << f.py(f.y0) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x0)
    << "\" y2=\"" << f.py(f.y1) << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (PlotFrame::W / 2) << "\" y=\"" << (PlotFrame::H - 12)
    << "\" text-anchor=\"middle\" font-size=\"13\">" << xl << "</text>\n";
  s << "<text x=\"16\" y=\"" << (PlotFrame::H / 2)
    << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
    << (PlotFrame::H / 2) << ")\">" << yl << "</text>\n";
  return s.str();
}

PlotFrame frame_of(const std::vector<double>& x, const std::vector<double>& y) {
  PlotFrame f{x[0], x[0], y[0], y[0]};
  for (double v : x) f.x0 = std::min(f.x0, v), f.x1 = std::max(f.x1, v);
  for (double v : y) f.y0 = std::min(f.y0, v), f.y1 = std::max(f.y1, v);
  double padx = 0.05 * (f.x1 - f.x0 + 1e-12), pady = 0.05 * (f.y1 - f.y0 + 1e-12);
  f.x0 -= padx, f.x1 += padx, f.y0 -= pady, f.y1 += pady;
  return f;
}

}  // namespace

std::string svg_loglog(const std::vector<double>& x, const std::vector<double>& y,
                       const std::string& x_label, const std::string& y_label) {
  std::vector<double> lx, ly;
  for (double v : x) lx.push_back(std::log10(std::max(v, 1e-300)));
  for (double v : y) ly.push_back(std::log10(std::max(v, 1e-300)));
  PlotFrame f = frame_of(lx, ly);
  std::ostringstream s;
  s << svg_open_axes(f, "log10 " + x_label, "log10 " + y_label);
  for (size_t i = 0; i < lx.size(); ++i)
    s << "<circle cx=\"" << f.px(lx[i]) << "\" cy=\"" << f.py(ly[i])
      << "\" r=\"3\" fill=\"steelblue\"/>\n";
  LineFit fit = fit_line(lx, ly);
  s << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(fit.intercept + fit.slope * f.x0)
    << "\" x2=\"" << f.px(f.x1) << "\" y2=\"" << f.py(fit.intercept + fit.slope * f.x1)
    << "\" stroke=\"firebrick\"/>\n";
  s << "<text x=\"" << (PlotFrame::W - 30) << "\" y=\"30\" text-anchor=\"end\" font-size=\"12\">"
    << "slope " << fmt(fit.slope) << "</text>\n</svg>\n";
  return s.str();
}

std::string svg_polyline(const std::vector<double>& x, const std::vector<double>& y,
                         const std::string& x_label, const std::string& y_label) {
  PlotFrame f = frame_of(x, y);
  std::ostringstream s;
  s << svg_open_axes(f, x_label, y_label);
  s << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
  for (size_t i = 0; i < x.size(); ++i) s << f.px(x[i]) << "," << f.py(y[i]) << " ";
  s << "\"/>\n</svg>\n";
  return s.str();
}

std::map<std::string, std::string> read_toml(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read: " + path.string());
  std::map<std::string, std::string> out;
  std::string line, section;
  auto trim = [](std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("toml: bad line: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    // Multiline arrays: keep reading until the brackets balance.
    long depth = std::count(val.begin(), val.end(), '[') - std::count(val.begin(), val.end(), ']');
    while (depth > 0 && std::getline(f, line)) {
      size_t h2 = line.find('#');
      if (h2 != std::string::npos) line = line.substr(0, h2);
      val += " " + trim(line);
      depth = std::count(val.begin(), val.end(), '[') - std::count(val.begin(), val.end(), ']');
    }
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
      val = val.substr(1, val.size() - 2);
    out[section.empty() ? key : section + "." + key] = val;
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& raw) {
  std::vector<double> out;
  const char* p = raw.c_str();
  while (*p) {
    if (std::isdigit(static_cast<unsigned char>(*p)) || *p == '-' || *p == '+' || *p == '.') {
      char* end = nullptr;
      double v = std::strtod(p, &end);
      if (end == p) {
        ++p;
        continue;
      }
      out.push_back(v);
      p = end;
    } else {
      ++p;
    }
  }
  return out;
}

double parse_scale(const std::string& s) {
  size_t caret = s.find('^');
  if (caret != std::string::npos)
    return std::pow(std::stod(s.substr(0, caret)), std::stod(s.substr(caret + 1)));
  return std::stod(s);
}

namespace {

// Rows of a nested numeric array "[[...], [...], ...]".
std::vector<std::vector<double>> parse_number_rows(const std::string& raw) {
  std::vector<std::vector<double>> rows;
  size_t pos = raw.find('[', raw.find('[') + 1);
  while (pos != std::string::npos) {
    size_t end = raw.find(']', pos);
    if (end == std::string::npos) break;
    rows.push_back(parse_number_list(raw.substr(pos + 1, end - pos - 1)));
    pos = raw.find('[', end);
  }
  return rows;
}

std::string get(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("user phase: missing key " + key);
  return it->second;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

PolyMap poly_map_from_rows(int dim, const std::vector<std::vector<double>>& rows) {
  PolyMap map;
  map.dim = dim;
  map.components.resize(dim);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != dim + 2)
      throw std::runtime_error("user phase: diffeo row needs [component, coeff, exponents...]");
    int comp = static_cast<int>(std::lround(row[0]));
    if (comp < 0 || comp >= dim) throw std::runtime_error("user phase: bad diffeo component");
    PolyTerm term;
    term.coeff = row[1];
    for (int i = 0; i < dim; ++i) term.exps.push_back(static_cast<int>(std::lround(row[2 + i])));
    map.components[comp].push_back(term);
  }
  return map;
}

}  // namespace

PhaseSpec phase_by_name(const std::string& name, int n) {
  if (name == "rest") return PhaseSpec::rest(n);
  if (name == "br" || name == "bochner_riesz") return PhaseSpec::bochner_riesz(n);
  if (name == "worst") return PhaseSpec::worst();
  if (name == "tan") return PhaseSpec::tan_phase(n);
  throw std::runtime_error("unknown phase: " + name);
}

PhaseSpec load_user_phase(const std::filesystem::path& path) {
  auto kv = read_toml(path);
  const std::string type = get(kv, "phase.type");
  const int n = static_cast<int>(std::lround(std::stod(get(kv, "phase.n"))));
  if (type == "poly") {
    std::vector<PolyTerm> terms;
    for (const auto& row : parse_number_rows(get(kv, "phase.terms"))) {
      if (static_cast<int>(row.size()) != 2 * n)
        throw std::runtime_error("user phase: term rows need [coeff, exponents x..t..xi]");
      PolyTerm t;
      t.coeff = row[0];
      for (int i = 0; i < 2 * n - 1; ++i) t.exps.push_back(static_cast<int>(std::lround(row[1 + i])));
      terms.push_back(t);
    }
    Box bm(to_vec(parse_number_list(get(kv, "phase.box_m_lo"))),
           to_vec(parse_number_list(get(kv, "phase.box_m_hi"))));
    Box bs(to_vec(parse_number_list(get(kv, "phase.box_sigma_lo"))),
           to_vec(parse_number_list(get(kv, "phase.box_sigma_hi"))));
    Vec om = to_vec(parse_number_list(get(kv, "phase.origin_m")));
    Vec os = to_vec(parse_number_list(get(kv, "phase.origin_sigma")));
    return PhaseSpec::poly(n, terms, bm, bs, om, os);
  }
  if (type == "transformed") {
    PhaseSpec base = phase_by_name(get(kv, "phase.base"), n);
    PolyMap dx = PolyMap::identity(n), dxi = PolyMap::identity(n - 1);
    if (kv.count("diffeo_x.terms"))
      dx = poly_map_from_rows(n, parse_number_rows(kv.at("diffeo_x.terms")));
    if (kv.count("diffeo_xi.terms"))
      dxi = poly_map_from_rows(n - 1, parse_number_rows(kv.at("diffeo_xi.terms")));
    return PhaseSpec::transformed(base, dx, dxi);
  }
  throw std::runtime_error("user phase: unknown type " + type);
}

DirLock::DirLock(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  file_ = dir / ".lock";
  std::FILE* f = std::fopen(file_.c_str(), "wx");
  if (!f)
    throw std::runtime_error("output directory is locked by another run: " + dir.string());
  std::fclose(f);
}

DirLock::~DirLock() {
  std::error_code ec;
  std::filesystem::remove(file_, ec);
}

}  // namespace cklab
