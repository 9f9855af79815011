// Serialization helpers shared by the command-line driver: CSV rows with
// fixed formatting, tube-family JSON lines, simple SVG plots, a small
// key-value TOML reader for user phase files, and a directory lock.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cklab/phase_checks.hpp"
#include "cklab/tubes.hpp"

namespace cklab {

// %.12g formatting; byte-stable across runs for identical inputs.
std::string fmt(double v);
std::string fmt_vec(const Vec& v, char sep = ' ');

void write_text(const std::filesystem::path& path, const std::string& content);

std::string csv_row(const std::vector<std::string>& cells);
std::string report_csv_header(int n);
std::string report_csv_row(const ConditionReport& r);

std::string tube_family_jsonl(const TubeFamily& family);

// Log-log scatter plus fitted line; axes drawn from data ranges.
std::string svg_loglog(const std::vector<double>& x, const std::vector<double>& y,
                       const std::string& x_label, const std::string& y_label);
// Plain polyline plot of a traced curve projection.
std::string svg_polyline(const std::vector<double>& x, const std::vector<double>& y,
                         const std::string& x_label, const std::string& y_label);

// Flat key-value view of a TOML subset: sections, strings, numbers, booleans
// and one-line arrays (kept as raw text). Keys are "section.key".
std::map<std::string, std::string> read_toml(const std::filesystem::path& path);
std::vector<double> parse_number_list(const std::string& raw);

// "2^-6" or a plain decimal.
double parse_scale(const std::string& s);

// Polynomial user phase from a TOML file: n, boxes, origins and a term table
// "terms = [[coeff, e_x..., e_t, e_xi...], ...]"; optionally a named built-in
// "base" with polynomial diffeo tables instead of raw terms.
PhaseSpec load_user_phase(const std::filesystem::path& path);

PhaseSpec phase_by_name(const std::string& name, int n);

// Creates <dir>/.lock exclusively; removed on destruction.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path file_;
};

}  // namespace cklab
