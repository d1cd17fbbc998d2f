#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirtrunc/chain_trace.hpp"

namespace dirtrunc::harness {

namespace fs = std::filesystem;

/// Trace CSV name for chain j: chain_000.csv, chain_001.csv, ...
inline std::string chain_file_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chain_%03zu.csv", j);
  return buf;
}

/// Wall-clock sidecar for chain j: timing_000.csv, ...
inline std::string timing_file_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "timing_%03zu.csv", j);
  return buf;
}

/// Shortest text that reads back as the same double.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Columns step, pi_0..pi_{n-1}; step is 1-based. Contains no wall-clock
/// data so reruns with the same seed are byte-identical.
inline std::string trace_csv(const ChainTrace& trace) {
  std::string out = "step";
  for (std::size_t i = 0; i < trace.dimension(); ++i) out += ",pi_" + std::to_string(i);
  out += '\n';
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out += std::to_string(t + 1);
    for (double v : trace.row(t)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

/// Columns step, seconds_elapsed.
inline std::string timing_csv(const ChainTrace& trace) {
  std::string out = "step,seconds_elapsed\n";
  for (std::size_t t = 0; t < trace.size(); ++t)
    out += std::to_string(t + 1) + "," + format_double(trace.seconds()[t]) + "\n";
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_cell(const std::string& cell, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size())
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad number '" + cell + "'");
  return v;
}

}  // namespace detail

/// Reads a trace CSV and, when present, its timing sidecar. Without a
/// sidecar every timestamp is 0.
inline ChainTrace read_trace(const fs::path& csv, const fs::path& timing = {}) {
  std::istringstream in(read_text_file(csv));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv.string() + ": empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "step")
    throw std::runtime_error(csv.string() + ": expected header step,pi_0,...");
  const std::size_t n = header.size() - 1;
  for (std::size_t i = 0; i < n; ++i)
    if (header[i + 1] != "pi_" + std::to_string(i))
      throw std::runtime_error(csv.string() + ": unexpected column '" + header[i + 1] + "'");

  std::vector<double> samples;
  std::size_t rows = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != n + 1)
      throw std::runtime_error(csv.string() + ":" + std::to_string(lineno) + ": wrong column count");
    if (detail::parse_cell(cells[0], csv, lineno) != static_cast<double>(rows + 1))
      throw std::runtime_error(csv.string() + ":" + std::to_string(lineno) + ": steps must be 1, 2, ...");
    for (std::size_t i = 0; i < n; ++i) samples.push_back(detail::parse_cell(cells[i + 1], csv, lineno));
    ++rows;
  }

  std::vector<double> seconds(rows, 0.0);
  if (!timing.empty() && fs::exists(timing)) {
    std::istringstream tin(read_text_file(timing));
    std::getline(tin, line);
    if (line != "step,seconds_elapsed") throw std::runtime_error(timing.string() + ": bad header");
    std::size_t t = 0;
    lineno = 1;
    while (std::getline(tin, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto cells = detail::split_csv_line(line);
      if (cells.size() != 2 || t >= rows)
        throw std::runtime_error(timing.string() + ":" + std::to_string(lineno) + ": malformed row");
      seconds[t++] = detail::parse_cell(cells[1], timing, lineno);
    }
    if (t != rows) throw std::runtime_error(timing.string() + ": row count differs from trace");
  }
  return ChainTrace(n, std::move(samples), std::move(seconds));
}

/// Every chain_NNN.csv in `dir` in index order, with timing sidecars.
inline ChainEnsemble read_trace_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("no trace directory " + dir.string());
  const std::regex pattern("chain_([0-9]+)\\.csv");
  std::vector<std::pair<std::size_t, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.emplace_back(std::stoul(m[1].str()), entry.path());
  }
  if (found.empty()) throw std::runtime_error("no chain_*.csv files in " + dir.string());
  std::sort(found.begin(), found.end());
  std::vector<ChainTrace> chains;
  for (const auto& [j, path] : found) chains.push_back(read_trace(path, dir / timing_file_name(j)));
  return ChainEnsemble(std::move(chains));
}

}  // namespace dirtrunc::harness
