#include "geowalk/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace geowalk::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_samples_csv(std::ostream& out, const Matrix& samples, Index n) {
  for (Index j = 0; j < n; ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
  for (Index i = 0; i < samples.rows(); ++i) {
    for (Index j = 0; j < samples.cols(); ++j)
      out << (j ? "," : "") << format_double(samples(i, j));
    out << '\n';
  }
}

void write_samples_csv(const std::string& path, const Matrix& samples, Index n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  write_samples_csv(out, samples, n);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

bool parse_double(std::string s, double& x) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<double> parse_row(const std::string& line, bool& ok) {
  std::vector<double> row;
  ok = true;
  for (const auto& c : split(line)) {
    double x;
    if (!parse_double(c, x)) {
      ok = false;
      return {};
    }
    row.push_back(x);
  }
  return row;
}

}  // namespace

Matrix read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  std::vector<std::vector<double>> rows;
  size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    bool ok;
    auto row = parse_row(line, ok);
    if (!ok) {
      if (first) {
        width = split(line).size();
        first = false;
        continue;
      }
      throw InputError(path + ": malformed row: " + line);
    }
    first = false;
    if (width == 0) width = row.size();
    if (row.size() != width) throw InputError(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < width; ++j) M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return M;
}

Vector read_vector_arg(const std::string& arg) {
  std::vector<double> vals;
  if (std::filesystem::exists(arg)) {
    const Matrix M = read_samples_csv(arg);
    if (M.rows() != 1) throw InputError(arg + ": expected exactly one row");
    return M.row(0).transpose();
  }
  bool ok;
  vals = parse_row(arg, ok);
  if (!ok || vals.empty())
    throw InputError("'" + arg + "' is neither a readable file nor a comma-separated vector");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

nlohmann::json stats_to_json(const ChainStats& s, bool include_timing) {
  auto qjson = [](const std::vector<double>& xs) {
    nlohmann::json j = nlohmann::json::object();
    const auto q = quantiles(xs);
    for (size_t k = 0; k < q.size(); ++k) j[format_double(kQuantileLevels[k])] = q[k];
    return j;
  };
  nlohmann::json j;
  j["accept_rate"] = s.accept_rate;
  j["fail_counts"] = {{"exit", s.fail_exit},
                      {"singular", s.fail_singular},
                      {"non_contraction", s.fail_non_contraction}};
  j["v_gamma_quantiles"] = qjson(s.v_gamma);
  j["log_ratio_quantiles"] = qjson(s.log_ratio);
  j["wall_time_s"] = include_timing ? nlohmann::json(s.wall_time_s) : nlohmann::json(nullptr);
  j["seed"] = s.seed;
  j["h"] = s.h;
  j["steps"] = s.steps;
  j["accepted"] = s.accepted;
  j["burn_in"] = s.burn_in;
  j["zero_acceptance_warning"] = s.zero_acceptance && s.steps > 0;
  return j;
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace geowalk::io
