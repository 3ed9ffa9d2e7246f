#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>

#include "geowalk/types.hpp"
#include "geowalk/walk.hpp"

namespace geowalk::io {

// Shortest decimal that round-trips.
std::string format_double(double x);

void write_samples_csv(std::ostream& out, const Matrix& samples, Index n);
void write_samples_csv(const std::string& path, const Matrix& samples, Index n);
Matrix read_samples_csv(const std::string& path);

// Either a path to a one-row CSV file (optional header) or an inline
// comma-separated list.
Vector read_vector_arg(const std::string& arg);

// accept_rate, fail_counts, quantiles, wall_time_s (null unless timing), seed, h.
nlohmann::json stats_to_json(const ChainStats& s, bool include_timing);

std::string dump_json(const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace geowalk::io
