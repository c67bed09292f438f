#pragma once

// CSV tables and JSON run reports.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qds::cli {

/// 17 significant digits, '.' decimal separator.
std::string format_double(double v);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

/// Header row followed by one row per index of the equally long columns.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

/// Rows of already formatted fields.
void write_csv_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

struct Report {
  std::string scenario;
  std::string command;
  std::optional<std::string> verdict;
  nlohmann::ordered_json witnesses = nlohmann::ordered_json::object();
  std::vector<std::string> files;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string tool_version();

}  // namespace qds::cli
