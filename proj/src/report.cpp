#include "qds/report.hpp"

#include "qds/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace qds::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void write_row(std::ofstream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_field(fields[i]);
  }
  out << "\r\n";
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw InvalidInput("write_csv: header and column count differ");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw InvalidInput("write_csv: columns differ in length");
  }
  std::ofstream out = open_out(path);
  write_row(out, header);
  std::vector<std::string> fields(columns.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) fields[c] = format_double(columns[c][r]);
    write_row(out, fields);
  }
}

void write_csv_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_out(path);
  write_row(out, header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw InvalidInput("write_csv_rows: row width differs from header");
    write_row(out, r);
  }
}

std::string tool_version() { return QDS_VERSION; }

nlohmann::ordered_json Report::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["command"] = command;
  if (verdict) j["verdict"] = *verdict;
  j["witnesses"] = witnesses;
  j["files"] = files;
  j["tool_version"] = tool_version();
  j["seed"] = seed;
  return j;
}

void Report::write(const std::filesystem::path& path) const {
  std::ofstream out = open_out(path);
  out << to_json().dump(2) << '\n';
}

}  // namespace qds::cli
