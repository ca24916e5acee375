#include "harness/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace harness {

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::invalid_argument("CSV header must not be empty");
}

CsvTable& CsvTable::row() {
  if (!rows_.empty() && rows_.back().size() != header_.size())
    throw std::logic_error("CSV row has " + std::to_string(rows_.back().size()) +
                           " fields, header has " + std::to_string(header_.size()));
  rows_.emplace_back();
  rows_.back().reserve(header_.size());
  return *this;
}

CsvTable& CsvTable::add(const std::string& v) {
  if (rows_.empty()) throw std::logic_error("CsvTable::add before row()");
  rows_.back().push_back(v);
  return *this;
}

CsvTable& CsvTable::add(double v) { return add(format_number(v)); }
CsvTable& CsvTable::add(int v) { return add(std::to_string(v)); }
CsvTable& CsvTable::add(long v) { return add(std::to_string(v)); }
CsvTable& CsvTable::add(bool v) { return add(std::string(v ? "true" : "false")); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(fields[i]);
    }
    out += "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) {
    if (r.size() != header_.size()) throw std::logic_error("incomplete CSV row");
    line(r);
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_atomic(path, table.str());
}

}  // namespace harness
