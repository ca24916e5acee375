#ifndef LEIBENSON_HARNESS_CSV_HPP
#define LEIBENSON_HARNESS_CSV_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace harness {

/// RFC-4180 table: mandatory header, '.' decimal point, round-trip precision for numbers.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row();
  CsvTable& add(double v);
  CsvTable& add(int v);
  CsvTable& add(long v);
  CsvTable& add(bool v);
  CsvTable& add(const std::string& v);
  CsvTable& add(const char* v) { return add(std::string(v)); }

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string format_number(double v);
std::string csv_escape(const std::string& field);

/// Writes to a temporary sibling and renames it over the target.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace harness

#endif  // LEIBENSON_HARNESS_CSV_HPP
