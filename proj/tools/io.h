#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

namespace spdekit::cli {

// "%.17g" so values round-trip and bytes do not depend on locale or stream
// state.
std::string FormatNumber(double x);

// One comment row carrying the config hash, one header row, then data.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& config_hash,
            const std::vector<std::string>& columns);

  struct Cell {
    Cell(double v) : text(FormatNumber(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long long v) : text(std::to_string(v)) {}
    Cell(unsigned long long v) : text(std::to_string(v)) {}
    Cell(bool v) : text(v ? "1" : "0") {}
    Cell(const char* v) : text(v) {}
    Cell(const std::string& v) : text(v) {}
    std::string text;
  };
  void Row(std::initializer_list<Cell> cells);
  void Row(const std::vector<Cell>& cells);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream os_;
  size_t columns_;
};

// Pretty JSON with a trailing newline. Throws ConfigInvalid when the file
// cannot be written.
void WriteJson(const std::string& path, const nlohmann::json& j);

// Creates the directory if needed. Throws ConfigInvalid.
void EnsureDirectory(const std::string& dir);

}  // namespace spdekit::cli
