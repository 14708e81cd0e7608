#include "io.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "spdekit/common.h"

namespace spdekit::cli {

std::string FormatNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& config_hash,
                     const std::vector<std::string>& columns)
    : path_(path), os_(path, std::ios::binary), columns_(columns.size()) {
  if (!os_) Throw(ErrorCode::kConfigInvalid, path + ": cannot write");
  os_ << "# config_hash=" << config_hash << '\n';
  for (size_t i = 0; i < columns.size(); ++i) {
    os_ << (i ? "," : "") << columns[i];
  }
  os_ << '\n';
}

void CsvWriter::Row(std::initializer_list<Cell> cells) {
  Row(std::vector<Cell>(cells));
}

void CsvWriter::Row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_) {
    Throw(ErrorCode::kConfigInvalid, path_ + ": row width mismatch");
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    os_ << (i ? "," : "") << cells[i].text;
  }
  os_ << '\n';
}

void WriteJson(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Throw(ErrorCode::kConfigInvalid, path + ": cannot write");
  os << j.dump(2) << '\n';
}

void EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    Throw(ErrorCode::kConfigInvalid, dir + ": cannot create output directory");
  }
}

}  // namespace spdekit::cli
