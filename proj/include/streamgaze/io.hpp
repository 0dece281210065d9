#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamgaze/error.hpp"
#include "streamgaze/text.hpp"

namespace streamgaze::io {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary and renames, so an interrupted stage never
/// leaves a half-written artifact behind.
inline void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("short write on " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }
inline void write_json(const fs::path& path, const ordered_json& doc) { write_text(path, doc.dump(2) + "\n"); }

/// One JSON document per line.
inline std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename Json>
std::string to_jsonl(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

template <typename Json>
void write_jsonl(const fs::path& path, const std::vector<Json>& records) {
  write_text(path, to_jsonl(records));
}

/// Comma-delimited table with a header row. Blank lines and '#' comments skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
  bool has(const std::string& name) const { return column(name) >= 0; }
  int require(const std::string& name, const std::string& origin) const {
    int c = column(name);
    if (c < 0) throw DataError(origin + ": missing column '" + name + "'");
    return c;
  }
};

inline CsvTable parse_csv(const std::string& content, const std::string& origin) {
  CsvTable t;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = text::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    auto cells = text::split(line, ',');
    for (auto& c : cells) c = text::trim(c);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size())
        throw DataError(origin + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw DataError(origin + ": empty table");
  return t;
}

inline CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

inline double to_double(const std::string& cell, const std::string& origin) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError(origin + ": not a number: '" + cell + "'");
  }
}

inline bool to_flag(const std::string& cell, const std::string& origin) {
  std::string v = text::lower(cell);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw DataError(origin + ": not a flag: '" + cell + "'");
}

}  // namespace streamgaze::io
