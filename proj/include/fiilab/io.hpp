#pragma once

// Result persistence: CSV tables, JSON documents, schema checks, atomic
// writes and SHA-256 digests for the run manifest.

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fiilab/error.hpp"
#include "json.hpp"

namespace fiilab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

// 17 significant digits, '.' decimal separator, locale independent.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v) { cells_.push_back(csv_number(v)); return *this; }
    Row& operator<<(long long v) { cells_.push_back(std::to_string(v)); return *this; }
    Row& operator<<(const std::string& s) { cells_.push_back(csv_field(s)); return *this; }
    Row& operator<<(const char* s) { return *this << std::string(s); }

   private:
    friend class CsvTable;
    std::vector<std::string> cells_;
  };

  Row& row() { return rows_.emplace_back(); }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }

  // Throws unless every row has exactly one cell per column.
  void validate(const std::vector<std::string>& expected_header) const {
    if (header_ != expected_header) throw Error("CSV header does not match its schema");
    for (std::size_t r = 0; r < rows_.size(); ++r)
      if (rows_[r].cells_.size() != header_.size())
        throw Error("CSV row " + std::to_string(r + 1) + " has " +
                    std::to_string(rows_[r].cells_.size()) + " cells, expected " +
                    std::to_string(header_.size()));
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) out += (k ? "," : "") + cells[k];
      out += "\r\n";
    };
    std::vector<std::string> h;
    for (const auto& c : header_) h.push_back(csv_field(c));
    line(h);
    for (const auto& r : rows_) line(r.cells_);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

// Minimal structural schema: required keys and their JSON types.
struct JsonField {
  std::string key;
  Json::value_t type;  // number_float also accepts integers and null (NaN)
};

inline bool json_type_matches(const Json& v, Json::value_t want) {
  switch (want) {
    case Json::value_t::number_float:
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
      return v.is_number() || v.is_null();
    default:
      return v.type() == want;
  }
}

inline void validate_json(const Json& doc, const std::vector<JsonField>& schema,
                          const std::string& what) {
  if (!doc.is_object()) throw Error(what + ": document must be an object");
  for (const auto& f : schema) {
    if (!doc.contains(f.key)) throw Error(what + ": missing key '" + f.key + "'");
    if (!json_type_matches(doc[f.key], f.type))
      throw Error(what + ": key '" + f.key + "' has the wrong type");
  }
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(f), {});
}

// Writes to a temporary sibling and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + tmp.string() + "'");
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    f.flush();
    if (!f) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct OutputFile {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

// Everything needed to rerun and to verify a run. Timestamps live only
// here; payload files never contain them, so their digests are stable.
class RunManifest {
 public:
  RunManifest(std::string command, std::string config_toml, unsigned long long seed)
      : command_(std::move(command)), config_(std::move(config_toml)), seed_(seed),
        started_(utc_timestamp()) {}

  // Schema-checks nothing itself; callers validate before handing over.
  const OutputFile& write(const std::filesystem::path& dir, const std::string& name,
                          const std::string& payload) {
    write_atomic(dir / name, payload);
    files_.push_back({name, sha256_hex(payload), payload.size()});
    return files_.back();
  }

  const std::vector<OutputFile>& files() const { return files_; }

  Json to_json(const std::string& status, const std::string& message = {}) const {
    Json j;
    j["schema"] = "fiilab.manifest/1";
    j["tool"] = "fiilab";
    j["version"] = kToolVersion;
    j["command"] = command_;
    j["master_seed"] = seed_;
    j["config"] = config_;
    j["config_sha256"] = sha256_hex(config_);
    j["started"] = started_;
    j["finished"] = utc_timestamp();
    j["status"] = status;
    if (!message.empty()) j["message"] = message;
    Json files = Json::array();
    for (const auto& f : files_)
      files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["files"] = files;
    return j;
  }

  void finish(const std::filesystem::path& dir, const std::string& status,
              const std::string& message = {}) const {
    write_atomic(dir / "manifest.json", to_json(status, message).dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string config_;
  unsigned long long seed_;
  std::string started_;
  std::vector<OutputFile> files_;
};

}  // namespace fiilab
