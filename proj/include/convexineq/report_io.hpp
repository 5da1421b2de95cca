#ifndef CONVEXINEQ_REPORT_IO_HPP
#define CONVEXINEQ_REPORT_IO_HPP

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "convexineq/errors.hpp"
#include "convexineq/inequality_checks.hpp"

#ifndef CONVEXINEQ_VERSION
#define CONVEXINEQ_VERSION "0.1.0"
#endif

namespace convexineq::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

/// Hash of the canonical (sorted-key, compact) dump.
inline std::string config_hash(const json& config) { return sha256_hex(config.dump()); }

/// Finite doubles as numbers, anything else as null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const InequalityReport& r) {
  json j;
  j["inequality_id"] = to_string(r.id);
  j["lhs"] = number(r.lhs);
  j["lhs_err"] = number(r.lhs_err);
  j["rhs"] = number(r.rhs);
  j["rhs_err"] = number(r.rhs_err);
  j["ratio"] = number(r.ratio);
  j["verdict"] = to_string(r.verdict);
  j["config_hash"] = r.provenance.config_hash;
  j["seed"] = r.provenance.seed;
  j["method"] = r.provenance.method;
  j["label"] = r.label;
  j["parameter"] = number(r.parameter);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

/// Shortest round-trip representation.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline std::string csv_header(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

inline std::string reports_csv(const std::vector<InequalityReport>& rs, const std::string& hash, std::uint64_t seed) {
  std::ostringstream os;
  os << csv_header(hash, seed);
  os << "inequality_id,label,parameter,method,lhs,lhs_err,rhs,rhs_err,ratio,verdict\n";
  for (const auto& r : rs) {
    os << to_string(r.id) << ",\"" << r.label << "\"," << fmt(r.parameter) << ',' << r.provenance.method << ','
       << fmt(r.lhs) << ',' << fmt(r.lhs_err) << ',' << fmt(r.rhs) << ',' << fmt(r.rhs_err) << ',' << fmt(r.ratio)
       << ',' << to_string(r.verdict) << '\n';
  }
  return os.str();
}

inline std::string reports_jsonl(const std::vector<InequalityReport>& rs) {
  std::string out;
  for (const auto& r : rs) out += to_json(r).dump() + "\n";
  return out;
}

/// Files staged in memory and committed together by temp-file rename.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  std::vector<std::string> names() const {
    std::vector<std::string> v;
    for (const auto& f : files_) v.push_back(f.first);
    return v;
  }

  /// Writes every file to a temporary name, then renames all of them.
  std::vector<fs::path> commit() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
      for (const auto& [name, content] : files_) {
        const fs::path final_path = dir_ / name;
        const fs::path tmp = dir_ / (name + ".tmp");
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) throw Error("cannot write " + tmp.string());
        staged.emplace_back(tmp, final_path);
      }
    } catch (...) {
      for (const auto& s : staged) fs::remove(s.first, ec);
      throw;
    }
    std::vector<fs::path> written;
    for (const auto& [tmp, final_path] : staged) {
      fs::rename(tmp, final_path);
      written.push_back(final_path);
    }
    return written;
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

/// Manifest recording the effective configuration; it is itself a valid config.
inline json manifest(const std::string& command, const json& config, const std::string& hash, std::uint64_t seed,
                     const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["config_hash"] = hash;
  m["seed"] = seed;
  m["artifact_version"] = CONVEXINEQ_VERSION;
  m["outputs"] = outputs;
  return m;
}

}  // namespace convexineq::io

#endif  // CONVEXINEQ_REPORT_IO_HPP
