#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "daps/types.hpp"

namespace daps {

/// Sectioned key-value text:
///
///   # comment
///   [sampler]
///   n_anneal = 200
///   eta = 1e-3
///   weights = [0.5, 0.5]
///
/// Keys are addressed as "section.key". Scalars are kept as text and typed
/// on access; vectors are bracketed comma lists.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& path) const;
  void set(const std::string& path, const std::string& value);
  void erase(const std::string& path);

  std::string get_string(const std::string& path) const;
  double get_double(const std::string& path) const;
  std::int64_t get_int(const std::string& path) const;
  std::uint64_t get_u64(const std::string& path) const;
  bool get_bool(const std::string& path) const;
  Vec get_vec(const std::string& path) const;

  std::string get_string(const std::string& path, const std::string& fallback) const;
  double get_double(const std::string& path, double fallback) const;
  std::int64_t get_int(const std::string& path, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& path, std::uint64_t fallback) const;
  bool get_bool(const std::string& path, bool fallback) const;

  /// Keys never read by a getter since construction.
  std::vector<std::string> unread() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string to_string() const;

 private:
  const std::string& raw(const std::string& path) const;
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> read_;
};

/// Decimal text with 17 significant digits ("inf"/"-inf"/"nan" for
/// non-finite values).
std::string format_double(double v);
std::string format_vec(const Vec& v);

}  // namespace daps
