#pragma once

#include "ald/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ald {

/// Flat dotted-key configuration: one `key = value` per line, `#` comments.
/// Lists are comma separated inside brackets: `scaling.alphas = [0.02, 0.04]`.
/// Unknown keys are rejected.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key, int dflt) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> dflt) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace ald
