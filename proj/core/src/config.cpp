#include "ald/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace ald {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "metric.name", "metric.n",
      "field.name", "field.params.E0", "field.params.B0", "field.params.gradient",
      "field.params.axis",
      "dist.kind", "dist.center_rapidity", "dist.sigma", "dist.alpha", "dist.r_cut",
      "dist.N", "dist.seed", "dist.ensemble", "dist.transport_nodes", "dist.nodes",
      "run.T", "run.tol", "run.output_dir", "run.seed", "run.mode", "run.outputs",
      "run.L0", "run.trajectory",
      "bounds.C", "bounds.C2", "bounds.C3", "bounds.B2", "bounds.B3",
      "bounds.K", "bounds.K2", "bounds.D2",
      "hyp.E_min", "hyp.alpha_max", "hyp.theta", "hyp.adiabatic",
      "scaling.alphas", "scaling.energies", "scaling.alpha_ref", "scaling.energy_ref",
      "scaling.full_grid", "scaling.threads",
  };
  return keys;
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().count(key))
      throw ConfigError("unknown config key '" + key + "'");
    cfg.kv_[key] = value;
  }
  return cfg;
}

std::string Config::get_string(const std::string& key, const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + it->second + "'");
  }
}

int Config::get_int(const std::string& key, int dflt) const {
  const double v = get_double(key, static_cast<double>(dflt));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config key '" + key + "': expected an integer");
  return i;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an unsigned integer");
  }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean");
}

std::vector<double> Config::get_list(const std::string& key, std::vector<double> dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  std::string v = trim(it->second);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ConfigError("config key '" + key + "': expected [a, b, ...]");
  v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': bad list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace ald
