#include "boocap/pipeline/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "boocap/corpus/corpus.hpp"
#include "boocap/error.hpp"
#include "boocap/pipeline/artifacts.hpp"

namespace boocap::pipeline {

namespace {

// Defaults are sized for a laptop run on the synthetic corpus.
const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d{
      {"run.seed", "1"},
      {"run.jobs", "1"},
      {"paths.out", "out"},
      {"paths.instances", ""},
      {"paths.captions", ""},
      {"paths.detections", ""},
      {"paths.splits", ""},
      {"paths.lexicon", ""},
      {"corpus.source", "auto"},
      {"corpus.scenes", "700"},
      {"corpus.val_size", "100"},
      {"corpus.test_size", "100"},
      {"corpus.use_detections", "false"},
      {"corpus.conf_threshold", "0.5"},
      {"repr.spec", "frequency"},
      {"train.mode", "fixed"},
      {"train.embed_dim", "32"},
      {"train.hidden_dim", "64"},
      {"train.layers", "2"},
      {"train.max_epochs", "20"},
      {"train.batch_size", "25"},
      {"train.dropout", "0.2"},
      {"train.learning_rate", "0.004"},
      {"train.vocab_threshold", "2"},
      {"train.beta1", "0.9"},
      {"train.beta2", "0.999"},
      {"train.adam_eps", "1e-8"},
      {"train.clip_norm", "5"},
      {"train.init_scale", "0.08"},
      {"train.max_decode_len", "20"},
      {"train.conditioning", "hidden_init"},
      {"train.chunk_size", "16"},
      {"train.selection", "cider_d"},
      {"train.grid_batch_sizes", "50,100"},
      {"train.grid_dropouts", "0.2,0.7"},
      {"train.grid_learning_rates", "0.0001,0.0004"},
      {"eval.cider", "cider_d"},
      {"caption.split", "test"},
      {"knn.k", "5"},
      {"knn.references", "generated"},
      {"mask.heuristics", "size,frequency,distance,random"},
      {"mask.retentions", "1,0.75,0.5,0.25,one"},
      {"mask.seeds", ""},
      {"ablate.categories", ""},
  };
  return d;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("config key " + key + ": expected " + what + ", got '" + value + "'");
}

}  // namespace

Config::Config() : values_(defaults()) {}

Config Config::parse(std::string_view text) {
  Config cfg;
  std::string section;
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    auto name = trim(std::string_view(line).substr(0, eq));
    const auto key = section.empty() ? name : section + "." + name;
    if (seen.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + key + " already set on line " +
                        std::to_string(seen[key]));
    }
    seen[key] = line_no;
    cfg.set(key, trim(std::string_view(line).substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  return parse(corpus::read_file(path));
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long Config::get_int(const std::string& key) const {
  const auto& v = get(key);
  char* end = nullptr;
  errno = 0;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno) bad_value(key, v, "an integer");
  return x;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const auto& v = get(key);
  char* end = nullptr;
  errno = 0;
  const auto x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno) bad_value(key, v, "a non-negative integer");
  return x;
}

double Config::get_double(const std::string& key) const {
  const auto& v = get(key);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') bad_value(key, v, "a number");
  return x;
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::string_view v = get(key);
  while (!v.empty()) {
    const auto comma = v.find(',');
    auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(std::move(item));
    v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
  }
  return out;
}

void Config::check_paths() const {
  for (const auto* key : {"paths.instances", "paths.captions", "paths.detections", "paths.splits", "paths.lexicon"}) {
    const auto& p = get(key);
    if (!p.empty() && !std::filesystem::exists(p)) throw ConfigError(std::string(key) + ": file not found: " + p);
  }
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (k == "run.jobs" || k == "paths.out") continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::string Config::hash() const { return sha256_hex(canonical()); }

}  // namespace boocap::pipeline
