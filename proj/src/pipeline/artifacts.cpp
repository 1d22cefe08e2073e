#include "boocap/pipeline/artifacts.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>

#include <json.hpp>
#include <openssl/evp.h>

#include "boocap/corpus/corpus.hpp"
#include "boocap/error.hpp"

namespace boocap::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(corpus::read_file(path.string())); }

std::string Manifest::to_json() const {
  json j;
  j["stage"] = stage;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["upstream"] = json::array();
  for (const auto& u : upstream) j["upstream"].push_back({{"stage", u.stage}, {"manifest_sha256", u.manifest_sha256}});
  auto digests = [](const std::vector<FileDigest>& v) {
    json a = json::array();
    for (const auto& d : v) a.push_back({{"file", d.file}, {"sha256", d.sha256}});
    return a;
  };
  j["inputs"] = digests(inputs);
  j["outputs"] = digests(outputs);
  j["params"] = json::object();
  for (const auto& [k, v] : params) j["params"][k] = v;
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& u : j.at("upstream")) m.upstream.push_back({u.at("stage"), u.at("manifest_sha256")});
    for (const auto& d : j.at("inputs")) m.inputs.push_back({d.at("file"), d.at("sha256")});
    for (const auto& d : j.at("outputs")) m.outputs.push_back({d.at("file"), d.at("sha256")});
    for (const auto& [k, v] : j.at("params").items()) m.params.emplace_back(k, v.get<std::string>());
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

std::string artifact_name(const std::string& stage) {
  static const std::map<std::string, std::string> names{
      {"synth", "corpus"},        {"repr", "representations"}, {"train", "model"},
      {"caption", "captions"},    {"eval", "evaluation"},       {"knn", "knn"},
      {"stats", "category statistics"}, {"ablate", "ablation"}, {"mask-sweep", "mask sweep"},
      {"correlate", "correlation"}, {"table1", "table1"},
  };
  auto it = names.find(stage);
  return it == names.end() ? stage : it->second;
}

namespace {

fs::path manifest_path(const fs::path& dir, const std::string& stage) { return dir / "manifests" / (stage + ".json"); }

void write_atomic(const fs::path& path, std::string_view contents) {
  fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  corpus::write_file(tmp, contents);
  fs::rename(tmp, path);
}

}  // namespace

ArtifactStore::ArtifactStore(fs::path dir, std::string config_hash, std::uint64_t seed, bool force,
                             std::ostream& warnings)
    : dir_(std::move(dir)), config_hash_(std::move(config_hash)), seed_(seed), force_(force), warnings_(warnings) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  lock_ = dir_ / ".lock";
  const int fd = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw ConfigError("output directory " + dir_.string() + " is locked by another run (remove " + lock_.string() +
                        " if it is stale)");
    }
    throw ConfigError("output directory " + dir_.string() + " is not writable: " + std::strerror(errno));
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

ArtifactStore::~ArtifactStore() {
  std::error_code ec;
  fs::remove(lock_, ec);
}

bool ArtifactStore::has(const std::string& stage) const { return fs::exists(manifest_path(dir_, stage)); }

void ArtifactStore::verify(const std::string& stage, std::vector<std::string>& trail) {
  if (std::find(trail.begin(), trail.end(), stage) != trail.end()) return;
  trail.push_back(stage);
  const auto mpath = manifest_path(dir_, stage);
  if (!fs::exists(mpath)) {
    throw ValidationError("missing " + artifact_name(stage) + " artifact (run `" + stage + "`)");
  }
  const auto m = Manifest::from_json(corpus::read_file(mpath.string()));
  for (const auto& out : m.outputs) {
    const auto p = dir_ / out.file;
    if (!fs::exists(p)) throw ValidationError(out.file + " is missing; rerun `" + stage + "`");
    if (sha256_file(p) != out.sha256) {
      throw ValidationError(out.file + " does not match the `" + stage + "` manifest (modified after it was written); rerun `" +
                            stage + "`");
    }
  }
  for (const auto& in : m.inputs) {
    if (!fs::exists(in.file) || sha256_file(in.file) != in.sha256) {
      throw ValidationError("input " + in.file + " changed since `" + stage + "` ran; rerun `" + stage + "`");
    }
  }
  for (const auto& up : m.upstream) {
    const auto upath = manifest_path(dir_, up.stage);
    if (!fs::exists(upath)) {
      throw ValidationError("missing " + artifact_name(up.stage) + " artifact (run `" + up.stage + "`)");
    }
    if (sha256_file(upath) != up.manifest_sha256) {
      throw ValidationError("`" + stage + "` was built from an older `" + up.stage + "` run; rerun `" + stage + "`");
    }
    verify(up.stage, trail);
  }
  if (m.config_hash != config_hash_ && !force_ && warned_.insert(stage).second) {
    warnings_ << "warning: `" << stage << "` artifacts were produced with a different configuration (" << m.config_hash.substr(0, 12)
              << " vs " << config_hash_.substr(0, 12) << ")\n";
  }
}

Manifest ArtifactStore::require(const std::string& stage) {
  std::vector<std::string> trail;
  verify(stage, trail);
  const auto mpath = manifest_path(dir_, stage);
  const auto text = corpus::read_file(mpath.string());
  if (active_) {
    const StageLink link{stage, sha256_hex(text)};
    if (std::none_of(current_.upstream.begin(), current_.upstream.end(),
                     [&](const StageLink& l) { return l.stage == stage; })) {
      current_.upstream.push_back(link);
    }
  }
  return Manifest::from_json(text);
}

void ArtifactStore::begin(const std::string& stage) {
  current_ = Manifest{};
  current_.stage = stage;
  current_.config_hash = config_hash_;
  current_.seed = seed_;
  active_ = true;
}

void ArtifactStore::add_input(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("input file not found: " + path);
  current_.inputs.push_back({path, sha256_file(path)});
}

void ArtifactStore::add_param(const std::string& key, const std::string& value) {
  current_.params.emplace_back(key, value);
}

void ArtifactStore::write(const std::string& file, std::string_view contents) {
  if (current_.outputs.empty()) {
    // the old outputs are about to change, so the old manifest no longer holds
    std::error_code ec;
    fs::remove(manifest_path(dir_, current_.stage), ec);
  }
  write_atomic(dir_ / file, contents);
  current_.outputs.push_back({file, sha256_hex(contents)});
}

void ArtifactStore::commit() {
  if (!active_) throw Error("no stage in progress");
  write_atomic(manifest_path(dir_, current_.stage), current_.to_json());
  active_ = false;
}

}  // namespace boocap::pipeline
