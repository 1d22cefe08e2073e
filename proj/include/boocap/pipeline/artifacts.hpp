#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace boocap::pipeline {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
  std::string file;  // relative to the output dir for outputs, as configured for inputs
  std::string sha256;
};

struct StageLink {
  std::string stage;
  std::string manifest_sha256;
};

/// Record of one stage run. Stored as `manifests/<stage>.json`; downstream stages
/// record the digest of that file, which chains the runs together.
struct Manifest {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageLink> upstream;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::vector<std::pair<std::string, std::string>> params;

  std::string to_json() const;
  static Manifest from_json(std::string_view json);
};

/// Human name of a stage's artifact, e.g. "captions" for `caption`.
std::string artifact_name(const std::string& stage);

/// One output directory. Holds an exclusive lock file for its lifetime.
class ArtifactStore {
 public:
  ArtifactStore(std::filesystem::path dir, std::string config_hash, std::uint64_t seed, bool force,
                std::ostream& warnings);
  ~ArtifactStore();
  ArtifactStore(const ArtifactStore&) = delete;
  ArtifactStore& operator=(const ArtifactStore&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& file) const { return dir_ / file; }

  /// Checks that `stage` ran, that its outputs and every upstream manifest still
  /// match their digests, and warns on a config hash mismatch. Returns the
  /// manifest. Throws ValidationError naming the producing command otherwise.
  Manifest require(const std::string& stage);
  bool has(const std::string& stage) const;

  /// Starts recording a stage run; upstream links come from require().
  void begin(const std::string& stage);
  void add_input(const std::string& path);
  void add_param(const std::string& key, const std::string& value);
  /// Writes the file and records its digest.
  void write(const std::string& file, std::string_view contents);
  /// Writes the manifest of the current stage.
  void commit();

 private:
  void verify(const std::string& stage, std::vector<std::string>& trail);

  std::filesystem::path dir_;
  std::string config_hash_;
  std::uint64_t seed_;
  bool force_;
  std::ostream& warnings_;
  std::filesystem::path lock_;
  Manifest current_;
  bool active_ = false;
  std::set<std::string> warned_;
};

}  // namespace boocap::pipeline
