#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ibrl/config.hpp"

namespace ibrl::rundir {

// Run-directory layout:
//   <root>/config.copy     exact canonical config text
//   <root>/metrics.csv
//   <root>/checkpoints/
//   <root>/eval/
//   <root>/manifest.json   every artifact with a content hash
class RunDir {
 public:
  // Refuses an existing directory unless force is set.
  static RunDir create(const std::filesystem::path& root,
                       const config::RunConfig& cfg, bool force);
  static RunDir open(const std::filesystem::path& root);  // ArtifactError

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path metrics_csv() const { return root_ / "metrics.csv"; }
  std::filesystem::path checkpoints_dir() const {
    return root_ / "checkpoints";
  }
  std::filesystem::path eval_dir() const { return root_ / "eval"; }
  std::filesystem::path config_copy() const { return root_ / "config.copy"; }

  // Writes content and records the file for the manifest.
  void write_artifact(const std::filesystem::path& relative,
                      const std::string& content);
  void record_artifact(const std::filesystem::path& relative);

  // manifest.json: [{"path": ..., "fnv1a": "hex"}]
  void write_manifest() const;

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> artifacts_;
};

std::string read_file(const std::filesystem::path& path);  // ArtifactError

}  // namespace ibrl::rundir
