#include "ibrl/rundir.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ibrl::rundir {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunDir RunDir::create(const fs::path& root, const config::RunConfig& cfg,
                      bool force) {
  if (fs::exists(root)) {
    if (!force)
      throw ArtifactError("run directory " + root.string() +
                          " exists; pass --force to overwrite");
    fs::remove_all(root);
  }
  fs::create_directories(root);
  fs::create_directories(root / "checkpoints");
  fs::create_directories(root / "eval");
  RunDir rd;
  rd.root_ = root;
  rd.write_artifact("config.copy", cfg.canonical_text());
  return rd;
}

RunDir RunDir::open(const fs::path& root) {
  if (!fs::exists(root / "config.copy"))
    throw ArtifactError(root.string() + " is not a run directory");
  RunDir rd;
  rd.root_ = root;
  return rd;
}

void RunDir::write_artifact(const fs::path& relative,
                            const std::string& content) {
  const fs::path full = root_ / relative;
  fs::create_directories(full.parent_path());
  std::ofstream out(full, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + full.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ArtifactError("write failed for " + full.string());
  record_artifact(relative);
}

void RunDir::record_artifact(const fs::path& relative) {
  for (const auto& p : artifacts_)
    if (p == relative) return;
  artifacts_.push_back(relative);
}

void RunDir::write_manifest() const {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& rel : artifacts_) {
    std::ostringstream hex;
    hex << std::hex << config::fnv1a(read_file(root_ / rel));
    manifest.push_back({{"path", rel.generic_string()}, {"fnv1a", hex.str()}});
  }
  std::ofstream out(root_ / "manifest.json", std::ios::trunc);
  if (!out)
    throw ArtifactError("cannot write " + (root_ / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

}  // namespace ibrl::rundir
