#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ibrl/checkpoint.hpp"
#include "ibrl/config.hpp"
#include "ibrl/rundir.hpp"

using namespace ibrl;
namespace fs = std::filesystem;

namespace {

const char* kSampleConfig = R"(# cartpole baseline run
[run]
name = demo
env = cartpole
seeds = 0,1,2
beta = 0.0005
deterministic = false

[train]
n_steps = 512
total_steps = 4096

[anneal]
total_steps = 4096
beta_start = 1e-7
beta_end = 1e-3
)";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ibrl-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("config parsing applies env defaults then overrides") {
  auto cfg = config::parse_config(kSampleConfig);
  CHECK(cfg.name == "demo");
  CHECK(cfg.environment == "cartpole");
  CHECK(cfg.seeds == std::vector<uint64_t>{0, 1, 2});
  CHECK(cfg.beta == 0.0005);
  // cartpole defaults survive where not overridden...
  CHECK(cfg.train.algo == agents::Algo::PPO);
  CHECK(cfg.train.learning_rate == 3e-4);
  CHECK(cfg.train.minibatch_size == 128);
  // ...and overrides land
  CHECK(cfg.train.n_steps == 512);
  CHECK(cfg.train.total_steps == 4096);
  CHECK(cfg.schedule.beta_start == 1e-7);
}

TEST_CASE("config rejects unknown keys, sections, and bad values") {
  CHECK_THROWS_WITH_AS(
      config::parse_config("[run]\nname=x\nenv=grid\nbogus_key=1\n"),
      doctest::Contains("bogus_key"), ConfigError);
  CHECK_THROWS_AS(config::parse_config("[mystery]\nx=1\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config("[run]\nname=x\nenv=atari\n"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_config("[run]\nname=x\nenv=grid\ngamma=oops\n"),
                  ConfigError);
  // missing required name
  CHECK_THROWS_WITH_AS(config::parse_config("[run]\nenv=grid\n"),
                       doctest::Contains("name"), ConfigError);
  // [train] before env is ambiguous (defaults unknown)
  CHECK_THROWS_AS(
      config::parse_config("[train]\ngamma=0.9\n[run]\nname=x\nenv=grid\n"),
      ConfigError);
}

TEST_CASE("canonical text and hash are stable across reparses") {
  auto a = config::parse_config(kSampleConfig);
  auto b = config::parse_config(a.canonical_text());
  CHECK(a.canonical_text() == b.canonical_text());
  CHECK(a.hash() == b.hash());
  auto c = a;
  c.beta = 0.05;
  CHECK(c.hash() != a.hash());
}

TEST_CASE("checkpoint round-trips byte-identically") {
  auto bundle = policy::make_cartpole_policy(12, false);
  auto ck = ckpt::make_checkpoint(bundle, "cartpole", 0xDEADBEEFULL, 4096,
                                  5e-5);
  ck.rng_state = "123456789 987654321";

  const std::string bytes = ckpt::serialize_checkpoint(ck);
  auto back = ckpt::deserialize_checkpoint(bytes);
  CHECK(ckpt::serialize_checkpoint(back) == bytes);  // save->load->save
  CHECK(back.config_hash == 0xDEADBEEFULL);
  CHECK(back.iteration == 4096);
  CHECK(back.beta == 5e-5);
  CHECK(back.environment == "cartpole");
  CHECK(back.rng_state == ck.rng_state);
  REQUIRE(back.blobs.size() == ck.blobs.size());
  for (size_t i = 0; i < ck.blobs.size(); ++i) {
    CHECK(back.blobs[i].first == ck.blobs[i].first);
    CHECK(back.blobs[i].second.data == ck.blobs[i].second.data);
  }
}

TEST_CASE("restore_bundle rebuilds the exact policy") {
  auto bundle = policy::make_grid_policy(9, false);
  auto ck = ckpt::make_checkpoint(bundle, "grid", 1, 0, 0.0);
  auto restored = ckpt::restore_bundle(ck);
  auto pa = bundle.parameters();
  auto pb = restored.parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->data == pb[i]->data);
  CHECK(restored.obs_shape == bundle.obs_shape);
}

TEST_CASE("checkpoint loader rejects corruption and version skew") {
  auto bundle = policy::make_cartpole_policy(1, true);
  auto ck = ckpt::make_checkpoint(bundle, "cartpole", 1, 1, 0.0);
  std::string bytes = ckpt::serialize_checkpoint(ck);

  CHECK_THROWS_AS(ckpt::deserialize_checkpoint("JUNKDATA"), ArtifactError);
  CHECK_THROWS_AS(
      ckpt::deserialize_checkpoint(bytes.substr(0, bytes.size() / 2)),
      ArtifactError);
  std::string trailing = bytes + "x";
  CHECK_THROWS_AS(ckpt::deserialize_checkpoint(trailing), ArtifactError);
  std::string skewed = bytes;
  skewed[4] = 99;  // version field
  CHECK_THROWS_WITH_AS(ckpt::deserialize_checkpoint(skewed),
                       doctest::Contains("version"), ArtifactError);

  ck.environment = "pinball";
  CHECK_THROWS_AS(ckpt::restore_bundle(ck), ArtifactError);
}

TEST_CASE("checkpoint file save and load") {
  TempDir tmp;
  fs::create_directories(tmp.path);
  auto bundle = policy::make_cartpole_policy(4, false);
  auto ck = ckpt::make_checkpoint(bundle, "cartpole", 7, 100, 0.01);
  const std::string path = (tmp.path / "a.ckpt").string();
  ckpt::save_checkpoint(ck, path);
  auto back = ckpt::load_checkpoint(path);
  CHECK(ckpt::serialize_checkpoint(back) == ckpt::serialize_checkpoint(ck));
  CHECK_THROWS_AS(ckpt::load_checkpoint((tmp.path / "missing.ckpt").string()),
                  ArtifactError);
}

TEST_CASE("run directory layout, overwrite guard, and manifest") {
  TempDir tmp;
  auto cfg = config::parse_config(kSampleConfig);

  auto rd = rundir::RunDir::create(tmp.path, cfg, /*force=*/false);
  CHECK(fs::exists(rd.config_copy()));
  CHECK(fs::is_directory(rd.checkpoints_dir()));
  CHECK(fs::is_directory(rd.eval_dir()));
  CHECK(rundir::read_file(rd.config_copy()) == cfg.canonical_text());

  // refuses to clobber without --force
  CHECK_THROWS_WITH_AS(rundir::RunDir::create(tmp.path, cfg, false),
                       doctest::Contains("--force"), ArtifactError);
  auto rd2 = rundir::RunDir::create(tmp.path, cfg, /*force=*/true);

  rd2.write_artifact("metrics.csv", "env_steps,mean_return\n1,0.5\n");
  rd2.write_artifact("eval/grid.csv", "force,length\n");
  rd2.write_manifest();

  const std::string manifest = rundir::read_file(tmp.path / "manifest.json");
  CHECK(manifest.find("config.copy") != std::string::npos);
  CHECK(manifest.find("metrics.csv") != std::string::npos);
  CHECK(manifest.find("eval/grid.csv") != std::string::npos);
  CHECK(manifest.find("fnv1a") != std::string::npos);

  CHECK_THROWS_AS(rundir::RunDir::open(tmp.path / "nope"), ArtifactError);
  auto reopened = rundir::RunDir::open(tmp.path);
  CHECK(reopened.root() == tmp.path);
}
