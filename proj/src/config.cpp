#include "ibrl/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace ibrl::config {

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' is not a number: " + v);
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' is not an integer: " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' is not a boolean: " + v);
}

}  // namespace

void RunConfig::validate() const {
  if (name.empty()) throw ConfigError("config: missing required field 'name'");
  if (environment != "grid" && environment != "cartpole")
    throw ConfigError("config: 'env' must be grid or cartpole, got '" +
                      environment + "'");
  if (seeds.empty()) throw ConfigError("config: 'seeds' must be non-empty");
  if (beta < 0.0) throw ConfigError("config: 'beta' must be >= 0");
  if (maze_count <= 0) throw ConfigError("config: 'maze_count' must be > 0");
  train.validate();
  schedule.validate();
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "[run]\n";
  os << "name = " << name << "\n";
  os << "env = " << environment << "\n";
  os << "seeds = ";
  for (size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << "\n";
  os << "beta = " << beta << "\n";
  os << "deterministic = " << (deterministic ? "true" : "false") << "\n";
  os << "maze_count = " << maze_count << "\n";
  os << "[train]\n";
  os << "algo = " << (train.algo == agents::Algo::A2C ? "a2c" : "ppo") << "\n";
  os << "gamma = " << train.gamma << "\n";
  os << "gae_lambda = " << train.gae_lambda << "\n";
  os << "learning_rate = " << train.learning_rate << "\n";
  os << "entropy_coef = " << train.entropy_coef << "\n";
  os << "value_coef = " << train.value_coef << "\n";
  os << "clip_range = " << train.clip_range << "\n";
  os << "max_grad_norm = " << train.max_grad_norm << "\n";
  os << "minibatch_size = " << train.minibatch_size << "\n";
  os << "epochs = " << train.epochs << "\n";
  os << "n_envs = " << train.n_envs << "\n";
  os << "n_steps = " << train.n_steps << "\n";
  os << "total_steps = " << train.total_steps << "\n";
  os << "advantage_norm = " << (train.advantage_norm ? "true" : "false")
     << "\n";
  os << "[anneal]\n";
  os << "total_steps = " << schedule.total_steps << "\n";
  os << "beta_start = " << schedule.beta_start << "\n";
  os << "beta_end = " << schedule.beta_end << "\n";
  os << "warmup_frac = " << schedule.warmup_frac << "\n";
  os << "ramp = " << (schedule.ramp == anneal::Ramp::Geometric ? "geometric"
                                                               : "linear")
     << "\n";
  os << "checkpoints = " << schedule.n_checkpoints << "\n";
  return os.str();
}

uint64_t RunConfig::hash() const { return fnv1a(canonical_text()); }

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool env_set = false;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "run" && section != "train" && section != "anneal")
        throw ConfigError("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("config: key '" + key + "' outside any section");

    if (section == "run") {
      if (key == "name") {
        cfg.name = value;
      } else if (key == "env") {
        cfg.environment = value;
        env_set = true;
        // environment choice pins the trainer defaults; [train] keys may
        // still override them below, so [run] must precede [train]
        if (value == "grid")
          cfg.train = agents::grid_train_config();
        else if (value == "cartpole")
          cfg.train = agents::cartpole_train_config();
        else
          throw ConfigError("config: 'env' must be grid or cartpole, got '" +
                            value + "'");
      } else if (key == "seeds") {
        cfg.seeds.clear();
        std::istringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ','))
          cfg.seeds.push_back(
              static_cast<uint64_t>(to_long("seeds", trim(tok))));
      } else if (key == "beta") {
        cfg.beta = to_double(key, value);
      } else if (key == "deterministic") {
        cfg.deterministic = to_bool(key, value);
      } else if (key == "maze_count") {
        cfg.maze_count = static_cast<int>(to_long(key, value));
      } else if (key == "out") {
        cfg.out_dir = value;
      } else {
        throw ConfigError("config: unknown key '" + key + "' in [run]");
      }
    } else if (section == "train") {
      if (!env_set)
        throw ConfigError("config: [train] overrides require 'env' first");
      auto& t = cfg.train;
      if (key == "algo") {
        if (value == "a2c")
          t.algo = agents::Algo::A2C;
        else if (value == "ppo")
          t.algo = agents::Algo::PPO;
        else
          throw ConfigError("config: 'algo' must be a2c or ppo");
      } else if (key == "gamma") {
        t.gamma = to_double(key, value);
      } else if (key == "gae_lambda") {
        t.gae_lambda = to_double(key, value);
      } else if (key == "learning_rate") {
        t.learning_rate = to_double(key, value);
      } else if (key == "entropy_coef") {
        t.entropy_coef = to_double(key, value);
      } else if (key == "value_coef") {
        t.value_coef = to_double(key, value);
      } else if (key == "clip_range") {
        t.clip_range = to_double(key, value);
      } else if (key == "max_grad_norm") {
        t.max_grad_norm = to_double(key, value);
      } else if (key == "minibatch_size") {
        t.minibatch_size = static_cast<int>(to_long(key, value));
      } else if (key == "epochs") {
        t.epochs = static_cast<int>(to_long(key, value));
      } else if (key == "n_envs") {
        t.n_envs = static_cast<int>(to_long(key, value));
      } else if (key == "n_steps") {
        t.n_steps = static_cast<int>(to_long(key, value));
      } else if (key == "total_steps") {
        t.total_steps = to_long(key, value);
      } else if (key == "advantage_norm") {
        t.advantage_norm = to_bool(key, value);
      } else {
        throw ConfigError("config: unknown key '" + key + "' in [train]");
      }
    } else {  // anneal
      auto& s = cfg.schedule;
      if (key == "total_steps") {
        s.total_steps = to_long(key, value);
      } else if (key == "beta_start") {
        s.beta_start = to_double(key, value);
      } else if (key == "beta_end") {
        s.beta_end = to_double(key, value);
      } else if (key == "warmup_frac") {
        s.warmup_frac = to_double(key, value);
      } else if (key == "ramp") {
        if (value == "geometric")
          s.ramp = anneal::Ramp::Geometric;
        else if (value == "linear")
          s.ramp = anneal::Ramp::Linear;
        else
          throw ConfigError("config: 'ramp' must be geometric or linear");
      } else if (key == "checkpoints") {
        s.n_checkpoints = static_cast<int>(to_long(key, value));
      } else {
        throw ConfigError("config: unknown key '" + key + "' in [anneal]");
      }
    }
  }
  if (cfg.schedule.total_steps == 0)
    cfg.schedule.total_steps = cfg.train.total_steps;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ibrl::config
