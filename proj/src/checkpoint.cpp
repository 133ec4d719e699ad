#include "ibrl/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace ibrl::ckpt {

namespace {

constexpr char kMagic[4] = {'I', 'B', 'C', 'K'};

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  // serialize little-endian regardless of host order
  if constexpr (sizeof(T) > 1) {
    uint64_t probe = 1;
    if (*reinterpret_cast<const char*>(&probe) == 0)
      std::reverse(buf, buf + sizeof(T));
  }
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size())
      throw ArtifactError("checkpoint: truncated file");
    char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (sizeof(T) > 1) {
      uint64_t probe = 1;
      if (*reinterpret_cast<const char*>(&probe) == 0)
        std::reverse(buf, buf + sizeof(T));
    }
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::string get_bytes(size_t n) {
    if (pos_ + n > bytes_.size())
      throw ArtifactError("checkpoint: truncated file");
    std::string out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  size_t pos_ = 0;
};

void put_string(std::string& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out += s;
}

std::string get_string(Reader& r) {
  const uint32_t n = r.get<uint32_t>();
  return r.get_bytes(n);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out;
  out.append(kMagic, 4);
  put<uint32_t>(out, ck.version);
  put<uint64_t>(out, ck.config_hash);
  put_string(out, ck.environment);
  put<uint8_t>(out, ck.deterministic ? 1 : 0);
  put<int64_t>(out, ck.iteration);
  put<double>(out, ck.beta);
  put<uint32_t>(out, static_cast<uint32_t>(ck.blobs.size()));
  for (const auto& [name, tensor] : ck.blobs) {
    put_string(out, name);
    put<uint32_t>(out, static_cast<uint32_t>(tensor.shape.size()));
    for (int d : tensor.shape) put<int32_t>(out, d);
    for (double v : tensor.data) put<double>(out, v);
  }
  put_string(out, ck.rng_state);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(4) != std::string(kMagic, 4))
    throw ArtifactError("checkpoint: bad magic (not a checkpoint file)");
  Checkpoint ck;
  ck.version = r.get<uint32_t>();
  if (ck.version != kCheckpointVersion)
    throw ArtifactError("checkpoint: version " + std::to_string(ck.version) +
                        " unsupported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
  ck.config_hash = r.get<uint64_t>();
  ck.environment = get_string(r);
  ck.deterministic = r.get<uint8_t>() != 0;
  ck.iteration = r.get<int64_t>();
  ck.beta = r.get<double>();
  const uint32_t n_blobs = r.get<uint32_t>();
  for (uint32_t i = 0; i < n_blobs; ++i) {
    std::string name = get_string(r);
    const uint32_t ndim = r.get<uint32_t>();
    std::vector<int> shape;
    for (uint32_t d = 0; d < ndim; ++d) shape.push_back(r.get<int32_t>());
    nn::Tensor t;
    try {
      t = nn::Tensor(shape);
    } catch (const NumericError& e) {
      throw ArtifactError(std::string("checkpoint: corrupt shape header: ") +
                          e.what());
    }
    for (double& v : t.data) v = r.get<double>();
    ck.blobs.emplace_back(std::move(name), std::move(t));
  }
  ck.rng_state = get_string(r);
  if (!r.exhausted())
    throw ArtifactError("checkpoint: trailing bytes after payload");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("checkpoint: cannot write " + path);
  const std::string bytes = serialize_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArtifactError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("checkpoint: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

namespace {

std::vector<std::string> parameter_names(const policy::PolicyBundle& bundle) {
  std::vector<std::string> names;
  struct Part {
    const char* tag;
    const nn::Network* net;
  };
  const Part parts[] = {{"trunk", &bundle.trunk},
                        {"mu_head", &bundle.mu_head},
                        {"logvar_head", &bundle.logvar_head},
                        {"actor", &bundle.actor},
                        {"critic", &bundle.critic}};
  for (const auto& part : parts) {
    if (bundle.deterministic && part.net == &bundle.logvar_head) continue;
    const size_t n_layers = part.net->parameters().size() / 2;
    for (size_t l = 0; l < n_layers; ++l) {
      names.push_back(std::string(part.tag) + ".layer" + std::to_string(l) +
                      ".weight");
      names.push_back(std::string(part.tag) + ".layer" + std::to_string(l) +
                      ".bias");
    }
  }
  return names;
}

}  // namespace

Checkpoint make_checkpoint(const policy::PolicyBundle& bundle,
                           const std::string& environment,
                           uint64_t config_hash, int64_t iteration,
                           double beta) {
  Checkpoint ck;
  ck.config_hash = config_hash;
  ck.environment = environment;
  ck.deterministic = bundle.deterministic;
  ck.iteration = iteration;
  ck.beta = beta;
  auto params = bundle.parameters();
  auto names = parameter_names(bundle);
  if (names.size() != params.size())
    throw ArtifactError("checkpoint: parameter naming out of sync");
  for (size_t i = 0; i < params.size(); ++i)
    ck.blobs.emplace_back(names[i], nn::Tensor(params[i]->shape,
                                               params[i]->data));
  return ck;
}

policy::PolicyBundle restore_bundle(const Checkpoint& ck) {
  policy::PolicyBundle bundle;
  if (ck.environment == "grid")
    bundle = policy::make_grid_policy(0, ck.deterministic);
  else if (ck.environment == "cartpole")
    bundle = policy::make_cartpole_policy(0, ck.deterministic);
  else
    throw ArtifactError("checkpoint: unknown environment tag '" +
                        ck.environment + "'");
  auto params = bundle.parameters();
  auto names = parameter_names(bundle);
  if (params.size() != ck.blobs.size())
    throw ArtifactError("checkpoint: parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& [name, tensor] = ck.blobs[i];
    if (name != names[i])
      throw ArtifactError("checkpoint: unexpected blob '" + name +
                          "' (expected '" + names[i] + "')");
    if (tensor.shape != params[i]->shape)
      throw ArtifactError("checkpoint: shape mismatch for blob '" + name +
                          "'");
    params[i]->data = tensor.data;
  }
  return bundle;
}

}  // namespace ibrl::ckpt
