#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "hjreach/adam.hpp"
#include "hjreach/binary_io.hpp"
#include "hjreach/net.hpp"

namespace hjreach {

// Versioned container: magic, then length-prefixed named sections in fixed
// order ("meta", "norm", "net", optional "adam"). Reals are raw little-endian
// IEEE-754, so save/load round-trips are bit-exact.
struct Checkpoint {
  ValueNet net;
  std::optional<AdamState> adam;
  std::map<std::string, std::string> metadata;
};

namespace detail {

constexpr char kCheckpointMagic[8] = {'H', 'J', 'R', 'C', 'K', 'v', '0', '1'};

inline void write_section(std::ostream& os, const std::string& name,
                          const std::string& payload) {
  write_string(os, name);
  write_u64(os, payload.size());
  write_bytes(os, payload.data(), payload.size());
}

inline void write_matrix(std::ostream& os, const MatrixXd& m) {
  write_u32(os, static_cast<std::uint32_t>(m.rows()));
  write_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
}

inline MatrixXd read_matrix(std::istream& is) {
  const std::uint32_t rows = read_u32(is);
  const std::uint32_t cols = read_u32(is);
  if (static_cast<std::uint64_t>(rows) * cols > (1u << 28))
    throw SerializationError("matrix too large");
  MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = read_f64(is);
  return m;
}

inline void write_vector(std::ostream& os, const VectorXd& v) {
  write_u32(os, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(os, v(i));
}

inline VectorXd read_vector(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  if (n > (1u << 28)) throw SerializationError("vector too large");
  VectorXd v(n);
  for (std::uint32_t i = 0; i < n; ++i) v(i) = read_f64(is);
  return v;
}

inline void write_param_layers(std::ostream& os, const std::vector<Layer>& ls) {
  write_u32(os, static_cast<std::uint32_t>(ls.size()));
  for (const Layer& l : ls) {
    write_matrix(os, l.weight);
    write_vector(os, l.bias);
  }
}

inline std::vector<Layer> read_param_layers(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  if (n > 1024) throw SerializationError("layer count out of range");
  std::vector<Layer> ls(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    ls[i].weight = read_matrix(is);
    ls[i].bias = read_vector(is);
  }
  return ls;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  detail::write_bytes(os, detail::kCheckpointMagic, 8);
  write_u32(os, ckpt.adam ? 4u : 3u);

  // metadata: sorted key=value lines (std::map iteration order)
  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) {
    if (k.find_first_of("=\n") != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw SerializationError("metadata key/value contains '=' or newline");
    meta += k;
    meta += '=';
    meta += v;
    meta += '\n';
  }
  detail::write_section(os, "meta", meta);

  std::ostringstream norm;
  detail::write_vector(norm, ckpt.net.norm.offset);
  detail::write_vector(norm, ckpt.net.norm.scale);
  detail::write_section(os, "norm", norm.str());

  std::ostringstream netsec;
  write_string(netsec, render_structure(ckpt.net.schedule));
  write_u32(netsec, static_cast<std::uint32_t>(ckpt.net.input_dim));
  write_u32(netsec, static_cast<std::uint32_t>(ckpt.net.hidden_width));
  write_f64(netsec, ckpt.net.omega0);
  detail::write_param_layers(netsec, ckpt.net.layers);
  detail::write_section(os, "net", netsec.str());

  if (ckpt.adam) {
    std::ostringstream ad;
    const AdamState& st = *ckpt.adam;
    write_u64(ad, static_cast<std::uint64_t>(st.step));
    write_f64(ad, st.config.learning_rate);
    write_f64(ad, st.config.beta1);
    write_f64(ad, st.config.beta2);
    write_f64(ad, st.config.epsilon);
    detail::write_param_layers(ad, st.m.layers);
    detail::write_param_layers(ad, st.v.layers);
    detail::write_section(os, "adam", ad.str());
  }
  os.flush();
  if (!os) throw SerializationError("checkpoint write failed");
}

inline Checkpoint load_checkpoint(std::istream& is) {
  char magic[8];
  detail::read_bytes(is, magic, 8);
  if (std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw SerializationError("bad checkpoint magic (wrong file or version)");
  const std::uint32_t n_sections = read_u32(is);
  if (n_sections < 3 || n_sections > 4)
    throw SerializationError("unexpected checkpoint section count");

  Checkpoint ckpt;
  bool have_meta = false, have_norm = false, have_net = false;
  for (std::uint32_t s = 0; s < n_sections; ++s) {
    const std::string name = read_string(is, 64);
    const std::uint64_t len = read_u64(is);
    std::string payload(len, '\0');
    if (len) detail::read_bytes(is, payload.data(), len);
    std::istringstream ps(payload);

    if (name == "meta") {
      std::string line;
      while (std::getline(ps, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
          throw SerializationError("malformed metadata line");
        ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
      }
      have_meta = true;
    } else if (name == "norm") {
      ckpt.net.norm.offset = detail::read_vector(ps);
      ckpt.net.norm.scale = detail::read_vector(ps);
      have_norm = true;
    } else if (name == "net") {
      ckpt.net.schedule = parse_structure(read_string(ps, 1024));
      ckpt.net.input_dim = static_cast<int>(read_u32(ps));
      ckpt.net.hidden_width = static_cast<int>(read_u32(ps));
      ckpt.net.omega0 = read_f64(ps);
      ckpt.net.layers = detail::read_param_layers(ps);
      have_net = true;
    } else if (name == "adam") {
      AdamState st;
      st.step = static_cast<std::int64_t>(read_u64(ps));
      st.config.learning_rate = read_f64(ps);
      st.config.beta1 = read_f64(ps);
      st.config.beta2 = read_f64(ps);
      st.config.epsilon = read_f64(ps);
      st.m.layers = detail::read_param_layers(ps);
      st.v.layers = detail::read_param_layers(ps);
      ckpt.adam = std::move(st);
    } else {
      throw SerializationError("unknown checkpoint section '" + name + "'");
    }
    if (ps.peek() != EOF && ps.tellg() != static_cast<std::streampos>(len))
      throw SerializationError("section '" + name + "' has trailing bytes");
  }
  if (!have_meta || !have_norm || !have_net)
    throw SerializationError("checkpoint missing a required section");
  if (ckpt.net.layers.empty())
    throw SerializationError("checkpoint net has no layers");
  if (ckpt.net.schedule.size() != ckpt.net.layers.size())
    throw SerializationError("checkpoint schedule/layer count mismatch");
  return ckpt;
}

inline void save_checkpoint_file(const std::filesystem::path& path,
                                 const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw SerializationError("cannot open '" + path.string() + "'");
  save_checkpoint(os, ckpt);
}

inline Checkpoint load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SerializationError("cannot open '" + path.string() + "'");
  return load_checkpoint(is);
}

}  // namespace hjreach
