#pragma once

#include <cstdio>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "mmba/data.hpp"
#include "mmba/errors.hpp"
#include "mmba/model.hpp"

namespace mmba {

inline constexpr char kCheckpointMagic[4] = {'M', 'M', 'B', 'A'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

// ---------------------------------------------------------------------------
// ModelConfig <-> key=value text block
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse numeric value '" + s + "' for key " + key);
  }
}

inline int parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse integer value '" + s + "' for key " + key);
  }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ConfigError("cannot parse boolean value '" + s + "' for key " + key);
}

}  // namespace detail

inline std::string model_config_to_text(const ModelConfig& c) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) {
    out += k + "=" + v + "\n";
  };
  kv("variant", variant_name(c.variant));
  kv("modalities", c.modalities.str());
  kv("d_v", std::to_string(c.d_v));
  kv("d_l", std::to_string(c.d_l));
  kv("d_a", std::to_string(c.d_a));
  kv("gru_hidden", std::to_string(c.gru_hidden));
  kv("d_proj", std::to_string(c.d_proj));
  kv("head_hidden", std::to_string(c.head_hidden));
  kv("dropout", detail::format_double(c.dropout));
  kv("activation", activation_name(c.act));
  kv("dropout_after_gru", c.dropout_after_gru ? "1" : "0");
  kv("dropout_after_proj", c.dropout_after_proj ? "1" : "0");
  kv("focal_alpha", detail::format_double(c.focal_alpha));
  kv("focal_gamma", detail::format_double(c.focal_gamma));
  kv("lambda_reg", detail::format_double(c.lambda_reg));
  kv("reg_loss", reg_loss_name(c.reg_loss));
  kv("seq_duration", detail::format_double(c.seq_duration));
  kv("seq_stride", detail::format_double(c.seq_stride));
  return out;
}

// Applies one key to a ModelConfig; returns false if the key is unknown so
// callers with larger key spaces can layer on top.
inline bool apply_model_config_key(ModelConfig& c, const std::string& key,
                                   const std::string& value) {
  if (key == "variant") c.variant = parse_variant(value);
  else if (key == "modalities") c.modalities = ModalitySet::parse(value);
  else if (key == "d_v") c.d_v = detail::parse_int(value, key);
  else if (key == "d_l") c.d_l = detail::parse_int(value, key);
  else if (key == "d_a") c.d_a = detail::parse_int(value, key);
  else if (key == "gru_hidden") c.gru_hidden = detail::parse_int(value, key);
  else if (key == "d_proj") c.d_proj = detail::parse_int(value, key);
  else if (key == "head_hidden") c.head_hidden = detail::parse_int(value, key);
  else if (key == "dropout") c.dropout = detail::parse_double(value, key);
  else if (key == "activation") c.act = parse_activation(value);
  else if (key == "dropout_after_gru") c.dropout_after_gru = detail::parse_bool(value, key);
  else if (key == "dropout_after_proj") c.dropout_after_proj = detail::parse_bool(value, key);
  else if (key == "focal_alpha") c.focal_alpha = detail::parse_double(value, key);
  else if (key == "focal_gamma") c.focal_gamma = detail::parse_double(value, key);
  else if (key == "lambda_reg") c.lambda_reg = detail::parse_double(value, key);
  else if (key == "reg_loss") c.reg_loss = parse_reg_loss(value);
  else if (key == "seq_duration") c.seq_duration = detail::parse_double(value, key);
  else if (key == "seq_stride") c.seq_stride = detail::parse_double(value, key);
  else return false;
  return true;
}

inline ModelConfig model_config_from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("checkpoint config line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (!apply_model_config_key(c, key, value))
      throw FormatError("unknown checkpoint config key: " + key);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Checkpoint file
// ---------------------------------------------------------------------------
// magic "MMBA", u16 version, u32-length-prefixed config text, then every
// parameter matrix in declaration (visit) order as u32 rows, u32 cols,
// row-major little-endian f64 values.

inline std::string serialize_checkpoint(const ModelConfig& cfg,
                                        const ModelWeights<Mat>& weights) {
  std::string out;
  out.append(kCheckpointMagic, 4);
  io::put_u16(out, kCheckpointVersion);
  const std::string cfg_text = model_config_to_text(cfg);
  io::put_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  out += cfg_text;
  weights.visit([&out](const Mat& m) {
    io::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    io::put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double x : m) io::put_f64(out, x);
  });
  return out;
}

inline void write_checkpoint(const std::string& path, const ModelConfig& cfg,
                             const ModelWeights<Mat>& weights) {
  io::write_file_atomic(path, serialize_checkpoint(cfg, weights));
}

struct Checkpoint {
  ModelConfig config;
  ModelWeights<Mat> weights;
};

inline Checkpoint read_checkpoint(const std::string& path) {
  const std::string bytes = io::read_file_bytes(path);
  io::Reader r(bytes, path);
  const std::string magic = r.str(4, "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0)
    throw FormatError(path + ": bad checkpoint magic at byte 0");
  const std::uint16_t version = r.u16("version");
  if (version != kCheckpointVersion)
    throw FormatError(path + ": unsupported checkpoint version " +
                      std::to_string(version));
  const std::uint32_t cfg_len = r.u32("config length");
  const std::string cfg_text = r.str(cfg_len, "config block");
  Checkpoint ck;
  try {
    ck.config = model_config_from_text(cfg_text);
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(path + ": corrupt config block: " + e.what());
  }

  // Allocate the expected parameter structure, then fill it in declaration
  // order while checking every shape against the config.
  Rng scratch(0);
  ck.weights = init_weights(ck.config, scratch);
  ck.weights.visit([&r, &path](Mat& m) {
    const std::uint32_t rows = r.u32("matrix rows");
    const std::uint32_t cols = r.u32("matrix cols");
    if (static_cast<int>(rows) != m.rows() || static_cast<int>(cols) != m.cols())
      throw FormatError(path + ": matrix shape " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " does not match config (expected " +
                        m.shape_str() + ") at byte " + std::to_string(r.offset() - 8));
    for (auto& x : m) x = r.f64("matrix values");
  });
  r.expect_end();
  return ck;
}

}  // namespace mmba
