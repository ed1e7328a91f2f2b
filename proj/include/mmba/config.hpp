#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmba/checkpoint.hpp"
#include "mmba/data.hpp"
#include "mmba/errors.hpp"
#include "mmba/localize.hpp"
#include "mmba/model.hpp"
#include "mmba/trainer.hpp"

namespace mmba {

// Everything a command run needs, assembled from defaults, an optional
// "key = value" config file, --set overrides, then dedicated flags.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SyntheticSpec synth;
  NmsConfig nms;
  double score_threshold = 0.5;
  bool grid = false;
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::string checkpoint_path;
  std::string split = "test";

  // Single seed for the whole run; data generation and training derive
  // their streams from it.
  void set_seed(std::uint64_t s) {
    train.seed = s;
    synth.seed = s;
  }

  // The synthetic generator must produce what the model expects.
  void sync_synth() {
    synth.d_v = model.d_v;
    synth.d_l = model.d_l;
    synth.d_a = model.d_a;
    synth.seq_duration = model.seq_duration;
    synth.seq_stride = model.seq_stride;
  }

  void apply(const std::string& key, const std::string& value) {
    if (apply_model_config_key(model, key, value)) return;
    if (key == "batch_size") train.batch_size = detail::parse_int(value, key);
    else if (key == "learning_rate") train.learning_rate = detail::parse_double(value, key);
    else if (key == "lr_decay") train.lr_decay = detail::parse_double(value, key);
    else if (key == "beta1") train.beta1 = detail::parse_double(value, key);
    else if (key == "beta2") train.beta2 = detail::parse_double(value, key);
    else if (key == "adam_eps") train.adam_eps = detail::parse_double(value, key);
    else if (key == "max_epochs") train.max_epochs = detail::parse_int(value, key);
    else if (key == "patience") train.patience = detail::parse_int(value, key);
    else if (key == "threads") train.threads = detail::parse_int(value, key);
    else if (key == "seed") set_seed(static_cast<std::uint64_t>(
        std::stoull(value)));
    else if (key == "videos") synth.videos = detail::parse_int(value, key);
    else if (key == "n_seq") synth.n_seq = detail::parse_int(value, key);
    else if (key == "fake_video_ratio") synth.fake_video_ratio = detail::parse_double(value, key);
    else if (key == "fake_count_min") synth.fake_count_min = detail::parse_int(value, key);
    else if (key == "fake_count_max") synth.fake_count_max = detail::parse_int(value, key);
    else if (key == "seg_len_min") synth.seg_len_min = detail::parse_double(value, key);
    else if (key == "seg_len_max") synth.seg_len_max = detail::parse_double(value, key);
    else if (key == "rho") synth.rho = detail::parse_double(value, key);
    else if (key == "noise") synth.noise = detail::parse_double(value, key);
    else if (key == "nms_mode") nms.mode = parse_nms_mode(value);
    else if (key == "nms_iou") nms.iou_thresh = detail::parse_double(value, key);
    else if (key == "nms_sigma") nms.sigma = detail::parse_double(value, key);
    else if (key == "nms_min_score") nms.min_score = detail::parse_double(value, key);
    else if (key == "score_threshold") score_threshold = detail::parse_double(value, key);
    else if (key == "grid") grid = detail::parse_bool(value, key);
    else if (key == "data_dir") data_dir = value;
    else if (key == "out_dir") out_dir = value;
    else if (key == "checkpoint") checkpoint_path = value;
    else if (key == "split") split = value;
    else throw ConfigError("unknown config key: " + key);
  }

  std::string to_text() const {
    std::string out = model_config_to_text(model);
    auto kv = [&out](const std::string& k, const std::string& v) {
      out += k + "=" + v + "\n";
    };
    kv("batch_size", std::to_string(train.batch_size));
    kv("learning_rate", detail::format_double(train.learning_rate));
    kv("lr_decay", detail::format_double(train.lr_decay));
    kv("beta1", detail::format_double(train.beta1));
    kv("beta2", detail::format_double(train.beta2));
    kv("adam_eps", detail::format_double(train.adam_eps));
    kv("max_epochs", std::to_string(train.max_epochs));
    kv("patience", std::to_string(train.patience));
    kv("threads", std::to_string(train.threads));
    kv("seed", std::to_string(train.seed));
    kv("videos", std::to_string(synth.videos));
    kv("n_seq", std::to_string(synth.n_seq));
    kv("fake_video_ratio", detail::format_double(synth.fake_video_ratio));
    kv("fake_count_min", std::to_string(synth.fake_count_min));
    kv("fake_count_max", std::to_string(synth.fake_count_max));
    kv("seg_len_min", detail::format_double(synth.seg_len_min));
    kv("seg_len_max", detail::format_double(synth.seg_len_max));
    kv("rho", detail::format_double(synth.rho));
    kv("noise", detail::format_double(synth.noise));
    kv("nms_mode", nms.mode == NmsMode::Hard ? "hard" : "gaussian");
    kv("nms_iou", detail::format_double(nms.iou_thresh));
    kv("nms_sigma", detail::format_double(nms.sigma));
    kv("nms_min_score", detail::format_double(nms.min_score));
    kv("score_threshold", detail::format_double(score_threshold));
    kv("grid", grid ? "1" : "0");
    kv("data_dir", data_dir);
    kv("out_dir", out_dir);
    if (!checkpoint_path.empty()) kv("checkpoint", checkpoint_path);
    kv("split", split);
    return out;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void load_run_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(line_no) +
                                       ": empty key");
    cfg.apply(key, value);
  }
}

}  // namespace mmba
