#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mmba/errors.hpp"
#include "mmba/interval.hpp"
#include "mmba/mat.hpp"
#include "mmba/rng.hpp"

namespace mmba {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// One video's per-sequence features for the three modalities, plus the
// timing needed to map sequence indices to seconds.
struct VideoFeatures {
  std::string video_id;
  Mat xv, xl, xa;  // N x d_v, N x d_l, N x d_a
  double seq_duration = 0.5;
  double seq_stride = 0.5;
  double video_duration = 0.0;

  int n() const { return xv.rows(); }

  void validate() const {
    if (xv.rows() < 1)
      throw DataError("video " + video_id + ": no sequences");
    if (xl.rows() != xv.rows() || xa.rows() != xv.rows())
      throw DataError("video " + video_id + ": modality row counts differ");
    if (seq_duration <= 0.0 || seq_stride <= 0.0)
      throw DataError("video " + video_id + ": nonpositive duration or stride");
    const double need = (xv.rows() - 1) * seq_stride + seq_duration;
    if (video_duration + 1e-6 < need)
      throw DataError("video " + video_id + ": video_duration " +
                      std::to_string(video_duration) + " shorter than " +
                      std::to_string(need));
  }

  Interval window(int i) const {
    const double s = i * seq_stride;
    return Interval{s, s + seq_duration};
  }
};

struct LabelRecord {
  std::string video_id;
  bool fake = false;
  std::vector<Interval> segments;  // sorted, non-overlapping
};

// Per-sequence binary labels: c_i = 1 iff window i overlaps a fake segment
// by at least half the window length.
inline std::vector<int> derive_sequence_labels(const std::vector<Interval>& segments,
                                               int n, double duration,
                                               double stride) {
  std::vector<int> c(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const Interval w{i * stride, i * stride + duration};
    for (const Interval& s : segments) {
      if (intersection_length(w, s) >= 0.5 * duration) {
        c[static_cast<std::size_t>(i)] = 1;
        break;
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Binary feature file ("MSQF")
// ---------------------------------------------------------------------------
// Layout: magic "MSQF", u16 version=1, u32 N, u32 d_v, u32 d_l, u32 d_a,
// f32 seq_duration, f32 seq_stride, f32 video_duration, then X_v, X_l, X_a
// row-major little-endian f32, then u16 length + video_id bytes.

namespace io {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

// Cursor over a byte buffer; every underrun reports the offending offset.
class Reader {
 public:
  Reader(const std::string& bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size())
      throw FormatError(origin_ + ": truncated while reading " + std::string(what) +
                        " at byte " + std::to_string(pos_));
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i)
      v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  float f32(const char* what) {
    std::uint32_t bits = u32(what);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  double f64(const char* what) {
    std::uint64_t bits = u64(what);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_end() {
    if (pos_ != bytes_.size())
      throw FormatError(origin_ + ": trailing bytes at offset " + std::to_string(pos_));
  }

 private:
  const std::string& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write via a temp file in the same directory, then rename into place.
inline void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path + ": " + ec.message());
}

}  // namespace io

inline constexpr char kFeatureMagic[4] = {'M', 'S', 'Q', 'F'};
inline constexpr std::uint16_t kFeatureVersion = 1;

inline void write_features(const std::string& path, const VideoFeatures& vf) {
  vf.validate();
  std::string out;
  out.append(kFeatureMagic, 4);
  io::put_u16(out, kFeatureVersion);
  io::put_u32(out, static_cast<std::uint32_t>(vf.n()));
  io::put_u32(out, static_cast<std::uint32_t>(vf.xv.cols()));
  io::put_u32(out, static_cast<std::uint32_t>(vf.xl.cols()));
  io::put_u32(out, static_cast<std::uint32_t>(vf.xa.cols()));
  io::put_f32(out, static_cast<float>(vf.seq_duration));
  io::put_f32(out, static_cast<float>(vf.seq_stride));
  io::put_f32(out, static_cast<float>(vf.video_duration));
  for (const Mat* m : {&vf.xv, &vf.xl, &vf.xa})
    for (double x : *m) io::put_f32(out, static_cast<float>(x));
  if (vf.video_id.size() > 0xffff)
    throw DataError("video id longer than 65535 bytes");
  io::put_u16(out, static_cast<std::uint16_t>(vf.video_id.size()));
  out += vf.video_id;
  io::write_file_atomic(path, out);
}

inline VideoFeatures read_features(const std::string& path) {
  const std::string bytes = io::read_file_bytes(path);
  io::Reader r(bytes, path);
  const std::string magic = r.str(4, "magic");
  if (std::memcmp(magic.data(), kFeatureMagic, 4) != 0)
    throw FormatError(path + ": bad magic at byte 0");
  const std::uint16_t version = r.u16("version");
  if (version != kFeatureVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(version) +
                      " at byte 4");
  const std::uint32_t n = r.u32("sequence count");
  const std::uint32_t dv = r.u32("d_v");
  const std::uint32_t dl = r.u32("d_l");
  const std::uint32_t da = r.u32("d_a");
  VideoFeatures vf;
  vf.seq_duration = r.f32("seq_duration");
  vf.seq_stride = r.f32("seq_stride");
  vf.video_duration = r.f32("video_duration");
  auto read_mat = [&r, n](std::uint32_t d, const char* what) {
    Mat m(static_cast<int>(n), static_cast<int>(d));
    for (auto& x : m) x = r.f32(what);
    return m;
  };
  vf.xv = read_mat(dv, "X_v");
  vf.xl = read_mat(dl, "X_l");
  vf.xa = read_mat(da, "X_a");
  const std::uint16_t id_len = r.u16("video_id length");
  vf.video_id = r.str(id_len, "video_id");
  r.expect_end();
  return vf;
}

// ---------------------------------------------------------------------------
// Label text file
// ---------------------------------------------------------------------------
// One record per line: "video_id label" for real videos,
// "video_id label start-end[;start-end...]" for fake ones. Seconds with
// 6-decimal formatting on write; any parseable float on read.

inline std::string format_seconds(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline void write_labels(const std::string& path,
                         const std::vector<LabelRecord>& records) {
  std::string out;
  for (const LabelRecord& rec : records) {
    out += rec.video_id;
    out += rec.fake ? " fake" : " real";
    if (!rec.segments.empty()) {
      out += ' ';
      for (std::size_t i = 0; i < rec.segments.size(); ++i) {
        if (i) out += ';';
        out += format_seconds(rec.segments[i].start) + "-" +
               format_seconds(rec.segments[i].end);
      }
    }
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

inline std::vector<LabelRecord> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<LabelRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    LabelRecord rec;
    std::string label_word, seg_word;
    ls >> rec.video_id >> label_word;
    const std::string where = path + ":" + std::to_string(line_no);
    if (rec.video_id.empty() || label_word.empty())
      throw DataError(where + ": expected 'video_id label [segments]'");
    if (label_word == "fake") {
      rec.fake = true;
    } else if (label_word != "real") {
      throw DataError(where + ": unknown label '" + label_word + "'");
    }
    if (ls >> seg_word) {
      std::string extra;
      if (ls >> extra) throw DataError(where + ": unexpected trailing field");
      std::istringstream segs(seg_word);
      std::string one;
      while (std::getline(segs, one, ';')) {
        const auto dash = one.find('-', 1);  // position 0 would be a sign
        if (dash == std::string::npos)
          throw DataError(where + ": segment '" + one + "' is not start-end");
        try {
          std::size_t used = 0;
          const double s = std::stod(one.substr(0, dash), &used);
          if (used != dash) throw std::invalid_argument("junk");
          const std::string tail = one.substr(dash + 1);
          const double e = std::stod(tail, &used);
          if (used != tail.size()) throw std::invalid_argument("junk");
          rec.segments.push_back(Interval{s, e});
        } catch (const std::exception&) {
          throw DataError(where + ": cannot parse segment '" + one + "'");
        }
      }
    }
    if (rec.fake && rec.segments.empty())
      throw DataError(where + ": fake video without segments");
    if (!rec.fake && !rec.segments.empty())
      throw DataError(where + ": real video with segments");
    std::sort(rec.segments.begin(), rec.segments.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < rec.segments.size(); ++i) {
      const Interval& s = rec.segments[i];
      if (s.start < 0.0 || s.end <= s.start)
        throw DataError(where + ": invalid segment " + format_seconds(s.start) +
                        "-" + format_seconds(s.end));
      if (i > 0 && s.start < rec.segments[i - 1].end)
        throw DataError(where + ": overlapping segments");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Synthetic cross-modal-inconsistency generator
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  int videos = 200;
  int n_seq = 20;
  int d_v = 32, d_l = 32, d_a = 32;
  double fake_video_ratio = 0.5;
  int fake_count_min = 2, fake_count_max = 4;
  // Defaults put each fake segment on exactly one window so the offset
  // targets are grid-aligned; wider ranges work but leave the regression
  // head interpolating between window spans.
  double seg_len_min = 0.5, seg_len_max = 0.5;
  double rho = 0.9;       // cross-modal correlation strength
  double noise = 0.1;
  double seq_duration = 0.5;
  double seq_stride = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (videos < 1 || n_seq < 1) throw ConfigError("synth: videos and n_seq must be >= 1");
    if (d_v < 1 || d_l < 1 || d_a < 1) throw ConfigError("synth: widths must be >= 1");
    if (fake_video_ratio < 0.0 || fake_video_ratio > 1.0)
      throw ConfigError("synth: fake_video_ratio must lie in [0,1]");
    if (rho < 0.0 || rho > 1.0) throw ConfigError("synth: rho must lie in [0,1]");
    if (noise < 0.0) throw ConfigError("synth: noise must be >= 0");
    if (fake_count_min < 1 || fake_count_max < fake_count_min)
      throw ConfigError("synth: bad fake segment count range");
    if (seg_len_min <= 0.0 || seg_len_max < seg_len_min)
      throw ConfigError("synth: bad segment length range");
    if (seq_duration <= 0.0 || seq_stride <= 0.0)
      throw ConfigError("synth: duration and stride must be > 0");
  }
};

struct LabeledVideo {
  VideoFeatures features;
  LabelRecord label;
};

struct SyntheticDataset {
  std::vector<LabeledVideo> train, val, test;
};

namespace detail {

inline constexpr int kLatentDim = 8;
// Mean shift applied to perturbed windows, in latent units. Decorrelation
// alone is symmetric in distribution; the shift gives fake windows a
// detectable signature on top of the broken correlation. 6 latent-noise
// units puts single-window, single-modality perturbations far enough out
// that window posteriors saturate, which max-pooled video scores and
// threshold-based segment extraction both depend on.
inline constexpr double kFakeLatentShift = 6.0;

inline std::vector<double> draw_latent(Rng& rng) {
  std::vector<double> z(kLatentDim);
  for (auto& x : z) x = rng.normal();
  return z;
}

// Places `count` non-overlapping segments on the window grid. Lengths are
// snapped to whole windows so fake regions line up with sequence labels.
inline std::vector<Interval> place_segments(const SyntheticSpec& spec, int count,
                                            Rng& rng) {
  const double stride = spec.seq_stride;
  std::vector<Interval> placed;
  for (int s = 0; s < count; ++s) {
    const double want = rng.uniform(spec.seg_len_min, spec.seg_len_max);
    int len_w = static_cast<int>(std::lround(want / stride));
    const int min_w = static_cast<int>(std::ceil(spec.seq_duration / stride - 1e-9));
    len_w = std::max(len_w, std::max(1, min_w));
    if (len_w > spec.n_seq)
      throw ConfigError("synth: segment length " + std::to_string(want) +
                        "s exceeds video length");
    bool ok = false;
    for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
      const int start_w = rng.uniform_int(0, spec.n_seq - len_w);
      Interval cand{start_w * stride, (start_w + len_w) * stride};
      ok = true;
      for (const Interval& p : placed)
        if (intersection_length(cand, p) > 0.0) {
          ok = false;
          break;
        }
      if (ok) placed.push_back(cand);
    }
    if (!ok)
      throw ConfigError("synth: could not place " + std::to_string(count) +
                        " non-overlapping segments in " + std::to_string(spec.n_seq) +
                        " windows");
  }
  std::sort(placed.begin(), placed.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  return placed;
}

}  // namespace detail

// Real sequences share a latent per position across modalities (strength
// rho); fake segments re-draw the latent for a random subset of modalities,
// which both decorrelates them from the rest and shifts their mean.
inline SyntheticDataset synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng base(spec.seed);

  // Dataset-level mixing maps and the latent shift direction.
  const double wscale = 1.0 / std::sqrt(static_cast<double>(detail::kLatentDim));
  Mat w[3];
  const int widths[3] = {spec.d_v, spec.d_l, spec.d_a};
  for (int m = 0; m < 3; ++m) w[m] = Mat::gaussian(widths[m], detail::kLatentDim, wscale, base);
  std::vector<double> shift_dir = detail::draw_latent(base);
  {
    double norm = 0.0;
    for (double x : shift_dir) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : shift_dir) x /= norm;
  }

  SyntheticDataset out;
  const int n_train = static_cast<int>(spec.videos * 0.70);
  const int n_val = static_cast<int>(spec.videos * 0.15);

  for (int v = 0; v < spec.videos; ++v) {
    Rng rng = base.fork(static_cast<std::uint64_t>(v));
    const bool fake = rng.bernoulli(spec.fake_video_ratio);

    // Clean latents, per position and per modality.
    std::vector<std::vector<double>> z(static_cast<std::size_t>(spec.n_seq));
    for (auto& zi : z) zi = detail::draw_latent(rng);
    std::vector<std::vector<std::vector<double>>> p(3);
    for (int m = 0; m < 3; ++m) {
      p[m].resize(static_cast<std::size_t>(spec.n_seq));
      for (auto& pi : p[m]) pi = detail::draw_latent(rng);
    }

    LabelRecord label;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "v%04d", v);
    label.video_id = idbuf;
    label.fake = fake;

    // Which (modality, window) latents to replace.
    std::vector<std::array<bool, 3>> perturbed(
        static_cast<std::size_t>(spec.n_seq), std::array<bool, 3>{false, false, false});
    if (fake) {
      const int count = rng.uniform_int(spec.fake_count_min, spec.fake_count_max);
      label.segments = detail::place_segments(spec, count, rng);
      for (const Interval& seg : label.segments) {
        // Size 1..3 subset of modalities, chosen without replacement.
        const int subset = rng.uniform_int(1, 3);
        std::array<int, 3> order{0, 1, 2};
        for (int i = 2; i > 0; --i)
          std::swap(order[static_cast<std::size_t>(i)],
                    order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
        for (int i = 0; i < spec.n_seq; ++i) {
          const Interval win{i * spec.seq_stride, i * spec.seq_stride + spec.seq_duration};
          if (intersection_length(win, seg) >= 0.5 * spec.seq_duration) {
            std::vector<double> fresh = detail::draw_latent(rng);
            // Replace the shared latent for the chosen modalities only; a
            // window already perturbed by a neighboring segment is left as is.
            for (int k = 0; k < subset; ++k) {
              const int m = order[static_cast<std::size_t>(k)];
              auto& flag = perturbed[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
              if (flag) continue;
              flag = true;
              auto& pm = p[m][static_cast<std::size_t>(i)];
              for (int d = 0; d < detail::kLatentDim; ++d) {
                const double mix = spec.rho * fresh[static_cast<std::size_t>(d)] +
                                   std::sqrt(1.0 - spec.rho * spec.rho) *
                                       pm[static_cast<std::size_t>(d)];
                pm[static_cast<std::size_t>(d)] =
                    mix + detail::kFakeLatentShift * shift_dir[static_cast<std::size_t>(d)];
              }
            }
          }
        }
      }
    }

    VideoFeatures vf;
    vf.video_id = label.video_id;
    vf.seq_duration = spec.seq_duration;
    vf.seq_stride = spec.seq_stride;
    vf.video_duration = (spec.n_seq - 1) * spec.seq_stride + spec.seq_duration;
    Mat* mats[3] = {&vf.xv, &vf.xl, &vf.xa};
    for (int m = 0; m < 3; ++m) *mats[m] = Mat(spec.n_seq, widths[m]);
    const double blend = std::sqrt(1.0 - spec.rho * spec.rho);
    for (int m = 0; m < 3; ++m) {
      for (int i = 0; i < spec.n_seq; ++i) {
        std::vector<double> latent(detail::kLatentDim);
        const auto& zi = z[static_cast<std::size_t>(i)];
        const auto& pm = p[m][static_cast<std::size_t>(i)];
        const bool pert = perturbed[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
        for (int d = 0; d < detail::kLatentDim; ++d) {
          // Perturbed entries already hold the full replacement latent.
          latent[static_cast<std::size_t>(d)] =
              pert ? pm[static_cast<std::size_t>(d)]
                   : spec.rho * zi[static_cast<std::size_t>(d)] +
                         blend * pm[static_cast<std::size_t>(d)];
        }
        for (int col = 0; col < widths[m]; ++col) {
          double acc = 0.0;
          for (int d = 0; d < detail::kLatentDim; ++d)
            acc += w[m](col, d) * latent[static_cast<std::size_t>(d)];
          (*mats[m])(i, col) = acc + spec.noise * rng.normal();
        }
      }
    }

    LabeledVideo lv{std::move(vf), std::move(label)};
    if (v < n_train) {
      out.train.push_back(std::move(lv));
    } else if (v < n_train + n_val) {
      out.val.push_back(std::move(lv));
    } else {
      out.test.push_back(std::move(lv));
    }
  }
  return out;
}

}  // namespace mmba
