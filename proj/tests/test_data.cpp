#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "mmba/data.hpp"
#include "mmba/metrics.hpp"
#include "mmba/rng.hpp"

using namespace mmba;
namespace fs = std::filesystem;

namespace {

// Per-test scratch directory under the working directory, wiped on entry.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::path("scratch_data") / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

// Feature values must survive the f32 cast in the file format, so the
// fixture quantizes through float up front.
VideoFeatures sample_features(int n, int dv, int dl, int da, std::uint64_t seed) {
  Rng rng(seed);
  VideoFeatures vf;
  vf.video_id = "clip_" + std::to_string(seed);
  vf.seq_duration = 0.5;
  vf.seq_stride = 0.5;
  vf.video_duration = (n - 1) * 0.5 + 0.5;
  Mat* mats[3] = {&vf.xv, &vf.xl, &vf.xa};
  const int widths[3] = {dv, dl, da};
  for (int m = 0; m < 3; ++m) {
    *mats[m] = Mat(n, widths[m]);
    for (auto& x : *mats[m]) x = static_cast<float>(rng.normal());
  }
  return vf;
}

bool mats_equal(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::equal(a.begin(), a.end(), b.begin());
}

// Rank by row-wise Gram-Schmidt with a fixed residual cutoff.
int numeric_rank(const Mat& x, double tol) {
  std::vector<std::vector<double>> basis;
  for (int i = 0; i < x.rows(); ++i) {
    std::vector<double> v(static_cast<std::size_t>(x.cols()));
    for (int j = 0; j < x.cols(); ++j) v[static_cast<std::size_t>(j)] = x(i, j);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) dot += b[j] * v[j];
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * b[j];
    }
    double norm = 0.0;
    for (double c : v) norm += c * c;
    norm = std::sqrt(norm);
    if (norm > tol) {
      for (auto& c : v) c /= norm;
      basis.push_back(v);
    }
  }
  return static_cast<int>(basis.size());
}

}  // namespace

TEST_CASE("feature file roundtrip is bit exact") {
  Scratch sc("roundtrip");
  const VideoFeatures vf = sample_features(5, 7, 3, 4, 21);
  const std::string path = sc.file("clip.msqf");
  write_features(path, vf);
  const VideoFeatures back = read_features(path);
  REQUIRE(back.video_id == vf.video_id);
  REQUIRE(back.n() == 5);
  REQUIRE(back.seq_duration == vf.seq_duration);
  REQUIRE(back.seq_stride == vf.seq_stride);
  REQUIRE(back.video_duration == vf.video_duration);
  REQUIRE(mats_equal(back.xv, vf.xv));
  REQUIRE(mats_equal(back.xl, vf.xl));
  REQUIRE(mats_equal(back.xa, vf.xa));
}

TEST_CASE("feature file corruption reports format errors with offsets") {
  Scratch sc("corrupt");
  const VideoFeatures vf = sample_features(3, 4, 4, 4, 5);
  const std::string path = sc.file("clip.msqf");
  write_features(path, vf);
  const std::string bytes = io::read_file_bytes(path);

  auto rewrite = [&](const std::string& mutated) {
    io::write_file_atomic(path, mutated);
  };

  SECTION("truncations at several depths") {
    for (std::size_t cut : {std::size_t{0}, std::size_t{2}, std::size_t{5},
                            std::size_t{20}, std::size_t{40}, bytes.size() - 1}) {
      rewrite(bytes.substr(0, cut));
      REQUIRE_THROWS_AS(read_features(path), FormatError);
      try {
        read_features(path);
      } catch (const FormatError& e) {
        REQUIRE(std::string(e.what()).find("truncated") != std::string::npos);
        REQUIRE(std::string(e.what()).find(path) != std::string::npos);
      }
    }
  }
  SECTION("bad magic") {
    std::string m = bytes;
    m[0] = 'X';
    rewrite(m);
    REQUIRE_THROWS_WITH(read_features(path),
                        Catch::Matchers::ContainsSubstring("bad magic"));
  }
  SECTION("unsupported version") {
    std::string m = bytes;
    m[4] = 2;
    rewrite(m);
    REQUIRE_THROWS_WITH(read_features(path),
                        Catch::Matchers::ContainsSubstring("unsupported version"));
  }
  SECTION("trailing bytes") {
    rewrite(bytes + '\0');
    REQUIRE_THROWS_WITH(read_features(path),
                        Catch::Matchers::ContainsSubstring("trailing bytes"));
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(read_features(sc.file("nope.msqf")), IoError);
  }
}

TEST_CASE("feature writer rejects inconsistent videos") {
  Scratch sc("reject");
  VideoFeatures empty;
  empty.video_id = "empty";
  REQUIRE_THROWS_AS(write_features(sc.file("e.msqf"), empty), DataError);

  VideoFeatures vf = sample_features(4, 4, 4, 4, 2);
  vf.xl = Mat(3, 4);
  REQUIRE_THROWS_AS(write_features(sc.file("m.msqf"), vf), DataError);

  VideoFeatures shortv = sample_features(4, 4, 4, 4, 3);
  shortv.video_duration = 1.0;  // needs 2.0
  REQUIRE_THROWS_AS(write_features(sc.file("s.msqf"), shortv), DataError);
}

TEST_CASE("label file writes canonical text and reads it back") {
  Scratch sc("labels");
  std::vector<LabelRecord> recs;
  recs.push_back(LabelRecord{"v0000", false, {}});
  recs.push_back(LabelRecord{"v0001", true,
                             {Interval{1.0, 1.5}, Interval{3.0, 3.5}}});
  const std::string path = sc.file("labels.txt");
  write_labels(path, recs);
  REQUIRE(io::read_file_bytes(path) ==
          "v0000 real\nv0001 fake 1.000000-1.500000;3.000000-3.500000\n");

  const auto back = read_labels(path);
  REQUIRE(back.size() == 2);
  REQUIRE_FALSE(back[0].fake);
  REQUIRE(back[0].segments.empty());
  REQUIRE(back[1].fake);
  REQUIRE(back[1].segments.size() == 2);
  REQUIRE(back[1].segments[0].start == 1.0);
  REQUIRE(back[1].segments[1].end == 3.5);
}

TEST_CASE("label parsing accepts short floats, comments, and unsorted input") {
  Scratch sc("parse");
  const std::string path = sc.file("labels.txt");
  io::write_file_atomic(path,
                        "# header comment\n"
                        "\n"
                        "v2 fake 1.0-1.5\n"
                        "v3 fake 4.5-5;0.5-1.25\n");
  const auto recs = read_labels(path);
  REQUIRE(recs.size() == 2);
  REQUIRE(recs[0].segments.size() == 1);
  REQUIRE(recs[0].segments[0].start == 1.0);
  REQUIRE(recs[0].segments[0].end == 1.5);
  // Segments come back sorted by start.
  REQUIRE(recs[1].segments[0].start == 0.5);
  REQUIRE(recs[1].segments[1].end == 5.0);
}

TEST_CASE("label parsing rejects malformed records with location") {
  Scratch sc("badlabels");
  const std::string path = sc.file("labels.txt");
  auto expect_reject = [&](const std::string& line, const std::string& needle) {
    io::write_file_atomic(path, "v0 real\n" + line + "\n");
    REQUIRE_THROWS_AS(read_labels(path), DataError);
    try {
      read_labels(path);
    } catch (const DataError& e) {
      const std::string msg = e.what();
      INFO("line '" << line << "' message '" << msg << "'");
      REQUIRE(msg.find(path + ":2") != std::string::npos);
      REQUIRE(msg.find(needle) != std::string::npos);
    }
  };
  expect_reject("v1 bogus", "unknown label");
  expect_reject("v1 fake", "fake video without segments");
  expect_reject("v1 real 1.0-2.0", "real video with segments");
  expect_reject("v1 fake 1.0_2.0", "not start-end");
  expect_reject("v1 fake 1.0-abc", "cannot parse segment");
  expect_reject("v1 fake 2.0-1.0", "invalid segment");
  expect_reject("v1 fake -0.5-1.0", "invalid segment");
  expect_reject("v1 fake 1.0-2.0 extra", "trailing field");
  expect_reject("v1 fake 1.0-2.5;2.0-3.0", "overlapping segments");
}

TEST_CASE("sequence labels follow the half-overlap rule") {
  // Segment [1.0, 1.5] covers exactly window 2.
  REQUIRE(derive_sequence_labels({Interval{1.0, 1.5}}, 4, 0.5, 0.5) ==
          std::vector<int>{0, 0, 1, 0});
  // [0.75, 1.25] overlaps windows 1 and 2 by a half window each; half counts.
  REQUIRE(derive_sequence_labels({Interval{0.75, 1.25}}, 4, 0.5, 0.5) ==
          std::vector<int>{0, 1, 1, 0});
  // [0.8, 1.2] overlaps each by 0.2 < 0.25, so no window is labeled.
  REQUIRE(derive_sequence_labels({Interval{0.8, 1.2}}, 4, 0.5, 0.5) ==
          std::vector<int>{0, 0, 0, 0});
  // No segments, no labels.
  REQUIRE(derive_sequence_labels({}, 3, 0.5, 0.5) == std::vector<int>{0, 0, 0});
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  SyntheticSpec spec;
  spec.videos = 10;
  spec.n_seq = 6;
  spec.d_v = spec.d_l = spec.d_a = 8;
  spec.seed = 33;
  const auto a = synth_generate(spec);
  const auto b = synth_generate(spec);
  REQUIRE(a.train.size() == 7);
  REQUIRE(a.val.size() == 1);
  REQUIRE(a.test.size() == 2);
  auto check_split = [&](const std::vector<LabeledVideo>& x,
                         const std::vector<LabeledVideo>& y) {
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(x[i].features.video_id == y[i].features.video_id);
      REQUIRE(mats_equal(x[i].features.xv, y[i].features.xv));
      REQUIRE(mats_equal(x[i].features.xl, y[i].features.xl));
      REQUIRE(mats_equal(x[i].features.xa, y[i].features.xa));
      REQUIRE(x[i].label.fake == y[i].label.fake);
      REQUIRE(x[i].label.segments.size() == y[i].label.segments.size());
    }
  };
  check_split(a.train, b.train);
  check_split(a.val, b.val);
  check_split(a.test, b.test);

  SyntheticSpec other = spec;
  other.seed = 34;
  const auto c = synth_generate(other);
  REQUIRE_FALSE(mats_equal(a.train[0].features.xv, c.train[0].features.xv));
}

TEST_CASE("fake ratio extremes control the labels") {
  SyntheticSpec spec;
  spec.videos = 12;
  spec.n_seq = 8;
  spec.d_v = spec.d_l = spec.d_a = 8;
  spec.seed = 3;

  spec.fake_video_ratio = 0.0;
  for (const auto& split : {synth_generate(spec).train, synth_generate(spec).test})
    for (const auto& lv : split) {
      REQUIRE_FALSE(lv.label.fake);
      REQUIRE(lv.label.segments.empty());
    }

  spec.fake_video_ratio = 1.0;
  const auto all_fake = synth_generate(spec);
  for (const auto& lv : all_fake.train) {
    REQUIRE(lv.label.fake);
    REQUIRE(lv.label.segments.size() >= 2);
    REQUIRE(lv.label.segments.size() <= 4);
  }
}

TEST_CASE("fake segments land on the window grid, sorted and disjoint") {
  SyntheticSpec spec;  // defaults: single-window segments on a 0.5 s grid
  spec.videos = 40;
  spec.seed = 9;
  const auto ds = synth_generate(spec);
  int fakes = 0;
  for (const auto& lv : ds.train) {
    const auto& segs = lv.label.segments;
    if (!lv.label.fake) {
      REQUIRE(segs.empty());
      continue;
    }
    ++fakes;
    REQUIRE_FALSE(segs.empty());
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const double start_w = segs[i].start / 0.5;
      REQUIRE(start_w == Catch::Approx(std::round(start_w)).margin(1e-12));
      REQUIRE(segs[i].length() == Catch::Approx(0.5).margin(1e-12));
      if (i > 0) REQUIRE(segs[i].start >= segs[i - 1].end);
    }
    // Single-window segments: the derived labels mark exactly one window each.
    const auto c = derive_sequence_labels(segs, spec.n_seq, spec.seq_duration,
                                          spec.seq_stride);
    int marked = 0;
    for (int ci : c) marked += ci;
    REQUIRE(marked == static_cast<int>(segs.size()));
  }
  REQUIRE(fakes > 0);
  REQUIRE(fakes < static_cast<int>(ds.train.size()));
}

TEST_CASE("noise free features stay in the latent subspace") {
  SyntheticSpec spec;
  spec.videos = 4;
  spec.n_seq = 12;
  spec.d_v = spec.d_l = spec.d_a = 16;
  spec.noise = 0.0;
  spec.seed = 17;
  const auto ds = synth_generate(spec);
  for (const auto& lv : ds.train) {
    // Latent width is 8, so 12 rows in 16 columns stay rank 8 even for
    // perturbed windows (the swap happens inside the latent space).
    REQUIRE(numeric_rank(lv.features.xv, 1e-6) == 8);
    REQUIRE(numeric_rank(lv.features.xl, 1e-6) == 8);
    REQUIRE(numeric_rank(lv.features.xa, 1e-6) == 8);
  }

  spec.noise = 0.1;
  const auto noisy = synth_generate(spec);
  REQUIRE(numeric_rank(noisy.train[0].features.xv, 1e-6) == 12);
}

TEST_CASE("a linear probe separates perturbed windows") {
  const SyntheticSpec spec;  // stock 200-video dataset
  const auto ds = synth_generate(spec);
  const int d = spec.d_v + spec.d_l + spec.d_a;

  auto concat_row = [&](const VideoFeatures& vf, int i, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(d), 0.0);
    int k = 0;
    for (const Mat* m : {&vf.xv, &vf.xl, &vf.xa})
      for (int j = 0; j < m->cols(); ++j) out[static_cast<std::size_t>(k++)] = (*m)(i, j);
  };

  // Direction captured on train: mean perturbed window minus mean clean window.
  std::vector<double> mean_pos(static_cast<std::size_t>(d), 0.0);
  std::vector<double> mean_neg(static_cast<std::size_t>(d), 0.0);
  long n_pos = 0, n_neg = 0;
  std::vector<double> row;
  for (const auto& lv : ds.train) {
    const auto c = derive_sequence_labels(lv.label.segments, lv.features.n(),
                                          spec.seq_duration, spec.seq_stride);
    for (int i = 0; i < lv.features.n(); ++i) {
      concat_row(lv.features, i, row);
      auto& mean = c[static_cast<std::size_t>(i)] ? mean_pos : mean_neg;
      (c[static_cast<std::size_t>(i)] ? n_pos : n_neg) += 1;
      for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
    }
  }
  REQUIRE(n_pos > 0);
  REQUIRE(n_neg > 0);
  std::vector<double> dir(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j)
    dir[static_cast<std::size_t>(j)] = mean_pos[static_cast<std::size_t>(j)] / n_pos -
                                       mean_neg[static_cast<std::size_t>(j)] / n_neg;

  std::vector<ScoredLabel> scored;
  for (const auto& lv : ds.test) {
    const auto c = derive_sequence_labels(lv.label.segments, lv.features.n(),
                                          spec.seq_duration, spec.seq_stride);
    for (int i = 0; i < lv.features.n(); ++i) {
      concat_row(lv.features, i, row);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += dir[static_cast<std::size_t>(j)] * row[static_cast<std::size_t>(j)];
      scored.push_back(ScoredLabel{s, c[static_cast<std::size_t>(i)]});
    }
  }
  REQUIRE(auc(scored) > 0.7);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.videos = 0;
  REQUIRE_THROWS_AS(synth_generate(spec), ConfigError);

  spec = SyntheticSpec{};
  spec.rho = 1.5;
  REQUIRE_THROWS_AS(spec.validate(), ConfigError);

  spec = SyntheticSpec{};
  spec.fake_count_min = 0;
  REQUIRE_THROWS_AS(spec.validate(), ConfigError);

  spec = SyntheticSpec{};
  spec.seg_len_min = 0.0;
  REQUIRE_THROWS_AS(spec.validate(), ConfigError);

  // A segment longer than the video cannot be placed.
  spec = SyntheticSpec{};
  spec.videos = 4;
  spec.n_seq = 2;
  spec.fake_video_ratio = 1.0;
  spec.fake_count_min = spec.fake_count_max = 1;
  spec.seg_len_min = spec.seg_len_max = 3.0;
  REQUIRE_THROWS_AS(synth_generate(spec), ConfigError);

  // Three disjoint segments cannot fit in two windows.
  spec.seg_len_min = spec.seg_len_max = 0.5;
  spec.fake_count_min = spec.fake_count_max = 3;
  REQUIRE_THROWS_AS(synth_generate(spec), ConfigError);
}
