#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mmba/gradcheck_suite.hpp"
#include "mmba/model.hpp"

using namespace mmba;

namespace {

ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.d_v = 3;
  cfg.d_l = 3;
  cfg.d_a = 3;
  cfg.gru_hidden = 2;
  cfg.d_proj = 2;
  cfg.head_hidden = 3;
  cfg.dropout = 0.0;
  return cfg;
}

ModelWeights<Mat> zero_weights(const ModelConfig& cfg) {
  Rng rng(0);
  ModelWeights<Mat> w = init_weights(cfg, rng);
  w.visit([](Mat& m) {
    for (auto& x : m) x = 0.0;
  });
  return w;
}

VideoFeatures toy_features(const ModelConfig& cfg, int n, Rng& rng) {
  VideoFeatures vf;
  vf.video_id = "t";
  vf.seq_duration = cfg.seq_duration;
  vf.seq_stride = cfg.seq_stride;
  vf.video_duration = n * cfg.seq_stride;
  vf.xv = Mat::gaussian(n, cfg.d_v, 1.0, rng);
  vf.xl = Mat::gaussian(n, cfg.d_l, 1.0, rng);
  vf.xa = Mat::gaussian(n, cfg.d_a, 1.0, rng);
  return vf;
}

}  // namespace

TEST_CASE("focal loss closed forms") {
  REQUIRE(focal_loss(1.0 - 1e-12, 1, 0.25, 2.0) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(focal_loss(0.5, 1, 1.0, 2.0) == Catch::Approx(0.25 * std::log(2.0)));
  // gamma = 0 reduces to plain cross-entropy.
  REQUIRE(focal_loss(0.25, 1, 1.0, 0.0) == Catch::Approx(std::log(4.0)));
  REQUIRE(focal_loss(0.75, 0, 1.0, 0.0) == Catch::Approx(std::log(4.0)));
  // Clamping keeps the endpoints finite.
  REQUIRE(std::isfinite(focal_loss(0.0, 1, 0.25, 2.0)));
  REQUIRE(std::isfinite(focal_loss(1.0, 0, 0.25, 2.0)));
}

TEST_CASE("segment regression loss closed forms") {
  const Interval unit{0.0, 1.0};
  REQUIRE(segment_reg_loss(unit, unit, RegLoss::DIoU) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(segment_reg_loss(unit, unit, RegLoss::GIoU) == Catch::Approx(0.0).margin(1e-15));

  const Interval pred{0.0, 2.0}, gt{1.0, 3.0};
  REQUIRE(segment_reg_loss(pred, gt, RegLoss::DIoU) == Catch::Approx(7.0 / 9.0));
  REQUIRE(segment_reg_loss(pred, gt, RegLoss::GIoU) == Catch::Approx(2.0 / 3.0));

  // Degenerate predictions collapse to a point at the start.
  const double d = segment_reg_loss(Interval{1.5, 0.5}, gt, RegLoss::DIoU);
  REQUIRE(d == Catch::Approx(segment_reg_loss(Interval{1.5, 1.5}, gt, RegLoss::DIoU)));

  REQUIRE_THROWS_AS(segment_reg_loss(unit, Interval{1.0, 1.0}, RegLoss::DIoU), DataError);
}

TEST_CASE("regression losses stay within [0, 2)") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Interval pred{rng.uniform(-3, 3), 0.0};
    pred.end = pred.start + rng.uniform(0, 2);
    Interval gt{rng.uniform(-3, 3), 0.0};
    gt.end = gt.start + rng.uniform(0.1, 2);
    for (RegLoss kind : {RegLoss::DIoU, RegLoss::GIoU}) {
      const double v = segment_reg_loss(pred, gt, kind);
      REQUIRE(v >= 0.0);
      REQUIRE(v < 2.0);
    }
  }
}

TEST_CASE("all-zero parameters predict maximum uncertainty") {
  ModelConfig cfg = toy_config();
  ModelWeights<Mat> w = zero_weights(cfg);
  Rng rng(12);
  for (int n : {1, 4}) {
    VideoFeatures vf = toy_features(cfg, n, rng);
    Graph g;
    Rng drop(0);
    ModelOutput out = forward(bind(g, w), cfg, vf, /*training=*/false, drop);
    auto preds = predictions_from(out);
    REQUIRE(static_cast<int>(preds.size()) == n);
    for (const auto& p : preds) {
      REQUIRE(p.p_fake == Catch::Approx(0.5));
      REQUIRE(p.start_offset == 0.0);
      REQUIRE(p.end_offset == 0.0);
    }
  }
}

TEST_CASE("class probabilities sum to one per sequence") {
  ModelConfig cfg = toy_config();
  Rng wr(13);
  ModelWeights<Mat> w = init_weights(cfg, wr);
  Rng rng(14);
  VideoFeatures vf = toy_features(cfg, 5, rng);
  for (auto variant : {AttentionVariant::MMMS_BA, AttentionVariant::MMUS_SA,
                       AttentionVariant::MS_SA}) {
    cfg.variant = variant;
    Rng wr2(13);
    ModelWeights<Mat> wv = init_weights(cfg, wr2);
    Graph g;
    Rng drop(0);
    ModelOutput out = forward(bind(g, wv), cfg, vf, false, drop);
    for (int i = 0; i < 5; ++i)
      REQUIRE(out.probs.value()(i, 0) + out.probs.value()(i, 1) ==
              Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("combined loss matches a hand evaluation of the objective") {
  ModelConfig cfg = toy_config();
  cfg.focal_alpha = 1.0;
  cfg.focal_gamma = 2.0;
  cfg.lambda_reg = 1.0;

  // Two sequences: the first real, the second fake with a known segment.
  Mat probs = Mat::from(2, 2, {0.8, 0.2, 0.3, 0.7});
  Mat offsets = Mat::from(2, 2, {0.0, 0.0, 0.1, 0.45});
  ModelOutput out{Tensor(probs), Tensor(offsets)};
  VideoTarget target;
  target.c = {0, 1};
  target.segments = {Interval{0.5, 1.0}};
  target.fake = true;

  const double ws = 1 * cfg.seq_stride;
  const double expected =
      focal_loss(0.2, 0, 1.0, 2.0) + focal_loss(0.7, 1, 1.0, 2.0) +
      segment_reg_loss(Interval{ws + 0.1, ws + 0.45}, target.segments[0],
                       RegLoss::DIoU);
  REQUIRE(combined_loss(out, target, cfg).scalar() ==
          Catch::Approx(expected).margin(1e-12));

  // The giou variant swaps only the regression term.
  cfg.reg_loss = RegLoss::GIoU;
  const double expected_g =
      focal_loss(0.2, 0, 1.0, 2.0) + focal_loss(0.7, 1, 1.0, 2.0) +
      segment_reg_loss(Interval{ws + 0.1, ws + 0.45}, target.segments[0],
                       RegLoss::GIoU);
  REQUIRE(combined_loss(out, target, cfg).scalar() ==
          Catch::Approx(expected_g).margin(1e-12));
}

TEST_CASE("combined loss normalizes by the fake count") {
  ModelConfig cfg = toy_config();
  cfg.focal_alpha = 1.0;
  Mat probs = Mat::from(2, 2, {0.4, 0.6, 0.1, 0.9});
  Mat offsets = Mat::from(2, 2, {0.0, 0.5, 0.0, 0.5});
  ModelOutput out{Tensor(probs), Tensor(offsets)};
  VideoTarget target;
  target.c = {1, 1};
  target.segments = {Interval{0.0, 0.5}, Interval{0.5, 1.0}};
  target.fake = true;

  const double reg0 = segment_reg_loss(Interval{0.0, 0.5}, target.segments[0], cfg.reg_loss);
  const double reg1 = segment_reg_loss(Interval{0.5, 1.0}, target.segments[1], cfg.reg_loss);
  const double expected = (focal_loss(0.6, 1, 1.0, 2.0) + focal_loss(0.9, 1, 1.0, 2.0) +
                           cfg.lambda_reg * (reg0 + reg1)) /
                          2.0;
  REQUIRE(combined_loss(out, target, cfg).scalar() == Catch::Approx(expected).margin(1e-12));

  // Doubling lambda doubles only the regression share.
  cfg.lambda_reg = 2.0;
  const double expected2 = (focal_loss(0.6, 1, 1.0, 2.0) + focal_loss(0.9, 1, 1.0, 2.0) +
                            2.0 * (reg0 + reg1)) /
                           2.0;
  REQUIRE(combined_loss(out, target, cfg).scalar() == Catch::Approx(expected2).margin(1e-12));
}

TEST_CASE("all-real videos keep the plain classification sum") {
  ModelConfig cfg = toy_config();
  Mat probs = Mat::from(3, 2, {0.9, 0.1, 0.8, 0.2, 0.7, 0.3});
  ModelOutput out{Tensor(probs), Tensor(Mat(3, 2))};
  VideoTarget target;
  target.c = {0, 0, 0};

  double expected = 0.0;
  for (int i = 0; i < 3; ++i)
    expected += focal_loss(probs(i, 1), 0, cfg.focal_alpha, cfg.focal_gamma);
  REQUIRE(combined_loss(out, target, cfg).scalar() == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("near-perfect predictions give near-zero loss") {
  ModelConfig cfg = toy_config();
  Mat probs = Mat::from(1, 2, {1e-15, 1.0 - 1e-15});
  Mat offsets = Mat::from(1, 2, {0.0, 0.5});
  ModelOutput out{Tensor(probs), Tensor(offsets)};
  VideoTarget target;
  target.c = {1};
  target.segments = {Interval{0.0, 0.5}};
  target.fake = true;
  REQUIRE(combined_loss(out, target, cfg).scalar() == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("combined loss rejects label count mismatch") {
  ModelConfig cfg = toy_config();
  ModelOutput out{Tensor(Mat(2, 2)), Tensor(Mat(2, 2))};
  VideoTarget target;
  target.c = {0, 0, 0};
  REQUIRE_THROWS_AS(combined_loss(out, target, cfg), DataError);
}

TEST_CASE("video score takes the sequence maximum") {
  std::vector<SequencePrediction> preds{{0.1, 0, 0}, {0.9, 0, 0}, {0.2, 0, 0}};
  REQUIRE(video_score(preds) == 0.9);
  std::vector<SequencePrediction> flat{{0.5, 0, 0}, {0.5, 0, 0}};
  REQUIRE(video_score(flat) == 0.5);
  preds[0].p_fake = 0.95;
  REQUIRE(video_score(preds) == 0.95);
  REQUIRE_THROWS_AS(video_score({}), DataError);
}

TEST_CASE("model configuration validation") {
  ModelConfig cfg = toy_config();
  cfg.modalities = ModalitySet::parse("v");
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);

  cfg = toy_config();
  cfg.variant = AttentionVariant::MMUS_SA;
  cfg.modalities = ModalitySet::parse("vl");
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  cfg.variant = AttentionVariant::MS_SA;
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);

  cfg = toy_config();
  cfg.dropout = 1.0;
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  cfg = toy_config();
  cfg.lambda_reg = -0.5;
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);

  REQUIRE_THROWS_AS(ModalitySet::parse("vx"), ConfigError);
  REQUIRE_THROWS_AS(parse_variant("bogus"), ConfigError);
  REQUIRE_THROWS_AS(parse_reg_loss("l2"), ConfigError);
}

TEST_CASE("fused width per variant and subset") {
  ModelConfig cfg = toy_config();
  cfg.d_proj = 100;
  REQUIRE(cfg.fused_width() == 900);
  cfg.modalities = ModalitySet::parse("vl");
  REQUIRE(cfg.fused_width() == 400);
  cfg.modalities = ModalitySet::parse("vla");
  cfg.variant = AttentionVariant::MMUS_SA;
  REQUIRE(cfg.fused_width() == 600);
  cfg.variant = AttentionVariant::MS_SA;
  REQUIRE(cfg.fused_width() == 600);
}

TEST_CASE("model gradients agree with finite differences") {
  for (auto variant : {AttentionVariant::MMMS_BA, AttentionVariant::MMUS_SA,
                       AttentionVariant::MS_SA}) {
    for (RegLoss reg : {RegLoss::DIoU, RegLoss::GIoU}) {
      NamedCheck check = gradsuite::model_check(variant, reg, 321);
      INFO(check.name << " max_rel_err " << check.max_rel_err);
      REQUIRE(check.ok);
    }
  }
}
