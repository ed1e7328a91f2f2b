// Command-line front end: synthetic data generation, training, evaluation,
// localization, ablation sweeps and gradient checking over one shared
// key=value configuration.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mmba/checkpoint.hpp"
#include "mmba/config.hpp"
#include "mmba/data.hpp"
#include "mmba/errors.hpp"
#include "mmba/gradcheck_suite.hpp"
#include "mmba/localize.hpp"
#include "mmba/metrics.hpp"
#include "mmba/model.hpp"
#include "mmba/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mmba;

constexpr const char* kUsage = R"(usage: mmba <command> [options]

commands:
  synth      generate a synthetic dataset (train/val/test splits)
  train      train a model on data_dir and write a checkpoint
  eval       detection metrics for a checkpoint on one split
  localize   fake-segment predictions and localization metrics
  ablate     attention-variant x modality-subset comparison table
  gradcheck  finite-difference gradient audit of all ops and variants

options:
  --config PATH    key = value configuration file
  --set KEY=VALUE  override one configuration key (repeatable)
  --out DIR        output directory (default: out)
  --data DIR       dataset directory (default: data)
  --seed N         seed for data generation and training
  --checkpoint P   checkpoint file for eval/localize
  --split NAME     dataset split for eval/localize (train|val|test)
  --help           this text
)";

struct CliArgs {
  std::string command;
  RunConfig cfg;
};

CliArgs parse_args(int argc, char** argv) {
  if (argc < 2) throw ConfigError("missing command; try --help");
  CliArgs args;
  args.command = argv[1];
  if (args.command == "--help" || args.command == "-h") {
    std::fputs(kUsage, stdout);
    std::exit(0);
  }

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> sets;
  std::string out_dir, data_dir, checkpoint, split, seed;
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    if (flag == "--help" || flag == "-h") {
      std::fputs(kUsage, stdout);
      std::exit(0);
    }
    auto need_value = [&](const char* name) -> std::string {
      if (i + 1 >= argc) throw ConfigError(std::string(name) + " needs a value");
      return argv[++i];
    };
    if (flag == "--config") {
      config_path = need_value("--config");
    } else if (flag == "--set") {
      const std::string kv = need_value("--set");
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      sets.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    } else if (flag == "--out") {
      out_dir = need_value("--out");
    } else if (flag == "--data") {
      data_dir = need_value("--data");
    } else if (flag == "--seed") {
      seed = need_value("--seed");
    } else if (flag == "--checkpoint") {
      checkpoint = need_value("--checkpoint");
    } else if (flag == "--split") {
      split = need_value("--split");
    } else {
      throw ConfigError("unknown flag: " + flag);
    }
  }

  if (!config_path.empty()) load_run_config_file(args.cfg, config_path);
  for (const auto& [k, v] : sets) args.cfg.apply(k, v);
  // Dedicated flags win over both the file and --set.
  if (!out_dir.empty()) args.cfg.out_dir = out_dir;
  if (!data_dir.empty()) args.cfg.data_dir = data_dir;
  if (!checkpoint.empty()) args.cfg.checkpoint_path = checkpoint;
  if (!split.empty()) args.cfg.split = split;
  if (!seed.empty()) args.cfg.apply("seed", seed);
  args.cfg.sync_synth();
  return args;
}

void write_config_used(const RunConfig& cfg) {
  io::write_file_atomic((fs::path(cfg.out_dir) / "config_used.txt").string(),
                        cfg.to_text());
}

const char* kSplits[3] = {"train", "val", "test"};

void write_split(const fs::path& dir, const std::vector<LabeledVideo>& videos) {
  std::vector<LabelRecord> labels;
  labels.reserve(videos.size());
  for (const LabeledVideo& lv : videos) {
    write_features((dir / (lv.features.video_id + ".msqf")).string(), lv.features);
    labels.push_back(lv.label);
  }
  write_labels((dir / "labels.txt").string(), labels);
}

std::vector<LabeledVideo> load_split(const RunConfig& cfg, const std::string& split) {
  if (split != "train" && split != "val" && split != "test")
    throw ConfigError("unknown split: " + split);
  const fs::path dir = fs::path(cfg.data_dir) / split;
  std::vector<LabelRecord> labels = read_labels((dir / "labels.txt").string());
  std::vector<LabeledVideo> out;
  out.reserve(labels.size());
  for (LabelRecord& rec : labels) {
    VideoFeatures vf = read_features((dir / (rec.video_id + ".msqf")).string());
    if (vf.video_id != rec.video_id)
      throw DataError("video id mismatch: file says '" + vf.video_id +
                      "', labels say '" + rec.video_id + "'");
    out.push_back(LabeledVideo{std::move(vf), std::move(rec)});
  }
  if (out.empty()) throw DataError("split '" + split + "' is empty");
  return out;
}

// The checkpoint/config duration and stride must agree with the data files.
void check_timing(const ModelConfig& model, const std::vector<LabeledVideo>& videos) {
  for (const LabeledVideo& lv : videos) {
    if (std::abs(lv.features.seq_duration - model.seq_duration) > 1e-6 ||
        std::abs(lv.features.seq_stride - model.seq_stride) > 1e-6)
      throw ConfigError("video " + lv.features.video_id + " uses duration/stride " +
                        std::to_string(lv.features.seq_duration) + "/" +
                        std::to_string(lv.features.seq_stride) +
                        " but the model expects " +
                        std::to_string(model.seq_duration) + "/" +
                        std::to_string(model.seq_stride));
  }
}

int cmd_synth(RunConfig& cfg) {
  SyntheticDataset ds = synth_generate(cfg.synth);
  const fs::path root(cfg.data_dir);
  write_split(root / "train", ds.train);
  write_split(root / "val", ds.val);
  write_split(root / "test", ds.test);
  fs::create_directories(cfg.out_dir);
  write_config_used(cfg);
  std::printf("wrote %zu train / %zu val / %zu test videos to %s\n",
              ds.train.size(), ds.val.size(), ds.test.size(), cfg.data_dir.c_str());
  return 0;
}

int cmd_train(RunConfig& cfg) {
  std::vector<LabeledVideo> train_videos = load_split(cfg, "train");
  std::vector<LabeledVideo> val_videos = load_split(cfg, "val");
  check_timing(cfg.model, train_videos);
  check_timing(cfg.model, val_videos);
  fs::create_directories(cfg.out_dir);

  if (cfg.grid) {
    GridResult gr = grid_search(cfg.model, train_videos, val_videos, cfg.train,
                                default_grid(cfg.train.learning_rate));
    std::string table = "dropout,activation,learning_rate,val_auc\n";
    char line[128];
    for (const GridRow& row : gr.table) {
      std::snprintf(line, sizeof(line), "%.2f,%s,%.6f,%.6f\n", row.cell.dropout,
                    activation_name(row.cell.act).c_str(), row.cell.learning_rate,
                    row.val_auc);
      table += line;
    }
    io::write_file_atomic((fs::path(cfg.out_dir) / "grid.csv").string(), table);
    const GridCell& best = gr.table[gr.best_index].cell;
    cfg.model.dropout = best.dropout;
    cfg.model.act = best.act;
    cfg.train.learning_rate = best.learning_rate;
    std::printf("grid search: best dropout=%.2f activation=%s (val_auc %.4f)\n",
                best.dropout, activation_name(best.act).c_str(),
                gr.table[gr.best_index].val_auc);
  }

  TrainResult tr = train(cfg.model, train_videos, val_videos, cfg.train);
  write_checkpoint((fs::path(cfg.out_dir) / "checkpoint.mmba").string(), cfg.model,
                   tr.best_weights);
  io::write_file_atomic((fs::path(cfg.out_dir) / "train_log.csv").string(), tr.log);
  write_config_used(cfg);
  std::printf("best epoch %d, val_auc %.6f; checkpoint written to %s\n",
              tr.best_epoch, tr.best_val_auc,
              (fs::path(cfg.out_dir) / "checkpoint.mmba").string().c_str());
  return 0;
}

Checkpoint load_required_checkpoint(const RunConfig& cfg) {
  if (cfg.checkpoint_path.empty())
    throw ConfigError("this command needs --checkpoint (or the checkpoint key)");
  return read_checkpoint(cfg.checkpoint_path);
}

int cmd_eval(RunConfig& cfg) {
  Checkpoint ck = load_required_checkpoint(cfg);
  std::vector<LabeledVideo> videos = load_split(cfg, cfg.split);
  check_timing(ck.config, videos);
  std::vector<ScoredLabel> scores = video_scores(ck.weights, ck.config, videos);
  BinaryCounts counts = classify_at_half(scores);
  std::vector<std::pair<std::string, double>> entries{
      {"AUC", auc(scores)}, {"pAUC", pauc(scores, 0.1)}, {"EER", eer(scores)},
      {"ACC", counts.acc()}, {"TPR", counts.tpr()},      {"FPR", counts.fpr()},
  };
  const std::string report = format_metrics_report(entries);
  fs::create_directories(cfg.out_dir);
  io::write_file_atomic(
      (fs::path(cfg.out_dir) / ("metrics_" + cfg.split + ".txt")).string(), report);
  write_config_used(cfg);
  std::fputs(report.c_str(), stdout);
  return 0;
}

int cmd_localize(RunConfig& cfg) {
  Checkpoint ck = load_required_checkpoint(cfg);
  std::vector<LabeledVideo> videos = load_split(cfg, cfg.split);
  check_timing(ck.config, videos);

  LocalizationSet loc;
  std::string pred_lines;
  Rng rng(0);
  for (const LabeledVideo& lv : videos) {
    Graph g;
    ModelWeights<Tensor> bound = bind(g, ck.weights);
    ModelOutput mo = forward(bound, ck.config, lv.features, false, rng);
    std::vector<Segment> segs =
        extract_segments(predictions_from(mo), lv.features.seq_stride,
                         lv.features.video_duration, cfg.score_threshold);
    segs = soft_nms(std::move(segs), cfg.nms);
    char line[160];
    for (const Segment& s : segs) {
      std::snprintf(line, sizeof(line), "%s\t%.6f\t%.6f\t%.6f\n",
                    lv.features.video_id.c_str(), s.span.start, s.span.end, s.score);
      pred_lines += line;
    }
    loc.push_back(VideoLocalization{std::move(segs), lv.label.segments});
  }

  fs::create_directories(cfg.out_dir);
  io::write_file_atomic(
      (fs::path(cfg.out_dir) / ("predictions_" + cfg.split + ".tsv")).string(),
      pred_lines);

  std::vector<std::pair<std::string, double>> entries;
  for (double t : {0.5, 0.75, 0.95}) {
    char name[32];
    std::snprintf(name, sizeof(name), "AP@%.2f", t);
    entries.emplace_back(name, ap_at_iou(loc, t));
  }
  for (int k : {10, 20, 50, 100}) {
    char name[32];
    std::snprintf(name, sizeof(name), "AR@%d", k);
    entries.emplace_back(name, ar_at_k(loc, k));
  }
  std::string report = "# AR averaged over IoU thresholds 0.50:0.05:0.95\n";
  report += format_metrics_report(entries);
  io::write_file_atomic(
      (fs::path(cfg.out_dir) / ("localization_" + cfg.split + ".txt")).string(),
      report);
  write_config_used(cfg);
  std::fputs(report.c_str(), stdout);
  return 0;
}

int cmd_ablate(RunConfig& cfg) {
  std::vector<LabeledVideo> train_videos = load_split(cfg, "train");
  std::vector<LabeledVideo> val_videos = load_split(cfg, "val");
  std::vector<LabeledVideo> test_videos = load_split(cfg, "test");
  check_timing(cfg.model, train_videos);

  struct Cell {
    AttentionVariant variant;
    const char* modalities;
  };
  const Cell cells[] = {
      {AttentionVariant::MMMS_BA, "vla"}, {AttentionVariant::MMMS_BA, "vl"},
      {AttentionVariant::MMMS_BA, "va"},  {AttentionVariant::MMMS_BA, "la"},
      {AttentionVariant::MMUS_SA, "vla"}, {AttentionVariant::MS_SA, "vla"},
  };

  std::string table = "variant,modalities,val_auc,test_auc\n";
  std::printf("variant,modalities,val_auc,test_auc\n");
  for (const Cell& cell : cells) {
    ModelConfig mc = cfg.model;
    mc.variant = cell.variant;
    mc.modalities = ModalitySet::parse(cell.modalities);
    TrainResult tr = train(mc, train_videos, val_videos, cfg.train);
    const double test_auc = auc(video_scores(tr.best_weights, mc, test_videos));
    char line[128];
    std::snprintf(line, sizeof(line), "%s,%s,%.6f,%.6f\n",
                  variant_name(cell.variant).c_str(), cell.modalities,
                  tr.best_val_auc, test_auc);
    table += line;
    std::fputs(line, stdout);
  }
  fs::create_directories(cfg.out_dir);
  io::write_file_atomic((fs::path(cfg.out_dir) / "ablation.csv").string(), table);
  write_config_used(cfg);
  return 0;
}

int cmd_gradcheck(RunConfig& cfg) {
  std::vector<NamedCheck> checks = run_gradcheck_suite(cfg.train.seed);
  bool all_ok = true;
  double worst = 0.0;
  std::string report;
  char line[128];
  for (const NamedCheck& c : checks) {
    std::snprintf(line, sizeof(line), "%-28s max_rel_err %.3e  %s\n", c.name.c_str(),
                  c.max_rel_err, c.ok ? "ok" : "FAIL");
    report += line;
    all_ok = all_ok && c.ok;
    worst = std::max(worst, c.max_rel_err);
  }
  std::snprintf(line, sizeof(line), "overall max_rel_err %.3e (%zu checks)\n", worst,
                checks.size());
  report += line;
  std::fputs(report.c_str(), stdout);
  fs::create_directories(cfg.out_dir);
  io::write_file_atomic((fs::path(cfg.out_dir) / "gradcheck.txt").string(), report);
  if (!all_ok) {
    std::fprintf(stderr, "error: gradient check failed\n");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    CliArgs args = parse_args(argc, argv);
    if (args.command == "synth") return cmd_synth(args.cfg);
    if (args.command == "train") return cmd_train(args.cfg);
    if (args.command == "eval") return cmd_eval(args.cfg);
    if (args.command == "localize") return cmd_localize(args.cfg);
    if (args.command == "ablate") return cmd_ablate(args.cfg);
    if (args.command == "gradcheck") return cmd_gradcheck(args.cfg);
    throw ConfigError("unknown command: " + args.command);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
