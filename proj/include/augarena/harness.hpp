#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "augarena/dataset.hpp"
#include "augarena/model.hpp"
#include "augarena/policy.hpp"
#include "augarena/selector.hpp"

namespace augarena {

using json = nlohmann::json;

constexpr int kRunSchemaVersion = 1;

struct ExperimentConfig {
  StrategyKind strategy;
  int multiplicity = 1;  // M
  Hyperparams hp;
  std::string dataset_kind = "synthetic";  // "synthetic" | "cifar10"
  SyntheticSpec synthetic;
  std::string cifar_dir;
  int cifar_subset = 0;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  // loss-table mode: full = all policies x full train set; subsampled =
  // one batch x a fresh per-epoch policy subset
  bool losstable_full = false;
  int losstable_batch = 128;
  int losstable_policies = 500;
  double controller_step_size = 0.05;
  double controller_baseline_decay = 0.95;
  int baseline_cutout_level = 2;
  int threads = 0;  // 0 = AUGARENA_THREADS env or hardware concurrency
};

inline json config_to_json(const ExperimentConfig& c) {
  return json{
      {"schema_version", kRunSchemaVersion},
      {"strategy", c.strategy.text()},
      {"multiplicity", c.multiplicity},
      {"base_lr", c.hp.base_lr},
      {"decay_factor", c.hp.decay_factor},
      {"decay_milestones", c.hp.decay_milestones},
      {"nesterov_momentum", c.hp.nesterov_momentum},
      {"weight_decay", c.hp.weight_decay},
      {"warmup_fraction", c.hp.warmup_fraction},
      {"total_epochs", c.hp.total_epochs},
      {"batch_size", c.hp.batch_size},
      {"dataset", c.dataset_kind},
      {"synthetic",
       {{"side", c.synthetic.side},
        {"classes", c.synthetic.num_classes},
        {"train_per_class", c.synthetic.train_per_class},
        {"test_per_class", c.synthetic.test_per_class},
        {"seed", c.synthetic.seed},
        {"noise_level", c.synthetic.noise_level},
        {"stripe_period", c.synthetic.stripe_period},
        {"stripe_amplitude", c.synthetic.stripe_amplitude},
        {"period_ratio", c.synthetic.period_ratio},
        {"angle_jitter", c.synthetic.angle_jitter},
        {"period_jitter", c.synthetic.period_jitter},
        {"amp_jitter", c.synthetic.amp_jitter},
        {"brightness_jitter", c.synthetic.brightness_jitter},
        {"color_strength", c.synthetic.color_strength}}},
      {"cifar_dir", c.cifar_dir},
      {"cifar_subset", c.cifar_subset},
      {"seeds", c.seeds},
      {"losstable_full", c.losstable_full},
      {"losstable_batch", c.losstable_batch},
      {"losstable_policies", c.losstable_policies},
      {"controller_step_size", c.controller_step_size},
      {"controller_baseline_decay", c.controller_baseline_decay},
      {"baseline_cutout_level", c.baseline_cutout_level},
      {"threads", c.threads},
  };
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.strategy = StrategyKind::parse(j.at("strategy").get<std::string>());
  c.multiplicity = j.value("multiplicity", 1);
  c.hp.base_lr = j.value("base_lr", 0.1);
  c.hp.decay_factor = j.value("decay_factor", 0.2);
  if (j.contains("decay_milestones"))
    c.hp.decay_milestones = j.at("decay_milestones").get<std::vector<double>>();
  c.hp.nesterov_momentum = j.value("nesterov_momentum", 0.9);
  c.hp.weight_decay = j.value("weight_decay", 5e-4);
  c.hp.warmup_fraction = j.value("warmup_fraction", 0.05);
  c.hp.total_epochs = j.value("total_epochs", 16);
  c.hp.batch_size = j.value("batch_size", 128);
  c.dataset_kind = j.value("dataset", std::string("synthetic"));
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    c.synthetic.side = s.value("side", 16);
    c.synthetic.num_classes = s.value("classes", 4);
    c.synthetic.train_per_class = s.value("train_per_class", 256);
    c.synthetic.test_per_class = s.value("test_per_class", 128);
    c.synthetic.seed = s.value("seed", std::uint64_t{0});
    SyntheticSpec d;  // field defaults
    c.synthetic.noise_level = s.value("noise_level", d.noise_level);
    c.synthetic.stripe_period = s.value("stripe_period", d.stripe_period);
    c.synthetic.period_ratio = s.value("period_ratio", d.period_ratio);
    c.synthetic.stripe_amplitude =
        s.value("stripe_amplitude", d.stripe_amplitude);
    c.synthetic.angle_jitter = s.value("angle_jitter", d.angle_jitter);
    c.synthetic.period_jitter = s.value("period_jitter", d.period_jitter);
    c.synthetic.amp_jitter = s.value("amp_jitter", d.amp_jitter);
    c.synthetic.brightness_jitter =
        s.value("brightness_jitter", d.brightness_jitter);
    c.synthetic.color_strength = s.value("color_strength", d.color_strength);
  }
  c.cifar_dir = j.value("cifar_dir", std::string());
  c.cifar_subset = j.value("cifar_subset", 0);
  if (j.contains("seeds"))
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.losstable_full = j.value("losstable_full", false);
  c.losstable_batch = j.value("losstable_batch", 128);
  c.losstable_policies = j.value("losstable_policies", 500);
  c.controller_step_size = j.value("controller_step_size", 0.05);
  c.controller_baseline_decay = j.value("controller_baseline_decay", 0.95);
  c.baseline_cutout_level = j.value("baseline_cutout_level", 2);
  c.threads = j.value("threads", 0);
  return c;
}

inline Dataset load_dataset(const ExperimentConfig& c) {
  if (c.dataset_kind == "synthetic") return gen_synthetic(c.synthetic);
  if (c.dataset_kind == "cifar10")
    return load_cifar10(c.cifar_dir, c.cifar_subset);
  throw std::invalid_argument("unknown dataset kind: " + c.dataset_kind);
}

// One applied augmentation: a policy (two ops) or a single op (Baseline).
struct AppliedAug {
  std::vector<AugOp> ops;
  std::string label;  // for the per-epoch log
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> test_acc;    // per epoch
  std::vector<double> lr;          // per epoch
  // fixed selections per epoch (hard policies, "easy", "random", ...)
  std::vector<std::vector<std::string>> selected;
  // usage counters: one increment per op component per batch application
  std::array<std::array<std::uint64_t, kNumMagLevels>, kNumOpKinds> usage{};
  double best_test_acc = 0.0;
  bool diverged = false;
  std::string diagnostic;
  std::string checkpoint;  // path, may be empty
};

inline json run_result_to_json(const RunResult& r) {
  json usage = json::array();
  for (const auto& row : r.usage) usage.push_back(row);
  return json{
      {"schema_version", kRunSchemaVersion},
      {"seed", r.seed},
      {"train_loss", r.train_loss},
      {"test_acc", r.test_acc},
      {"lr", r.lr},
      {"selected", r.selected},
      {"usage", usage},
      {"best_test_acc", r.best_test_acc},
      {"diverged", r.diverged},
      {"diagnostic", r.diagnostic},
      {"checkpoint", r.checkpoint},
  };
}

inline RunResult run_result_from_json(const json& j) {
  RunResult r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.train_loss = j.at("train_loss").get<std::vector<double>>();
  r.test_acc = j.at("test_acc").get<std::vector<double>>();
  r.lr = j.at("lr").get<std::vector<double>>();
  r.selected = j.at("selected").get<std::vector<std::vector<std::string>>>();
  const json& usage = j.at("usage");
  for (int k = 0; k < kNumOpKinds; ++k)
    for (int l = 0; l < kNumMagLevels; ++l)
      r.usage[k][l] = usage.at(k).at(l).get<std::uint64_t>();
  r.best_test_acc = j.at("best_test_acc").get<double>();
  r.diverged = j.at("diverged").get<bool>();
  r.diagnostic = j.value("diagnostic", std::string());
  r.checkpoint = j.value("checkpoint", std::string());
  return r;
}

inline void write_epoch_csv(const RunResult& r, std::ostream& out) {
  out << "epoch,train_loss,test_acc,lr\n";
  for (size_t e = 0; e < r.train_loss.size(); ++e)
    out << e << "," << r.train_loss[e] << "," << r.test_acc[e] << ","
        << r.lr[e] << "\n";
}

namespace detail {

inline double test_accuracy(const ModelParams& params, const Dataset& ds,
                            const ChannelStats& stats) {
  Batch b;
  b.height = ds.test_images[0].height;
  b.width = ds.test_images[0].width;
  b.labels = ds.test_labels;
  for (const Image& img : ds.test_images)
    b.images.push_back(normalize_image(img, stats));
  LossStats s = forward_loss(params, b);
  return static_cast<double>(s.correct_count) / static_cast<double>(b.size());
}

inline void count_usage(RunResult& r, const AppliedAug& aug) {
  for (const AugOp& op : aug.ops)
    r.usage[static_cast<int>(op.kind)][op.level.level]++;
}

inline AppliedAug policy_aug(PolicyId id, std::string label) {
  Policy p = decode(id);
  return AppliedAug{{p.first, p.second}, std::move(label)};
}

}  // namespace detail

// Runs one seeded training run. All randomness is derived from named
// substreams of (seed, epoch, batch-index), so a run replays exactly.
inline RunResult train_run(const ExperimentConfig& config, std::uint64_t seed,
                           const Dataset& ds, const std::string& out_dir = "") {
  const Hyperparams& hp = config.hp;
  const int total = hp.total_epochs;
  const int warmup_end = fraction_to_epoch(hp.warmup_fraction, total);
  const int m = config.multiplicity;
  if (m < 1 || m > 2) throw std::invalid_argument("multiplicity must be 1 or 2");

  ChannelStats stats = compute_channel_stats(ds);
  ArchConfig arch{ds.train_images[0].height, ds.train_images[0].width,
                  ds.num_classes};
  Rng init_rng = substream(seed, "init");
  ModelParams params = init_params(arch, init_rng);

  const bool needs_table = config.strategy.tag == StrategyKind::TrueAdv ||
                           config.strategy.tag == StrategyKind::Curriculum;
  std::optional<LossTable> table;
  std::optional<ControllerState> controller;
  if (config.strategy.tag == StrategyKind::Controller) {
    controller.emplace(enumerate_all());
    controller->step_size = config.controller_step_size;
    controller->baseline_decay = config.controller_baseline_decay;
  }

  const AugOp baseline_op{OpKind::Cutout, MagLevel(config.baseline_cutout_level)};
  const size_t ntrain = ds.train_images.size();

  RunResult result;
  result.seed = seed;

  auto compute_table = [&](int epoch) {
    Rng sub_rng = substream(seed, "subset-sampling", epoch);
    if (config.losstable_full) {
      table = eval_loss_table(params, ds.train_images, ds.train_labels, stats,
                              enumerate_all(), seed, epoch, config.threads);
    } else {
      PolicySet policies = sample_subset(sub_rng, config.losstable_policies);
      // one randomly sampled batch for the subsampled estimate
      std::vector<Image> sample;
      std::vector<int> labels;
      int n = std::min<int>(config.losstable_batch, static_cast<int>(ntrain));
      for (int i = 0; i < n; ++i) {
        size_t idx = uniform_index(sub_rng, ntrain);
        sample.push_back(ds.train_images[idx]);
        labels.push_back(ds.train_labels[idx]);
      }
      table = eval_loss_table(params, sample, labels, stats, policies, seed,
                              epoch, config.threads);
    }
  };

  try {
    for (int epoch = 0; epoch < total; ++epoch) {
      double lr = lr_at(hp, epoch);
      bool augmented = epoch >= warmup_end;

      // epoch-fixed selections: hard slots, trueadv argmax
      std::vector<SlotSelection> slots;  // curriculum only
      PolicySet trueadv_ids;             // TrueAdv only, top-m
      std::vector<std::string> epoch_selected;
      if (augmented) {
        switch (config.strategy.tag) {
          case StrategyKind::TrueAdv: {
            if (!table.has_value())
              throw std::runtime_error("no loss table at augmentation start");
            PolicySet ranked = rank_policies(*table);
            for (int s = 0; s < m; ++s) {
              trueadv_ids.push_back(ranked[s]);
              epoch_selected.push_back(policy_text(decode(ranked[s])));
            }
            break;
          }
          case StrategyKind::Curriculum: {
            CurriculumSchedule sched{config.strategy.curriculum, m};
            for (const Slot& slot : curriculum_slots(sched, epoch, total)) {
              if (slot.kind == Slot::Hard) {
                if (!table.has_value())
                  throw std::runtime_error(
                      "hard slot requested before any loss table");
                PolicyId id = resolve_hard(slot, *table);
                slots.push_back({slot, id});
                epoch_selected.push_back(policy_text(decode(id)));
              } else {
                slots.push_back({slot, std::nullopt});
                epoch_selected.push_back("easy");
              }
            }
            break;
          }
          case StrategyKind::Baseline:
            for (int s = 0; s < m; ++s)
              epoch_selected.push_back(augop_text(baseline_op));
            break;
          case StrategyKind::Random:
            for (int s = 0; s < m; ++s) epoch_selected.push_back("random");
            break;
          case StrategyKind::Controller:
            for (int s = 0; s < m; ++s) epoch_selected.push_back("controller");
            break;
        }
      }

      // shuffled batch order
      std::vector<size_t> order(ntrain);
      std::iota(order.begin(), order.end(), size_t{0});
      Rng shuffle_rng = substream(seed, "batch-shuffle", epoch);
      for (size_t i = ntrain; i > 1; --i)
        std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);

      double loss_sum = 0.0;
      std::uint64_t loss_count = 0;

      for (size_t start = 0, batch_idx = 0; start < ntrain;
           start += hp.batch_size, ++batch_idx) {
        size_t end = std::min(ntrain, start + hp.batch_size);
        Rng aug_rng = substream(seed, "augmentation", epoch, batch_idx);

        Batch batch;
        batch.height = arch.in_height;
        batch.width = arch.in_width;

        std::vector<std::pair<PolicyId, size_t>> controller_draws;  // id, slot
        if (!augmented) {
          for (size_t i = start; i < end; ++i) {
            batch.images.push_back(
                normalize_image(ds.train_images[order[i]], stats));
            batch.labels.push_back(ds.train_labels[order[i]]);
          }
        } else {
          // M augmented copies of the batch, concatenated
          std::vector<AppliedAug> augs;
          for (int s = 0; s < m; ++s) {
            switch (config.strategy.tag) {
              case StrategyKind::Baseline:
                augs.push_back(AppliedAug{{baseline_op}, ""});
                break;
              case StrategyKind::Random:
                augs.push_back(detail::policy_aug(
                    encode(sample_uniform(aug_rng)), ""));
                break;
              case StrategyKind::TrueAdv:
                augs.push_back(detail::policy_aug(trueadv_ids[s], ""));
                break;
              case StrategyKind::Controller: {
                Rng ctrl_rng = substream(seed, "controller", epoch, batch_idx * 2 + s);
                PolicyId id = controller_sample(*controller, ctrl_rng);
                controller_draws.push_back({id, augs.size()});
                augs.push_back(detail::policy_aug(id, ""));
                break;
              }
              case StrategyKind::Curriculum: {
                const SlotSelection& sel = slots[s];
                PolicyId id = sel.fixed.has_value() ? *sel.fixed
                                                    : draw_easy(table, aug_rng);
                augs.push_back(detail::policy_aug(id, ""));
                break;
              }
            }
          }
          std::vector<double> copy_losses(augs.size(), 0.0);
          for (const AppliedAug& aug : augs) detail::count_usage(result, aug);
          for (size_t s = 0; s < augs.size(); ++s) {
            for (size_t i = start; i < end; ++i) {
              StochasticParams sp = draw_stochastic_params(aug_rng);
              Image img = ds.train_images[order[i]];
              for (const AugOp& op : augs[s].ops) img = apply_op(img, op, sp);
              batch.images.push_back(normalize_image(img, stats));
              batch.labels.push_back(ds.train_labels[order[i]]);
            }
          }
          if (controller) {
            // per-copy mean loss feeds the REINFORCE update
            size_t copy_len = end - start;
            LossStats pre = forward_loss(params, batch);
            for (auto [id, s] : controller_draws) {
              double copy_loss = 0.0;
              for (size_t i = 0; i < copy_len; ++i)
                copy_loss += pre.per_sample_losses[s * copy_len + i];
              controller_update(*controller, id, copy_loss / copy_len);
            }
          }
        }

        std::vector<double> grad = backward(params, batch, hp.weight_decay);
        LossStats ls = forward_loss(params, batch);
        loss_sum += ls.mean_loss * static_cast<double>(batch.size());
        loss_count += batch.size();
        sgd_step(params, grad, lr, hp.nesterov_momentum);
      }

      result.train_loss.push_back(loss_sum / static_cast<double>(loss_count));
      result.test_acc.push_back(detail::test_accuracy(params, ds, stats));
      result.lr.push_back(lr);
      result.selected.push_back(epoch_selected);

      // next epoch's table: recomputed at every epoch end once augmentation
      // is (about to be) active
      if (needs_table && epoch + 1 >= warmup_end && epoch + 1 < total)
        compute_table(epoch);
    }
  } catch (const std::exception& ex) {
    result.diverged = true;
    result.diagnostic = ex.what();
  }

  result.best_test_acc =
      result.test_acc.empty()
          ? 0.0
          : *std::max_element(result.test_acc.begin(), result.test_acc.end());

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::string base = out_dir + "/run_seed" + std::to_string(seed);
    // stored as a bare filename so the run JSON does not depend on out_dir
    result.checkpoint = "run_seed" + std::to_string(seed) + ".ckpt";
    save_checkpoint(params, base + ".ckpt");
    std::ofstream jf(base + ".json");
    jf << run_result_to_json(result).dump(2) << "\n";
    std::ofstream cf(base + ".csv");
    write_epoch_csv(result, cf);
  }
  return result;
}

struct RunSet {
  std::string strategy;
  int multiplicity = 1;
  std::vector<RunResult> runs;
  double mean_best = 0.0;
  double std_best = 0.0;  // sample std; 0 by convention for a single run
};

inline void aggregate(RunSet& rs) {
  if (rs.runs.empty()) throw std::invalid_argument("empty run set");
  double sum = 0.0;
  for (const RunResult& r : rs.runs) sum += r.best_test_acc;
  rs.mean_best = sum / static_cast<double>(rs.runs.size());
  if (rs.runs.size() < 2) {
    rs.std_best = 0.0;
    return;
  }
  double ss = 0.0;
  for (const RunResult& r : rs.runs) {
    double d = r.best_test_acc - rs.mean_best;
    ss += d * d;
  }
  rs.std_best = std::sqrt(ss / static_cast<double>(rs.runs.size() - 1));
}

inline json runset_to_json(const RunSet& rs, const ExperimentConfig& config) {
  json runs = json::array();
  for (const RunResult& r : rs.runs) runs.push_back(run_result_to_json(r));
  return json{
      {"schema_version", kRunSchemaVersion},
      {"config", config_to_json(config)},
      {"strategy", rs.strategy},
      {"multiplicity", rs.multiplicity},
      {"runs", runs},
      {"mean_best", rs.mean_best},
      {"std_best", rs.std_best},
  };
}

inline RunSet runset_from_json(const json& j) {
  RunSet rs;
  rs.strategy = j.at("strategy").get<std::string>();
  rs.multiplicity = j.at("multiplicity").get<int>();
  for (const json& r : j.at("runs")) rs.runs.push_back(run_result_from_json(r));
  rs.mean_best = j.at("mean_best").get<double>();
  rs.std_best = j.at("std_best").get<double>();
  return rs;
}

// Multi-seed experiment. Seeds run sequentially (each run is internally
// threaded through eval_loss_table); per-run results depend only on
// (config, seed).
inline RunSet run_experiment(const ExperimentConfig& config,
                             const std::string& out_dir = "") {
  if (config.seeds.empty()) throw std::invalid_argument("need at least 1 seed");
  Dataset ds = load_dataset(config);
  RunSet rs;
  rs.strategy = config.strategy.text();
  rs.multiplicity = config.multiplicity;
  for (std::uint64_t seed : config.seeds)
    rs.runs.push_back(train_run(config, seed, ds, out_dir));
  aggregate(rs);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream jf(out_dir + "/runset.json");
    jf << runset_to_json(rs, config).dump(2) << "\n";
    std::ofstream cfg(out_dir + "/config.json");
    cfg << config_to_json(config).dump(2) << "\n";
  }
  return rs;
}

}  // namespace augarena
