// augarena: train/experiment/augment/losstable/report command-line surface.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "augarena/harness.hpp"
#include "augarena/report.hpp"

namespace fs = std::filesystem;
using namespace augarena;

namespace {

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open config file: " + path);
  json j = json::parse(in);
  return config_from_json(j);
}

// "synthetic" | "cifar10:<dir>[:<subset>]"
Dataset parse_dataset_arg(const std::string& arg, ExperimentConfig& cfg) {
  if (arg == "synthetic") {
    cfg.dataset_kind = "synthetic";
    return gen_synthetic(cfg.synthetic);
  }
  if (arg.rfind("cifar10:", 0) == 0) {
    std::string rest = arg.substr(8);
    int subset = 0;
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
      subset = std::stoi(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    cfg.dataset_kind = "cifar10";
    cfg.cifar_dir = rest;
    cfg.cifar_subset = subset;
    return load_cifar10(rest, subset);
  }
  throw CLI::ValidationError(
      "--dataset", "expected 'synthetic' or 'cifar10:<dir>[:<subset>]'");
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::string> strategy, std::optional<int> mult,
              std::optional<int> epochs, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  if (strategy) cfg.strategy = StrategyKind::parse(*strategy);
  if (mult) cfg.multiplicity = *mult;
  if (epochs) cfg.hp.total_epochs = *epochs;
  std::uint64_t run_seed = seed.value_or(cfg.seeds.at(0));
  Dataset ds = load_dataset(cfg);
  RunResult r = train_run(cfg, run_seed, ds, out_dir);
  std::cout << "strategy=" << cfg.strategy.text() << " seed=" << run_seed
            << " best_test_acc=" << r.best_test_acc
            << (r.diverged ? " DIVERGED: " + r.diagnostic : "") << "\n";
  return r.diverged ? 2 : 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  RunSet rs = run_experiment(cfg, out_dir);
  std::cout << "strategy=" << rs.strategy << " M=" << rs.multiplicity
            << " runs=" << rs.runs.size() << " mean_best=" << rs.mean_best
            << " std_best=" << rs.std_best << "\n";
  for (const RunResult& r : rs.runs)
    if (r.diverged) {
      std::cerr << "run seed " << r.seed << " diverged: " << r.diagnostic << "\n";
      return 2;
    }
  return 0;
}

int cmd_augment(const std::string& policy_text_arg, const std::string& in_path,
                const std::string& out_path, std::uint64_t seed) {
  Policy policy = parse_policy(policy_text_arg);
  Image img = read_ppm(in_path);
  Rng rng = substream(seed, "augment-cli");
  StochasticParams sp = draw_stochastic_params(rng);
  write_ppm(apply_policy(img, policy, sp), out_path);
  return 0;
}

int cmd_losstable(const std::string& checkpoint, const std::string& dataset_arg,
                  const std::string& policies_arg, const std::string& out_path,
                  std::uint64_t seed, std::uint64_t max_evals) {
  ExperimentConfig cfg;
  Dataset ds = parse_dataset_arg(dataset_arg, cfg);
  ModelParams params = load_checkpoint(checkpoint);
  ChannelStats stats = compute_channel_stats(ds);

  PolicySet policies;
  std::vector<Image> sample;
  std::vector<int> labels;
  if (policies_arg == "all") {
    policies = enumerate_all();
    sample = ds.train_images;
    labels = ds.train_labels;
  } else if (policies_arg.rfind("subset:", 0) == 0) {
    int k = std::stoi(policies_arg.substr(7));
    Rng rng = substream(seed, "subset-sampling", 0);
    policies = sample_subset(rng, k);
    int n = std::min<int>(128, static_cast<int>(ds.train_images.size()));
    for (int i = 0; i < n; ++i) {
      size_t idx = uniform_index(rng, ds.train_images.size());
      sample.push_back(ds.train_images[idx]);
      labels.push_back(ds.train_labels[idx]);
    }
  } else {
    throw CLI::ValidationError("--policies", "expected 'all' or 'subset:<k>'");
  }

  std::uint64_t evals = policies.size() * sample.size();
  if (evals > max_evals) {
    std::cerr << "refusing: " << policies.size() << " policies x "
              << sample.size() << " samples = " << evals
              << " evaluations exceeds the budget of " << max_evals
              << " (raise --max-evals to override)\n";
    return 1;
  }

  LossTable table = eval_loss_table(params, sample, labels, stats, policies,
                                    seed, 0, 0);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for write: " + out_path);
  write_loss_table_csv(table, out);
  std::cout << "wrote " << policies.size() << " policy losses to " << out_path
            << "\n";
  return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& out_path) {
  std::vector<RunSet> runsets;
  std::vector<fs::path> found;
  for (const auto& entry : fs::recursive_directory_iterator(runs_dir))
    if (entry.is_regular_file() && entry.path().filename() == "runset.json")
      found.push_back(entry.path());
  std::sort(found.begin(), found.end());
  for (const fs::path& p : found) {
    std::ifstream in(p);
    runsets.push_back(runset_from_json(json::parse(in)));
  }
  if (runsets.empty())
    throw std::runtime_error("no runset.json files under " + runs_dir);

  ResultsTable table = results_table(runsets);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for write: " + out_path);
  out << render_results_table(table);

  fs::path out_dir = fs::path(out_path).parent_path();
  if (out_dir.empty()) out_dir = ".";
  {
    std::ofstream csv(out_dir / "results.csv");
    write_results_csv(table, csv);
  }
  for (const RunSet& rs : runsets)
    for (const RunResult& r : rs.runs) {
      std::uint64_t total = 0;
      for (const auto& row : r.usage)
        for (auto v : row) total += v;
      if (total == 0) continue;  // warm-up-only or baselineless run
      std::string name = "usage_" + rs.strategy + "_M" +
                         std::to_string(rs.multiplicity) + "_seed" +
                         std::to_string(r.seed) + ".csv";
      std::ofstream csv(out_dir / name);
      write_usage_csv(usage_histogram(r), csv);
    }
  std::cout << render_results_table(table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial augmentation policy arena"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "single seeded training run");
  std::string train_config, train_out = "runs";
  std::optional<std::uint64_t> train_seed;
  std::optional<std::string> train_strategy;
  std::optional<int> train_mult, train_epochs;
  train->add_option("--config", train_config, "experiment config JSON")
      ->required();
  train->add_option("--seed", train_seed, "seed override");
  train->add_option("--strategy", train_strategy, "strategy override");
  train->add_option("--multiplicity", train_mult, "multiplicity override");
  train->add_option("--epochs", train_epochs, "total epochs override");
  train->add_option("--out", train_out, "output directory");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "multi-seed experiment");
  std::string exp_config, exp_out;
  experiment->add_option("--config", exp_config, "experiment config JSON")
      ->required();
  experiment->add_option("--out", exp_out, "output directory")->required();

  // augment
  auto* augment = app.add_subcommand("augment", "apply a policy to a PPM image");
  std::string aug_policy, aug_in, aug_out;
  std::uint64_t aug_seed = 0;
  augment->add_option("--policy", aug_policy, "policy text, Kind@L<l>+Kind@L<l>")
      ->required();
  augment->add_option("--in", aug_in, "input PPM (P6)")->required();
  augment->add_option("--out", aug_out, "output PPM (P6)")->required();
  augment->add_option("--seed", aug_seed, "stochastic draw seed");

  // losstable
  auto* losstable =
      app.add_subcommand("losstable", "per-policy loss table under a checkpoint");
  std::string lt_ckpt, lt_dataset = "synthetic", lt_policies = "all", lt_out;
  std::uint64_t lt_seed = 0, lt_max_evals = 10'000'000;
  losstable->add_option("--checkpoint", lt_ckpt, "model checkpoint")->required();
  losstable->add_option("--dataset", lt_dataset,
                        "'synthetic' or 'cifar10:<dir>[:<subset>]'");
  losstable->add_option("--policies", lt_policies, "'all' or 'subset:<k>'");
  losstable->add_option("--out", lt_out, "output CSV")->required();
  losstable->add_option("--seed", lt_seed, "sampling seed");
  losstable->add_option("--max-evals", lt_max_evals,
                        "policy x sample evaluation budget");

  // report
  auto* report = app.add_subcommand("report", "aggregate run directories");
  std::string rep_runs, rep_out;
  report->add_option("--runs", rep_runs, "directory containing runset.json files")
      ->required();
  report->add_option("--out", rep_out, "output table path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // all usage errors exit 1
  }

  try {
    if (train->parsed())
      return cmd_train(train_config, train_seed, train_strategy, train_mult,
                       train_epochs, train_out);
    if (experiment->parsed()) return cmd_experiment(exp_config, exp_out);
    if (augment->parsed())
      return cmd_augment(aug_policy, aug_in, aug_out, aug_seed);
    if (losstable->parsed())
      return cmd_losstable(lt_ckpt, lt_dataset, lt_policies, lt_out, lt_seed,
                           lt_max_evals);
    if (report->parsed()) return cmd_report(rep_runs, rep_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
