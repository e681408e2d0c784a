#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "augarena/dataset.hpp"
#include "augarena/kernels.hpp"
#include "augarena/model.hpp"
#include "augarena/policy.hpp"
#include "augarena/rng.hpp"

namespace augarena {

// Per-policy mean training loss under a frozen parameter snapshot.
struct LossTable {
  PolicySet policy_ids;
  std::vector<double> mean_losses;
  int n_samples = 0;
  int epoch = -1;
};

enum class CurriculumName { OneAdv0Ep, OneAdv100Ep, Smooth, Cyclic };

inline const char* curriculum_name_text(CurriculumName n) {
  switch (n) {
    case CurriculumName::OneAdv0Ep: return "1-Adv-0Ep";
    case CurriculumName::OneAdv100Ep: return "1-Adv-100Ep";
    case CurriculumName::Smooth: return "Smooth";
    case CurriculumName::Cyclic: return "Cyclic";
  }
  return "?";
}

struct StrategyKind {
  enum Tag { Baseline, Random, TrueAdv, Controller, Curriculum } tag = Random;
  CurriculumName curriculum = CurriculumName::Cyclic;  // valid iff Curriculum

  std::string text() const {
    switch (tag) {
      case Baseline: return "Baseline";
      case Random: return "Random";
      case TrueAdv: return "TrueAdv";
      case Controller: return "Controller";
      case Curriculum: return curriculum_name_text(curriculum);
    }
    return "?";
  }

  static StrategyKind parse(const std::string& s) {
    if (s == "Baseline") return {Baseline, {}};
    if (s == "Random") return {Random, {}};
    if (s == "TrueAdv") return {TrueAdv, {}};
    if (s == "Controller") return {Controller, {}};
    if (s == "1-Adv-0Ep") return {Curriculum, CurriculumName::OneAdv0Ep};
    if (s == "1-Adv-100Ep") return {Curriculum, CurriculumName::OneAdv100Ep};
    if (s == "Smooth") return {Curriculum, CurriculumName::Smooth};
    if (s == "Cyclic") return {Curriculum, CurriculumName::Cyclic};
    throw std::invalid_argument("unknown strategy: " + s);
  }
};

// --- loss table evaluation ---

inline int worker_threads() {
  if (const char* env = std::getenv("AUGARENA_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// mean_losses[i] = (1/N) sum_j L(f_w(tau_i(x_j)), y_j) over the given sample.
// Augmentation draws are derived from (seed, epoch, policy id) only, so the
// table is reproducible; per-policy entries are independent, so fan-out over
// threads cannot change any value.
inline LossTable eval_loss_table(const ModelParams& params,
                                 const std::vector<Image>& images,
                                 const std::vector<int>& labels,
                                 const ChannelStats& stats,
                                 const PolicySet& policies,
                                 std::uint64_t master_seed, int epoch,
                                 int threads = 0) {
  if (images.empty()) throw std::invalid_argument("empty evaluation sample");
  if (policies.empty()) throw std::invalid_argument("empty policy set");
  LossTable table;
  table.policy_ids = policies;
  table.mean_losses.assign(policies.size(), 0.0);
  table.n_samples = static_cast<int>(images.size());
  table.epoch = epoch;

  auto eval_one = [&](size_t pi) {
    Policy policy = decode(policies[pi]);
    Rng sp_rng = substream(master_seed, "losstable-sp", epoch, policies[pi]);
    Batch batch;
    batch.height = images[0].height;
    batch.width = images[0].width;
    batch.labels = labels;
    batch.images.reserve(images.size());
    for (const Image& img : images) {
      StochasticParams sp = draw_stochastic_params(sp_rng);
      batch.images.push_back(normalize_image(apply_policy(img, policy, sp), stats));
    }
    double loss = forward_loss(params, batch).mean_loss;
    if (!std::isfinite(loss))
      throw std::runtime_error("non-finite loss in table (diverged model)");
    table.mean_losses[pi] = loss;
  };

  int nthreads = threads > 0 ? threads : worker_threads();
  if (nthreads <= 1 || policies.size() == 1) {
    for (size_t pi = 0; pi < policies.size(); ++pi) eval_one(pi);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (size_t pi = next.fetch_add(1); pi < policies.size();
             pi = next.fetch_add(1))
          eval_one(pi);
      });
    for (auto& th : pool) th.join();
  }
  return table;
}

// Argmax of mean loss; ties broken by lowest policy id.
inline PolicyId trueadv_select(const LossTable& table) {
  if (table.policy_ids.empty()) throw std::invalid_argument("empty loss table");
  size_t best = 0;
  for (size_t i = 1; i < table.policy_ids.size(); ++i) {
    if (table.mean_losses[i] > table.mean_losses[best] ||
        (table.mean_losses[i] == table.mean_losses[best] &&
         table.policy_ids[i] < table.policy_ids[best]))
      best = i;
  }
  return table.policy_ids[best];
}

// Descending loss; ties broken by ascending id.
inline PolicySet rank_policies(const LossTable& table) {
  if (table.policy_ids.empty()) throw std::invalid_argument("empty loss table");
  std::vector<size_t> order(table.policy_ids.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (table.mean_losses[a] != table.mean_losses[b])
      return table.mean_losses[a] > table.mean_losses[b];
    return table.policy_ids[a] < table.policy_ids[b];
  });
  PolicySet ranked;
  ranked.reserve(order.size());
  for (size_t i : order) ranked.push_back(table.policy_ids[i]);
  return ranked;
}

// Bottom ceil(n/2) of the ranking: the lower-loss half ("easiest").
inline PolicySet easiest_half(const LossTable& table) {
  PolicySet ranked = rank_policies(table);
  size_t keep = (ranked.size() + 1) / 2;
  return PolicySet(ranked.end() - keep, ranked.end());
}

inline void write_loss_table_csv(const LossTable& table, std::ostream& out) {
  out << "epoch,policy_id,policy_text,mean_loss,n_samples\n";
  for (size_t i = 0; i < table.policy_ids.size(); ++i)
    out << table.epoch << "," << table.policy_ids[i] << ","
        << policy_text(decode(table.policy_ids[i])) << ","
        << table.mean_losses[i] << "," << table.n_samples << "\n";
}

// --- curricula ---

struct Slot {
  enum Kind { Easy, Hard } kind = Easy;
  int rank = 0;  // 1 = highest loss; valid iff Hard

  bool operator==(const Slot&) const = default;
};

struct CurriculumSchedule {
  CurriculumName name = CurriculumName::Cyclic;
  int multiplicity = 1;  // M in {1, 2}
};

// Pure phase function: slot composition at a given epoch. Boundary epochs
// belong to the later phase; boundaries are ceil(fraction * total).
inline std::vector<Slot> curriculum_slots(const CurriculumSchedule& sched,
                                          int epoch, int total_epochs) {
  const int m = sched.multiplicity;
  if (m < 1 || m > 2) throw std::invalid_argument("multiplicity must be 1 or 2");
  auto at = [&](double frac) { return epoch >= fraction_to_epoch(frac, total_epochs); };
  auto easy = [&] { return std::vector<Slot>(m, Slot{Slot::Easy, 0}); };
  auto hard1_easy = [&] {
    std::vector<Slot> s{Slot{Slot::Hard, 1}};
    for (int i = 1; i < m; ++i) s.push_back(Slot{Slot::Easy, 0});
    return s;
  };

  switch (sched.name) {
    case CurriculumName::OneAdv0Ep:
      return hard1_easy();
    case CurriculumName::OneAdv100Ep:
      return at(0.5) ? hard1_easy() : easy();
    case CurriculumName::Smooth:
      if (m == 2) {
        if (at(0.75)) return {Slot{Slot::Hard, 1}, Slot{Slot::Hard, 2}};
        if (at(0.375)) return hard1_easy();
        return easy();
      }
      return at(0.625) ? hard1_easy() : easy();
    case CurriculumName::Cyclic:
      if (m == 2) {
        if (at(0.75)) return easy();
        if (at(0.625)) return hard1_easy();
        if (at(0.5)) return {Slot{Slot::Hard, 1}, Slot{Slot::Hard, 2}};
        if (at(0.375)) return hard1_easy();
        return easy();
      }
      if (at(0.75)) return easy();
      if (at(0.375)) return hard1_easy();
      return easy();
  }
  throw std::invalid_argument("unknown curriculum");
}

// Resolves Hard slots against the previous epoch-end table. Hard(r) is the
// r-th ranked policy and is fixed for the whole epoch; Easy slots are drawn
// per batch via draw_easy below.
inline PolicyId resolve_hard(const Slot& slot, const LossTable& table) {
  if (slot.kind != Slot::Hard) throw std::invalid_argument("not a hard slot");
  PolicySet ranked = rank_policies(table);
  if (slot.rank < 1 || static_cast<size_t>(slot.rank) > ranked.size())
    throw std::out_of_range("hard rank out of range");
  return ranked[slot.rank - 1];
}

// Uniform draw from the easiest half; before any table exists (augmentation
// warm-up boundary) it falls back to uniform over the full space.
inline PolicyId draw_easy(const std::optional<LossTable>& table, Rng& rng) {
  if (!table.has_value()) return encode(sample_uniform(rng));
  PolicySet easiest = easiest_half(*table);
  return easiest[uniform_index(rng, easiest.size())];
}

// Epoch-level selection: Hard slots resolved now, Easy slots left open.
struct SlotSelection {
  Slot slot;
  std::optional<PolicyId> fixed;  // set iff Hard
};

inline std::vector<SlotSelection> curriculum_policies(
    const CurriculumSchedule& sched, int epoch, int total_epochs,
    const std::optional<LossTable>& table) {
  std::vector<SlotSelection> out;
  for (const Slot& slot : curriculum_slots(sched, epoch, total_epochs)) {
    if (slot.kind == Slot::Hard) {
      if (!table.has_value())
        throw std::runtime_error("hard slot requested before any loss table");
      out.push_back({slot, resolve_hard(slot, *table)});
    } else {
      out.push_back({slot, std::nullopt});
    }
  }
  return out;
}

// --- REINFORCE controller (Eq. 2 path) ---

struct ControllerState {
  PolicySet policy_ids;
  std::vector<double> logits;
  double baseline = 0.0;
  bool baseline_seen = false;
  double step_size = 0.05;
  double baseline_decay = 0.95;

  explicit ControllerState(PolicySet ids)
      : policy_ids(std::move(ids)), logits(policy_ids.size(), 0.0) {
    if (policy_ids.empty())
      throw std::invalid_argument("controller needs a nonempty policy set");
  }

  std::vector<double> probabilities() const {
    std::vector<double> p(logits.size());
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i)
      z += (p[i] = std::exp(logits[i] - mx));
    for (double& v : p) v /= z;
    return p;
  }
};

inline PolicyId controller_sample(const ControllerState& state, Rng& rng) {
  std::vector<double> p = state.probabilities();
  double u = uniform_unit(rng);
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return state.policy_ids[i];
  }
  return state.policy_ids.back();
}

// REINFORCE ascent on expected loss: logits move along
// advantage * (onehot(sampled) - softmax). Baseline is an EMA of observed
// losses; logits are re-centered to mean zero after each step.
inline void controller_update(ControllerState& state, PolicyId sampled_id,
                              double observed_loss) {
  if (!std::isfinite(observed_loss) || observed_loss < 0.0)
    throw std::invalid_argument("observed loss must be finite and nonnegative");
  auto it = std::find(state.policy_ids.begin(), state.policy_ids.end(),
                      sampled_id);
  if (it == state.policy_ids.end())
    throw std::invalid_argument("sampled id not in controller policy set");
  size_t idx = static_cast<size_t>(it - state.policy_ids.begin());

  double baseline = state.baseline_seen ? state.baseline : observed_loss;
  double advantage = observed_loss - baseline;
  std::vector<double> p = state.probabilities();
  for (size_t i = 0; i < state.logits.size(); ++i)
    state.logits[i] += state.step_size * advantage *
                       ((i == idx ? 1.0 : 0.0) - p[i]);

  double mean = std::accumulate(state.logits.begin(), state.logits.end(), 0.0) /
                static_cast<double>(state.logits.size());
  for (double& l : state.logits) l -= mean;

  state.baseline = state.baseline_seen
                       ? state.baseline_decay * state.baseline +
                             (1.0 - state.baseline_decay) * observed_loss
                       : observed_loss;
  state.baseline_seen = true;
}

}  // namespace augarena
