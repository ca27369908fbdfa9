#include "rftforge/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "rftforge/broker.hpp"
#include "rftforge/rng.hpp"

namespace rftforge {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::RftOnly: return "rft-only";
    case Variant::Awo: return "awo";
  }
  return "full";
}

TabularPolicy sft(const TabularPolicy& base, const std::vector<TrainingExample>& examples,
                  int epochs, int batch_size) {
  if (examples.empty()) throw EmptyDataset("sft: no training examples");
  return train(base, examples, epochs, batch_size);
}

std::vector<Trajectory> collect(const Policy& policy, const CollectConfig& cfg,
                                TrajectoryStore& store, uint64_t seed_base) {
  const size_t before = store.size();
  Broker broker(policy, store);
  LocalClient client(broker);
  for (int round = 0; round < cfg.rounds; ++round) {
    std::vector<TaskTicket> tickets;
    for (const auto& [template_id, difficulty] : registry_manifest()) {
      if (round > 0 && store.success_count(template_id) >= cfg.tau) continue;
      for (int k = 0; k < cfg.initial_repeats; ++k) {
        TaskTicket t;
        t.ticket_id = template_id + "-r" + std::to_string(round) + "-" + std::to_string(k);
        t.template_id = template_id;
        t.seed = derive_seed(seed_base, "ticket." + template_id,
                             static_cast<uint64_t>(round) * 1000 + static_cast<uint64_t>(k));
        t.temperature = cfg.temperature;
        tickets.push_back(std::move(t));
      }
    }
    if (tickets.empty()) break;
    broker.submit(tickets);
    run_worker("collector", client);
  }
  broker.stop();
  return store.trajectories_since(before);
}

namespace {

OnlineDataset build_d_on(const TrajectoryStore& store, const CollectConfig& cfg) {
  auto trajectories = store.trajectories();
  if (trajectories.empty()) throw EmptyStore("no collected trajectories");
  for (auto& t : trajectories) t = filter_duplicates(t);
  return rebalance(trajectories, store.provenance(), cfg);
}

}  // namespace

TabularPolicy rft_iteration(const TabularPolicy& model, const TrajectoryStore& store,
                            const CollectConfig& cfg, int epochs, int batch_size) {
  return train(model, to_examples(build_d_on(store, cfg)), epochs, batch_size);
}

TabularPolicy final_sft(const TabularPolicy& base, const TrajectoryStore& store,
                        const CollectConfig& cfg, int epochs, int batch_size) {
  return train(base, to_examples(build_d_on(store, cfg)), epochs, batch_size);
}

const TabularPolicy& PipelineRunRecord::product() const {
  switch (config.variant) {
    case Variant::Full:
      return checkpoints.at("final");
    case Variant::Awo:
      return checkpoints.at("awo");
    case Variant::RftOnly:
      break;
  }
  return checkpoints.at("rft_" + std::to_string(config.iterations));
}

std::string PipelineRunRecord::to_text() const {
  std::ostringstream out;
  char num[64];
  auto f = [&](double v) {
    std::snprintf(num, sizeof(num), "%.9f", v);
    return std::string(num);
  };
  out << "config.batch_size=" << config.batch_size << "\n";
  out << "config.collect.initial_repeats=" << config.collect.initial_repeats << "\n";
  out << "config.collect.rounds=" << config.collect.rounds << "\n";
  out << "config.collect.rule="
      << (config.collect.rule == RebalanceRule::MedianOfQualified ? "median" : "tau") << "\n";
  out << "config.collect.tau=" << config.collect.tau << "\n";
  out << "config.collect.temperature=" << f(config.collect.temperature) << "\n";
  out << "config.epochs=" << config.epochs << "\n";
  out << "config.eval_seed_count=" << config.eval_seed_count << "\n";
  out << "config.iterations=" << config.iterations << "\n";
  out << "config.offline_episodes_per_template=" << config.offline_episodes_per_template << "\n";
  out << "config.variant=" << to_string(config.variant) << "\n";
  out << "master_seed=" << master_seed << "\n";
  for (const auto& [tpl, n] : collected_per_template) {
    out << "collected." << tpl << "=" << n << "\n";
  }
  for (size_t i = 0; i < stages.size(); ++i) {
    const StageEval& s = stages[i];
    char prefix[64];
    std::snprintf(prefix, sizeof(prefix), "stage.%02zu.%s", i, s.stage.c_str());
    out << prefix << ".d_on_size=" << s.d_on_size << "\n";
    for (const auto& [split, acc] : s.offline_splits) {
      out << prefix << ".offline." << split << "=" << f(acc) << "\n";
    }
    out << prefix << ".offline.overall=" << f(s.offline_overall) << "\n";
    for (const auto& [d, r] : s.online_difficulty) {
      out << prefix << ".online." << to_string(d) << "=" << f(r) << "\n";
    }
    out << prefix << ".online.overall=" << f(s.online_overall) << "\n";
  }
  for (const auto& [name, model] : checkpoints) {
    char fp[32];
    std::snprintf(fp, sizeof(fp), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(model.serialize())));
    out << "checkpoint." << name << ".fingerprint=" << fp << "\n";
  }
  return out.str();
}

PipelineRunRecord run_pipeline(const PipelineConfig& config, uint64_t master_seed) {
  if (config.iterations < 1) throw Error("pipeline: iterations must be at least 1");

  PipelineRunRecord record;
  record.config = config;
  record.master_seed = master_seed;

  OfflineBundle bundle =
      synth_offline(derive_seed(master_seed, "offline"), config.offline_episodes_per_template);

  std::vector<uint64_t> eval_seeds;
  for (int k = 0; k < config.eval_seed_count; ++k) {
    eval_seeds.push_back(derive_seed(master_seed, "eval-seed", static_cast<uint64_t>(k)));
  }

  auto record_stage = [&](const std::string& name, const TabularPolicy& model, int d_on) {
    StageEval se;
    se.stage = name;
    OnlineEvalReport online = eval_online(model, eval_seeds);
    OfflineEvalReport offline = eval_offline(model, bundle);
    se.online_overall = online.overall();
    for (Difficulty d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
      se.online_difficulty[d] = online.rate(d);
    }
    se.offline_overall = offline.overall();
    for (const auto& [split, acc] : offline.splits) se.offline_splits[split] = acc.accuracy;
    se.d_on_size = d_on;
    record.stages.push_back(std::move(se));
  };

  TabularPolicy seed_model(derive_seed(master_seed, "model-rng"));
  TabularPolicy base = sft(seed_model, to_examples(bundle.train), config.epochs,
                           config.batch_size);
  record.checkpoints.emplace("base", base);
  record_stage("base", base, 0);

  TrajectoryStore store;
  TabularPolicy model = base;
  int last_d_on = 0;
  for (int i = 1; i <= config.iterations; ++i) {
    store.set_iteration(i);
    model.reseed(derive_seed(master_seed, "decide-rng", static_cast<uint64_t>(i)));
    collect(model, config.collect, store,
            derive_seed(master_seed, "collect", static_cast<uint64_t>(i)));
    OnlineDataset d_on = build_d_on(store, config.collect);
    last_d_on = static_cast<int>(d_on.size());
    model = train(model, to_examples(d_on), config.epochs, config.batch_size);
    const std::string name = "rft_" + std::to_string(i);
    record.checkpoints.emplace(name, model);
    record_stage(name, model, last_d_on);
  }
  record.collected_per_template = store.success_counts();

  if (config.variant == Variant::Full) {
    TabularPolicy final_model =
        final_sft(base, store, config.collect, config.epochs, config.batch_size);
    record.checkpoints.emplace("final", final_model);
    record_stage("final", final_model, last_d_on);
  } else if (config.variant == Variant::Awo) {
    TabularPolicy fresh(derive_seed(master_seed, "awo-rng"));
    TabularPolicy awo = train(fresh, to_examples(build_d_on(store, config.collect)),
                              config.epochs, config.batch_size);
    record.checkpoints.emplace("awo", awo);
    record_stage("awo", awo, last_d_on);
  }
  return record;
}

}  // namespace rftforge
