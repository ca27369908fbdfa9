#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "rftforge/broker.hpp"
#include "rftforge/datapipe.hpp"
#include "rftforge/evalkit.hpp"
#include "rftforge/jsonio.hpp"
#include "rftforge/pipeline.hpp"
#include "rftforge/policy.hpp"
#include "rftforge/rng.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

std::pair<std::string, int> parse_addr(const std::string& addr) {
  size_t colon = addr.rfind(':');
  if (colon == std::string::npos) {
    throw rftforge::Error("address must look like host:port, got " + addr);
  }
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

rftforge::Variant parse_variant(const std::string& v) {
  if (v == "rft-only") return rftforge::Variant::RftOnly;
  if (v == "awo") return rftforge::Variant::Awo;
  return rftforge::Variant::Full;
}

std::vector<uint64_t> seeds_from(uint64_t base, int count) {
  std::vector<uint64_t> seeds;
  for (int k = 0; k < count; ++k) {
    seeds.push_back(rftforge::derive_seed(base, "cli-eval", static_cast<uint64_t>(k)));
  }
  return seeds;
}

std::unique_ptr<rftforge::Policy> load_policy(const std::string& model_path, bool oracle) {
  if (oracle) return std::make_unique<rftforge::OraclePolicy>();
  auto p = std::make_unique<rftforge::TabularPolicy>(rftforge::TabularPolicy::load(model_path));
  return p;
}

int cmd_serve(const std::string& addr, const std::string& model_path, bool oracle,
              const std::string& store_path, int tickets, double temperature, uint64_t seed) {
  auto [host, port] = parse_addr(addr);
  auto policy = load_policy(model_path, oracle);
  rftforge::TrajectoryStore store;
  rftforge::Broker broker(*policy, store);
  if (tickets > 0) {
    std::vector<rftforge::TaskTicket> batch;
    for (const auto& [tpl, diff] : rftforge::registry_manifest()) {
      for (int k = 0; k < tickets; ++k) {
        rftforge::TaskTicket t;
        t.ticket_id = tpl + "-serve-" + std::to_string(k);
        t.template_id = tpl;
        t.seed = rftforge::derive_seed(seed, "serve." + tpl, static_cast<uint64_t>(k));
        t.temperature = temperature;
        batch.push_back(std::move(t));
      }
    }
    broker.submit(batch);
  }
  rftforge::BrokerServer server(broker, host, port);
  std::cerr << "serving on " << host << ":" << server.port() << " (" << broker.pending_tasks()
            << " queued tasks); interrupt to stop\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  size_t flushed = 0;
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (!store_path.empty()) {
      for (const auto& rep : store.reports_since(flushed)) {
        rftforge::append_trajectory_log(store_path, rep);
        ++flushed;
      }
    }
  }
  server.stop();
  broker.stop();
  std::cout << "stored trajectories: " << store.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale app-agent training and evaluation pipeline"};
  app.require_subcommand(1);

  uint64_t seed = 1;
  app.add_option("--seed", seed, "Master seed")->envname("RFTFORGE_SEED");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the task-queue and policy server");
  std::string serve_addr = "127.0.0.1:7788";
  std::string serve_model;
  std::string serve_store;
  bool serve_oracle = false;
  int serve_tickets = 0;
  double serve_temp = 1.5;
  serve->add_option("--addr", serve_addr, "host:port to listen on")->envname("RFTFORGE_ADDR");
  serve->add_option("--model", serve_model, "Policy model file");
  serve->add_flag("--oracle", serve_oracle, "Serve the scripted solver instead of a model");
  serve->add_option("--store", serve_store, "Trajectory log to append reports to");
  serve->add_option("--tickets", serve_tickets, "Pre-queue this many tickets per template");
  serve->add_option("--temperature", serve_temp, "Sampling temperature for queued tickets");

  // worker
  auto* worker = app.add_subcommand("worker", "Drive environment episodes against a broker");
  std::string worker_addr = "127.0.0.1:7788";
  std::string worker_id = "w0";
  worker->add_option("--addr", worker_addr, "Broker host:port")->envname("RFTFORGE_ADDR");
  worker->add_option("--id", worker_id, "Worker id");

  // synth-offline
  auto* synth = app.add_subcommand("synth-offline", "Write the synthetic demonstration corpus");
  std::string synth_out;
  int synth_episodes = 20;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--episodes", synth_episodes, "Episodes per template per split");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run the end-to-end training pipeline");
  std::string pipe_variant = "full";
  int pipe_iters = 3;
  std::string pipe_out;
  pipe->add_option("--variant", pipe_variant, "full | rft-only | awo")
      ->check(CLI::IsMember({"full", "rft-only", "awo"}));
  pipe->add_option("--iters", pipe_iters, "Improvement iterations");
  pipe->add_option("--out", pipe_out, "Directory for the run record and checkpoints");

  // eval-offline
  auto* evoff = app.add_subcommand("eval-offline", "Action-prediction accuracy on the corpus");
  std::string evoff_model;
  std::string evoff_data;
  bool evoff_oracle = false;
  evoff->add_option("--model", evoff_model, "Policy model file");
  evoff->add_flag("--oracle", evoff_oracle, "Evaluate the scripted solver");
  evoff->add_option("--data", evoff_data, "Dataset directory")->required();

  // eval-online
  auto* evon = app.add_subcommand("eval-online", "Greedy success rate on the task registry");
  std::string evon_model;
  bool evon_oracle = false;
  int evon_seeds = rftforge::kDefaultEvalSeeds;
  evon->add_option("--model", evon_model, "Policy model file");
  evon->add_flag("--oracle", evon_oracle, "Evaluate the scripted solver");
  evon->add_option("--seeds", evon_seeds, "Number of evaluation seeds");

  // render
  auto* render = app.add_subcommand("render", "Rasterize an annotated screen to PPM");
  std::string render_screen;
  std::string render_out;
  render->add_option("--screen", render_screen, "Screen JSON file")->required();
  render->add_option("--out", render_out, "Output .ppm path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (serve->parsed()) {
      if (serve_model.empty() && !serve_oracle) {
        std::cerr << "usage error: serve needs --model or --oracle\n";
        return 2;
      }
      return cmd_serve(serve_addr, serve_model, serve_oracle, serve_store, serve_tickets,
                       serve_temp, seed);
    }

    if (worker->parsed()) {
      auto [host, port] = parse_addr(worker_addr);
      rftforge::TcpClient client(host, port);
      rftforge::WorkerResult res = rftforge::run_worker(worker_id, client);
      std::cout << "episodes=" << res.episodes << " successes=" << res.successes << "\n";
      return 0;
    }

    if (synth->parsed()) {
      auto bundle = rftforge::synth_offline(seed, synth_episodes);
      rftforge::save_bundle(bundle, synth_out);
      std::cout << bundle.manifest();
      return 0;
    }

    if (pipe->parsed()) {
      if (pipe_iters < 1) {
        std::cerr << "usage error: --iters must be at least 1\n";
        return 2;
      }
      rftforge::PipelineConfig config;
      config.variant = parse_variant(pipe_variant);
      config.iterations = pipe_iters;
      auto record = rftforge::run_pipeline(config, seed);
      if (!pipe_out.empty()) {
        std::filesystem::create_directories(pipe_out);
        std::ofstream rec(pipe_out + "/record.txt", std::ios::binary | std::ios::trunc);
        rec << record.to_text();
        for (const auto& [name, model] : record.checkpoints) {
          model.save(pipe_out + "/" + name + ".model");
        }
      }
      std::cout << record.to_text();
      return 0;
    }

    if (evoff->parsed()) {
      if (evoff_model.empty() && !evoff_oracle) {
        std::cerr << "usage error: eval-offline needs --model or --oracle\n";
        return 2;
      }
      auto policy = load_policy(evoff_model, evoff_oracle);
      auto bundle = rftforge::load_bundle(evoff_data);
      auto report = rftforge::eval_offline(*policy, bundle);
      std::cout << report.to_text() << report.to_kv();
      return 0;
    }

    if (evon->parsed()) {
      if (evon_model.empty() && !evon_oracle) {
        std::cerr << "usage error: eval-online needs --model or --oracle\n";
        return 2;
      }
      if (evon_seeds < 1) {
        std::cerr << "usage error: --seeds must be at least 1\n";
        return 2;
      }
      auto policy = load_policy(evon_model, evon_oracle);
      auto report = rftforge::eval_online(*policy, seeds_from(seed, evon_seeds));
      std::cout << report.to_text() << report.to_kv();
      std::cout << rftforge::difficulty_table();
      return 0;
    }

    if (render->parsed()) {
      std::ifstream in(render_screen, std::ios::binary);
      if (!in) throw rftforge::IoFailure("cannot open " + render_screen);
      std::ostringstream buf;
      buf << in.rdbuf();
      rftforge::UiScreen screen = rftforge::screen_from_json(rftforge::Json::parse(buf.str()));
      std::string ppm = rftforge::render_ppm(screen, rftforge::annotate(screen));
      std::ofstream out(render_out, std::ios::binary | std::ios::trunc);
      if (!out) throw rftforge::IoFailure("cannot write " + render_out);
      out << ppm;
      return 0;
    }
  } catch (const rftforge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
