#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "rftforge/action.hpp"
#include "rftforge/datapipe.hpp"
#include "rftforge/env.hpp"
#include "rftforge/policy.hpp"

namespace rftforge {

struct TaskTicket {
  std::string ticket_id;
  std::string template_id;
  uint64_t seed = 0;
  double temperature = 0.0;
  int max_steps = 0;  // 0 = template default
  int attempt = 0;
};

struct ActRequest {
  std::string episode_id;
  std::string goal;
  UiScreen screen;
  std::vector<HistoryEntry> history;  // at most kHistoryCap entries
  double temperature = 0.0;
};

struct ReportAck {
  bool duplicate = false;
};

// Task queue plus sequential policy service. The task queue supports atomic
// concurrent pulls with exactly-once delivery; action requests are answered
// strictly in arrival order by a single service thread.
class Broker {
 public:
  Broker(const Policy& policy, TrajectoryStore& store);
  ~Broker();

  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  size_t submit(const std::vector<TaskTicket>& tickets);
  std::optional<TaskTicket> pull_task(const std::string& worker_id);
  Action request_action(const ActRequest& request);
  ReportAck report(const EpisodeReport& report);

  void stop();
  size_t pending_tasks() const;

  // Sequencing logs for verification: ids in arrival vs processing order.
  std::vector<std::string> arrival_log() const;
  std::vector<std::string> processed_log() const;

 private:
  struct PendingAct;
  void service_loop();

  const Policy& policy_;
  TrajectoryStore& store_;

  mutable std::mutex tasks_mu_;
  std::deque<TaskTicket> tasks_;
  std::set<std::string> seen_ticket_ids_;
  std::set<std::string> delivered_;
  std::set<std::string> reported_;

  mutable std::mutex act_mu_;
  std::condition_variable act_cv_;
  std::deque<std::shared_ptr<PendingAct>> act_queue_;
  std::vector<std::string> arrival_log_;
  std::vector<std::string> processed_log_;
  bool stopping_ = false;
  std::thread service_;
};

// Client view of a broker, either in-process or over the wire.
class BrokerClient {
 public:
  virtual ~BrokerClient() = default;
  virtual std::optional<TaskTicket> pull_task(const std::string& worker_id) = 0;
  virtual Action request_action(const ActRequest& request) = 0;
  virtual ReportAck report(const EpisodeReport& report) = 0;
  virtual size_t submit(const std::vector<TaskTicket>& tickets) = 0;
};

class LocalClient : public BrokerClient {
 public:
  explicit LocalClient(Broker& broker) : broker_(broker) {}
  std::optional<TaskTicket> pull_task(const std::string& worker_id) override;
  Action request_action(const ActRequest& request) override;
  ReportAck report(const EpisodeReport& report) override;
  size_t submit(const std::vector<TaskTicket>& tickets) override;

 private:
  Broker& broker_;
};

// Newline-delimited JSON messages over a TCP stream, one connection per
// worker. Thread-safe per instance only in the sense of one call at a time.
class TcpClient : public BrokerClient {
 public:
  TcpClient(const std::string& host, int port);
  ~TcpClient();
  std::optional<TaskTicket> pull_task(const std::string& worker_id) override;
  Action request_action(const ActRequest& request) override;
  ReportAck report(const EpisodeReport& report) override;
  size_t submit(const std::vector<TaskTicket>& tickets) override;

 private:
  std::string roundtrip(const std::string& line);
  void connect_now();

  std::string host_;
  int port_;
  int fd_ = -1;
  std::string rxbuf_;
};

class BrokerServer {
 public:
  // port 0 binds an ephemeral port; the bound port is available via port().
  BrokerServer(Broker& broker, const std::string& host, int port);
  ~BrokerServer();

  int port() const { return port_; }
  void stop();

 private:
  void accept_loop();
  void serve_connection(int fd);
  std::string handle_line(const std::string& line);

  Broker& broker_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::thread accepter_;
  std::mutex conn_mu_;
  std::vector<std::thread> conns_;
  std::vector<int> conn_fds_;
  bool stopping_ = false;
};

struct WorkerResult {
  int episodes = 0;
  int successes = 0;
  int acked = 0;
};

// Pulls tickets until the queue drains: instantiate, reset, then loop
// (observe, request action, execute, extend history) until done, and report.
// Connection errors are retried with bounded backoff; after three failures
// the episode is abandoned and the ticket resubmitted with attempt+1.
WorkerResult run_worker(const std::string& worker_id, BrokerClient& client);

}  // namespace rftforge
