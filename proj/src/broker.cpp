#include "rftforge/broker.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <future>
#include <utility>

#include "rftforge/jsonio.hpp"
#include "rftforge/prompt.hpp"

namespace rftforge {

struct Broker::PendingAct {
  ActRequest request;
  std::string id;
  std::promise<Action> promise;
};

Broker::Broker(const Policy& policy, TrajectoryStore& store) : policy_(policy), store_(store) {
  service_ = std::thread([this] { service_loop(); });
}

Broker::~Broker() { stop(); }

void Broker::stop() {
  {
    std::lock_guard<std::mutex> lock(act_mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  act_cv_.notify_all();
  if (service_.joinable()) service_.join();
}

size_t Broker::submit(const std::vector<TaskTicket>& tickets) {
  std::lock_guard<std::mutex> lock(tasks_mu_);
  for (const auto& t : tickets) {
    if (seen_ticket_ids_.count(t.ticket_id)) {
      throw DuplicateTicket("ticket " + t.ticket_id + " was already submitted");
    }
  }
  for (const auto& t : tickets) {
    seen_ticket_ids_.insert(t.ticket_id);
    tasks_.push_back(t);
  }
  return tickets.size();
}

std::optional<TaskTicket> Broker::pull_task(const std::string&) {
  std::lock_guard<std::mutex> lock(tasks_mu_);
  if (tasks_.empty()) return std::nullopt;
  TaskTicket t = tasks_.front();
  tasks_.pop_front();
  delivered_.insert(t.ticket_id);
  return t;
}

size_t Broker::pending_tasks() const {
  std::lock_guard<std::mutex> lock(tasks_mu_);
  return tasks_.size();
}

Action Broker::request_action(const ActRequest& request) {
  if (request.history.size() > static_cast<size_t>(kHistoryCap)) {
    throw MalformedRequest("history holds " + std::to_string(request.history.size()) +
                           " entries; the cap is " + std::to_string(kHistoryCap));
  }
  auto pending = std::make_shared<PendingAct>();
  pending->request = request;
  auto future = pending->promise.get_future();
  {
    std::lock_guard<std::mutex> lock(act_mu_);
    if (stopping_) throw PolicyUnavailable("policy service is stopped");
    pending->id = request.episode_id + "/" + std::to_string(arrival_log_.size());
    arrival_log_.push_back(pending->id);
    act_queue_.push_back(pending);
  }
  act_cv_.notify_one();
  return future.get();
}

void Broker::service_loop() {
  while (true) {
    std::shared_ptr<PendingAct> next;
    {
      std::unique_lock<std::mutex> lock(act_mu_);
      act_cv_.wait(lock, [this] { return stopping_ || !act_queue_.empty(); });
      if (act_queue_.empty()) break;  // stopping and drained
      next = act_queue_.front();
      act_queue_.pop_front();
      processed_log_.push_back(next->id);
    }
    try {
      Action a = policy_.decide(next->request.goal, next->request.screen, next->request.history,
                                next->request.temperature);
      next->promise.set_value(a);
    } catch (...) {
      next->promise.set_exception(std::current_exception());
    }
  }
  // fail anything that slipped in after the drain check
  std::lock_guard<std::mutex> lock(act_mu_);
  for (auto& p : act_queue_) {
    p->promise.set_exception(
        std::make_exception_ptr(PolicyUnavailable("policy service is stopped")));
  }
  act_queue_.clear();
}

ReportAck Broker::report(const EpisodeReport& report) {
  {
    std::lock_guard<std::mutex> lock(tasks_mu_);
    if (!delivered_.count(report.ticket_id)) {
      throw UnknownTicket("ticket " + report.ticket_id + " was never delivered");
    }
    if (reported_.count(report.ticket_id)) {
      return ReportAck{true};
    }
    reported_.insert(report.ticket_id);
  }
  store_.append(report);
  return ReportAck{false};
}

std::vector<std::string> Broker::arrival_log() const {
  std::lock_guard<std::mutex> lock(act_mu_);
  return arrival_log_;
}

std::vector<std::string> Broker::processed_log() const {
  std::lock_guard<std::mutex> lock(act_mu_);
  return processed_log_;
}

std::optional<TaskTicket> LocalClient::pull_task(const std::string& worker_id) {
  return broker_.pull_task(worker_id);
}

Action LocalClient::request_action(const ActRequest& request) {
  return broker_.request_action(request);
}

ReportAck LocalClient::report(const EpisodeReport& report) { return broker_.report(report); }

size_t LocalClient::submit(const std::vector<TaskTicket>& tickets) {
  return broker_.submit(tickets);
}

// ---------------------------------------------------------------------------
// Wire protocol
// ---------------------------------------------------------------------------

namespace {

Json ticket_to_json(const TaskTicket& t) {
  Json j;
  j["ticket-id"] = t.ticket_id;
  j["template-id"] = t.template_id;
  j["seed"] = t.seed;
  j["temperature"] = t.temperature;
  j["max-steps"] = t.max_steps;
  j["attempt"] = t.attempt;
  return j;
}

TaskTicket ticket_from_json(const Json& j) {
  TaskTicket t;
  t.ticket_id = j.at("ticket-id").get<std::string>();
  t.template_id = j.at("template-id").get<std::string>();
  t.seed = j.at("seed").get<uint64_t>();
  t.temperature = j.at("temperature").get<double>();
  t.max_steps = j.at("max-steps").get<int>();
  t.attempt = j.at("attempt").get<int>();
  return t;
}

Json error_reply(const std::string& code) {
  Json j;
  j["kind"] = "error";
  j["code"] = code;
  return j;
}

void send_all(int fd, const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) throw BrokerIoError("send failed");
    sent += static_cast<size_t>(n);
  }
}

}  // namespace

BrokerServer::BrokerServer(Broker& broker, const std::string& host, int port) : broker_(broker) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw BrokerIoError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw BrokerIoError("bad listen address: " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listen_fd_);
    throw BrokerIoError("bind failed on " + host + ":" + std::to_string(port));
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    throw BrokerIoError("listen failed");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  accepter_ = std::thread([this] { accept_loop(); });
}

BrokerServer::~BrokerServer() { stop(); }

void BrokerServer::stop() {
  {
    std::lock_guard<std::mutex> lock(conn_mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accepter_.joinable()) accepter_.join();
  {
    std::lock_guard<std::mutex> lock(conn_mu_);
    for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : conns_) {
    if (t.joinable()) t.join();
  }
}

void BrokerServer::accept_loop() {
  while (true) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) return;  // listener closed
    std::lock_guard<std::mutex> lock(conn_mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    conn_fds_.push_back(fd);
    conns_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void BrokerServer::serve_connection(int fd) {
  std::string buf;
  char chunk[4096];
  while (true) {
    size_t nl = buf.find('\n');
    if (nl == std::string::npos) {
      ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<size_t>(n));
      continue;
    }
    std::string line = buf.substr(0, nl);
    buf.erase(0, nl + 1);
    std::string reply;
    try {
      reply = handle_line(line);
    } catch (...) {
      reply = error_reply("internal-error").dump();
    }
    try {
      send_all(fd, reply + "\n");
    } catch (const BrokerIoError&) {
      break;
    }
  }
  ::close(fd);
}

std::string BrokerServer::handle_line(const std::string& line) {
  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const nlohmann::json::exception&) {
    return error_reply("malformed-request").dump();
  }
  if (!msg.is_object() || !msg.contains("kind")) {
    return error_reply("malformed-request").dump();
  }
  const std::string kind = msg["kind"].get<std::string>();

  if (kind == "pull-task") {
    auto t = broker_.pull_task(msg.value("worker-id", ""));
    if (!t) return Json{{"kind", "empty"}}.dump();
    Json j = ticket_to_json(*t);
    Json out;
    out["kind"] = "task";
    for (auto& [k, v] : j.items()) out[k] = v;
    return out.dump();
  }

  if (kind == "act") {
    try {
      ActRequest r;
      r.episode_id = msg.at("episode-id").get<std::string>();
      r.goal = msg.at("goal").get<std::string>();
      r.screen = screen_from_json(msg.at("screen"));
      r.history = history_from_json(msg.at("history"));
      r.temperature = msg.at("temperature").get<double>();
      Action a = broker_.request_action(r);
      Json out;
      out["kind"] = "action";
      out["action"] = serialize_action(a);
      return out.dump();
    } catch (const MalformedRequest&) {
      return error_reply("malformed-request").dump();
    } catch (const PolicyUnavailable&) {
      return error_reply("policy-unavailable").dump();
    } catch (const nlohmann::json::exception&) {
      return error_reply("malformed-request").dump();
    }
  }

  if (kind == "report") {
    try {
      EpisodeReport r = report_from_json(msg);
      ReportAck ack = broker_.report(r);
      Json out;
      out["kind"] = "ack";
      out["status"] = ack.duplicate ? "duplicate" : "fresh";
      return out.dump();
    } catch (const UnknownTicket&) {
      return error_reply("unknown-ticket").dump();
    } catch (const nlohmann::json::exception&) {
      return error_reply("malformed-request").dump();
    }
  }

  if (kind == "submit") {
    try {
      std::vector<TaskTicket> tickets;
      for (const auto& tj : msg.at("tickets")) tickets.push_back(ticket_from_json(tj));
      size_t n = broker_.submit(tickets);
      Json out;
      out["kind"] = "ack";
      out["accepted"] = n;
      return out.dump();
    } catch (const DuplicateTicket&) {
      return error_reply("duplicate-ticket").dump();
    } catch (const nlohmann::json::exception&) {
      return error_reply("malformed-request").dump();
    }
  }

  return error_reply("unknown-kind").dump();
}

// ---------------------------------------------------------------------------
// TCP client
// ---------------------------------------------------------------------------

TcpClient::TcpClient(const std::string& host, int port) : host_(host), port_(port) {
  connect_now();
}

TcpClient::~TcpClient() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpClient::connect_now() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  rxbuf_.clear();
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw BrokerIoError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port_));
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw BrokerIoError("bad broker address: " + host_);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw BrokerIoError("cannot connect to " + host_ + ":" + std::to_string(port_));
  }
  fd_ = fd;
}

std::string TcpClient::roundtrip(const std::string& line) {
  if (fd_ < 0) connect_now();
  try {
    send_all(fd_, line + "\n");
  } catch (const BrokerIoError&) {
    connect_now();
    send_all(fd_, line + "\n");
  }
  while (true) {
    size_t nl = rxbuf_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = rxbuf_.substr(0, nl);
      rxbuf_.erase(0, nl + 1);
      return reply;
    }
    char chunk[4096];
    ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n <= 0) {
      ::close(fd_);
      fd_ = -1;
      throw BrokerIoError("connection closed by broker");
    }
    rxbuf_.append(chunk, static_cast<size_t>(n));
  }
}

namespace {

[[noreturn]] void raise_wire_error(const Json& reply) {
  const std::string code = reply.value("code", "unknown");
  if (code == "malformed-request") throw MalformedRequest("broker rejected request");
  if (code == "policy-unavailable") throw PolicyUnavailable("broker policy unavailable");
  if (code == "unknown-ticket") throw UnknownTicket("broker does not know this ticket");
  if (code == "duplicate-ticket") throw DuplicateTicket("broker saw this ticket before");
  throw BrokerIoError("broker error: " + code);
}

}  // namespace

std::optional<TaskTicket> TcpClient::pull_task(const std::string& worker_id) {
  Json msg;
  msg["kind"] = "pull-task";
  msg["worker-id"] = worker_id;
  Json reply = Json::parse(roundtrip(msg.dump()));
  const std::string kind = reply.value("kind", "");
  if (kind == "empty") return std::nullopt;
  if (kind == "task") return ticket_from_json(reply);
  raise_wire_error(reply);
}

Action TcpClient::request_action(const ActRequest& request) {
  Json msg;
  msg["kind"] = "act";
  msg["episode-id"] = request.episode_id;
  msg["goal"] = request.goal;
  msg["screen"] = screen_to_json(request.screen);
  msg["history"] = history_to_json(request.history);
  msg["temperature"] = request.temperature;
  Json reply = Json::parse(roundtrip(msg.dump()));
  if (reply.value("kind", "") == "action") {
    return parse_action(reply.at("action").get<std::string>());
  }
  raise_wire_error(reply);
}

ReportAck TcpClient::report(const EpisodeReport& report) {
  Json out;
  out["kind"] = "report";
  Json payload = report_to_json(report);
  for (auto& [k, v] : payload.items()) out[k] = v;
  Json reply = Json::parse(roundtrip(out.dump()));
  if (reply.value("kind", "") == "ack") {
    return ReportAck{reply.value("status", "fresh") == "duplicate"};
  }
  raise_wire_error(reply);
}

size_t TcpClient::submit(const std::vector<TaskTicket>& tickets) {
  Json msg;
  msg["kind"] = "submit";
  Json arr = Json::array();
  for (const auto& t : tickets) arr.push_back(ticket_to_json(t));
  msg["tickets"] = std::move(arr);
  Json reply = Json::parse(roundtrip(msg.dump()));
  if (reply.value("kind", "") == "ack") return reply.value("accepted", size_t{0});
  raise_wire_error(reply);
}

// ---------------------------------------------------------------------------
// Worker
// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxAttempts = 3;

template <typename Fn>
auto with_retry(Fn&& fn) {
  int attempt = 0;
  while (true) {
    try {
      return fn();
    } catch (const BrokerIoError&) {
      if (++attempt >= kMaxAttempts) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(10 << attempt));
    }
  }
}

}  // namespace

WorkerResult run_worker(const std::string& worker_id, BrokerClient& client) {
  WorkerResult result;
  while (true) {
    std::optional<TaskTicket> ticket;
    try {
      ticket = with_retry([&] { return client.pull_task(worker_id); });
    } catch (const BrokerIoError&) {
      break;
    }
    if (!ticket) break;

    try {
      TaskInstance inst = instantiate(ticket->template_id, ticket->seed);
      if (ticket->max_steps > 0) inst.max_steps = ticket->max_steps;
      auto session = reset(inst);

      std::vector<HistoryEntry> history;
      std::vector<StepRecord> steps;
      std::vector<double> inference_times;
      const auto episode_start = std::chrono::steady_clock::now();

      while (!session->done()) {
        UiScreen screen = session->screen();
        auto window = truncate_history(history);
        ActRequest req;
        req.episode_id = ticket->ticket_id;
        req.goal = inst.goal;
        req.screen = screen;
        req.history = window;
        req.temperature = ticket->temperature;

        const auto t0 = std::chrono::steady_clock::now();
        Action action = with_retry([&] { return client.request_action(req); });
        inference_times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

        int reward = 0;
        try {
          reward = session->step(action).reward;
        } catch (const IndexOutOfRange&) {
          session->burn_step();  // ineffective step, not a crash
        }

        StepRecord rec;
        rec.screen_before = screen;
        rec.prompt = build_prompt(inst.goal, window, screen);
        rec.action = action;
        rec.reward = reward;
        steps.push_back(std::move(rec));

        HistoryEntry entry;
        try {
          entry = to_history_entry(action, screen);
        } catch (const IndexOutOfRange&) {
          entry.action_type = to_string(action.kind);
          entry.target_descriptor = "unknown ''";
        }
        history.push_back(std::move(entry));
      }

      EpisodeReport report;
      report.ticket_id = ticket->ticket_id;
      report.trajectory.instance = inst;
      report.trajectory.steps = std::move(steps);
      report.trajectory.ret = session->succeeded() ? 1 : 0;
      report.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - episode_start).count();
      report.inference_times_s = std::move(inference_times);

      with_retry([&] { return client.report(report); });
      ++result.acked;
      ++result.episodes;
      if (report.trajectory.ret == 1) ++result.successes;
    } catch (const BrokerIoError&) {
      // abandon this episode and hand the task back under a fresh id
      TaskTicket retry = *ticket;
      retry.attempt += 1;
      retry.ticket_id = ticket->ticket_id + "+a" + std::to_string(retry.attempt);
      try {
        client.submit({retry});
      } catch (...) {
      }
    }
  }
  return result;
}

}  // namespace rftforge
