// Copyright 2026 The seqal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Annotation service: a live active-learning session whose oracle is a
// pool of human annotators talking JSON over HTTP.
//
//   GET  /session/status          200 status | 404 no session
//   POST /session/start   {cfg}   200 status | 409 session exists | 400 bad config
//   POST /session/advance         200 status | 409 open tasks | 404
//   GET  /tasks/next              200 task (leased) | 204 none open | 404
//   POST /tasks/{id}/labels {tags}
//                                 200 accepted | 422 {reason, position}
//                                 | 404 unknown task | 409 already submitted
//
// POSTs carrying an X-Request-Id header are answered from a replay cache
// when the id repeats. The start config uses the experiment config keys
// (one `strategy` instead of `strategies`) plus `auto_advance` and
// `lease_seconds`. The state directory holds session.json (ALState and
// config), tasks.json (the open batch) and log.csv.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "seqal/experiment.hpp"
#include "seqal/loop.hpp"
#include "seqal/report.hpp"
#include "seqal/state_io.hpp"

namespace seqal {

using SteadyClock = std::function<std::chrono::steady_clock::time_point()>;

inline SteadyClock system_clock() {
  return [] { return std::chrono::steady_clock::now(); };
}

enum class TaskStatus { kOpen, kLeased, kSubmitted };

struct AnnotationTask {
  int task_id = 0;
  int sentence_id = 0;
  std::vector<std::string> tokens;
  TagSequence proposed;             // current model's Viterbi path, BIO-repaired
  std::vector<double> confidence;   // marginal of the proposed label per token
  std::size_t lowest = 0;           // position with the lowest confidence
  TaskStatus status = TaskStatus::kOpen;
  std::chrono::steady_clock::time_point lease_expiry{};
  TagSequence submitted;
};

struct SubmitResult {
  int http_status = 200;
  std::string reason;
  std::optional<std::size_t> position;
};

// Open batch of annotation tasks with time-limited leases. Not thread-safe;
// Session serializes access.
class TaskBoard {
 public:
  explicit TaskBoard(std::chrono::seconds lease = std::chrono::minutes(10), SteadyClock clock = system_clock())
      : lease_(lease), clock_(std::move(clock)) {}

  void set_labels(std::vector<Tag> labels) { labels_ = std::move(labels); }

  void post(std::vector<AnnotationTask> batch) { tasks_ = std::move(batch); }
  void clear() { tasks_.clear(); }

  const std::vector<AnnotationTask>& tasks() const { return tasks_; }

  // Lowest-id task that is open or whose lease ran out; leases it.
  std::optional<AnnotationTask> lease_next() {
    const auto now = clock_();
    for (auto& t : tasks_) {
      const bool free = t.status == TaskStatus::kOpen || (t.status == TaskStatus::kLeased && t.lease_expiry <= now);
      if (!free) continue;
      t.status = TaskStatus::kLeased;
      t.lease_expiry = now + lease_;
      return t;
    }
    return std::nullopt;
  }

  SubmitResult submit(int task_id, const std::vector<std::string>& raw) {
    auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const auto& t) { return t.task_id == task_id; });
    if (it == tasks_.end()) return {404, "unknown task " + std::to_string(task_id), std::nullopt};
    if (it->status == TaskStatus::kSubmitted) return {409, "task already submitted", std::nullopt};
    TagSequence tags;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto t = Tag::parse(raw[i]);
      if (!t) return {422, "malformed tag '" + raw[i] + "'", i};
      if (!labels_.empty() && std::find(labels_.begin(), labels_.end(), *t) == labels_.end()) {
        return {422, "unknown label " + raw[i], i};
      }
      tags.push_back(*t);
    }
    if (tags.size() != it->tokens.size()) {
      return {422,
              std::to_string(tags.size()) + " tags for " + std::to_string(it->tokens.size()) + " tokens",
              std::min(tags.size(), it->tokens.size())};
    }
    if (auto pos = first_bio_violation(tags)) return {422, bio_violation_message(tags, *pos), *pos};
    it->status = TaskStatus::kSubmitted;
    it->submitted = std::move(tags);
    return {};
  }

  std::size_t open_count() const {
    return static_cast<std::size_t>(std::count_if(
        tasks_.begin(), tasks_.end(), [](const auto& t) { return t.status != TaskStatus::kSubmitted; }));
  }
  std::size_t submitted_count() const { return tasks_.size() - open_count(); }
  bool complete() const { return !tasks_.empty() && open_count() == 0; }

  std::vector<int> sentence_ids() const {
    std::vector<int> ids;
    for (const auto& t : tasks_) ids.push_back(t.sentence_id);
    return ids;
  }

 private:
  std::chrono::seconds lease_;
  SteadyClock clock_;
  std::vector<Tag> labels_;
  std::vector<AnnotationTask> tasks_;
};

inline std::string to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kOpen: return "open";
    case TaskStatus::kLeased: return "leased";
    case TaskStatus::kSubmitted: return "submitted";
  }
  return "open";
}

inline json task_to_json(const AnnotationTask& t) {
  json j{{"task_id", t.task_id},
         {"sentence_id", t.sentence_id},
         {"tokens", t.tokens},
         {"proposed_tags", tags_to_json(t.proposed)},
         {"confidence", t.confidence},
         {"lowest_confidence_position", t.lowest},
         {"status", to_string(t.status)}};
  if (t.status == TaskStatus::kSubmitted) j["tags"] = tags_to_json(t.submitted);
  return j;
}

// Leases are not persisted; a reloaded leased task is open again.
inline AnnotationTask task_from_json(const json& j) {
  AnnotationTask t;
  t.task_id = j.at("task_id").get<int>();
  t.sentence_id = j.at("sentence_id").get<int>();
  t.tokens = j.at("tokens").get<std::vector<std::string>>();
  t.proposed = tags_from_json(j.at("proposed_tags"));
  t.confidence = j.at("confidence").get<std::vector<double>>();
  t.lowest = j.at("lowest_confidence_position").get<std::size_t>();
  if (j.at("status").get<std::string>() == "submitted") {
    t.status = TaskStatus::kSubmitted;
    t.submitted = tags_from_json(j.at("tags"));
  }
  return t;
}

struct SessionConfig {
  ExperimentConfig experiment;
  Strategy strategy = Strategy::kLtp;
  bool auto_advance = true;
  std::chrono::seconds lease{std::chrono::minutes(10)};
  json source;  // the request body, persisted for restarts
};

inline SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("session config must be a JSON object");
  SessionConfig sc;
  sc.source = j;
  KeyValueConfig kv;
  for (const auto& [key, value] : j.items()) {
    if (key == "auto_advance") {
      if (!value.is_boolean()) throw ConfigError("auto_advance must be a boolean");
      sc.auto_advance = value.get<bool>();
      continue;
    }
    if (key == "lease_seconds") {
      if (!value.is_number_integer() || value.get<std::int64_t>() <= 0) {
        throw ConfigError("lease_seconds must be a positive integer");
      }
      sc.lease = std::chrono::seconds(value.get<std::int64_t>());
      continue;
    }
    if (key == "strategies" || key == "seeds") throw ConfigError("a session runs one strategy on one seed; use 'strategy'");
    const std::string name = key == "strategy" ? "strategies" : key;
    if (value.is_string()) {
      kv.set(name, value.get<std::string>());
    } else if (value.is_number() || value.is_boolean()) {
      kv.set(name, value.dump());
    } else {
      throw ConfigError("config key '" + key + "' must be a scalar");
    }
  }
  if (!j.contains("strategy")) throw ConfigError("missing key 'strategy'");
  sc.experiment = experiment_config_from(kv);
  if (sc.experiment.strategies.size() != 1) throw ConfigError("'strategy' names exactly one strategy");
  sc.strategy = sc.experiment.strategies.front();
  sc.experiment.seeds = 1;
  return sc;
}

// Oracle backed by a TaskBoard: posts the query as tasks and blocks until
// every task is submitted (and, without auto-advance, until advance()).
class HumanOracle : public Oracle {
 public:
  using Proposer = std::function<AnnotationTask(int sentence_id)>;
  using Hook = std::function<void()>;

  HumanOracle(std::mutex& mu, std::condition_variable& cv, TaskBoard& board) : mu_(mu), cv_(cv), board_(board) {}

  void set_proposer(Proposer p) { proposer_ = std::move(p); }
  // Called with the lock held after a batch is posted.
  void on_posted(Hook h) { posted_ = std::move(h); }
  void set_auto_advance(bool on) { auto_advance_ = on; }

  // Caller must hold the lock.
  bool advance_requested() const { return advance_; }
  void request_advance() { advance_ = true; }
  void close() { closed_ = true; }
  bool closed() const { return closed_; }
  int next_task_id() const { return next_task_id_; }
  void set_next_task_id(int id) { next_task_id_ = id; }

  std::vector<TagSequence> label(std::span<const int> ids) override {
    std::unique_lock lock(mu_);
    if (board_.sentence_ids() != std::vector<int>(ids.begin(), ids.end())) {
      std::vector<AnnotationTask> batch;
      for (int id : ids) {
        auto t = proposer_(id);
        t.task_id = next_task_id_++;
        batch.push_back(std::move(t));
      }
      board_.post(std::move(batch));
    }
    advance_ = false;
    if (posted_) posted_();
    cv_.notify_all();
    cv_.wait(lock, [&] { return closed_ || (board_.complete() && (auto_advance_ || advance_)); });
    if (closed_) throw SessionClosed("annotation session closed");
    std::vector<TagSequence> out;
    for (const auto& t : board_.tasks()) out.push_back(t.submitted);
    return out;
  }

 private:
  std::mutex& mu_;
  std::condition_variable& cv_;
  TaskBoard& board_;
  Proposer proposer_;
  Hook posted_;
  bool auto_advance_ = true;
  bool advance_ = false;
  bool closed_ = false;
  int next_task_id_ = 1;
};

enum class SessionPhase { kStarting, kAnnotating, kRetraining, kFinished, kFailed };

inline std::string to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::kStarting: return "starting";
    case SessionPhase::kAnnotating: return "annotating";
    case SessionPhase::kRetraining: return "retraining";
    case SessionPhase::kFinished: return "finished";
    case SessionPhase::kFailed: return "failed";
  }
  return "failed";
}

// One active-learning run driven by human (or scripted) annotators. A
// worker thread owns ALState and blocks in HumanOracle::label between
// batches; HTTP handlers only touch the board under the mutex.
class Session {
 public:
  struct Options {
    std::filesystem::path state_dir;
    SteadyClock clock = system_clock();
  };

  static constexpr const char* kStateFile = "session.json";
  static constexpr const char* kTasksFile = "tasks.json";
  static constexpr const char* kLogFile = "log.csv";

  // Fresh session. Blocks until the first batch is posted (or the run ends).
  static std::unique_ptr<Session> start(const json& request, Options opts) {
    auto sc = session_config_from_json(request);
    auto s = std::unique_ptr<Session>(new Session(std::move(sc), std::move(opts)));
    s->state_ = s->learner_->start(s->split_.labeled_ids, s->split_.labels);
    s->sync_counters();
    s->persist_state();
    s->launch();
    return s;
  }

  // Reloads the session persisted in opts.state_dir, if any.
  static std::unique_ptr<Session> resume(Options opts) {
    const auto path = opts.state_dir / kStateFile;
    if (!std::filesystem::exists(path)) return nullptr;
    const auto j = read_json_file(path);
    auto sc = session_config_from_json(j.at("extra").at("config"));
    auto s = std::unique_ptr<Session>(new Session(std::move(sc), std::move(opts)));
    s->state_ = state_from_json(j, s->learner_->fresh_model());
    s->oracle_.set_next_task_id(j.at("extra").value("next_task_id", 1));
    const auto tasks_path = s->opts_.state_dir / kTasksFile;
    if (std::filesystem::exists(tasks_path)) {
      const auto tj = read_json_file(tasks_path);
      if (tj.at("iteration").get<int>() == s->state_.iteration) {
        std::vector<AnnotationTask> batch;
        for (const auto& t : tj.at("tasks")) batch.push_back(task_from_json(t));
        s->board_.post(std::move(batch));
        s->oracle_.set_next_task_id(std::max(s->oracle_.next_task_id(), tj.value("next_task_id", 1)));
      }
    }
    s->launch();
    return s;
  }

  ~Session() {
    {
      std::lock_guard lock(mu_);
      oracle_.close();
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const SessionConfig& config() const { return config_; }
  const ActiveLearner& learner() const { return *learner_; }

  json status() const {
    std::lock_guard lock(mu_);
    return status_locked();
  }

  // Leases the next task; nullopt when none is open.
  std::optional<json> next_task() {
    std::lock_guard lock(mu_);
    if (phase_ != SessionPhase::kAnnotating) return std::nullopt;
    auto t = board_.lease_next();
    if (!t) return std::nullopt;
    return task_to_json(*t);
  }

  SubmitResult submit(int task_id, const json& body) {
    std::vector<std::string> raw;
    if (!body.is_object() || !body.contains("tags") || !body.at("tags").is_array()) {
      return {400, "body must be {\"tags\": [...]}", std::nullopt};
    }
    for (const auto& v : body.at("tags")) {
      if (!v.is_string()) return {422, "tags must be strings", raw.size()};
      raw.push_back(v.get<std::string>());
    }
    SubmitResult r;
    {
      std::lock_guard lock(mu_);
      if (phase_ != SessionPhase::kAnnotating) {
        auto it = std::find_if(board_.tasks().begin(), board_.tasks().end(),
                               [&](const auto& t) { return t.task_id == task_id; });
        if (it == board_.tasks().end()) return {404, "unknown task " + std::to_string(task_id), std::nullopt};
        return {409, "task already submitted", std::nullopt};
      }
      r = board_.submit(task_id, raw);
      if (r.http_status == 200) {
        persist_tasks();
        if (board_.complete() && config_.auto_advance) phase_ = SessionPhase::kRetraining;
      }
    }
    cv_.notify_all();
    return r;
  }

  // 200 when accepted (or nothing to do), 409 while tasks are open.
  int advance() {
    {
      std::lock_guard lock(mu_);
      if (phase_ != SessionPhase::kAnnotating) return 200;
      if (board_.open_count() > 0) return 409;
      oracle_.request_advance();
      phase_ = SessionPhase::kRetraining;
    }
    cv_.notify_all();
    return 200;
  }

  // Test hook: waits until `pred(status)` holds or the timeout expires.
  bool wait_for(const std::function<bool(const json&)>& pred, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return pred(status_locked()); });
  }

  StrategyLog log() const {
    std::lock_guard lock(mu_);
    return log_locked();
  }

 private:
  Session(SessionConfig sc, Options opts)
      : config_(std::move(sc)), opts_(std::move(opts)), board_(config_.lease, opts_.clock), oracle_(mu_, cv_, board_) {
    data_ = load_corpora(config_.experiment);
    check_experiment_fits(config_.experiment, data_);
    split_ = make_seed_split(config_.experiment, data_, 0);
    learner_ = std::make_unique<ActiveLearner>(split_.universe, split_.test, config_.experiment.learner);
    board_.set_labels(learner_->labels());
    oracle_.set_auto_advance(config_.auto_advance);
    std::filesystem::create_directories(opts_.state_dir);
  }

  void sync_counters() {
    history_ = state_.history;
    labeled_ = state_.labeled.size();
    pool_ = state_.pool.size();
    iteration_ = state_.iteration;
  }

  void launch() {
    sync_counters();
    oracle_.on_posted([this] {
      phase_ = SessionPhase::kAnnotating;
      persist_tasks();
    });
    worker_ = std::thread([this] { run(); });
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return phase_ != SessionPhase::kStarting; });
  }

  bool done() const {
    return static_cast<std::size_t>(state_.iteration) >= config_.experiment.iterations || state_.pool.empty();
  }

  void run() {
    try {
      const auto scfg = config_.experiment.strategy_config(config_.strategy, 0);
      while (!done()) {
        learner_->ensure_trained(state_);
        const CrfModel model = state_.model;
        oracle_.set_proposer([this, model](int id) { return propose(model, id); });
        state_ = learner_->run_iteration(std::move(state_), scfg, config_.experiment.batch_size, oracle_);
        std::lock_guard lock(mu_);
        board_.clear();
        sync_counters();
        persist_state();
        persist_tasks();
        if (!done()) phase_ = SessionPhase::kRetraining;
      }
      std::lock_guard lock(mu_);
      phase_ = SessionPhase::kFinished;
    } catch (const SessionClosed&) {
      return;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      error_ = e.what();
      phase_ = SessionPhase::kFailed;
    }
    cv_.notify_all();
  }

  AnnotationTask propose(const CrfModel& model, int id) const {
    const auto& s = learner_->sentence(id);
    auto dr = learner_->decode_sentence(model, id);
    AnnotationTask t;
    t.sentence_id = id;
    t.tokens = s.tokens;
    t.proposed = repair_bio(model.decode_labels(dr.path));
    for (std::size_t i = 0; i < dr.length(); ++i) {
      t.confidence.push_back(dr.marginals(i, static_cast<std::size_t>(model.label_index(t.proposed[i]))));
      if (t.confidence[i] < t.confidence[t.lowest]) t.lowest = i;
    }
    return t;
  }

  StrategyLog log_locked() const {
    StrategyLog slog{config_.strategy, data_.corpus.schema, distribution_snapshot(data_.corpus.sentences), {}};
    slog.runs.push_back({0, history_});
    return slog;
  }

  json status_locked() const {
    json j{{"phase", to_string(phase_)},
           {"iteration", iteration_},
           {"iterations", config_.experiment.iterations},
           {"labeled", labeled_},
           {"pool", pool_},
           {"batch_size", config_.experiment.batch_size},
           {"open_tasks", board_.open_count()},
           {"submitted_tasks", board_.submitted_count()},
           {"strategy", to_string(config_.strategy)},
           {"h_mode", to_string(config_.experiment.h_mode)},
           {"auto_advance", config_.auto_advance}};
    json metrics = nullptr;
    if (!history_.empty()) {
      const auto& m = history_.back().metrics;
      metrics = {{"token", prf_to_json(m.token)},
                 {"entity", prf_to_json(m.entity)},
                 {"sentence_accuracy", m.sentence_accuracy}};
    }
    j["metrics"] = metrics;
    if (!error_.empty()) j["error"] = error_;
    return j;
  }

  // Caller holds the lock (or the worker has not started).
  void persist_state() {
    json extra{{"config", config_.source}, {"next_task_id", oracle_.next_task_id()}};
    write_json_atomic(opts_.state_dir / kStateFile, state_to_json(state_, extra));
    write_text_atomic(opts_.state_dir / kLogFile, log_csv_string(log_locked()));
  }

  void persist_tasks() {
    json tasks = json::array();
    for (const auto& t : board_.tasks()) tasks.push_back(task_to_json(t));
    write_json_atomic(opts_.state_dir / kTasksFile,
                      {{"iteration", iteration_}, {"next_task_id", oracle_.next_task_id()}, {"tasks", tasks}});
  }

  SessionConfig config_;
  Options opts_;
  LoadedCorpora data_;
  SeedSplit split_;
  std::unique_ptr<ActiveLearner> learner_;
  ALState state_;  // owned by the worker once launched

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  TaskBoard board_;
  HumanOracle oracle_;
  SessionPhase phase_ = SessionPhase::kStarting;
  std::vector<IterationRecord> history_;
  std::size_t labeled_ = 0;
  std::size_t pool_ = 0;
  int iteration_ = 0;
  std::string error_;
  std::thread worker_;
};

// HTTP front end. Owns at most one Session.
class AnnotationServer {
 public:
  explicit AnnotationServer(Session::Options opts) : opts_(std::move(opts)) {
    session_ = Session::resume(opts_);
    http_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
  }

  ~AnnotationServer() { stop(); }

  // False when the address is unavailable.
  bool bind(const std::string& host, int port) { return http_.bind_to_port(host, port); }
  int bind_any(const std::string& host) { return http_.bind_to_any_port(host); }
  bool listen() { return http_.listen_after_bind(); }
  void stop() {
    if (http_.is_running()) http_.stop();
  }
  void wait_until_ready() const { http_.wait_until_ready(); }

  Session* session() {
    std::lock_guard lock(mu_);
    return session_.get();
  }

 private:
  struct Cached {
    int status;
    std::string body;
  };

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Replays responses for a repeated X-Request-Id.
  template <typename Fn>
  void idempotent(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    const auto id = req.get_header_value("X-Request-Id");
    const std::string key = req.method + " " + req.path + " " + id;
    std::unique_lock lock(replay_mu_);
    if (!id.empty()) {
      auto it = replay_.find(key);
      if (it != replay_.end()) {
        res.status = it->second.status;
        res.set_content(it->second.body, "application/json");
        return;
      }
    }
    fn(res);
    if (!id.empty()) {
      replay_[key] = {res.status, res.body};
      replay_order_.push_back(key);
      if (replay_order_.size() > kReplayCapacity) {
        replay_.erase(replay_order_.front());
        replay_order_.pop_front();
      }
    }
  }

  static std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      send(res, 400, {{"error", std::string("invalid JSON: ") + e.what()}});
      return std::nullopt;
    }
  }

  void routes() {
    http_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                               {"Access-Control-Allow-Headers", "Content-Type, X-Request-Id"}});
    http_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    http_.Get("/session/status", [this](const httplib::Request&, httplib::Response& res) {
      auto* s = session();
      if (!s) return send(res, 404, {{"error", "no session"}});
      send(res, 200, s->status());
    });

    http_.Post("/session/start", [this](const httplib::Request& req, httplib::Response& res) {
      idempotent(req, res, [&](httplib::Response& r) {
        std::lock_guard lock(mu_);
        if (session_) return send(r, 409, {{"error", "a session already exists"}});
        auto body = parse_body(req, r);
        if (!body) return;
        try {
          session_ = Session::start(*body, opts_);
        } catch (const ConfigError& e) {
          return send(r, 400, {{"error", e.what()}});
        } catch (const Error& e) {
          return send(r, 400, {{"error", e.what()}});
        }
        send(r, 200, session_->status());
      });
    });

    http_.Post("/session/advance", [this](const httplib::Request& req, httplib::Response& res) {
      idempotent(req, res, [&](httplib::Response& r) {
        auto* s = session();
        if (!s) return send(r, 404, {{"error", "no session"}});
        if (s->advance() == 409) return send(r, 409, {{"error", "batch has open tasks"}, {"status", s->status()}});
        send(r, 200, s->status());
      });
    });

    http_.Get("/tasks/next", [this](const httplib::Request&, httplib::Response& res) {
      auto* s = session();
      if (!s) return send(res, 404, {{"error", "no session"}});
      auto t = s->next_task();
      if (!t) {
        res.status = 204;
        return;
      }
      send(res, 200, *t);
    });

    http_.Post(R"(/tasks/(\d+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      idempotent(req, res, [&](httplib::Response& r) {
        auto* s = session();
        if (!s) return send(r, 404, {{"error", "no session"}});
        auto body = parse_body(req, r);
        if (!body) return;
        const int task_id = std::stoi(req.matches[1]);
        auto result = s->submit(task_id, *body);
        if (result.http_status == 200) return send(r, 200, {{"status", "accepted"}, {"task_id", task_id}});
        json err{{"status", "rejected"}, {"reason", result.reason}};
        err["position"] = result.position ? json(*result.position) : json(nullptr);
        send(r, result.http_status, err);
      });
    });
  }

  static constexpr std::size_t kReplayCapacity = 4096;

  Session::Options opts_;
  httplib::Server http_;
  std::mutex mu_;
  std::unique_ptr<Session> session_;
  std::mutex replay_mu_;
  std::map<std::string, Cached> replay_;
  std::deque<std::string> replay_order_;
};

}  // namespace seqal
