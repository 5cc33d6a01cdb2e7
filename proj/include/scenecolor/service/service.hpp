#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

// Before httplib: <resolv.h> defines an `_res` macro that breaks Eigen.
#include "scenecolor/pipeline/pipeline.hpp"

#include <httplib.h>

namespace scenecolor::service {

namespace fs = std::filesystem;
using datastore::Datastore;
using nlohmann::json;
using States = std::map<std::string, std::string>;  // scene object id -> image object id

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownScene: return 404;
    case ErrorCode::UntrainedModel:
    case ErrorCode::Io: return 500;
    default: return 422;
  }
}

struct HistoryEntry {
  States states;
  double energy = 0.0;
};

/// Everything a client sees of one editing session. Copied out under the
/// session lock, so readers never observe a half-finished job.
struct SessionState {
  std::string id;
  std::string scene;
  pipeline::Config config;
  std::optional<palette::ColorTheme> theme;
  States pins;
  States states;  // empty until the first optimization
  json document;  // null until the first optimization
  std::vector<HistoryEntry> history;
};

inline json to_json(const SessionState& s) {
  json hist = json::array();
  for (std::size_t i = 0; i < s.history.size(); ++i)
    hist.push_back({{"index", i}, {"energy", s.history[i].energy}, {"states", s.history[i].states}});
  return {{"id", s.id},
          {"scene", s.scene},
          {"config", pipeline::to_json(s.config)},
          {"theme", s.theme ? palette::to_json(*s.theme) : json()},
          {"pins", s.pins},
          {"states", s.states},
          {"document", s.document},
          {"history", hist}};
}

inline SessionState session_from_json(const json& j) {
  SessionState s;
  s.id = j.at("id").get<std::string>();
  s.scene = j.at("scene").get<std::string>();
  s.config = pipeline::config_from_json(j.at("config"));
  if (!j.at("theme").is_null()) s.theme = palette::theme_from_json(j.at("theme"));
  s.pins = j.at("pins").get<States>();
  s.states = j.at("states").get<States>();
  s.document = j.at("document");
  for (const auto& h : j.at("history")) s.history.push_back({h.at("states").get<States>(), h.at("energy").get<double>()});
  return s;
}

/// REST facade over the pipeline. Sessions are snapshotted to
/// `<store>/sessions/<id>.json` after every change and reloaded on start.
class Service {
 public:
  Service(const Datastore& store, pipeline::Config defaults) : store_(store), defaults_(std::move(defaults)) {
    // Fill the lazy theme cache now; job threads then only read it.
    for (const auto& img : store_.images()) store_.themes(img.id);
    fs::create_directories(dir());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir()))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto s = std::make_shared<Slot>();
      s->state = session_from_json(datastore::read_json(f));
      next_id_ = std::max(next_id_, std::stoul(s->state.id.substr(1)) + 1);
      sessions_[s->state.id] = s;
    }
  }

  ~Service() { wait_idle(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Blocks until every background job has finished.
  void wait_idle() {
    std::vector<std::thread> jobs;
    {
      std::lock_guard lock(jobs_mutex_);
      jobs.swap(jobs_);
    }
    for (auto& t : jobs) t.join();
  }

  void mount(httplib::Server& server) {
    server.Post("/sessions", [this](const auto& req, auto& res) { handle(res, [&] { return create(req); }); });
    server.Get(R"(/sessions/([^/]+)/scheme)", [this](const auto& req, auto& res) {
      handle(res, [&] { return Reply{200, payload(slot(req.matches[1])->snapshot())}; });
    });
    server.Get(R"(/sessions/([^/]+)/job)", [this](const auto& req, auto& res) { handle(res, [&] { return job(req); }); });
    server.Post(R"(/sessions/([^/]+)/recommend)",
                [this](const auto& req, auto& res) { handle(res, [&] { return recommend(req); }); });
    server.Post(R"(/sessions/([^/]+)/pins)", [this](const auto& req, auto& res) { handle(res, [&] { return pins(req); }); });
    server.Get(R"(/sessions/([^/]+)/history)", [this](const auto& req, auto& res) {
      handle(res, [&] {
        const auto s = slot(req.matches[1])->snapshot();
        return Reply{200, {{"id", s.id}, {"history", to_json(s)["history"]}}};
      });
    });
    server.Post(R"(/sessions/([^/]+)/apply)", [this](const auto& req, auto& res) { handle(res, [&] { return apply(req); }); });
    server.Get(R"(/sessions/([^/]+)/candidates)",
               [this](const auto& req, auto& res) { handle(res, [&] { return candidates(req); }); });
    server.Get(R"(/swatches/([^/]+))", [this](const auto& req, auto& res) { swatch(req, res); });
  }

 private:
  struct Reply {
    int status;
    json body;
  };

  struct Slot {
    std::mutex mutex;
    SessionState state;
    bool running = false;
    std::string job_status = "idle";  // idle, running, done, failed
    json job_error;

    SessionState snapshot() {
      std::lock_guard lock(mutex);
      return state;
    }
  };

  /// Clears the running flag even when the job throws.
  struct RunGuard {
    Slot& s;
    ~RunGuard() {
      std::lock_guard lock(s.mutex);
      s.running = false;
    }
  };

  fs::path dir() const { return store_.root() / "sessions"; }

  template <typename F>
  static void handle(httplib::Response& res, F&& f) {
    Reply r{500, json()};
    try {
      r = f();
    } catch (const Error& e) {
      r = {http_status(e.code()), e.to_json()};
    } catch (const json::exception& e) {
      r = {422, Error(ErrorCode::InvalidArgument, std::string("request body: ") + e.what()).to_json()};
    } catch (const std::exception& e) {
      r = {500, Error(ErrorCode::Io, e.what()).to_json()};
    }
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  }

  std::shared_ptr<Slot> slot(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::NotFound, "no session " + id);
    return it->second;
  }

  void persist(const SessionState& s) const { datastore::write_json(dir() / (s.id + ".json"), to_json(s)); }

  static json payload(const SessionState& s) {
    auto j = to_json(s);
    j.erase("config");
    j["params"] = pipeline::to_json(s.config);
    return j;
  }

  Reply create(const httplib::Request& req) {
    const auto body = body_of(req);
    SessionState s;
    s.scene = body.at("scene").get<std::string>();
    store_.scene(s.scene);
    s.config = pipeline::config_from_json(body.value("config", json::object()), defaults_);
    auto slot = std::make_shared<Slot>();
    {
      std::lock_guard lock(sessions_mutex_);
      s.id = "s" + std::to_string(next_id_++);
      slot->state = s;
      sessions_[s.id] = slot;
    }
    persist(s);
    return {201, payload(s)};
  }

  Reply job(const httplib::Request& req) {
    auto s = slot(req.matches[1]);
    std::lock_guard lock(s->mutex);
    json j = {{"id", s->state.id}, {"status", s->job_status}};
    if (s->job_status == "failed") j["error"] = s->job_error;
    if (s->job_status == "done") j["result"] = payload(s->state);
    return {200, j};
  }

  /// Claims the session for one job or answers 409.
  static bool claim(Slot& s) {
    std::lock_guard lock(s.mutex);
    if (s.running) return false;
    s.running = true;
    return true;
  }

  static Reply busy(const std::string& id) {
    return {409, {{"code", "Conflict"}, {"message", "an optimization is already running for " + id}, {"details", {{"session", id}}}}};
  }

  /// Optimizes and stores the outcome; runs on the job thread or inline.
  void run(Slot& s, const SessionState& input, const States* warm) {
    auto rec = pipeline::recommend(store_, input.scene, *input.theme, input.config, input.pins, warm);
    SessionState out = input;
    out.states = pipeline::assignment_states(rec.problem.graph, rec.result.best);
    out.document = pipeline::to_json(rec.document);
    out.history.clear();
    for (const auto& h : rec.result.history)
      out.history.push_back({pipeline::assignment_states(rec.problem.graph, h.assignment), h.energy});
    persist(out);
    std::lock_guard lock(s.mutex);
    s.state = std::move(out);
  }

  Reply recommend(const httplib::Request& req) {
    auto s = slot(req.matches[1]);
    const auto body = body_of(req);
    SessionState input = s->snapshot();
    if (!body.contains("theme")) fail(ErrorCode::InvalidArgument, "theme is required");
    input.theme = palette::theme_from_json(body.at("theme"));
    input.config = pipeline::config_from_json(body.value("params", json::object()), input.config);
    if (!claim(*s)) return busy(input.id);
    const bool wait = req.has_param("wait") && req.get_param_value("wait") != "0";
    if (wait) {
      RunGuard guard{*s};
      run(*s, input, nullptr);
      return {200, payload(s->snapshot())};
    }
    {
      std::lock_guard lock(s->mutex);
      s->job_status = "running";
      s->job_error = nullptr;
    }
    std::lock_guard lock(jobs_mutex_);
    jobs_.emplace_back([this, s, input] {
      std::string status = "done";
      json error;
      try {
        run(*s, input, nullptr);
      } catch (const Error& e) {
        status = "failed";
        error = e.to_json();
      } catch (const std::exception& e) {
        status = "failed";
        error = Error(ErrorCode::Io, e.what()).to_json();
      }
      std::lock_guard lock(s->mutex);
      s->job_status = status;
      s->job_error = error;
      s->running = false;
    });
    return {202, {{"id", input.id}, {"status", "running"}, {"poll", "/sessions/" + input.id + "/job"}}};
  }

  /// Replaces the pin set and re-optimizes from the current states.
  Reply pins(const httplib::Request& req) {
    auto s = slot(req.matches[1]);
    const auto body = body_of(req);
    SessionState input = s->snapshot();
    if (body.contains("theme")) input.theme = palette::theme_from_json(body.at("theme"));
    if (!input.theme) fail(ErrorCode::InvalidArgument, "no target theme yet; post one to /recommend or include it here");
    if (!body.contains("pins") || !body.at("pins").is_object())
      fail(ErrorCode::InvalidPin, "pins must map scene object ids to image object ids");
    input.pins.clear();
    for (const auto& [obj, cand] : body.at("pins").items()) {
      if (!cand.is_string()) fail(ErrorCode::InvalidPin, "pin for " + obj + " must be an image object id");
      input.pins[obj] = cand.get<std::string>();
    }
    pipeline::build_problem(store_, input.scene, input.pins);  // rejects bad pins before claiming
    if (!claim(*s)) return busy(input.id);
    RunGuard guard{*s};
    States warm = input.states;
    run(*s, input, warm.empty() ? nullptr : &warm);
    return {200, payload(s->snapshot())};
  }

  /// Makes one stored history sample the current scheme.
  Reply apply(const httplib::Request& req) {
    auto s = slot(req.matches[1]);
    const auto body = body_of(req);
    if (!claim(*s)) return busy(req.matches[1]);
    RunGuard guard{*s};
    SessionState st = s->snapshot();
    const auto index = body.at("index").get<long long>();
    if (index < 0 || static_cast<std::size_t>(index) >= st.history.size())
      fail(ErrorCode::InvalidArgument, "history index out of range", {{"size", st.history.size()}});
    const auto problem = pipeline::build_problem(store_, st.scene, st.pins);
    const auto states = st.history[static_cast<std::size_t>(index)].states;
    const auto a = pipeline::assignment_from_states(problem.graph, states);
    st.states = states;
    st.document = pipeline::to_json(pipeline::document_for(store_, st.scene, problem, a, *st.theme, st.config));
    persist(st);
    {
      std::lock_guard lock(s->mutex);
      s->state = st;
    }
    return {200, payload(st)};
  }

  Reply candidates(const httplib::Request& req) {
    const auto st = slot(req.matches[1])->snapshot();
    const auto problem = pipeline::build_problem(store_, st.scene);
    json nodes = json::array();
    for (const auto& n : problem.graph.nodes) {
      json c = json::array();
      for (const auto& cand : n.candidates) c.push_back({{"id", cand.id}, {"theme", palette::to_json(cand.theme)}});
      nodes.push_back({{"id", n.id}, {"category", n.category}, {"candidates", c}});
    }
    return {200, {{"id", st.id}, {"nodes", nodes}}};
  }

  void swatch(const httplib::Request& req, httplib::Response& res) {
    const auto* sw = store_.swatches().find(req.matches[1]);
    const auto path = sw ? store_.root() / "swatches" / sw->image : fs::path();
    std::ifstream in(path, std::ios::binary);
    if (!sw || !in) {
      res.status = 404;
      res.set_content(Error(ErrorCode::NotFound, "no swatch " + std::string(req.matches[1])).to_json().dump(),
                      "application/json");
      return;
    }
    std::ostringstream bytes;
    bytes << in.rdbuf();
    res.set_content(bytes.str(), "image/png");
  }

  const Datastore& store_;
  pipeline::Config defaults_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  unsigned long next_id_ = 1;
  std::mutex jobs_mutex_;
  std::vector<std::thread> jobs_;
};

}  // namespace scenecolor::service
