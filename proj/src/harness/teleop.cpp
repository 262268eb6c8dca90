#include "dexgrasp/harness/teleop.hpp"

#include "dexgrasp/demo/trajectory.hpp"
#include "dexgrasp/random.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <deque>

namespace dexgrasp::harness {

namespace fs = std::filesystem;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

json state_frame(int t, const env::Observation& obs, double reward, env::Event event, bool done) {
  return {{"type", "state"},
          {"t", t},
          {"obs", std::vector<double>(obs.data(), obs.data() + obs.size())},
          {"reward", reward},
          {"event", env::to_string(event)},
          {"done", done}};
}

json error_frame(std::string msg) { return {{"type", "error"}, {"msg", std::move(msg)}}; }

}  // namespace

struct TeleopServer::Impl {
  TeleopConfig cfg;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  bool session_active = false;
  std::uint64_t resets = 0;
  std::vector<fs::path> saved;

  explicit Impl(TeleopConfig c) : cfg(std::move(c)) {
    if (!(cfg.tick_hz > 0.0)) throw ConfigError("tick_hz must be positive");
    cfg.scene.validate();
    const tcp::endpoint ep(net::ip::make_address(cfg.address), cfg.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void do_accept();
};

namespace {

/// Completes the handshake, says busy and closes.
class Rejection : public std::enable_shared_from_this<Rejection> {
 public:
  explicit Rejection(tcp::socket socket) : ws_(std::move(socket)) {}

  void start() {
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->ws_.text(true);
      self->ws_.async_write(net::buffer(self->msg_),
                            [self](beast::error_code ec2, std::size_t) {
                              if (ec2) return;
                              self->ws_.async_close(websocket::close_code::try_again_later,
                                                    [self](beast::error_code) {});
                            });
    });
  }

 private:
  websocket::stream<beast::tcp_stream> ws_;
  std::string msg_ = json{{"type", "busy"}}.dump();
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, TeleopServer::Impl& server)
      : ws_(std::move(socket)),
        server_(server),
        timer_(server.ioc),
        env_(server.cfg.scene),
        period_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / server.cfg.tick_hz))) {}

  void start() {
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->end("handshake failed");
      self->send({{"type", "hello"},
                  {"obs_dim", env::kObsDim},
                  {"act_dim", env::kActDim},
                  {"tick_hz", self->server_.cfg.tick_hz}});
      self->begin_episode(self->server_.cfg.seed);
      self->do_read();
      self->next_tick_ = std::chrono::steady_clock::now();
      self->schedule_tick();
    });
  }

 private:
  void begin_episode(std::uint64_t seed) {
    if (live_) spdlog::info("teleop: episode {} abandoned", traj_.seed);
    obs_ = env_.reset(seed, server_.cfg.task);
    traj_ = demo::Trajectory{server_.cfg.task, seed, demo::Source::Teleop, demo::utc_timestamp(), {}};
    t_ = 0;
    live_ = true;
    pending_.reset();
    send(state_frame(0, obs_, 0.0, env::Event::None, false));
  }

  void schedule_tick() {
    next_tick_ += period_;
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->ended_) return;
      self->tick();
      self->schedule_tick();
    });
  }

  void tick() {
    if (!live_ || closing_) return;
    env::Action act = pending_.value_or(env::Action::Zero());
    pending_.reset();
    act = act.cwiseMax(-1.0).cwiseMin(1.0);
    const env::StepResult r = env_.step(act);
    traj_.steps.push_back({obs_, act, r.reward.total, r.reward.event, r.done});
    obs_ = r.obs;
    ++t_;
    send(state_frame(t_, obs_, r.reward.total, r.reward.event, r.done));
    if (r.done) finish_episode();
  }

  void finish_episode() {
    live_ = false;
    if (!traj_.succeeded() && !server_.cfg.keep_failures) {
      spdlog::info("teleop: episode {} ended with {}, discarded", traj_.seed,
                   env::to_string(traj_.steps.back().event));
      return;
    }
    try {
      fs::create_directories(server_.cfg.output_dir);
      const fs::path path =
          server_.cfg.output_dir / fmt::format("teleop_{}_{}_{:03d}.jsonl",
                                               env::to_string(traj_.task), traj_.seed,
                                               server_.saved.size());
      demo::save(demo::DemoSet({traj_}), path);
      server_.saved.push_back(path);
      send({{"type", "saved"}, {"path", path.string()}});
    } catch (const std::exception& e) {
      send(error_frame(fmt::format("could not save trajectory: {}", e.what())));
    }
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->end(live_message(*self));
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      if (!self->closing_) self->do_read();
    });
  }

  static std::string live_message(const Session& s) {
    return s.live_ ? "client left mid-episode, episode discarded" : "client disconnected";
  }

  void handle(const std::string& text) {
    json msg;
    try {
      msg = json::parse(text);
    } catch (const json::exception&) {
      return send(error_frame("frame is not valid JSON"));
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      return send(error_frame("frame needs a string \"type\""));
    }
    const std::string type = msg["type"].get<std::string>();
    if (type == "action") {
      const auto it = msg.find("a");
      if (it == msg.end() || !it->is_array() || it->size() != env::kActDim) {
        return send(error_frame(fmt::format("action needs \"a\" with {} numbers", env::kActDim)));
      }
      env::Action a;
      for (int i = 0; i < env::kActDim; ++i) {
        const json& v = (*it)[i];
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          return send(error_frame(fmt::format("action component {} is not a finite number", i)));
        }
        a(i) = v.get<double>();
      }
      if (!live_) return send(error_frame("episode is over; send reset"));
      pending_ = a;
    } else if (type == "reset") {
      std::uint64_t seed = derive_seed(server_.cfg.seed, "teleop.episode", ++server_.resets);
      if (msg.contains("seed")) {
        if (!msg["seed"].is_number_unsigned()) {
          return send(error_frame("reset seed must be a non-negative integer"));
        }
        seed = msg["seed"].get<std::uint64_t>();
      }
      begin_episode(seed);
    } else if (type == "quit") {
      if (live_) spdlog::info("teleop: quit mid-episode, episode discarded");
      live_ = false;
      closing_ = true;
      if (!writing_) do_close();
    } else {
      send(error_frame(fmt::format("unknown message type '{}'", type)));
    }
  }

  void send(const json& frame) {
    if (ended_) return;
    outbox_.push_back(frame.dump());
    if (!writing_) write_next();
  }

  void write_next() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->end("write failed");
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) return self->write_next();
                      self->writing_ = false;
                      if (self->closing_) self->do_close();
                    });
  }

  void do_close() {
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) { self->end("session closed"); });
  }

  void end(const std::string& why) {
    if (ended_) return;
    ended_ = true;
    live_ = false;
    timer_.cancel();
    server_.session_active = false;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
    spdlog::info("teleop: {}", why);
  }

  websocket::stream<beast::tcp_stream> ws_;
  TeleopServer::Impl& server_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool closing_ = false;
  bool ended_ = false;

  env::GraspEnv env_;
  env::Observation obs_;
  demo::Trajectory traj_;
  std::optional<env::Action> pending_;
  int t_ = 0;
  bool live_ = false;
  std::chrono::steady_clock::duration period_;
  std::chrono::steady_clock::time_point next_tick_;
};

}  // namespace

void TeleopServer::Impl::do_accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    if (session_active) {
      std::make_shared<Rejection>(std::move(socket))->start();
    } else {
      session_active = true;
      std::make_shared<Session>(std::move(socket), *this)->start();
    }
    do_accept();
  });
}

TeleopServer::TeleopServer(TeleopConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
TeleopServer::~TeleopServer() = default;

unsigned short TeleopServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TeleopServer::run() {
  spdlog::info("teleop: listening on {}:{}", impl_->cfg.address, port());
  impl_->do_accept();
  net::signal_set signals(impl_->ioc);
  if (impl_->cfg.handle_signals) {
    signals.add(SIGINT);
    signals.add(SIGTERM);
    signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) impl_->ioc.stop();
    });
  }
  impl_->ioc.run();
}

void TeleopServer::stop() { impl_->ioc.stop(); }

const std::vector<fs::path>& TeleopServer::saved() const { return impl_->saved; }

struct TeleopClient::Impl {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};
};

TeleopClient::TeleopClient() : impl_(std::make_unique<Impl>()) {}
TeleopClient::~TeleopClient() = default;

void TeleopClient::connect(const std::string& host, unsigned short port) {
  tcp::resolver resolver(impl_->ioc);
  net::connect(impl_->ws.next_layer(), resolver.resolve(host, std::to_string(port)));
  impl_->ws.handshake(fmt::format("{}:{}", host, port), "/");
  impl_->ws.text(true);
}

json TeleopClient::read() {
  beast::flat_buffer buffer;
  impl_->ws.read(buffer);
  try {
    return json::parse(beast::buffers_to_string(buffer.data()));
  } catch (const json::exception& e) {
    throw ProtocolError(fmt::format("server sent invalid JSON: {}", e.what()));
  }
}

void TeleopClient::send(const json& frame) { send_text(frame.dump()); }

void TeleopClient::send_text(const std::string& text) { impl_->ws.write(net::buffer(text)); }

void TeleopClient::close() {
  beast::error_code ec;
  if (impl_->ws.is_open()) impl_->ws.close(websocket::close_code::normal, ec);
}

void check_hello(const json& hello) {
  if (hello.value("type", "") == "busy") throw ProtocolError("server busy");
  if (hello.value("type", "") != "hello") {
    throw ProtocolError(fmt::format("expected hello, got {}", hello.dump()));
  }
  if (hello.value("obs_dim", -1) != env::kObsDim || hello.value("act_dim", -1) != env::kActDim) {
    throw ProtocolError(fmt::format("server speaks obs_dim={} act_dim={}, need {} and {}",
                                    hello.value("obs_dim", -1), hello.value("act_dim", -1),
                                    env::kObsDim, env::kActDim));
  }
}

ScriptedSession run_scripted_client(const std::string& host, unsigned short port,
                                    const env::SceneConfig& scene, env::Task task,
                                    const demo::ExpertConfig& expert) {
  TeleopClient client;
  client.connect(host, port);
  check_hello(client.read());
  ScriptedSession out;
  for (;;) {
    const json f = client.read();
    const std::string type = f.value("type", "");
    if (type == "error") throw ProtocolError(f.value("msg", "server error"));
    if (type != "state") continue;
    out.states.push_back(f);
    if (f.at("done").get<bool>()) {
      out.final_event = env::event_from_string(f.at("event").get<std::string>());
      break;
    }
    const auto v = f.at("obs").get<std::vector<double>>();
    if (v.size() != env::kObsDim) throw ProtocolError("state frame has the wrong obs arity");
    const env::Observation obs = Eigen::Map<const env::Observation>(v.data());
    const env::Action a = demo::expert_action(scene, task, obs, expert);
    client.send({{"type", "action"}, {"a", std::vector<double>(a.data(), a.data() + a.size())}});
  }
  if (out.final_event == env::Event::Success) {
    const json f = client.read();
    if (f.value("type", "") == "saved") out.saved = f.at("path").get<std::string>();
  }
  client.send({{"type", "quit"}});
  client.close();
  return out;
}

}  // namespace dexgrasp::harness
