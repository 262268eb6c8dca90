#pragma once

#include "dexgrasp/demo/expert.hpp"
#include "dexgrasp/env/grasp_env.hpp"
#include "dexgrasp/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dexgrasp::harness {

/// Websocket teleoperation endpoint. Text frames carry JSON.
///
/// server -> client: hello {obs_dim, act_dim, tick_hz}, state {t, obs, reward,
/// event, done}, saved {path}, busy, error {msg}.
/// client -> server: action {a[8]}, reset {seed?}, quit.
struct TeleopConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  env::Task task = env::Task::Ball;
  std::uint64_t seed = 1;
  double tick_hz = 20.0;
  std::filesystem::path output_dir = "teleop";
  bool keep_failures = false;
  bool handle_signals = false;  // stop on SIGINT/SIGTERM
  env::SceneConfig scene;
};

/// One session at a time on a single-threaded event loop. Each tick applies
/// the action received since the previous tick (zero if none), broadcasts the
/// state and, when the episode ends, saves it as a teleop trajectory if it
/// succeeded (or always with keep_failures). A disconnect mid-episode drops it.
class TeleopServer {
 public:
  explicit TeleopServer(TeleopConfig cfg);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Bound port (useful with port 0).
  unsigned short port() const;
  /// Serves until stop(); blocks the calling thread.
  void run();
  /// Safe to call from any thread.
  void stop();
  /// Trajectories written so far. Only read after run() returns.
  const std::vector<std::filesystem::path>& saved() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Blocking protocol client, used by tests and the scripted operator.
class TeleopClient {
 public:
  TeleopClient();
  ~TeleopClient();
  TeleopClient(const TeleopClient&) = delete;
  TeleopClient& operator=(const TeleopClient&) = delete;

  void connect(const std::string& host, unsigned short port);
  nlohmann::json read();
  void send(const nlohmann::json& frame);
  void send_text(const std::string& text);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Throws ProtocolError unless the hello frame declares 20 observations and 8 actions.
void check_hello(const nlohmann::json& hello);

class ProtocolError : public Error {
 public:
  using Error::Error;
};

struct ScriptedSession {
  std::vector<nlohmann::json> states;
  env::Event final_event = env::Event::None;
  std::optional<std::filesystem::path> saved;
};

/// Drives one episode with the noise-free scripted expert, then quits.
ScriptedSession run_scripted_client(const std::string& host, unsigned short port,
                                    const env::SceneConfig& scene, env::Task task,
                                    const demo::ExpertConfig& expert = {});

}  // namespace dexgrasp::harness
