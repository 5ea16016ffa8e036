#include "wmbench/remote.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "wmbench/wire.hpp"

namespace wmbench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SubprocessTransport

SubprocessTransport::SubprocessTransport(const std::string& command) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw TransportError(std::string("pipe: ") + std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw TransportError(std::string("pipe: ") + std::strerror(errno));
  }
  pid_ = fork();
  if (pid_ < 0) throw TransportError(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  signal(SIGPIPE, SIG_IGN);
}

SubprocessTransport::~SubprocessTransport() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin asks the server to exit; reap it either way.
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) return;
      usleep(10000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
}

void SubprocessTransport::send_line(const std::string& line) {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("write to model process failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string SubprocessTransport::receive_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TimeoutError("model process did not answer in time");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) throw TimeoutError("model process did not answer in time");
    char chunk[65536];
    const auto n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw TransportError("model process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------
// Protocol

namespace {

json parse_message(const std::string& line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception& e) {
    throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
  }
  if (!msg.is_object() || !msg.contains("v") || !msg.contains("type")) {
    throw MalformedResponseError("response lacks 'v' or 'type'");
  }
  if (!msg["v"].is_number_integer() || msg["v"].get<int>() != wire::kProtocolVersion) {
    throw VersionError("protocol version " + msg["v"].dump() + " does not match client version " +
                       std::to_string(wire::kProtocolVersion));
  }
  return msg;
}

}  // namespace

json make_rollout_request(const Observation& obs, const ControlInput& control, int horizon, std::uint64_t seed) {
  return {{"v", wire::kProtocolVersion}, {"type", "rollout"}, {"obs", wire::to_json(obs)},
          {"control", wire::to_json(control)}, {"horizon", horizon}, {"seed", seed}};
}

std::vector<Observation> parse_rollout_response(const std::string& line, int horizon, ObservationKind kind,
                                                int width) {
  const json msg = parse_message(line);
  const auto type = msg["type"].is_string() ? msg["type"].get<std::string>() : std::string();
  if (type == "error") {
    throw RemoteReportedError("model reported: " + (msg.contains("msg") ? msg["msg"].dump() : std::string("?")));
  }
  if (type != "frames" || !msg.contains("frames") || !msg["frames"].is_array()) {
    throw MalformedResponseError("expected a 'frames' message");
  }
  const auto& frames = msg["frames"];
  if (static_cast<int>(frames.size()) != horizon) {
    throw FrameCountError("expected " + std::to_string(horizon) + " frames, got " + std::to_string(frames.size()));
  }
  std::vector<Observation> out;
  for (const auto& f : frames) {
    Observation o;
    try {
      o = wire::observation_from_json(f);
    } catch (const std::exception& e) {
      throw MalformedResponseError(std::string("bad frame: ") + e.what());
    }
    if (o.kind != kind || o.width() != width) throw MalformedResponseError("frame kind or width mismatch");
    out.push_back(std::move(o));
  }
  return out;
}

PredictedRollout remote_rollout(LineTransport& transport, const json& request, int horizon, ObservationKind kind,
                                int width, std::chrono::milliseconds timeout, const std::string& source) {
  transport.send_line(request.dump());
  PredictedRollout out;
  out.frames = parse_rollout_response(transport.receive_line(timeout), horizon, kind, width);
  out.source = source;
  return out;
}

RemoteWorldModel::RemoteWorldModel(std::unique_ptr<LineTransport> transport, WorldModelConfig config)
    : transport_(std::move(transport)),
      config_(std::move(config)),
      control_kind_(config_.control_kind),
      observation_kind_(config_.observation_kind),
      timeout_(static_cast<long>(config_.remote_timeout_s * 1000.0)) {
  transport_->send_line(json{{"v", wire::kProtocolVersion}, {"type", "hello"}}.dump());
  const json hello = parse_message(transport_->receive_line(timeout_));
  if (hello["type"] != "hello") throw MalformedResponseError("expected hello reply");
  try {
    control_kind_ = control_kind_from_string(hello.at("control_kind").get<std::string>());
    observation_kind_ = observation_kind_from_string(hello.at("observation_kind").get<std::string>());
  } catch (const std::exception& e) {
    throw MalformedResponseError(std::string("bad hello reply: ") + e.what());
  }
}

PredictedRollout RemoteWorldModel::rollout(const RolloutContext& ctx, const ControlInput& control, int horizon,
                                           std::uint64_t seed) {
  const ActionSequence plan = check_request(*this, control, horizon);
  const int width = ctx.observation.width();
  auto out = remote_rollout(*transport_, make_rollout_request(ctx.observation, control, horizon, seed), horizon,
                            observation_kind_, width, timeout_, name());
  out.aligned_actions = plan;
  return out;
}

}  // namespace wmbench
