#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "wmbench/world_model.hpp"

namespace wmbench {

class TransportError : public ModelError {
  using ModelError::ModelError;
};
class TimeoutError : public ModelError {
  using ModelError::ModelError;
};
class MalformedResponseError : public ModelError {
  using ModelError::ModelError;
};
class VersionError : public ModelError {
  using ModelError::ModelError;
};
class FrameCountError : public ModelError {
  using ModelError::ModelError;
};
class RemoteReportedError : public ModelError {
  using ModelError::ModelError;
};

/// One request line out, one response line back.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send_line(const std::string& line) = 0;
  /// Throws TimeoutError when nothing arrives in time, TransportError on EOF.
  virtual std::string receive_line(std::chrono::milliseconds timeout) = 0;
};

/// Runs `/bin/sh -c command` with its stdin/stdout connected to pipes.
class SubprocessTransport final : public LineTransport {
 public:
  explicit SubprocessTransport(const std::string& command);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  void send_line(const std::string& line) override;
  std::string receive_line(std::chrono::milliseconds timeout) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

nlohmann::json make_rollout_request(const Observation& obs, const ControlInput& control, int horizon,
                                    std::uint64_t seed);

/// Validates a response message and extracts frames; throws the typed errors above.
std::vector<Observation> parse_rollout_response(const std::string& line, int horizon, ObservationKind kind,
                                                int width);

PredictedRollout remote_rollout(LineTransport& transport, const nlohmann::json& request, int horizon,
                                ObservationKind kind, int width, std::chrono::milliseconds timeout,
                                const std::string& source);

/// Client side of the stdio JSON-lines protocol. The constructor performs the
/// hello handshake and adopts the kinds the server declares.
class RemoteWorldModel final : public WorldModel {
 public:
  RemoteWorldModel(std::unique_ptr<LineTransport> transport, WorldModelConfig config);

  std::string name() const override { return "remote"; }
  ControlKind control_kind() const override { return control_kind_; }
  ObservationKind observation_kind() const override { return observation_kind_; }
  const ActionVocabulary& vocabulary() const override { return config_.vocab; }

  PredictedRollout rollout(const RolloutContext& ctx, const ControlInput& control, int horizon,
                           std::uint64_t seed) override;

 private:
  std::unique_ptr<LineTransport> transport_;
  WorldModelConfig config_;
  ControlKind control_kind_;
  ObservationKind observation_kind_;
  std::chrono::milliseconds timeout_;
};

}  // namespace wmbench
