#pragma once

// Predictor backed by a child process speaking JSON lines on stdin/stdout:
//   request  {"id": n, "rows": [[...], ...]}
//   response {"id": n, "predictions": [...]}
// Responses may arrive in any order; they are matched by id.

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <sys/types.h>

#include "depshap/model.hpp"

namespace depshap {

struct ExternalModelOptions {
  std::chrono::milliseconds timeout{60000};
  int max_batch_rows = 10000;
};

class ExternalModel final : public Model {
 public:
  /// Starts `/bin/sh -c command` and performs the handshake (an empty request
  /// with id 0). Throws ProtocolError when either step fails.
  explicit ExternalModel(std::string command, ExternalModelOptions options = {});
  ~ExternalModel() override;

  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;

  // Splits rows into batches, writes them all and collects the responses.
  // Calls from several threads share the one process and are serialized.
  Eigen::VectorXd predict(const Eigen::MatrixXd& rows) const override;
  std::string name() const override { return "external"; }

  std::uint64_t requests_sent() const;

 private:
  // Sends the given requests and returns predictions keyed by id.
  std::map<std::uint64_t, Eigen::VectorXd> exchange(const std::map<std::uint64_t, std::string>& requests,
                                                    const std::map<std::uint64_t, Eigen::Index>& lengths) const;
  [[noreturn]] void fail(const std::string& message) const;
  void shutdown(bool kill) const noexcept;

  std::string command_;
  ExternalModelOptions options_;
  mutable pid_t pid_ = -1;
  mutable int to_child_ = -1;
  mutable int from_child_ = -1;
  mutable std::mutex mutex_;
  mutable std::uint64_t next_id_ = 0;
  mutable std::string pending_;
  mutable bool broken_ = false;
  mutable std::string broken_reason_;
};

}  // namespace depshap
