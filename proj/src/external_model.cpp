#include "depshap/external_model.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "depshap/errors.hpp"
#include "depshap/format.hpp"

namespace depshap {
namespace {

using Clock = std::chrono::steady_clock;

std::string excerpt(std::string_view payload) {
  std::string out;
  for (char c : payload.substr(0, 200)) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x20 && u < 0x7f) {
      out.push_back(c);
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\x%02x", u);
      out += buf;
    }
  }
  if (payload.size() > 200) out += "...";
  return out;
}

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

ExternalModel::ExternalModel(std::string command, ExternalModelOptions options)
    : command_(std::move(command)), options_(options) {
  if (command_.empty()) throw ProtocolError("external model command is empty");
  if (options_.max_batch_rows < 1) throw DomainError("max_batch_rows must be positive");
  // A model that dies mid-write must surface as EPIPE, not kill the host.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw ProtocolError("pipe failed: " + std::string(std::strerror(errno)));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw ProtocolError("pipe failed: " + std::string(std::strerror(errno)));
  }
  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw ProtocolError("fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  set_nonblocking(to_child_);
  set_nonblocking(from_child_);

  std::lock_guard<std::mutex> lock(mutex_);
  exchange({{0, "{\"id\":0,\"rows\":[]}\n"}}, {{0, 0}});
  next_id_ = 1;
}

ExternalModel::~ExternalModel() { shutdown(false); }

void ExternalModel::shutdown(bool kill) const noexcept {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = -1;
  from_child_ = -1;
  if (pid_ <= 0) return;
  if (!kill) {
    // Closing stdin asks the model to exit; give it a moment before forcing it.
    for (int i = 0; i < 200; ++i) {
      if (waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  ::kill(pid_, SIGKILL);
  waitpid(pid_, nullptr, 0);
  pid_ = -1;
}

void ExternalModel::fail(const std::string& message) const {
  broken_ = true;
  broken_reason_ = message;
  shutdown(true);
  throw ProtocolError(message);
}

std::uint64_t ExternalModel::requests_sent() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return next_id_;
}

std::map<std::uint64_t, Eigen::VectorXd> ExternalModel::exchange(
    const std::map<std::uint64_t, std::string>& requests, const std::map<std::uint64_t, Eigen::Index>& lengths) const {
  std::string out;
  for (const auto& [id, line] : requests) out += line;
  std::size_t written = 0;
  std::map<std::uint64_t, Eigen::VectorXd> results;
  auto deadline = Clock::now() + options_.timeout;

  auto handle_line = [&](std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) return;
    const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) fail("malformed response: " + excerpt(line));
    const auto id_it = doc.find("id");
    const auto pred_it = doc.find("predictions");
    if (id_it == doc.end() || !id_it->is_number_unsigned()) fail("response without a valid id: " + excerpt(line));
    if (pred_it == doc.end() || !pred_it->is_array()) fail("response without a predictions array: " + excerpt(line));
    const auto id = id_it->get<std::uint64_t>();
    const auto expected = lengths.find(id);
    if (expected == lengths.end() || results.contains(id)) fail("unexpected response id " + std::to_string(id));
    if (std::ssize(*pred_it) != expected->second) {
      fail("response " + std::to_string(id) + " has " + std::to_string(pred_it->size()) + " predictions for " +
           std::to_string(expected->second) + " rows: " + excerpt(line));
    }
    Eigen::VectorXd values(expected->second);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const auto& v = (*pred_it)[static_cast<std::size_t>(i)];
      if (!v.is_number()) fail("non-numeric prediction in response " + std::to_string(id) + ": " + excerpt(line));
      values(i) = v.get<double>();
      if (!std::isfinite(values(i))) fail("non-finite prediction in response " + std::to_string(id));
    }
    results.emplace(id, std::move(values));
    deadline = Clock::now() + options_.timeout;
  };

  while (results.size() < requests.size()) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      fail("timed out after " + std::to_string(options_.timeout.count()) + " ms waiting for a response" +
           (pending_.empty() ? "" : "; partial output: " + excerpt(pending_)));
    }
    pollfd fds[2];
    fds[0] = {written < out.size() ? to_child_ : -1, POLLOUT, 0};
    fds[1] = {from_child_, POLLIN, 0};
    const int ready = poll(fds, 2, static_cast<int>(std::min<long long>(remaining, 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail("poll failed: " + std::string(std::strerror(errno)));
    }
    if (fds[0].fd >= 0 && (fds[0].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = write(to_child_, out.data() + written, out.size() - written);
      if (n > 0) {
        written += static_cast<std::size_t>(n);
      } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
        fail("model process stopped reading requests: " + std::string(std::strerror(errno)));
      }
    }
    if (fds[1].revents & (POLLIN | POLLERR | POLLHUP)) {
      char buf[65536];
      const ssize_t n = read(from_child_, buf, sizeof buf);
      if (n == 0) {
        fail("model process exited mid-stream" + (pending_.empty() ? "" : "; partial output: " + excerpt(pending_)));
      }
      if (n < 0) {
        if (errno == EAGAIN || errno == EINTR) continue;
        fail("read failed: " + std::string(std::strerror(errno)));
      }
      pending_.append(buf, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (std::size_t nl = pending_.find('\n'); nl != std::string::npos; nl = pending_.find('\n', start)) {
        handle_line(std::string_view(pending_).substr(start, nl - start));
        start = nl + 1;
      }
      pending_.erase(0, start);
      if (pending_.size() > (std::size_t{1} << 28)) fail("response line exceeds 256 MiB: " + excerpt(pending_));
    }
  }
  return results;
}

Eigen::VectorXd ExternalModel::predict(const Eigen::MatrixXd& rows) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (broken_) throw ProtocolError("external model unavailable after an earlier failure: " + broken_reason_);
  std::map<std::uint64_t, std::string> requests;
  std::map<std::uint64_t, Eigen::Index> lengths;
  std::map<std::uint64_t, Eigen::Index> offsets;
  for (Eigen::Index start = 0; start < rows.rows(); start += options_.max_batch_rows) {
    const Eigen::Index count = std::min<Eigen::Index>(options_.max_batch_rows, rows.rows() - start);
    const std::uint64_t id = next_id_++;
    std::string line = "{\"id\":" + std::to_string(id) + ",\"rows\":[";
    for (Eigen::Index i = start; i < start + count; ++i) {
      line += i == start ? "[" : ",[";
      for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        if (j) line += ',';
        const double v = rows(i, j);
        if (!std::isfinite(v)) throw DomainError("external model: non-finite feature value");
        line += format_number(v);
      }
      line += ']';
    }
    line += "]}\n";
    requests.emplace(id, std::move(line));
    lengths.emplace(id, count);
    offsets.emplace(id, start);
  }
  Eigen::VectorXd out(rows.rows());
  if (requests.empty()) return out;
  for (auto& [id, values] : exchange(requests, lengths)) out.segment(offsets.at(id), values.size()) = values;
  return out;
}

}  // namespace depshap
