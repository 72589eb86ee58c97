#include "landmarks/external_classifier.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <stdexcept>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace landmarks {

nlohmann::json make_classifier_request(int id, const SampledCloud& cloud, const ClassScores& prior) {
  auto pts = nlohmann::json::array();
  for (const auto& p : cloud.points) pts.push_back({p.x, p.y, p.z, p.intensity});
  return {{"id", id}, {"n_p", cloud.points.size()}, {"points", std::move(pts)}, {"prior", prior.values()}};
}

ClassScores parse_classifier_response(const std::string& line, int expected_id) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) {
    throw std::runtime_error("response lacks an integer id");
  }
  if (j["id"].get<int>() != expected_id) throw std::runtime_error("response id mismatch");
  if (!j.contains("scores") || !j["scores"].is_array()) throw std::runtime_error("response lacks scores");
  std::vector<double> s;
  try {
    s = j["scores"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("scores are not numeric: ") + e.what());
  }
  if (s.size() == kNumClasses) s.push_back(0.0);
  if (s.size() != kNumSlots) throw std::runtime_error("scores have the wrong length");
  try {
    return ClassScores::from_span(s);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
}

ExternalClassifier::ExternalClassifier(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw std::runtime_error(std::string("socketpair: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  child_ = pid;
  fd_ = sv[0];
  ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);
}

ExternalClassifier::~ExternalClassifier() { shutdown(); }

void ExternalClassifier::shutdown() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (child_ > 0) {
    int status = 0;
    if (::waitpid(child_, &status, WNOHANG) == 0) {
      ::kill(child_, SIGTERM);
      ::waitpid(child_, &status, 0);
    }
    child_ = -1;
  }
}

bool ExternalClassifier::write_all(const std::string& data, std::chrono::steady_clock::time_point deadline) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return false;
    pollfd pfd{fd_, POLLOUT, 0};
    if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) return false;
    if (pfd.revents & (POLLERR | POLLHUP)) return false;
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

bool ExternalClassifier::read_line(std::string& line, std::chrono::steady_clock::time_point deadline) {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return false;
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) return false;
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n == 0) {
      shutdown();  // peer closed
      return false;
    }
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      shutdown();
      return false;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ExternalResult ExternalClassifier::fallback(const ClassScores& prior, std::string reason) {
  ++warnings_;
  return {prior, true, std::move(reason)};
}

ExternalResult ExternalClassifier::classify(const SampledCloud& cloud, const ClassScores& prior) {
  std::lock_guard lock(mutex_);
  if (fd_ < 0) return fallback(prior, "classifier process is not running");

  const int id = next_id_++;
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  if (!write_all(make_classifier_request(id, cloud, prior).dump() + "\n", deadline)) {
    if (fd_ >= 0 && std::chrono::steady_clock::now() < deadline) shutdown();
    return fallback(prior, "request could not be sent");
  }
  std::string line;
  while (read_line(line, deadline)) {
    try {
      return {parse_classifier_response(line, id), false, {}};
    } catch (const std::runtime_error& e) {
      // A late answer to an earlier, timed-out request: skip it.
      if (std::string(e.what()) == "response id mismatch") {
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_object() && j.contains("id") && j["id"].is_number_integer() &&
            j["id"].get<int>() < id) {
          continue;
        }
      }
      return fallback(prior, std::string("malformed response: ") + e.what());
    }
  }
  return fallback(prior, fd_ < 0 ? "classifier process exited" : "timeout");
}

}  // namespace landmarks
