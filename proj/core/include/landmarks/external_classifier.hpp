#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <sys/types.h>

#include <nlohmann/json_fwd.hpp>

#include "landmarks/classifier.hpp"

namespace landmarks {

struct ExternalResult {
  ClassScores scores;
  bool degraded = false;  // true when the prior was returned as a fallback
  std::string reason;
};

// Wire format, one JSON object per line over the child's stdin/stdout:
//   request:  {"id": int, "n_p": int, "points": [[x, y, z, intensity], ...], "prior": [k+1 floats]}
//   response: {"id": int, "scores": [k+1 floats]}
nlohmann::json make_classifier_request(int id, const SampledCloud& cloud, const ClassScores& prior);

/// Parses a response line. Accepts k or k+1 scores (a missing "unknown"
/// entry is taken as 0). Throws std::runtime_error on malformed input.
ClassScores parse_classifier_response(const std::string& line, int expected_id);

/// Long-running classifier process spoken to over the newline-delimited JSON
/// protocol. Requests are serialized; a timeout or malformed reply falls back
/// to the prior and marks the result degraded.
class ExternalClassifier {
 public:
  explicit ExternalClassifier(std::string command,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(200));
  ~ExternalClassifier();

  ExternalClassifier(const ExternalClassifier&) = delete;
  ExternalClassifier& operator=(const ExternalClassifier&) = delete;

  ExternalResult classify(const SampledCloud& cloud, const ClassScores& prior);

  int warnings() const { return warnings_; }
  bool alive() const { return fd_ >= 0; }
  const std::string& command() const { return command_; }

 private:
  bool write_all(const std::string& data, std::chrono::steady_clock::time_point deadline);
  bool read_line(std::string& line, std::chrono::steady_clock::time_point deadline);
  void shutdown();
  ExternalResult fallback(const ClassScores& prior, std::string reason);

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  pid_t child_ = -1;
  int fd_ = -1;
  std::string buffer_;
  int next_id_ = 0;
  int warnings_ = 0;
};

}  // namespace landmarks
