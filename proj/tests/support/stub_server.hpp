#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace lvx::testing {

/// Local chat-completion endpoint on 127.0.0.1 for live-mode tests. `answer`
/// maps the prompt of the last message to the reply text.
class StubLlmServer {
 public:
  using Answer = std::function<std::string(const std::string& prompt)>;

  explicit StubLlmServer(Answer answer);
  ~StubLlmServer();
  StubLlmServer(const StubLlmServer&) = delete;
  StubLlmServer& operator=(const StubLlmServer&) = delete;

  /// e.g. "http://127.0.0.1:40123/v1".
  std::string base_url() const;
  /// The next `n` requests get HTTP 503.
  void fail_next(int n) { failures_ = n; }
  int requests() const { return requests_; }
  std::string last_body() const {
    std::lock_guard lock(mutex_);
    return last_body_;
  }
  std::string last_authorization() const {
    std::lock_guard lock(mutex_);
    return last_authorization_;
  }

 private:
  Answer answer_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> failures_{0};
  std::atomic<int> requests_{0};
  mutable std::mutex mutex_;
  std::string last_body_;
  std::string last_authorization_;
};

}  // namespace lvx::testing
