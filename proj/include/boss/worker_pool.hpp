#pragma once
// Fixed-size thread pool with a completion queue. Jobs run on at most
// `workers` threads; results come back in completion order. Exceptions thrown
// by a job are handed to the `on_error` mapper so a crashing job still yields
// an outcome.

#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace boss {

template <typename Outcome>
class WorkerPool {
 public:
  using Job = std::function<Outcome()>;
  using ErrorMapper = std::function<Outcome(std::exception_ptr)>;

  WorkerPool(std::size_t workers, ErrorMapper on_error) : on_error_(std::move(on_error)) {
    if (workers == 0) workers = 1;
    for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { loop(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    job_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void submit(Job job) {
    {
      std::lock_guard lock(mu_);
      jobs_.push_back(std::move(job));
      ++outstanding_;
    }
    job_cv_.notify_one();
  }

  std::size_t outstanding() const {
    std::lock_guard lock(mu_);
    return outstanding_;
  }

  // Blocks until some submitted job finishes. Undefined if nothing is outstanding.
  Outcome next_completed() {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return !done_.empty(); });
    Outcome out = std::move(done_.front());
    done_.pop_front();
    --outstanding_;
    return out;
  }

 private:
  void loop() {
    for (;;) {
      Job job;
      {
        std::unique_lock lock(mu_);
        job_cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      Outcome out = [&] {
        try {
          return job();
        } catch (...) {
          return on_error_(std::current_exception());
        }
      }();
      {
        std::lock_guard lock(mu_);
        done_.push_back(std::move(out));
      }
      done_cv_.notify_one();
    }
  }

  ErrorMapper on_error_;
  mutable std::mutex mu_;
  std::condition_variable job_cv_;
  std::condition_variable done_cv_;
  std::deque<Job> jobs_;
  std::deque<Outcome> done_;
  std::size_t outstanding_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace boss
