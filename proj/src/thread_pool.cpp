#include "tgl/thread_pool.hpp"

#include <atomic>

namespace tgl {

ThreadPool& ThreadPool::instance() {
  static ThreadPool pool;
  return pool;
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    shutting_down_ = true;
  }
  task_ready_.notify_all();
  for (auto& worker : workers_) worker.join();
}

std::size_t ThreadPool::worker_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return workers_.size();
}

void ThreadPool::ensure_workers(std::size_t n) {
  std::lock_guard<std::mutex> lock(mutex_);
  while (workers_.size() < n) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

void ThreadPool::worker_loop() {
  while (true) {
    std::function<void()> task;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      task_ready_.wait(lock, [this] { return shutting_down_ || !tasks_.empty(); });
      if (shutting_down_ && tasks_.empty()) return;
      task = std::move(tasks_.front());
      tasks_.pop();
    }
    task();
  }
}

void ThreadPool::run_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn) {
  if (chunks == 0) return;
  if (chunks == 1) {
    fn(0);
    return;
  }
  ensure_workers(chunks - 1);

  std::atomic<std::size_t> remaining{chunks - 1};
  std::mutex done_mutex;
  std::condition_variable done_cv;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t c = 1; c < chunks; ++c) {
      tasks_.push([&, c] {
        fn(c);
        if (remaining.fetch_sub(1) == 1) {
          std::lock_guard<std::mutex> done_lock(done_mutex);
          done_cv.notify_one();
        }
      });
    }
  }
  task_ready_.notify_all();
  fn(0);
  std::unique_lock<std::mutex> done_lock(done_mutex);
  done_cv.wait(done_lock, [&] { return remaining.load() == 0; });
}

}  // namespace tgl
