#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace tgl {

// Fixed worker pool shared by all parallel kernels in the process. Workers
// are spawned on demand up to the largest count ever requested and reused
// afterwards; they are never torn down until process exit.
class ThreadPool {
 public:
  static ThreadPool& instance();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  // Runs fn(chunk) for chunk in [0, chunks). Chunk 0 executes on the calling
  // thread; the rest are dispatched to workers. Blocks until all complete.
  void run_chunks(std::size_t chunks, const std::function<void(std::size_t)>& fn);

  std::size_t worker_count() const;

 private:
  ThreadPool() = default;
  ~ThreadPool();

  void ensure_workers(std::size_t n);
  void worker_loop();

  mutable std::mutex mutex_;
  std::condition_variable task_ready_;
  std::queue<std::function<void()>> tasks_;
  std::vector<std::thread> workers_;
  bool shutting_down_ = false;
};

}  // namespace tgl
