#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace gomix {

// Fixed team of threads with static chunking. Work is a half-open index range
// split evenly across the team; the calling thread doubles as worker 0, so a
// single-worker pool never parks. Tasks must write to disjoint locations —
// the pool gives no ordering guarantee beyond "run() returns when all slices
// finished". The first exception thrown by any slice is rethrown to the
// caller once the batch has drained.
class WorkerPool {
 public:
  using Task =
      std::function<void(std::size_t begin, std::size_t end, std::size_t worker)>;

  explicit WorkerPool(std::size_t workers) : workers_(workers == 0 ? 1 : workers) {
    threads_.reserve(workers_ - 1);
    for (std::size_t t = 1; t < workers_; ++t)
      threads_.emplace_back([this, t] { worker_loop(t); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stopping_ = true;
      ++epoch_;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::size_t workers() const { return workers_; }

  void run(std::size_t count, const Task& task) {
    if (count == 0) return;
    if (workers_ == 1) {
      task(0, count, 0);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      task_ = &task;
      count_ = count;
      pending_ = workers_ - 1;
      error_ = nullptr;
      ++epoch_;
    }
    start_cv_.notify_all();
    run_slice(0);
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    task_ = nullptr;
    if (error_) {
      std::exception_ptr err = error_;
      error_ = nullptr;
      lock.unlock();
      std::rethrow_exception(err);
    }
  }

 private:
  void run_slice(std::size_t worker) {
    const std::size_t chunk = (count_ + workers_ - 1) / workers_;
    const std::size_t begin = std::min(worker * chunk, count_);
    const std::size_t end = std::min(begin + chunk, count_);
    if (begin >= end) return;
    try {
      (*task_)(begin, end, worker);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void worker_loop(std::size_t worker) {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mutex_);
        start_cv_.wait(lock, [&] { return epoch_ != seen; });
        seen = epoch_;
        if (stopping_) return;
      }
      run_slice(worker);
      std::lock_guard<std::mutex> lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }

  std::size_t workers_;
  std::vector<std::thread> threads_;

  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const Task* task_ = nullptr;
  std::size_t count_ = 0;
  std::size_t pending_ = 0;
  std::uint64_t epoch_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

struct KeyedSums {
  std::vector<std::uint64_t> keys;  // one entry per run of equal input keys
  std::vector<double> sums;
  std::vector<std::size_t> run_start;  // run r spans [run_start[r], run_start[r+1])

  void clear() {
    keys.clear();
    sums.clear();
    run_start.clear();
  }
};

// Segmented sum over maximal consecutive runs of equal keys. Run discovery is
// a serial scan; the per-run additions always go left to right, so the result
// is bit-identical for every worker count. Keys must arrive already grouped
// into runs (sorted input is one valid arrangement).
inline void reduce_by_key(std::span<const std::uint64_t> keys,
                          std::span<const double> values, WorkerPool& pool,
                          KeyedSums& out) {
  if (keys.size() != values.size())
    throw std::invalid_argument("reduce_by_key: keys/values length mismatch");
  out.clear();
  const std::size_t n = keys.size();
  if (n == 0) return;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || keys[i] != keys[i - 1]) {
      out.run_start.push_back(i);
      out.keys.push_back(keys[i]);
    }
  }
  out.run_start.push_back(n);
  const std::size_t runs = out.keys.size();
  out.sums.resize(runs);
  auto* sums = out.sums.data();
  const auto* starts = out.run_start.data();
  pool.run(runs, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t r = begin; r < end; ++r) {
      double acc = 0.0;
      for (std::size_t i = starts[r]; i < starts[r + 1]; ++i) acc += values[i];
      sums[r] = acc;
    }
  });
}

}  // namespace gomix
