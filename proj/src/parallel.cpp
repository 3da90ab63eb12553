#include "parallel.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace heatflow {
namespace {

thread_local bool t_inside_worker = false;

// Fixed-partition pool: each generation assigns chunk 0 to the caller and
// chunk i+1 to worker i. Workers only read pool state under the mutex, so a
// finished worker can never observe a later generation's staging.
class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  void set_threads(int n) {
    if (n < 1) n = 1;
    std::lock_guard<std::mutex> run_lock(run_mutex_);
    if (n == n_threads_) return;
    shutdown_workers();
    n_threads_ = n;
    spawn_workers();
  }

  int threads() {
    std::lock_guard<std::mutex> run_lock(run_mutex_);
    return n_threads_;
  }

  void run(int64_t begin, int64_t end,
           const std::function<void(int64_t, int64_t)>& fn) {
    std::lock_guard<std::mutex> run_lock(run_mutex_);
    const int64_t len = end - begin;
    const int chunks =
        static_cast<int>(std::min<int64_t>(n_threads_, len));
    if (chunks <= 1) {
      t_inside_worker = true;
      fn(begin, end);
      t_inside_worker = false;
      return;
    }
    std::vector<std::pair<int64_t, int64_t>> chunk_list;
    chunk_list.reserve(static_cast<size_t>(chunks));
    for (int i = 0; i < chunks; ++i) {
      int64_t c0 = begin + len * i / chunks;
      int64_t c1 = begin + len * (i + 1) / chunks;
      chunk_list.emplace_back(c0, c1);
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      fn_ = &fn;
      chunks_ = std::move(chunk_list);
      pending_ = static_cast<int>(chunks_.size()) - 1;
      ++generation_;
    }
    if (pending_workers_exist()) cv_work_.notify_all();

    t_inside_worker = true;
    fn(chunks_[0].first, chunks_[0].second);
    t_inside_worker = false;

    std::unique_lock<std::mutex> lock(mutex_);
    cv_done_.wait(lock, [&] { return pending_ == 0; });
    fn_ = nullptr;
    chunks_.clear();
  }

 private:
  Pool() {
    unsigned hw = std::thread::hardware_concurrency();
    n_threads_ = hw > 0 ? static_cast<int>(hw) : 1;
    spawn_workers();
  }

  ~Pool() { shutdown_workers(); }

  bool pending_workers_exist() const { return n_threads_ > 1; }

  void spawn_workers() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = false;
    }
    for (int i = 1; i < n_threads_; ++i) {
      workers_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  void shutdown_workers() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& w : workers_) w.join();
    workers_.clear();
  }

  void worker_loop(int index) {
    uint64_t seen = 0;
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
      cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      if (fn_ == nullptr || static_cast<size_t>(index) >= chunks_.size()) {
        continue;  // no chunk for this worker in this generation
      }
      const auto* fn = fn_;
      const auto chunk = chunks_[static_cast<size_t>(index)];
      lock.unlock();
      t_inside_worker = true;
      (*fn)(chunk.first, chunk.second);
      t_inside_worker = false;
      lock.lock();
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }

  std::mutex run_mutex_;  // serializes run() and reconfiguration
  std::mutex mutex_;      // guards everything below
  std::condition_variable cv_work_, cv_done_;
  std::vector<std::thread> workers_;
  std::vector<std::pair<int64_t, int64_t>> chunks_;
  const std::function<void(int64_t, int64_t)>* fn_ = nullptr;
  int pending_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
  int n_threads_ = 1;
};

}  // namespace

void set_threads(int n) { Pool::instance().set_threads(n); }

int thread_count() { return Pool::instance().threads(); }

void parallel_for(int64_t begin, int64_t end,
                  const std::function<void(int64_t, int64_t)>& chunk_fn) {
  if (begin >= end) return;
  if (t_inside_worker) {
    chunk_fn(begin, end);
    return;
  }
  Pool::instance().run(begin, end, chunk_fn);
}

}  // namespace heatflow
