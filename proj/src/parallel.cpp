#include "strainveil/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace strainveil {

namespace {

std::atomic<unsigned> g_threads{0};
thread_local bool t_in_parallel = false;

// Marks the current thread as a worker so nested calls run inline.
struct WorkerScope {
    bool saved = t_in_parallel;
    WorkerScope() { t_in_parallel = true; }
    ~WorkerScope() { t_in_parallel = saved; }
};

}  // namespace

void set_num_threads(unsigned n) { g_threads.store(n); }

unsigned num_threads() {
    const unsigned n = g_threads.load();
    if (n > 0) return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, const std::function<void(std::ptrdiff_t)>& body) {
    const std::ptrdiff_t count = end - begin;
    if (count <= 0) return;
    const auto workers = static_cast<std::ptrdiff_t>(std::min<std::ptrdiff_t>(num_threads(), count));
    if (workers <= 1 || t_in_parallel) {
        for (std::ptrdiff_t i = begin; i < end; ++i) body(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
        WorkerScope scope;
        try {
            for (std::ptrdiff_t i = lo; i < hi; ++i) body(i);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    const std::ptrdiff_t chunk = count / workers;
    const std::ptrdiff_t extra = count % workers;
    std::ptrdiff_t lo = begin;
    for (std::ptrdiff_t w = 0; w < workers; ++w) {
        const std::ptrdiff_t hi = lo + chunk + (w < extra ? 1 : 0);
        if (w + 1 == workers) run(lo, hi);
        else pool.emplace_back(run, lo, hi);
        lo = hi;
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace strainveil
