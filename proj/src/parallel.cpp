#include "roughforms/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace roughforms {

namespace {
std::atomic<int> g_threads{1};
thread_local bool t_inside = false;
}  // namespace

void set_threads(int n) { g_threads = n < 1 ? 1 : n; }
int threads() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const int workers = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(g_threads.load())));
    if (workers <= 1 || t_inside) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::size_t error_index = n;
    std::mutex error_mutex;
    auto run = [&] {
        t_inside = true;
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
        t_inside = false;
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace roughforms
