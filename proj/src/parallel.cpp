#include "freeconv/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace freeconv {

int worker_count() {
    if (const char* env = std::getenv("FREECONV_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, int workers) {
    if (workers <= 0) workers = worker_count();
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto body = [&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
        for (std::size_t t = 0; t < count; ++t) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace freeconv
