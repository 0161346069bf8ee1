#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace geofield {

// Runs fn(begin, end) over contiguous chunks of [0, n). Results must be written
// to disjoint slots so output does not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
    if (threads <= 1 || n < 2) {
        fn(std::size_t{0}, n);
        return;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    // small chunks balance the uneven per-node quadrature cost
    std::size_t chunk = std::max<std::size_t>(1, n / (threads * 16));
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            try {
                for (;;) {
                    std::size_t b = next.fetch_add(chunk);
                    if (b >= n) break;
                    fn(b, std::min(n, b + chunk));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace geofield
