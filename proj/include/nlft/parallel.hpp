#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace nlft {

/// Applies fn(i) for i in [0, n) across at most `threads` workers.  Results go
/// into a preallocated vector by index, so the outcome never depends on
/// scheduling.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn, int threads = 1) {
    std::vector<T> out(n);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> workers;
    workers.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += nw) out[i] = fn(i);
        });
    }
    for (auto& th : workers) th.join();
    return out;
}

}  // namespace nlft
