#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace rootsum {

/// Splits [0, count) into `jobs` contiguous chunks and runs fn(chunk, begin, end)
/// on each, one thread per chunk. The first exception thrown is rethrown.
template <class Fn>
void parallel_chunks(unsigned jobs, std::uint64_t count, Fn&& fn) {
    jobs = std::max(1u, jobs);
    if (count < jobs) jobs = static_cast<unsigned>(std::max<std::uint64_t>(count, 1));
    const std::uint64_t step = (count + jobs - 1) / jobs;
    if (jobs == 1) {
        fn(0u, std::uint64_t{0}, count);
        return;
    }
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (unsigned c = 0; c < jobs; ++c) {
        const std::uint64_t begin = std::min(count, c * step);
        const std::uint64_t end = std::min(count, begin + step);
        threads.emplace_back([&, c, begin, end] {
            try {
                fn(c, begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace rootsum
