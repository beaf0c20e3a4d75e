/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/core/parallel.hpp
 *
 * Copyright 2026 The morphtrack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MORPHTRACK_CORE_PARALLEL_HPP
#define MORPHTRACK_CORE_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace morphtrack {

/**
 * Runs fn(i) for i in [0, count) on up to num_threads workers.
 *
 * Work items are handed out dynamically, so fn must only write state owned by
 * item i. The first exception thrown by any item is rethrown on the calling
 * thread after all workers have joined.
 */
template <typename Fn>
void parallel_for(std::size_t count, int num_threads, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(num_threads, 1)));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (std::size_t i = next++; i < count; i = next++)
        {
            try
            {
                fn(i);
            } catch (...)
            {
                std::scoped_lock lock(error_mutex);
                if (!first_error)
                {
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back(worker);
    }
    pool.clear(); // joins
    if (first_error)
    {
        std::rethrow_exception(first_error);
    }
}

/// Pairwise (cascade) summation; result depends only on the input order.
inline double pairwise_sum(std::span<const double> values)
{
    if (values.size() <= 8)
    {
        double s = 0.0;
        for (double v : values)
        {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

} /* namespace morphtrack */

#endif /* MORPHTRACK_CORE_PARALLEL_HPP */
