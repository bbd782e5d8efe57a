#pragma once

#include <cstddef>
#include <functional>

namespace shds {

// Name of the environment variable holding the worker count (0 = auto).
inline constexpr const char* kThreadsEnvVar = "SHDS_THREADS";

[[nodiscard]] std::size_t worker_count();

// Runs body(i) for i in [0, count). Exceptions are collected per index and the
// one with the lowest index is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace shds
