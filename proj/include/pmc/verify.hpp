#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmc/config.hpp"
#include "pmc/estimate_engine.hpp"

namespace pmc {

// Named check suites. Each aggregated report reads "allowed vs measured":
// pass iff lhs - rhs >= -tol. Per-instance records of the randomized sweeps
// are kept separately.
struct SuiteOutput {
  std::vector<EstimateReport> reports;
  std::vector<EstimateReport> instances;
  bool all_pass() const;
};

const std::vector<std::string>& suite_names();  // without "all"
bool is_suite(const std::string& name);          // includes "all"

SuiteOutput run_suite(const std::string& suite, const RunConfig& cfg);

// Per-suite RNG, independent of the other suites and of the worker count.
std::mt19937_64 suite_rng(std::uint64_t seed, const std::string& suite);

// <dir>/<stem>.jsonl and <dir>/<stem>.csv, in report order
void write_reports(const std::string& dir, const std::string& stem,
                   const std::vector<EstimateReport>& reports);

// Runs fn(i) for i in [0, n) on up to `workers` threads; results land in index order.
template <class T, class F>
std::vector<T> parallel_map(int workers, std::size_t n, F&& fn);

}  // namespace pmc

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace pmc {

template <class T, class F>
std::vector<T> parallel_map(int workers, std::size_t n, F&& fn) {
  std::vector<T> out(n);
  std::size_t w = std::min<std::size_t>(std::max(workers, 1), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto body = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace pmc
