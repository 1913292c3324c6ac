#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <vector>

namespace sb {

/// Execution policy for the data-parallel kernels. `serial` is the
/// reference path; `parallel` distributes the same fixed chunks over OpenMP
/// threads and merges them in chunk order, so both produce bit-identical
/// results for any thread count.
enum class Exec { serial, parallel };

void set_thread_count(int threads);
int thread_count();

/// Compensated (Neumaier) accumulator.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void merge(const KahanSum& o) {
        add(o.sum_);
        add(o.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Runs fn(chunk) for chunk in [0, chunks) and returns the results in chunk
/// order. Exceptions thrown inside workers are captured and the first one
/// (by chunk index) is rethrown on the calling thread.
template <class T, class F>
std::vector<T> map_chunks(std::size_t chunks, F&& fn, Exec exec = Exec::parallel) {
    std::vector<T> out(chunks);
    std::vector<std::exception_ptr> errors(chunks);
    const auto count = static_cast<std::ptrdiff_t>(chunks);
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t c = 0; c < count; ++c) {
            try {
                out[static_cast<std::size_t>(c)] = fn(static_cast<std::size_t>(c));
            } catch (...) {
                errors[static_cast<std::size_t>(c)] = std::current_exception();
            }
        }
    } else {
        for (std::ptrdiff_t c = 0; c < count; ++c) {
            try {
                out[static_cast<std::size_t>(c)] = fn(static_cast<std::size_t>(c));
            } catch (...) {
                errors[static_cast<std::size_t>(c)] = std::current_exception();
            }
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Sums fn(i) for i in [0, n) using fixed-size chunks, each accumulated with
/// a KahanSum, merged in chunk order.
template <class F>
double chunked_sum(std::size_t n, std::size_t chunk_size, F&& fn, Exec exec = Exec::parallel) {
    if (n == 0) return 0.0;
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    auto partials = map_chunks<KahanSum>(
        chunks,
        [&](std::size_t c) {
            KahanSum acc;
            const std::size_t end = std::min(n, (c + 1) * chunk_size);
            for (std::size_t i = c * chunk_size; i < end; ++i) acc.add(fn(i));
            return acc;
        },
        exec);
    KahanSum total;
    for (const auto& p : partials) total.merge(p);
    return total.value();
}

struct MeanStderr {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Sample mean with a batch-means standard error over `batches`
/// contiguous batches. Falls back to the iid formula when there are fewer
/// than 2 values per batch.
MeanStderr batch_means(std::span<const double> values, std::size_t batches = 20);

/// Effective sample size implied by batch means: N * var / (b * var_bm).
double batch_means_ess(std::span<const double> values, std::size_t batches = 20);

}  // namespace sb
