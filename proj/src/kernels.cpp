#include "singular_bound/kernels.hpp"

#include <omp.h>

namespace sb {

void set_thread_count(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

MeanStderr batch_means(std::span<const double> values, std::size_t batches) {
    MeanStderr out;
    const std::size_t n = values.size();
    if (n == 0) return out;
    KahanSum total;
    for (double v : values) total.add(v);
    out.mean = total.value() / static_cast<double>(n);
    if (n < 2) return out;

    const std::size_t batch_size = n / batches;
    if (batches < 2 || batch_size < 2) {
        KahanSum ss;
        for (double v : values) ss.add((v - out.mean) * (v - out.mean));
        out.std_err = std::sqrt(ss.value() / static_cast<double>(n - 1) / static_cast<double>(n));
        return out;
    }
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        KahanSum acc;
        for (std::size_t i = b * batch_size; i < (b + 1) * batch_size; ++i) acc.add(values[i]);
        means[b] = acc.value() / static_cast<double>(batch_size);
    }
    KahanSum mb;
    for (double m : means) mb.add(m);
    const double grand = mb.value() / static_cast<double>(batches);
    KahanSum ss;
    for (double m : means) ss.add((m - grand) * (m - grand));
    const double var_bm = ss.value() / static_cast<double>(batches - 1);
    out.std_err = std::sqrt(var_bm / static_cast<double>(batches));
    return out;
}

double batch_means_ess(std::span<const double> values, std::size_t batches) {
    const std::size_t n = values.size();
    if (n < 2) return static_cast<double>(n);
    const auto bm = batch_means(values, batches);
    KahanSum ss;
    for (double v : values) ss.add((v - bm.mean) * (v - bm.mean));
    const double var = ss.value() / static_cast<double>(n - 1);
    if (bm.std_err <= 0.0) return var > 0.0 ? 0.0 : static_cast<double>(n);
    return std::min(static_cast<double>(n), var / (bm.std_err * bm.std_err));
}

}  // namespace sb
