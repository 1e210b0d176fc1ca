#include "bitext/kernels.hpp"

#include <cstring>

namespace bitext::kernels {

namespace ref {

void matmul(const double* a, const double* b, double* out, int m, int k, int n) {
    std::memset(out, 0, sizeof(double) * static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<int64_t>(i) * k;
        double* orow = out + static_cast<int64_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + static_cast<int64_t>(p) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

void conv1d(const double* signal, const double* kernels, double* out,
            int t_len, int c_in, int c_out, int k_w) {
    const int pad = k_w / 2;
    std::memset(out, 0, sizeof(double) * static_cast<size_t>(t_len) * c_out);
    for (int t = 0; t < t_len; ++t) {
        double* orow = out + static_cast<int64_t>(t) * c_out;
        for (int k = 0; k < k_w; ++k) {
            const int s = t + k - pad;
            if (s < 0 || s >= t_len) continue;
            const double* srow = signal + static_cast<int64_t>(s) * c_in;
            const double* kmat = kernels + static_cast<int64_t>(k) * c_in * c_out;
            for (int ci = 0; ci < c_in; ++ci) {
                const double sv = srow[ci];
                const double* krow = kmat + static_cast<int64_t>(ci) * c_out;
                for (int co = 0; co < c_out; ++co) orow[co] += sv * krow[co];
            }
        }
    }
}

void conv1d_input_grad(const double* grad_out, const double* kernels, double* out,
                       int t_len, int c_in, int c_out, int k_w) {
    const int pad = k_w / 2;
    std::memset(out, 0, sizeof(double) * static_cast<size_t>(t_len) * c_in);
    // out[t, ci] = sum_{k, co} grad_out[t - k + pad, co] * kernels[k, ci, co]
    for (int t = 0; t < t_len; ++t) {
        double* orow = out + static_cast<int64_t>(t) * c_in;
        for (int k = 0; k < k_w; ++k) {
            const int s = t - k + pad;
            if (s < 0 || s >= t_len) continue;
            const double* grow = grad_out + static_cast<int64_t>(s) * c_out;
            const double* kmat = kernels + static_cast<int64_t>(k) * c_in * c_out;
            for (int ci = 0; ci < c_in; ++ci) {
                const double* krow = kmat + static_cast<int64_t>(ci) * c_out;
                double acc = 0.0;
                for (int co = 0; co < c_out; ++co) acc += grow[co] * krow[co];
                orow[ci] += acc;
            }
        }
    }
}

void conv1d_kernel_grad(const double* signal, const double* grad_out, double* out,
                        int t_len, int c_in, int c_out, int k_w) {
    const int pad = k_w / 2;
    std::memset(out, 0, sizeof(double) * static_cast<size_t>(k_w) * c_in * c_out);
    // out[k, ci, co] = sum_t signal[t + k - pad, ci] * grad_out[t, co]
    for (int k = 0; k < k_w; ++k) {
        double* kmat = out + static_cast<int64_t>(k) * c_in * c_out;
        for (int t = 0; t < t_len; ++t) {
            const int s = t + k - pad;
            if (s < 0 || s >= t_len) continue;
            const double* srow = signal + static_cast<int64_t>(s) * c_in;
            const double* grow = grad_out + static_cast<int64_t>(t) * c_out;
            for (int ci = 0; ci < c_in; ++ci) {
                const double sv = srow[ci];
                double* krow = kmat + static_cast<int64_t>(ci) * c_out;
                for (int co = 0; co < c_out; ++co) krow[co] += sv * grow[co];
            }
        }
    }
}

} // namespace ref

// Work below this many inner flops is not worth a parallel region.
static constexpr int64_t kParallelCutoff = 1 << 15;

void matmul(const double* a, const double* b, double* out, int m, int k, int n) {
    const int64_t work = static_cast<int64_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<int64_t>(i) * k;
        double* orow = out + static_cast<int64_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + static_cast<int64_t>(p) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

void conv1d(const double* signal, const double* kernels, double* out,
            int t_len, int c_in, int c_out, int k_w) {
    const int pad = k_w / 2;
    const int64_t work = static_cast<int64_t>(t_len) * k_w * c_in * c_out;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int t = 0; t < t_len; ++t) {
        double* orow = out + static_cast<int64_t>(t) * c_out;
        for (int co = 0; co < c_out; ++co) orow[co] = 0.0;
        for (int k = 0; k < k_w; ++k) {
            const int s = t + k - pad;
            if (s < 0 || s >= t_len) continue;
            const double* srow = signal + static_cast<int64_t>(s) * c_in;
            const double* kmat = kernels + static_cast<int64_t>(k) * c_in * c_out;
            for (int ci = 0; ci < c_in; ++ci) {
                const double sv = srow[ci];
                const double* krow = kmat + static_cast<int64_t>(ci) * c_out;
                for (int co = 0; co < c_out; ++co) orow[co] += sv * krow[co];
            }
        }
    }
}

void conv1d_input_grad(const double* grad_out, const double* kernels, double* out,
                       int t_len, int c_in, int c_out, int k_w) {
    const int pad = k_w / 2;
    const int64_t work = static_cast<int64_t>(t_len) * k_w * c_in * c_out;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int t = 0; t < t_len; ++t) {
        double* orow = out + static_cast<int64_t>(t) * c_in;
        for (int ci = 0; ci < c_in; ++ci) orow[ci] = 0.0;
        for (int k = 0; k < k_w; ++k) {
            const int s = t - k + pad;
            if (s < 0 || s >= t_len) continue;
            const double* grow = grad_out + static_cast<int64_t>(s) * c_out;
            const double* kmat = kernels + static_cast<int64_t>(k) * c_in * c_out;
            for (int ci = 0; ci < c_in; ++ci) {
                const double* krow = kmat + static_cast<int64_t>(ci) * c_out;
                double acc = 0.0;
                for (int co = 0; co < c_out; ++co) acc += grow[co] * krow[co];
                orow[ci] += acc;
            }
        }
    }
}

void conv1d_kernel_grad(const double* signal, const double* grad_out, double* out,
                        int t_len, int c_in, int c_out, int k_w) {
    const int pad = k_w / 2;
    const int64_t work = static_cast<int64_t>(t_len) * k_w * c_in * c_out;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int k = 0; k < k_w; ++k) {
        double* kmat = out + static_cast<int64_t>(k) * c_in * c_out;
        for (int64_t i = 0; i < static_cast<int64_t>(c_in) * c_out; ++i) kmat[i] = 0.0;
        for (int t = 0; t < t_len; ++t) {
            const int s = t + k - pad;
            if (s < 0 || s >= t_len) continue;
            const double* srow = signal + static_cast<int64_t>(s) * c_in;
            const double* grow = grad_out + static_cast<int64_t>(t) * c_out;
            for (int ci = 0; ci < c_in; ++ci) {
                const double sv = srow[ci];
                double* krow = kmat + static_cast<int64_t>(ci) * c_out;
                for (int co = 0; co < c_out; ++co) krow[co] += sv * grow[co];
            }
        }
    }
}

} // namespace bitext::kernels
