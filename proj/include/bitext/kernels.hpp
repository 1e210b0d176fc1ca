#pragma once

#include <cstdint>

namespace bitext::kernels {

// Serial reference implementations. These stay around as the oracle the
// parallel kernels are tested against; see bench/kernel_bench.cpp for the
// speed comparison.
namespace ref {

void matmul(const double* a, const double* b, double* out, int m, int k, int n);

// 1-d convolution over the length axis with "same" zero padding.
// signal: t_len x c_in, kernels: k_w x c_in x c_out (k_w odd), out: t_len x c_out.
void conv1d(const double* signal, const double* kernels, double* out,
            int t_len, int c_in, int c_out, int k_w);

// Adjoint of conv1d w.r.t. the signal: grad_out: t_len x c_out -> t_len x c_in.
void conv1d_input_grad(const double* grad_out, const double* kernels, double* out,
                       int t_len, int c_in, int c_out, int k_w);

// Adjoint of conv1d w.r.t. the kernels: -> k_w x c_in x c_out.
void conv1d_kernel_grad(const double* signal, const double* grad_out, double* out,
                        int t_len, int c_in, int c_out, int k_w);

} // namespace ref

// OpenMP variants. Parallelism is over independent output elements only, so
// each element is accumulated in the same order as the reference kernels and
// results are bit-identical for any thread count.
void matmul(const double* a, const double* b, double* out, int m, int k, int n);
void conv1d(const double* signal, const double* kernels, double* out,
            int t_len, int c_in, int c_out, int k_w);
void conv1d_input_grad(const double* grad_out, const double* kernels, double* out,
                       int t_len, int c_in, int c_out, int k_w);
void conv1d_kernel_grad(const double* signal, const double* grad_out, double* out,
                        int t_len, int c_in, int c_out, int k_w);

} // namespace bitext::kernels
