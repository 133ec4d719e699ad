#pragma once

// Data-parallel inner loops of the tensor library. Each kernel has an
// OpenMP variant and a plain serial reference; the reference versions are
// kept for the kernel equivalence tests and the benchmark harness.

namespace ibrl::nn::kernels {

// C[n,m] += A[n,k] * B[k,m]
void gemm_nn(const double* a, const double* b, double* c, int n, int k, int m);
void gemm_nn_serial(const double* a, const double* b, double* c, int n, int k,
                    int m);

// C[n,k] += A[n,m] * B[k,m]^T
void gemm_nt(const double* a, const double* b, double* c, int n, int m, int k);
void gemm_nt_serial(const double* a, const double* b, double* c, int n, int m,
                    int k);

// C[k,m] += A[n,k]^T * B[n,m]
void gemm_tn(const double* a, const double* b, double* c, int n, int k, int m);
void gemm_tn_serial(const double* a, const double* b, double* c, int n, int k,
                    int m);

// 2x2 valid convolution, stride 1, NHWC layout.
// in:  [batch, h, w, cin]    w2: [2,2,cin,cout]   bias: [cout]
// out: [batch, h-1, w-1, cout]
void conv2x2_forward(const double* in, const double* w2, const double* bias,
                     double* out, int batch, int h, int w, int cin, int cout);
void conv2x2_forward_serial(const double* in, const double* w2,
                            const double* bias, double* out, int batch, int h,
                            int w, int cin, int cout);

// Gradients accumulate (+=) into din / dw / dbias.
void conv2x2_backward(const double* in, const double* w2, const double* dout,
                      double* din, double* dw, double* dbias, int batch, int h,
                      int w, int cin, int cout);
void conv2x2_backward_serial(const double* in, const double* w2,
                             const double* dout, double* din, double* dw,
                             double* dbias, int batch, int h, int w, int cin,
                             int cout);

}  // namespace ibrl::nn::kernels
