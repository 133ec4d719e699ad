#include "ibrl/kernels.hpp"

#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ibrl::nn::kernels {

namespace {
// Below this flop count the OpenMP fork costs more than the loop.
constexpr long kParallelFlops = 1 << 16;
}  // namespace

void gemm_nn_serial(const double* a, const double* b, double* c, int n, int k,
                    int m) {
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + static_cast<long>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_nn(const double* a, const double* b, double* c, int n, int k,
             int m) {
  if (static_cast<long>(n) * k * m < kParallelFlops || n == 1) {
    gemm_nn_serial(a, b, c, n, k, m);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    gemm_nn_serial(a + static_cast<long>(i) * k, b,
                   c + static_cast<long>(i) * m, 1, k, m);
}

void gemm_nt_serial(const double* a, const double* b, double* c, int n, int m,
                    int k) {
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<long>(i) * m;
    double* ci = c + static_cast<long>(i) * k;
    for (int j = 0; j < k; ++j) {
      const double* bj = b + static_cast<long>(j) * m;
      double acc = 0.0;
      for (int p = 0; p < m; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, int n, int m,
             int k) {
  if (static_cast<long>(n) * m * k < kParallelFlops || n == 1) {
    gemm_nt_serial(a, b, c, n, m, k);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    gemm_nt_serial(a + static_cast<long>(i) * m, b,
                   c + static_cast<long>(i) * k, 1, m, k);
}

void gemm_tn_serial(const double* a, const double* b, double* c, int n, int k,
                    int m) {
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    const double* bi = b + static_cast<long>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + static_cast<long>(p) * m;
      for (int j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, int n, int k,
             int m) {
  if (static_cast<long>(n) * k * m < kParallelFlops) {
    gemm_tn_serial(a, b, c, n, k, m);
    return;
  }
  // Parallelize over output rows; each thread re-scans A/B but owns its
  // slice of C, so no reduction buffer is needed.
#pragma omp parallel for schedule(static)
  for (int p = 0; p < k; ++p) {
    double* cp = c + static_cast<long>(p) * m;
    for (int i = 0; i < n; ++i) {
      const double av = a[static_cast<long>(i) * k + p];
      const double* bi = b + static_cast<long>(i) * m;
      for (int j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

namespace {

void conv_fwd_one(const double* in, const double* w2, const double* bias,
                  double* out, int h, int w, int cin, int cout) {
  const int oh = h - 1, ow = w - 1;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double* o = out + (static_cast<long>(y) * ow + x) * cout;
      for (int j = 0; j < cout; ++j) o[j] = bias[j];
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const double* px =
              in + (static_cast<long>(y + dy) * w + (x + dx)) * cin;
          const double* wk = w2 + (static_cast<long>(dy) * 2 + dx) * cin * cout;
          for (int ic = 0; ic < cin; ++ic) {
            const double v = px[ic];
            const double* wc = wk + static_cast<long>(ic) * cout;
            for (int j = 0; j < cout; ++j) o[j] += v * wc[j];
          }
        }
      }
    }
  }
}

void conv_bwd_one(const double* in, const double* w2, const double* dout,
                  double* din, double* dw, double* dbias, int h, int w, int cin,
                  int cout) {
  const int oh = h - 1, ow = w - 1;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double* go = dout + (static_cast<long>(y) * ow + x) * cout;
      for (int j = 0; j < cout; ++j) dbias[j] += go[j];
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const long pix = (static_cast<long>(y + dy) * w + (x + dx)) * cin;
          const double* px = in + pix;
          double* dpx = din + pix;
          const long woff = (static_cast<long>(dy) * 2 + dx) * cin * cout;
          for (int ic = 0; ic < cin; ++ic) {
            const double* wc = w2 + woff + static_cast<long>(ic) * cout;
            double* dwc = dw + woff + static_cast<long>(ic) * cout;
            double acc = 0.0;
            const double v = px[ic];
            for (int j = 0; j < cout; ++j) {
              acc += wc[j] * go[j];
              dwc[j] += v * go[j];
            }
            dpx[ic] += acc;
          }
        }
      }
    }
  }
}

}  // namespace

void conv2x2_forward_serial(const double* in, const double* w2,
                            const double* bias, double* out, int batch, int h,
                            int w, int cin, int cout) {
  const long in_sz = static_cast<long>(h) * w * cin;
  const long out_sz = static_cast<long>(h - 1) * (w - 1) * cout;
  for (int b = 0; b < batch; ++b)
    conv_fwd_one(in + b * in_sz, w2, bias, out + b * out_sz, h, w, cin, cout);
}

void conv2x2_forward(const double* in, const double* w2, const double* bias,
                     double* out, int batch, int h, int w, int cin, int cout) {
  if (batch == 1) {
    conv_fwd_one(in, w2, bias, out, h, w, cin, cout);
    return;
  }
  const long in_sz = static_cast<long>(h) * w * cin;
  const long out_sz = static_cast<long>(h - 1) * (w - 1) * cout;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b)
    conv_fwd_one(in + b * in_sz, w2, bias, out + b * out_sz, h, w, cin, cout);
}

void conv2x2_backward_serial(const double* in, const double* w2,
                             const double* dout, double* din, double* dw,
                             double* dbias, int batch, int h, int w, int cin,
                             int cout) {
  const long in_sz = static_cast<long>(h) * w * cin;
  const long out_sz = static_cast<long>(h - 1) * (w - 1) * cout;
  for (int b = 0; b < batch; ++b)
    conv_bwd_one(in + b * in_sz, w2, dout + b * out_sz, din + b * in_sz, dw,
                 dbias, h, w, cin, cout);
}

void conv2x2_backward(const double* in, const double* w2, const double* dout,
                      double* din, double* dw, double* dbias, int batch, int h,
                      int w, int cin, int cout) {
#ifdef _OPENMP
  if (batch > 1 && omp_get_max_threads() > 1) {
    // din slices are disjoint per sample; dw/dbias are shared, so each
    // thread accumulates into a private copy reduced at the end.
    const long in_sz = static_cast<long>(h) * w * cin;
    const long out_sz = static_cast<long>(h - 1) * (w - 1) * cout;
    const long w_sz = 4L * cin * cout;
#pragma omp parallel
    {
      std::vector<double> dw_local(w_sz, 0.0);
      std::vector<double> db_local(cout, 0.0);
#pragma omp for schedule(static)
      for (int b = 0; b < batch; ++b)
        conv_bwd_one(in + b * in_sz, w2, dout + b * out_sz, din + b * in_sz,
                     dw_local.data(), db_local.data(), h, w, cin, cout);
#pragma omp critical
      {
        for (long i = 0; i < w_sz; ++i) dw[i] += dw_local[i];
        for (int j = 0; j < cout; ++j) dbias[j] += db_local[j];
      }
    }
    return;
  }
#endif
  conv2x2_backward_serial(in, w2, dout, din, dw, dbias, batch, h, w, cin,
                          cout);
}

}  // namespace ibrl::nn::kernels
