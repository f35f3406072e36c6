#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace shaqlab::detail {

// Row-major matrix kernels. The *_rows entry points are pragma-free serial
// bodies over a row range; the public kernels partition output rows
// disjointly across threads with a fixed accumulation order, so results are
// deterministic regardless of thread count. Callers already inside a
// parallel region use the *_rows forms directly to avoid nested teams.

constexpr int64_t kParallelFlops = 1 << 18;

namespace scratch {

template <typename T>
std::vector<T>& buffer() {
    thread_local std::vector<T> buf;
    return buf;
}

}  // namespace scratch

// 4 x JB register tile: each B load feeds four output rows.
template <typename T, int JB>
inline void nn_tile(int64_t K, int64_t N, const T* a0, const T* a1, const T* a2, const T* a3,
                    const T* B, int64_t j0, T* c0, T* c1, T* c2, T* c3) {
    T t0[JB], t1[JB], t2[JB], t3[JB];
    for (int j = 0; j < JB; ++j) t0[j] = t1[j] = t2[j] = t3[j] = T(0);
    const T* b = B + j0;
    for (int64_t k = 0; k < K; ++k, b += N) {
        const T v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
#pragma omp simd
        for (int j = 0; j < JB; ++j) {
            t0[j] += v0 * b[j];
            t1[j] += v1 * b[j];
            t2[j] += v2 * b[j];
            t3[j] += v3 * b[j];
        }
    }
    for (int j = 0; j < JB; ++j) {
        c0[j0 + j] += t0[j];
        c1[j0 + j] += t1[j];
        c2[j0 + j] += t2[j];
        c3[j0 + j] += t3[j];
    }
}

template <typename T>
inline void nn_row(int64_t K, int64_t N, const T* a, const T* B, T* c) {
    int64_t k = 0;
    for (; k + 4 <= K; k += 4) {
        const T a0 = a[k], a1 = a[k + 1], a2 = a[k + 2], a3 = a[k + 3];
        const T* b0 = B + k * N;
        const T* b1 = b0 + N;
        const T* b2 = b1 + N;
        const T* b3 = b2 + N;
#pragma omp simd
        for (int64_t j = 0; j < N; ++j) c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
    }
    for (; k < K; ++k) {
        const T ak = a[k];
        const T* b = B + k * N;
#pragma omp simd
        for (int64_t j = 0; j < N; ++j) c[j] += ak * b[j];
    }
}

template <typename T>
void gemm_nn_rows(int64_t i_begin, int64_t i_end, int64_t M, int64_t N, int64_t K, const T* A,
                  const T* B, T* C, bool accumulate) {
    constexpr int JB = sizeof(T) == 4 ? 32 : 16;
    if (!accumulate && i_end > i_begin) {
        std::memset(C + i_begin * N, 0, sizeof(T) * static_cast<size_t>((i_end - i_begin) * N));
    }
    int64_t i0 = i_begin;
    for (; i0 + 4 <= i_end; i0 += 4) {
        const T* a0 = A + i0 * K;
        T* c0 = C + i0 * N;
        int64_t j0 = 0;
        for (; j0 + JB <= N; j0 += JB) {
            nn_tile<T, JB>(K, N, a0, a0 + K, a0 + 2 * K, a0 + 3 * K, B, j0, c0, c0 + N, c0 + 2 * N,
                           c0 + 3 * N);
        }
        if (j0 < N) {
            const int64_t rem = N - j0;
            for (int r = 0; r < 4; ++r) {
                const T* a = a0 + r * K;
                T* c = c0 + r * N + j0;
                for (int64_t k = 0; k < K; ++k) {
                    const T ak = a[k];
                    const T* b = B + k * N + j0;
                    for (int64_t j = 0; j < rem; ++j) c[j] += ak * b[j];
                }
            }
        }
    }
    for (; i0 < i_end; ++i0) nn_row(K, N, A + i0 * K, B, C + i0 * N);
    (void)M;
}

// C[M,N] (+)= A[M,K] * B[K,N]
template <typename T>
void gemm_nn(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C, bool accumulate) {
    if (M * N * K <= kParallelFlops) {
        gemm_nn_rows(0, M, M, N, K, A, B, C, accumulate);
        return;
    }
#pragma omp parallel
    {
#ifdef _OPENMP
        const int nt = omp_get_num_threads();
        const int tid = omp_get_thread_num();
#else
        const int nt = 1, tid = 0;
#endif
        const int64_t quads = (M + 3) / 4;
        const int64_t chunk = (quads + nt - 1) / nt;
        const int64_t i0 = std::min<int64_t>(M, tid * chunk * 4);
        const int64_t i1 = std::min<int64_t>(M, i0 + chunk * 4);
        if (i1 > i0) gemm_nn_rows(i0, i1, M, N, K, A, B, C, accumulate);
    }
}

template <typename T>
void gemm_nt_rows(int64_t i_begin, int64_t i_end, int64_t N, int64_t K, const T* A, const T* B,
                  T* C, int64_t ldc, bool accumulate) {
    for (int64_t i0 = i_begin; i0 < i_end; i0 += 4) {
        const int64_t i1 = std::min(i_end, i0 + 4);
        for (int64_t j0 = 0; j0 < N; j0 += 4) {
            const int64_t j1 = std::min(N, j0 + 4);
            if (i1 - i0 == 4 && j1 - j0 == 4) {
                const T* a0 = A + i0 * K;
                const T* a1 = a0 + K;
                const T* a2 = a1 + K;
                const T* a3 = a2 + K;
                const T* b0 = B + j0 * K;
                const T* b1 = b0 + K;
                const T* b2 = b1 + K;
                const T* b3 = b2 + K;
                T s00 = 0, s01 = 0, s02 = 0, s03 = 0;
                T s10 = 0, s11 = 0, s12 = 0, s13 = 0;
                T s20 = 0, s21 = 0, s22 = 0, s23 = 0;
                T s30 = 0, s31 = 0, s32 = 0, s33 = 0;
#pragma omp simd reduction(+ : s00, s01, s02, s03, s10, s11, s12, s13, s20, s21, s22, s23, s30, \
                               s31, s32, s33)
                for (int64_t k = 0; k < K; ++k) {
                    const T x0 = a0[k], x1 = a1[k], x2 = a2[k], x3 = a3[k];
                    const T y0 = b0[k], y1 = b1[k], y2 = b2[k], y3 = b3[k];
                    s00 += x0 * y0; s01 += x0 * y1; s02 += x0 * y2; s03 += x0 * y3;
                    s10 += x1 * y0; s11 += x1 * y1; s12 += x1 * y2; s13 += x1 * y3;
                    s20 += x2 * y0; s21 += x2 * y1; s22 += x2 * y2; s23 += x2 * y3;
                    s30 += x3 * y0; s31 += x3 * y1; s32 += x3 * y2; s33 += x3 * y3;
                }
                T* c0 = C + i0 * ldc + j0;
                T* c1 = c0 + ldc;
                T* c2 = c1 + ldc;
                T* c3 = c2 + ldc;
                if (accumulate) {
                    c0[0] += s00; c0[1] += s01; c0[2] += s02; c0[3] += s03;
                    c1[0] += s10; c1[1] += s11; c1[2] += s12; c1[3] += s13;
                    c2[0] += s20; c2[1] += s21; c2[2] += s22; c2[3] += s23;
                    c3[0] += s30; c3[1] += s31; c3[2] += s32; c3[3] += s33;
                } else {
                    c0[0] = s00; c0[1] = s01; c0[2] = s02; c0[3] = s03;
                    c1[0] = s10; c1[1] = s11; c1[2] = s12; c1[3] = s13;
                    c2[0] = s20; c2[1] = s21; c2[2] = s22; c2[3] = s23;
                    c3[0] = s30; c3[1] = s31; c3[2] = s32; c3[3] = s33;
                }
            } else {
                for (int64_t i = i0; i < i1; ++i) {
                    for (int64_t j = j0; j < j1; ++j) {
                        const T* a = A + i * K;
                        const T* b = B + j * K;
                        T s = 0;
#pragma omp simd reduction(+ : s)
                        for (int64_t k = 0; k < K; ++k) s += a[k] * b[k];
                        if (accumulate) C[i * ldc + j] += s; else C[i * ldc + j] = s;
                    }
                }
            }
        }
    }
}

// C[M,N] (+)= A[M,K] * B[N,K]^T   (dot products over contiguous rows)
template <typename T>
void gemm_nt(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C, bool accumulate) {
    if (M * N * K <= kParallelFlops) {
        gemm_nt_rows(0, M, N, K, A, B, C, N, accumulate);
        return;
    }
#pragma omp parallel
    {
#ifdef _OPENMP
        const int nt = omp_get_num_threads();
        const int tid = omp_get_thread_num();
#else
        const int nt = 1, tid = 0;
#endif
        const int64_t quads = (M + 3) / 4;
        const int64_t chunk = (quads + nt - 1) / nt;
        const int64_t i0 = std::min<int64_t>(M, tid * chunk * 4);
        const int64_t i1 = std::min<int64_t>(M, i0 + chunk * 4);
        if (i1 > i0) gemm_nt_rows(i0, i1, N, K, A, B, C, N, accumulate);
    }
}

template <typename T>
void transpose_into(int64_t M, int64_t K, const T* A, T* at) {
    constexpr int64_t kTile = 32;
#pragma omp parallel for schedule(static) if (M * K > kParallelFlops)
    for (int64_t m0 = 0; m0 < M; m0 += kTile) {
        const int64_t m1 = std::min(M, m0 + kTile);
        for (int64_t k0 = 0; k0 < K; k0 += kTile) {
            const int64_t k1 = std::min(K, k0 + kTile);
            for (int64_t m = m0; m < m1; ++m)
                for (int64_t k = k0; k < k1; ++k) at[k * M + m] = A[m * K + k];
        }
    }
}

// C[K,N] (+)= A[M,K]^T * B[M,N]. A is transposed into scratch first so the
// accumulation runs through the fast row-major kernel.
template <typename T>
void gemm_tn(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C, bool accumulate) {
    auto& buf = scratch::buffer<T>();
    if (static_cast<int64_t>(buf.size()) < M * K) buf.resize(static_cast<size_t>(M * K));
    T* at = buf.data();
    transpose_into(M, K, A, at);
    gemm_nn(K, N, M, at, B, C, accumulate);
}

// Serial variant for callers already inside a parallel region; scratch is
// caller-provided (at least M*K elements).
template <typename T>
void gemm_tn_serial(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C, T* scratch_at,
                    bool accumulate) {
    transpose_into(M, K, A, scratch_at);
    gemm_nn_rows(0, K, K, N, M, scratch_at, B, C, accumulate);
}

}  // namespace shaqlab::detail
