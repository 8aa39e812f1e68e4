#pragma once

#include <cstddef>

namespace emhnet::detail {

// Row-major dense kernels on raw buffers. Shapes are checked by callers.

/// out[r] += sum_c W[r, c] * x[c]
inline void gemv_add(double* out, const double* w, const double* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        out[r] += acc;
    }
}

/// out[c] += sum_r W[r, c] * d[r]
inline void gemv_t_add(double* out, const double* w, const double* d, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const double dr = d[r];
        if (dr == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) out[c] += wr[c] * dr;
    }
}

/// G[r, c] += d[r] * x[c]
inline void ger_add(double* g, const double* d, const double* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* gr = g + r * cols;
        const double dr = d[r];
        if (dr == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) gr[c] += dr * x[c];
    }
}

}  // namespace emhnet::detail
