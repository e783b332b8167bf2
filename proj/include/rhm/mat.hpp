#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace rhm {

// Dense row-major matrix of doubles. Rows are typically per-node probability
// vectors over the alphabet.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows && c < cols);
        return a[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows && c < cols);
        return a[r * cols + c];
    }

    double* row(std::size_t r) { return a.data() + r * cols; }
    const double* row(std::size_t r) const { return a.data() + r * cols; }

    bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

inline double row_sum(const Mat& m, std::size_t r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += m(r, c);
    return s;
}

// Normalizes row r in place; returns the normalizer (0 means degenerate row).
inline double normalize_row(Mat& m, std::size_t r) {
    double z = row_sum(m, r);
    if (z > 0.0) {
        for (std::size_t c = 0; c < m.cols; ++c) m(r, c) /= z;
    }
    return z;
}

// Argmax with ties broken toward the lowest index; *tied set to true on a tie.
inline std::size_t row_argmax(const Mat& m, std::size_t r, bool* tied = nullptr) {
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t c = 1; c < m.cols; ++c) {
        if (m(r, c) > m(r, best)) {
            best = c;
            tie = false;
        } else if (m(r, c) == m(r, best)) {
            tie = true;
        }
    }
    if (tied) *tied = tie;
    return best;
}

}  // namespace rhm
