#include "nnspod/dense.hpp"

#include <cmath>

namespace nnspod {

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols, m.rows);
    for (std::size_t c = 0; c < m.cols; ++c)
        for (std::size_t r = 0; r < m.rows; ++r)
            t(c, r) = m(r, c);
    return t;
}

double frobenius_norm(const DenseMatrix& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

}  // namespace nnspod
