#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "idskit/error.hpp"

namespace idskit {

// Dense row-major matrix of doubles. Eigen supplies the storage and the
// products; everything the toolkit promises about shapes and finiteness is
// checked at this layer's boundaries.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline Matrix matrix_from_flat(Eigen::Index rows, Eigen::Index cols,
                               std::span<const double> data) {
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ShapeError("flat data length " + std::to_string(data.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows * cols; ++i) m.data()[i] = data[i];
    return m;
}

// Row-major flattening; the inverse of matrix_from_flat.
inline std::vector<double> matrix_to_flat(const Matrix& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
}

inline std::vector<double> vector_to_flat(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector vector_from_flat(std::span<const double> data) {
    Vector v(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) v[static_cast<Eigen::Index>(i)] = data[i];
    return v;
}

}  // namespace idskit
