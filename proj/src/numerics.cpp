#include "har/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace har {

double sigmoid(double x) {
    double y;
    if (x >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-x));
    } else {
        double e = std::exp(x);
        y = e / (1.0 + e);
    }
    // keep strictly inside (0,1) even when exp saturates
    if (y >= 1.0) y = std::nextafter(1.0, 0.0);
    if (y <= 0.0) y = std::numeric_limits<double>::min();
    return y;
}

double tanh_act(double x) {
    double y = std::tanh(x);
    if (y >= 1.0) y = std::nextafter(1.0, 0.0);
    if (y <= -1.0) y = std::nextafter(-1.0, 0.0);
    return y;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

Vec activation(Activation kind, const Vec& x) {
    Vec out = x;
    activation_inplace(kind, out);
    return out;
}

void activation_inplace(Activation kind, Vec& x) {
    switch (kind) {
        case Activation::sigmoid:
            for (double& v : x) v = sigmoid(v);
            break;
        case Activation::tanh:
            for (double& v : x) v = tanh_act(v);
            break;
        case Activation::relu:
            for (double& v : x) v = relu(v);
            break;
    }
}

Vec softmax(const Vec& z) {
    Vec p(z.size());
    if (z.empty()) return p;
    double zmax = z[0];
    for (double v : z)
        if (v > zmax) zmax = v;
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        double e = std::exp(z[i] - zmax);
        // floor underflowed terms so every probability stays strictly positive
        if (e < std::numeric_limits<double>::epsilon())
            e = std::numeric_limits<double>::epsilon();
        p[i] = e;
        sum += e;
    }
    for (double& v : p) v /= sum;
    return p;
}

static std::string shape_str(const Matrix& a) {
    return std::to_string(a.rows) + "x" + std::to_string(a.cols);
}

Vec matvec(const Matrix& a, std::span<const double> x) {
    Vec out(a.rows);
    matvec_into(a, x, out);
    return out;
}

void matvec_into(const Matrix& a, std::span<const double> x, Vec& out) {
    if (a.cols != x.size())
        throw DimensionError("matvec: matrix " + shape_str(a) + " vs vector length " +
                             std::to_string(x.size()));
    out.assign(a.rows, 0.0);
    const double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

void matvec_transposed_add(const Matrix& a, std::span<const double> y, Vec& out) {
    if (a.rows != y.size())
        throw DimensionError("matvec_transposed_add: matrix " + shape_str(a) +
                             " vs vector length " + std::to_string(y.size()));
    if (out.size() != a.cols) out.assign(a.cols, 0.0);
    const double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        double yi = y[i];
        for (std::size_t j = 0; j < a.cols; ++j) out[j] += row[j] * yi;
    }
}

void outer_add(Matrix& a, std::span<const double> u, std::span<const double> v) {
    if (a.rows != u.size() || a.cols != v.size())
        throw DimensionError("outer_add: matrix " + shape_str(a) + " vs vectors " +
                             std::to_string(u.size()) + ", " + std::to_string(v.size()));
    double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        double ui = u[i];
        for (std::size_t j = 0; j < a.cols; ++j) row[j] += ui * v[j];
    }
}

Matrix init_matrix(std::size_t rows, std::size_t cols, InitScheme scheme,
                   SeededRng& rng, double value) {
    if (rows == 0 || cols == 0)
        throw DimensionError("init_matrix: zero dimension (" + std::to_string(rows) + "x" +
                             std::to_string(cols) + ")");
    Matrix m(rows, cols);
    switch (scheme) {
        case InitScheme::constant:
            for (double& v : m.data) v = value;
            break;
        case InitScheme::uniform_scaled: {
            double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (double& v : m.data) v = rng.uniform(-s, s);
            break;
        }
    }
    return m;
}

}  // namespace har
