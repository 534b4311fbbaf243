#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "har/errors.hpp"

namespace har {

using Vec = std::vector<double>;

// Dense row-major matrix of 64-bit floats. All training runs in double so
// finite-difference gradient checks stay meaningful.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }
};

// Deterministic PRNG: a fixed seed and call sequence always yields the same
// stream. The mt19937_64 engine output is standardized bit-exactly; we map
// raw 64-bit draws ourselves instead of going through the (implementation
// defined) std::uniform_*_distribution classes.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform draw in [lo, hi).
    double uniform(double lo, double hi) {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // [0,1)
        return lo + u * (hi - lo);
    }

    // Uniform integer in [0, n). n must be > 0.
    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>(next_u64() % n);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = below(i + 1);
            std::swap(v[i], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

enum class Activation { sigmoid, tanh, relu };

// Elementwise activations, numerically stable for |x| up to ~1e3 and clamped
// so sigmoid stays strictly inside (0,1) and tanh strictly inside (-1,1).
double sigmoid(double x);
double tanh_act(double x);
double relu(double x);
Vec activation(Activation kind, const Vec& x);
void activation_inplace(Activation kind, Vec& x);

// Max-subtracted softmax: outputs strictly in (0,1), sum 1 within 1e-12,
// invariant under translation of the logits.
Vec softmax(const Vec& z);

// result[i] = sum_j A(i,j) * x[j]
Vec matvec(const Matrix& a, std::span<const double> x);
void matvec_into(const Matrix& a, std::span<const double> x, Vec& out);
// out[j] += sum_i A(i,j) * y[i]   (A^T * y, accumulated)
void matvec_transposed_add(const Matrix& a, std::span<const double> y, Vec& out);
// A(i,j) += u[i] * v[j]
void outer_add(Matrix& a, std::span<const double> u, std::span<const double> v);

enum class InitScheme { uniform_scaled, constant };

// uniform_scaled draws from uniform(-s, s) with s = sqrt(6 / (rows + cols));
// constant fills with `value` exactly.
Matrix init_matrix(std::size_t rows, std::size_t cols, InitScheme scheme,
                   SeededRng& rng, double value = 0.0);

}  // namespace har
