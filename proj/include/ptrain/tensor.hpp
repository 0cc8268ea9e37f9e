#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ptrain {

/// Dense row-major array of doubles, rank 1 or 2.
///
/// Operations never broadcast: any shape disagreement is a DimensionError.
/// Every public operation that produces a tensor checks its result for
/// NaN/Inf and throws NumericError instead of returning it.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    /// Rows of a matrix; 1 for a vector.
    std::size_t rows() const;
    /// Columns of a matrix; length of a vector.
    std::size_t cols() const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_string() const;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Throws NumericError naming `what` if `t` holds NaN or Inf.
void require_finite(const Tensor& t, const char* what);

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T without materialising the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T * b without materialising the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor outer(const Tensor& u, const Tensor& v);

double frobenius_norm(const Tensor& a);
double frobenius_inner(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);

/// Reinterpret a vector as a 1 x n matrix (and back).
Tensor as_row(const Tensor& v);
Tensor row_as_vector(const Tensor& m, std::size_t r);

}  // namespace ptrain
