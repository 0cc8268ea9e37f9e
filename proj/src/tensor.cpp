#include "ptrain/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "ptrain/errors.hpp"
#include "ptrain/kernels.hpp"

namespace ptrain {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_rank(const std::vector<std::size_t>& shape) {
    if (shape.empty() || shape.size() > 2)
        throw DimensionError("tensor rank must be 1 or 2, got shape " + shape_string(shape));
}

const char* op_name_or(const char* what) { return what != nullptr ? what : "tensor op"; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
}

void require_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2)
        throw DimensionError(std::string(op) + ": expected a matrix, got shape " + t.shape_string());
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    check_rank(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_rank(shape_);
    if (element_count(shape_) != data_.size())
        throw DimensionError("shape " + ptrain::shape_string(shape_) + " needs " +
                             std::to_string(element_count(shape_)) + " elements, got " +
                             std::to_string(data_.size()));
    require_finite(*this, "tensor construction");
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged matrix literal");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

std::span<double> Tensor::row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols(), cols());
}
std::span<const double> Tensor::row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_string() const { return ptrain::shape_string(shape_); }

void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) throw NumericError(std::string(op_name_or(what)) + ": non-finite value");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions differ, " + a.shape_string() + " x " +
                             b.shape_string());
    Tensor c({a.rows(), b.cols()});
    kernels::parallel::gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    require_finite(c, "matmul");
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_nt");
    require_matrix(b, "matmul_nt");
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: inner dimensions differ, " + a.shape_string() + " x " +
                             b.shape_string() + "^T");
    Tensor c({a.rows(), b.rows()});
    kernels::parallel::gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
    require_finite(c, "matmul_nt");
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_tn");
    require_matrix(b, "matmul_tn");
    if (a.rows() != b.rows())
        throw DimensionError("matmul_tn: inner dimensions differ, " + a.shape_string() + "^T x " +
                             b.shape_string());
    Tensor c({a.cols(), b.cols()});
    kernels::parallel::gemm_tn(a.data(), b.data(), c.data(), a.cols(), a.rows(), b.cols());
    require_finite(c, "matmul_tn");
    return c;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    Tensor t({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
    require_finite(c, "hadamard");
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    require_finite(c, "add");
    return c;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "subtract");
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    require_finite(c, "subtract");
    return c;
}

Tensor scale(const Tensor& a, double s) {
    Tensor c(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * s;
    require_finite(c, "scale");
    return c;
}

Tensor outer(const Tensor& u, const Tensor& v) {
    if (u.rank() != 1 || v.rank() != 1)
        throw DimensionError("outer: expected two vectors, got " + u.shape_string() + " and " +
                             v.shape_string());
    Tensor m({u.size(), v.size()});
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) m.at(i, j) = u[i] * v[j];
    require_finite(m, "outer");
    return m;
}

double frobenius_norm(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v * v;
    return std::sqrt(acc);
}

double frobenius_inner(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "frobenius_inner");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double dot(const Tensor& a, const Tensor& b) {
    if (a.rank() != 1 || b.rank() != 1)
        throw DimensionError("dot: expected two vectors, got " + a.shape_string() + " and " +
                             b.shape_string());
    return frobenius_inner(a, b);
}

Tensor as_row(const Tensor& v) {
    if (v.rank() != 1) throw DimensionError("as_row: expected a vector, got " + v.shape_string());
    return Tensor({1, v.size()}, v.values());
}

Tensor row_as_vector(const Tensor& m, std::size_t r) {
    require_matrix(m, "row_as_vector");
    if (r >= m.rows()) throw DimensionError("row_as_vector: row index out of range");
    auto span = m.row(r);
    return Tensor::vector(std::vector<double>(span.begin(), span.end()));
}

}  // namespace ptrain
