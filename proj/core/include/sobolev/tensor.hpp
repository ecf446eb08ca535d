#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace sobolev {

// Error type used across the library. Messages carry enough context
// (op name, offending shapes) to be actionable without a debugger.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xd.
// This is the only value type the tape stores; all higher-rank data in the
// library (per-sample Jacobians etc.) is kept as explicitly flattened
// matrices with the layout documented at the use site.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw Error("Tensor: negative dimension");
    }
    Tensor(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != size_t(rows) * cols)
            throw Error("Tensor: data size " + std::to_string(data_.size()) + " does not match shape " + shape_str());
    }

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data_[0] = v;
        return t;
    }
    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        for (auto& x : t.data_) x = v;
        return t;
    }
    static Tensor ones(int r, int c) { return full(r, c, 1.0); }
    static Tensor row(std::initializer_list<double> vals) {
        Tensor t(1, int(vals.size()));
        int j = 0;
        for (double v : vals) t.data_[j++] = v;
        return t;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(int i, int j) { return data_[size_t(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[size_t(i) * cols_ + j]; }
    double& at(size_t k) { return data_[k]; }
    double at(size_t k) const { return data_[k]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    std::string shape_str() const {
        return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
    }

    bool all_finite() const;
    double max_abs() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Matrix product C = op(a) * op(b) with optional transposes; the one place
// the library leans on an external kernel (Eigen) for speed.
Tensor matmul_values(const Tensor& a, const Tensor& b, bool ta, bool tb);

}  // namespace sobolev
