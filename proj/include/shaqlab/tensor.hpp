#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaqlab {

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << s[i] << (i + 1 < s.size() ? "," : "");
    os << "]";
    return os.str();
}

// Dense row-major n-d array. Copies share the underlying buffer; use clone()
// for a deep copy. Buffers are treated as immutable once an op has produced
// them, except gradient accumulation during a backward sweep.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape)
        : shape_(std::move(shape)) {
        for (int64_t d : shape_) {
            if (d <= 0) throw std::invalid_argument("Tensor: nonpositive extent in " + shape_str(shape_));
        }
        data_ = std::make_shared<std::vector<T>>(static_cast<size_t>(numel_of(shape_)), T(0));
    }

    Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)) {
        if (static_cast<int64_t>(values.size()) != numel_of(shape_)) {
            throw std::invalid_argument("Tensor: " + std::to_string(values.size()) +
                                        " values for shape " + shape_str(shape_));
        }
        data_ = std::make_shared<std::vector<T>>(std::move(values));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, T v) {
        Tensor t(std::move(shape));
        std::fill(t.data(), t.data() + t.numel(), v);
        return t;
    }

    static Tensor ones(Shape shape) { return full(std::move(shape), T(1)); }

    static Tensor scalar(T v) { return Tensor({1}, {v}); }

    bool defined() const { return data_ != nullptr; }
    const Shape& shape() const { return shape_; }
    int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
    int64_t dim(int64_t i) const { return shape_.at(static_cast<size_t>(i)); }
    int64_t numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }

    T* data() { return data_->data(); }
    const T* data() const { return data_->data(); }

    T& operator[](int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }

    T& at(int64_t i, int64_t j) { return (*data_)[static_cast<size_t>(i * shape_[1] + j)]; }
    const T& at(int64_t i, int64_t j) const { return (*data_)[static_cast<size_t>(i * shape_[1] + j)]; }

    T& at(int64_t i, int64_t j, int64_t k) {
        return (*data_)[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
    }
    const T& at(int64_t i, int64_t j, int64_t k) const {
        return (*data_)[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    // Shares the buffer; numel must be preserved.
    Tensor reshaped(Shape shape) const {
        if (numel_of(shape) != numel()) {
            throw std::invalid_argument("reshape: " + shape_str(shape_) + " -> " + shape_str(shape) +
                                        " changes element count");
        }
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    Tensor clone() const {
        Tensor t;
        t.shape_ = shape_;
        if (data_) t.data_ = std::make_shared<std::vector<T>>(*data_);
        return t;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(static_cast<size_t>(numel()));
        for (int64_t i = 0; i < numel(); ++i) out[static_cast<size_t>(i)] = static_cast<U>((*data_)[i]);
        return Tensor<U>(shape_, std::move(out));
    }

    bool shares_buffer(const Tensor& o) const { return data_ == o.data_; }

private:
    Shape shape_;
    std::shared_ptr<std::vector<T>> data_;
};

template <typename T, typename Rng>
void fill_uniform(Tensor<T>& t, Rng& rng, T lo, T hi) {
    std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
}

template <typename T>
double max_abs(const Tensor<T>& t) {
    double m = 0;
    for (int64_t i = 0; i < t.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(t[i])));
    return m;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0;
    for (int64_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

}  // namespace shaqlab
