#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tpgcn/error.hpp"

namespace tpgcn {

using Shape = std::vector<std::int64_t>;

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "tensors hold float or double");
  return std::is_same_v<T, float> ? DType::F32 : DType::F64;
}

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
/// Row-major strides of a contiguous tensor.
Shape strides_of(const Shape& shape);
/// Numpy-style broadcast of two shapes; throws ShapeMismatch naming both.
Shape broadcast_shapes(const Shape& a, const Shape& b);

/// Cache-line aligned allocation. Vectorized kernels split their loops by the
/// base address, so a fixed alignment keeps results bit-identical across runs.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

/// Dense row-major n-dimensional array owning its storage.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(static_cast<std::size_t>(tpgcn::numel(shape_)), fill) {}
  using Storage = std::vector<T, AlignedAllocator<T>>;

  Tensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (static_cast<std::int64_t>(data_.size()) != tpgcn::numel(shape_)) {
      fail(ErrorCode::ShapeMismatch, "data length " + std::to_string(data_.size()) +
                                         " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T{0}); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), T{1}); }
  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }
  static Tensor eye(std::int64_t n) {
    Tensor t({n, n});
    for (std::int64_t i = 0; i < n; ++i) t.data_[static_cast<std::size_t>(i * n + i)] = T{1};
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::int64_t rank() const noexcept { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::int64_t axis) const {
    if (axis < 0) axis += rank();
    return shape_.at(static_cast<std::size_t>(axis));
  }
  std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }
  static constexpr DType dtype() { return dtype_of<T>(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  Storage& storage() noexcept { return data_; }
  const Storage& storage() const noexcept { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  std::int64_t offset(std::initializer_list<std::int64_t> index) const {
    if (static_cast<std::int64_t>(index.size()) != rank()) {
      fail(ErrorCode::ShapeMismatch,
           "index of rank " + std::to_string(index.size()) + " into " + shape_str(shape_));
    }
    std::int64_t off = 0;
    std::size_t axis = 0;
    for (std::int64_t i : index) {
      if (i < 0 || i >= shape_[axis]) {
        fail(ErrorCode::IndexOutOfRange, "index " + std::to_string(i) + " on axis " +
                                             std::to_string(axis) + " of " + shape_str(shape_));
      }
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }
  T& at(std::initializer_list<std::int64_t> index) { return data_[static_cast<std::size_t>(offset(index))]; }
  const T& at(std::initializer_list<std::int64_t> index) const {
    return data_[static_cast<std::size_t>(offset(index))];
  }

  Tensor reshaped(Shape shape) const {
    if (tpgcn::numel(shape) != numel()) {
      fail(ErrorCode::ShapeMismatch, "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> t(shape_);
    std::copy(data_.begin(), data_.end(), t.data());
    return t;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Storage data_;
};

/// Largest absolute elementwise difference; shapes must agree.
template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace tpgcn
