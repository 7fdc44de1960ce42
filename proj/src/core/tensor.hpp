#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace velinv {

/// channels x height x width, row-major within a channel.
template <typename T>
struct BasicTensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  BasicTensor3() = default;
  BasicTensor3(int c, int h, int w, T fill = T{})
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  T* channel(int c) noexcept { return data.data() + static_cast<std::size_t>(c) * plane(); }
  const T* channel(int c) const noexcept { return data.data() + static_cast<std::size_t>(c) * plane(); }
  T& at(int c, int y, int x) noexcept { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  T at(int c, int y, int x) const noexcept { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  bool same_shape(const BasicTensor3& o) const noexcept {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

using Tensor3 = BasicTensor3<float>;
using Tensor3d = BasicTensor3<double>;

}  // namespace velinv
