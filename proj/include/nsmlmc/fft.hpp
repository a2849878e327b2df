#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <new>
#include <vector>

namespace nsmlmc {

namespace detail {
void* fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void* p);
}  // namespace detail

/// Allocator handing out FFTW-aligned storage so that one plan can execute on any buffer.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    void* p = detail::fftw_aligned_alloc(n * sizeof(T));
    if (p == nullptr && n != 0) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { detail::fftw_aligned_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

using RealBuffer = std::vector<double, FftwAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

/// Unnormalized 2D real <-> half-complex transforms on an n x n periodic grid.
///
/// Real data is stored row-major with x fastest (index i + n*j). The spectrum
/// holds rows ky = 0..n-1 and columns kx = 0..n/2 (index kx + (n/2+1)*ky); the
/// forward transform uses exp(-2 pi i k.m / n). Plans are created once and are
/// safe to execute concurrently on distinct buffers.
class RealFft2d {
 public:
  explicit RealFft2d(int n);
  ~RealFft2d();
  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;

  int n() const { return n_; }
  int half() const { return n_ / 2 + 1; }
  std::size_t real_size() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(half()) * n_; }

  void forward(const RealBuffer& in, ComplexBuffer& out) const;
  /// Destroys `in` (FFTW multi-dimensional c2r semantics). Output is scaled by n^2
  /// relative to the true inverse, like FFTW.
  void inverse(ComplexBuffer& in, RealBuffer& out) const;

 private:
  int n_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

/// Signed wavenumber for FFT index k on an n-point grid.
inline int signed_wavenumber(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace nsmlmc
