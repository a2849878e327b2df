#include "nsmlmc/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace nsmlmc {

namespace detail {
void* fftw_aligned_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fftw_aligned_free(void* p) { fftw_free(p); }
}  // namespace detail

namespace {
// The FFTW planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft2d::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft2d::RealFft2d(int n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("RealFft2d: grid size must be even and >= 2");
  RealBuffer real(real_size());
  ComplexBuffer spec(spectral_size());
  auto* c = reinterpret_cast<fftw_complex*>(spec.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  // FFTW_ESTIMATE keeps plan selection, and therefore rounding, reproducible.
  plans_->forward = fftw_plan_dft_r2c_2d(n, n, real.data(), c, FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_2d(n, n, c, real.data(), FFTW_ESTIMATE);
  if (plans_->forward == nullptr || plans_->inverse == nullptr) throw std::runtime_error("FFTW planning failed");
}

RealFft2d::~RealFft2d() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->inverse);
}

void RealFft2d::forward(const RealBuffer& in, ComplexBuffer& out) const {
  out.resize(spectral_size());
  // r2c does not modify its input.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft2d::inverse(ComplexBuffer& in, RealBuffer& out) const {
  out.resize(real_size());
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

}  // namespace nsmlmc
