#pragma once

// Thin RAII layer over FFTW. Plans are created once per length and shared;
// planning is serialized, execution is thread-safe (new-array execute).
//
// Environment:
//   PCSLAB_FFTW_PLANNER  estimate | measure (default) | patient
//   PCSLAB_FFTW_WISDOM   file to import wisdom from and export new wisdom to

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

namespace pcslab {

template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) {}

  T* allocate(std::size_t n) {
    if (auto* p = static_cast<T*>(fftw_malloc(n * sizeof(T)))) return p;
    throw std::bad_alloc();
  }
  void deallocate(T* p, std::size_t) { fftw_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const { return true; }
};

/// SIMD-aligned complex buffer accepted by every cached plan.
using CVec = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

class Fft {
 public:
  /// Shared plan pair for length n.
  static const Fft& of(std::size_t n) {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    auto it = reg.plans.find(n);
    if (it == reg.plans.end()) it = reg.plans.emplace(n, std::unique_ptr<Fft>(new Fft(n))).first;
    return *it->second;
  }

  std::size_t size() const { return n_; }

  /// X[k] = sum_t x[t] exp(-j 2 pi k t / n), in place.
  void forward(CVec& x) const { fftw_execute_dft(forward_, as_fftw(x), as_fftw(x)); }

  /// x[t] = (1/n) sum_k X[k] exp(+j 2 pi k t / n), in place.
  void inverse(CVec& x) const {
    fftw_execute_dft(backward_, as_fftw(x), as_fftw(x));
    const double s = 1.0 / static_cast<double>(n_);
    for (auto& z : x) z *= s;
  }

  /// Signed frequency index of bin k: 0, 1, ..., n/2 - 1, -n/2, ..., -1.
  static long long signed_bin(std::size_t k, std::size_t n) {
    return k < (n + 1) / 2 ? static_cast<long long>(k) : static_cast<long long>(k) - static_cast<long long>(n);
  }

  ~Fft() {
    std::lock_guard lock(registry().planner_mutex);
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

 private:
  struct Registry {
    std::mutex mutex;
    std::mutex planner_mutex;
    std::map<std::size_t, std::unique_ptr<Fft>> plans;
    bool wisdom_loaded = false;
  };

  static Registry& registry() {
    static Registry reg;
    return reg;
  }

  static unsigned planner_flags() {
    const char* env = std::getenv("PCSLAB_FFTW_PLANNER");
    const std::string mode = env ? env : "measure";
    if (mode == "estimate") return FFTW_ESTIMATE;
    if (mode == "patient") return FFTW_PATIENT;
    return FFTW_MEASURE;
  }

  explicit Fft(std::size_t n) : n_(n) {
    auto& reg = registry();
    std::lock_guard lock(reg.planner_mutex);
    const char* wisdom = std::getenv("PCSLAB_FFTW_WISDOM");
    if (wisdom && !reg.wisdom_loaded) {
      fftw_import_wisdom_from_filename(wisdom);
      reg.wisdom_loaded = true;
    }
    // Planning may overwrite its arrays, so plan on scratch memory.
    CVec scratch(n);
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(len, as_fftw(scratch), as_fftw(scratch), FFTW_FORWARD, planner_flags());
    backward_ = fftw_plan_dft_1d(len, as_fftw(scratch), as_fftw(scratch), FFTW_BACKWARD, planner_flags());
    if (!forward_ || !backward_) throw std::runtime_error("FFTW planning failed for length " + std::to_string(n));
    if (wisdom) fftw_export_wisdom_to_filename(wisdom);
  }

  static fftw_complex* as_fftw(CVec& x) { return reinterpret_cast<fftw_complex*>(x.data()); }

  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace pcslab
