#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace hkwave::detail {

// In-place or out-of-place complex DFT of a fixed length. Planning goes through a
// process-wide mutex because the FFTW planner is not thread-safe.
class FftPlan {
 public:
  FftPlan(std::size_t n, int sign) : n_(n) {
    std::vector<std::complex<double>> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_.reset(fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED));
    if (!plan_) throw std::runtime_error("FFTW planning failed");
  }

  std::size_t size() const { return n_; }

  void execute(std::span<std::complex<double>> data) const {
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_.get(), buf, buf);
  }

 private:
  struct Destroy {
    void operator()(fftw_plan p) const {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(p);
    }
  };
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t n_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, Destroy> plan_;
};

}  // namespace hkwave::detail
