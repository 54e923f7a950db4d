#include "mvsc/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace mvsc {

namespace {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

std::mutex plan_mutex;

const PlanPair& plans_for(int n)
{
    static std::map<int, PlanPair> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const size_t total = size_t(n) * n * n;
    auto* buf = fftw_alloc_complex(total);
    PlanPair p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.forward = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_FORWARD, flags);
    p.backward = fftw_plan_dft_3d(n, n, n, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    return cache.emplace(n, p).first->second;
}

}  // namespace

void fft3_forward(cplx* data, int n)
{
    auto* d = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_for(n).forward, d, d);
}

void fft3_inverse(cplx* data, int n)
{
    auto* d = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_for(n).backward, d, d);
    const double scale = 1.0 / (double(n) * n * n);
    const size_t total = size_t(n) * n * n;
    for (size_t i = 0; i < total; ++i) data[i] *= scale;
}

}  // namespace mvsc
