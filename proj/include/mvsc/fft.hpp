#pragma once

#include "mvsc/types.hpp"

namespace mvsc {

// In-place unnormalized 3-D DFT on N^3 complex arrays in grid order.
// Plans are created once per size with FFTW_ESTIMATE so results are
// bitwise reproducible; execution is thread-safe.
void fft3_forward(cplx* data, int n);
void fft3_inverse(cplx* data, int n);  // includes the 1/N^3 factor

inline ScalarField dft(const ScalarField& f, int n)
{
    ScalarField out = f;
    fft3_forward(out.data(), n);
    return out;
}

inline ScalarField idft(const ScalarField& f, int n)
{
    ScalarField out = f;
    fft3_inverse(out.data(), n);
    return out;
}

}  // namespace mvsc
