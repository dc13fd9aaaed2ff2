#pragma once

// Internal FFT backend (FFTW double precision, complex-to-complex).
//
// Plans are cached per transform size behind a mutex because FFTW's planner
// is not thread-safe; executing a cached plan on fresh arrays is.  Plans are
// created with FFTW_ESTIMATE | FFTW_UNALIGNED so they are deterministic and
// valid for any properly sized buffer.  Transforms are unnormalized: the
// forward direction uses the exp(-2*pi*i*k*j/N) sign, and callers apply the
// 1/N factor where their mode convention requires it.

#include <complex>

namespace vlx::detail {

/// out_k = sum_j in_j exp(-2*pi*i*j*k/n); in and out may not alias.
void fft_forward(int n, const std::complex<double>* in, std::complex<double>* out);

/// out_j = sum_k in_k exp(+2*pi*i*j*k/n); in and out may not alias.
void fft_inverse(int n, const std::complex<double>* in, std::complex<double>* out);

}  // namespace vlx::detail
