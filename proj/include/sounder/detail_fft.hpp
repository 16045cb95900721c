// SPDX-License-Identifier: Apache-2.0
//
// mimo-sounder: software twin of a frequency-multiplexed Massive MIMO channel sounder
// Copyright (C) 2026 The mimo-sounder authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef SOUNDER_DETAIL_FFT_HPP
#define SOUNDER_DETAIL_FFT_HPP

#include "sounder/types.hpp"

#include <unsupported/Eigen/FFT>

namespace sounder::detail
{
    inline Eigen::FFT<double> &fft_engine()
    {
        // Eigen::FFT caches plans internally, one engine per thread keeps calls reentrant.
        thread_local Eigen::FFT<double> engine;
        return engine;
    }

    // X[k] = sum_n x[n] exp(-j 2 pi k n / N), no scaling
    inline Eigen::VectorXcd fft(const Eigen::VectorXcd &x)
    {
        Eigen::VectorXcd out(x.size());
        fft_engine().fwd(out.data(), x.data(), static_cast<int>(x.size()));
        return out;
    }

    // x[n] = (1/N) sum_k X[k] exp(+j 2 pi k n / N)
    inline Eigen::VectorXcd ifft(const Eigen::VectorXcd &X)
    {
        Eigen::VectorXcd out(X.size());
        fft_engine().inv(out.data(), X.data(), static_cast<int>(X.size()));
        return out;
    }

    // Signed frequency index of DFT bin k in an N-point transform
    inline long signed_bin(long k, long n) { return k < (n + 1) / 2 ? k : k - n; }
    inline long wrap_bin(long f, long n) { return ((f % n) + n) % n; }
} // namespace sounder::detail

#endif
