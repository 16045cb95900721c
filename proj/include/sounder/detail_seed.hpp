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

#ifndef SOUNDER_DETAIL_SEED_HPP
#define SOUNDER_DETAIL_SEED_HPP

#include <cstdint>

namespace sounder::detail
{
    // splitmix64 finalizer, derives independent per-trial / per-antenna seeds from a base seed
    inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0)
    {
        std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
} // namespace sounder::detail

#endif
