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

#ifndef SOUNDER_SCENARIO_IO_HPP
#define SOUNDER_SCENARIO_IO_HPP

#include "sounder/propagation.hpp"

#include <filesystem>
#include <string>

namespace sounder
{
    // JSON scenario files, schema in docs/scenario_format.md. Missing keys keep their defaults.
    Scenario parse_scenario(const std::string &json_text);
    std::string scenario_to_json(const Scenario &sc);
    Scenario load_scenario(const std::filesystem::path &path);

    // Compact JSON description of the antenna array, stored in CSID headers
    std::string array_descriptor(const ArraySpec &array, double carrier_hz);
} // namespace sounder

#endif
