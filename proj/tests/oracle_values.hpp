// Copyright 2026 The e3p Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>

// Frozen output of tests/oracles/telemetry_oracle.py over tests/data.
namespace e3p::oracle {

inline const std::map<std::string, double> kTx2RailMeansMw = {
    {"VDD_4V0_WIFI", 0.000000}, {"VDD_IN", 4898.741667},     {"VDD_SYS_CPU", 453.666667},
    {"VDD_SYS_DDR", 1095.200000}, {"VDD_SYS_GPU", 1416.133333}, {"VDD_SYS_SOC", 762.566667},
};
inline constexpr std::size_t kTx2Samples = 120;

inline constexpr double kRtxGpuMeanMw = 19745.500000;
inline constexpr std::size_t kRtxSamples = 200;

inline constexpr double kTx2TrialEnergyJ[3] = {112.540645161, 109.388709677, 111.725806452};
inline constexpr double kTx2TrialMeanMw[3] = {3751.354839, 3646.290323, 3724.193548};
inline constexpr double kTx2MeanEnergyJ = 111.218387097;
inline constexpr double kRtxMeanEnergyJ = 3949.100000000;

}  // namespace e3p::oracle
