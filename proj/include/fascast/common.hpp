// SPDX-License-Identifier: Apache-2.0
//
// fascast: OTFS satellite-to-fluid-antenna channel simulation, compression
// and forecasting toolkit
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

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fascast
{
    using cplx = std::complex<double>;

    // Invalid argument values or mismatched shapes.
    struct argument_error : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    // Inconsistent experiment configuration; carries the offending field name.
    struct config_error : std::runtime_error
    {
        config_error(std::string field_name, const std::string &what)
            : std::runtime_error(field_name + ": " + what), field(std::move(field_name)) {}
        std::string field;
    };

    // Factorization breakdown, non-finite intermediate values and the like.
    struct numerical_error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // Training diverged; carries the epoch at which it happened.
    struct training_error : std::runtime_error
    {
        training_error(int at_epoch, const std::string &what)
            : std::runtime_error("epoch " + std::to_string(at_epoch) + ": " + what), epoch(at_epoch) {}
        int epoch;
    };

    // File could not be opened, read or written.
    struct io_error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // File exists but its contents do not match the expected format.
    struct format_error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };
}
