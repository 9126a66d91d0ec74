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

namespace fascast
{
    // Bessel function of the first kind, order zero. Defined for any finite
    // real x; throws argument_error on NaN or infinity.
    double bessel_j0(double x);
}
