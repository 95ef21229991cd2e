// Copyright 2026 The Drift Envelope Authors
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

// Forward-mode scalar used to differentiate the model code, which is
// templated on its scalar type.

#ifndef DRIFT_AUTODIFF_HPP_
#define DRIFT_AUTODIFF_HPP_

#include <type_traits>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace drift {

// 5 state + 3 input directions: enough for one discrete-time step Jacobian.
using StepDerivatives = Eigen::Matrix<double, 8, 1>;
using Dual = Eigen::AutoDiffScalar<StepDerivatives>;

template <typename T>
inline double value_of(const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    return static_cast<double>(x);
  } else {
    return x.value();
  }
}

// Seeds a dual number with a unit derivative in `direction`.
inline Dual make_dual(double value, int direction) {
  return Dual(value, StepDerivatives::Unit(direction));
}

}  // namespace drift

#endif  // DRIFT_AUTODIFF_HPP_
