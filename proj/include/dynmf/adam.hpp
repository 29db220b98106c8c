// Copyright 2026 The dynmf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNMF_ADAM_HPP_
#define DYNMF_ADAM_HPP_

#include <cstdint>

#include <Eigen/Dense>

namespace dynmf {

struct AdamHyper {
  double alpha = 0.001;  // step size
  double beta1 = 0.9;    // first-moment decay
  double beta2 = 0.999;  // second-moment decay
  double epsilon = 1e-8;

  // Throws std::invalid_argument unless alpha > 0, epsilon > 0 and both
  // decays lie in [0, 1).
  void validate() const;
};

// Optimizer state for one parameter vector. Owned by a single optimization
// run; copying it snapshots the run.
struct AdamState {
  AdamState() = default;
  AdamState(Eigen::Index size, const AdamHyper& hyper);

  std::int64_t step_count = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  AdamHyper hyper;
};

// One bias-corrected Adam update of `params` in place:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   theta <- theta - alpha * mhat / (sqrt(vhat) + eps)
// with mhat = m / (1 - b1^t), vhat = v / (1 - b2^t).
// Throws std::invalid_argument on a length mismatch and std::domain_error on
// a non-finite gradient entry; the state is untouched in both cases.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grad);

}  // namespace dynmf

#endif  // DYNMF_ADAM_HPP_
