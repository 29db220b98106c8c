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

#include "dynmf/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynmf {

void AdamHyper::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("Adam step size must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must be in [0, 1)");
}

AdamState::AdamState(Eigen::Index size, const AdamHyper& h)
    : first_moment(Eigen::VectorXd::Zero(size)),
      second_moment(Eigen::VectorXd::Zero(size)),
      hyper(h) {
  hyper.validate();
}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (params.size() != grad.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw std::invalid_argument("Adam: parameter, gradient and moment lengths differ (" +
                                std::to_string(params.size()) + " vs " +
                                std::to_string(grad.size()) + ")");
  }
  if (!grad.allFinite()) throw std::domain_error("Adam: non-finite gradient entry");

  const auto& h = state.hyper;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);

  state.first_moment = h.beta1 * state.first_moment + (1.0 - h.beta1) * grad;
  state.second_moment = h.beta2 * state.second_moment + (1.0 - h.beta2) * grad.cwiseAbs2();
  params.array() -= h.alpha * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + h.epsilon);
}

}  // namespace dynmf
