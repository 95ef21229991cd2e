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

// Drift-tracking NMPC: steady-state drift reference on a circle, single
// shooting transcription with dual-envelope constraints, and wheel torque
// allocation.

#ifndef DRIFT_NMPC_HPP_
#define DRIFT_NMPC_HPP_

#include <array>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "drift/envelope.hpp"
#include "drift/equilibrium.hpp"
#include "drift/saddle_fit.hpp"
#include "drift/sqp.hpp"
#include "drift/vehicle_dynamics.hpp"

namespace drift::nmpc {

struct NmpcConfig {
  int np = 15;  // prediction steps
  int nc = 10;  // control steps; u_k = u_{nc-1} for k >= nc
  double dt = 0.02;  // [s]
  std::array<double, 5> q{2400.0, 4500.0, 300.0, 5000.0, 1600.0};  // e, dpsi, Vx, beta, r
  std::array<double, 3> r{1000.0, 800.0, 600.0};                   // delta, Fxr, dMz
  envelope::InputBox box;  // steering and yaw-moment bounds
  double w_inner = 1e4;
  double design_mu = 0.55;
  bool use_envelope = true;
  // Inputs enter the cost and the decision vector divided by these scales;
  // zero entries select the full widths of the input box (Fxr: 2 design mu Fzr).
  std::array<double, 3> input_scale{0.0, 0.0, 0.0};
  double cost_scale = 1e-3;
  int max_sqp_iterations = 100;
  std::shared_ptr<const envelope::EnvelopeTable> table;
  std::shared_ptr<const saddle::SaddleFit> fit;  // analytic fallback for void cells

  void validate() const;  // throws ConfigError
};

struct DriftReference {
  double radius = 0.0;  // [m]
  double speed = 0.0;   // total speed [m/s]
  double mu = 0.0;
  double kappa = 0.0;  // 1 / radius
  double e = 0.0;
  double dpsi = 0.0;
  double vx = 0.0;
  double beta = 0.0;
  double r = 0.0;
  vehicle::InputVec u0 = vehicle::InputVec::Zero();  // nominal (delta, Fxr, dMz)

  vehicle::StateVec state() const;
};

enum class SteadyBranch {
  kDrift,      // rear past its force peak, front below it, beta r < 0
  kCornering,  // both axles below their force peaks
};

struct ReferenceOptions {
  SteadyBranch branch = SteadyBranch::kDrift;
  double beta_min = -0.6;  // sideslip search interval [rad], mirrored for r < 0
  double beta_max = 0.0;
  int samples = 601;
  std::optional<double> beta_override;  // pins beta_ref
  envelope::InputBox box;
};

// Steady state on a circle of the given radius at total speed `speed`:
// r = speed / radius, dpsi = -beta, Vx = speed cos(beta). Among the
// equilibria of the selected branch the one with the least weighted
// normalized input effort is returned. Throws DomainError when the branch
// is empty.
DriftReference compute_reference(double radius, double speed, double mu,
                                 const equilibrium::Model& model, const NmpcConfig& config = {},
                                 const ReferenceOptions& options = {});

struct WheelTorques {
  double fl = 0.0;  // [N m]
  double fr = 0.0;
  double rl = 0.0;
  double rr = 0.0;
};

// Rear pair carries Fxr, the front pair the yaw moment. Throws DomainError
// when |delta| >= pi/2 - 0.01.
WheelTorques torque_allocation(const vehicle::InputVec& u, const vehicle::VehicleParams& params);

// Fxr and dMz recovered from the wheel torques.
vehicle::InputVec reconstruct_input(const WheelTorques& t, double delta,
                                    const vehicle::VehicleParams& params);

enum class CommandStatus {
  kConverged,
  kDegraded,  // iteration cap or line-search failure; best iterate used
  kHeld,      // infeasible solve; previous command repeated
};
const char* to_string(CommandStatus s);

struct ControlCommand {
  vehicle::InputVec u = vehicle::InputVec::Zero();
  WheelTorques torques;
  CommandStatus status = CommandStatus::kConverged;
  sqp::SqpStatus solver_status = sqp::SqpStatus::kConverged;
  int iterations = 0;
  double objective = 0.0;
  double violation = 0.0;
  bool envelope_fallback = false;  // void table cell met during the solve
};

// Decision vector layout: [v_0 .. v_{nc-1}, s_1 .. s_np] with v = u / scale.
struct OcpLayout {
  int np = 0;
  int nc = 0;
  bool envelope = true;
  int n_vars() const { return 3 * nc + (envelope ? np : 0); }
  int input_index(int k) const { return 3 * std::min(k, nc - 1); }
  int slack_index(int k) const { return 3 * nc + (k - 1); }  // k in [1, np]
};

struct Rollout {
  std::vector<vehicle::StateVec> states;  // x_0 .. x_np
  std::vector<vehicle::InputVec> inputs;  // u_0 .. u_{np-1}
  std::vector<double> d_inner;            // per predicted state x_1 .. x_np
  std::vector<double> d_outer;
};

class Ocp {
 public:
  Ocp(const vehicle::StateVec& x_now, const DriftReference& ref, const NmpcConfig& config,
      const equilibrium::Model& model);
  // The problem's callbacks refer to this object.
  Ocp(const Ocp&) = delete;
  Ocp& operator=(const Ocp&) = delete;

  const OcpLayout& layout() const { return layout_; }
  const sqp::NlpProblem& problem() const { return problem_; }
  vehicle::InputVec input_scale() const { return scale_; }
  double fxr_bound() const { return fxr_bound_; }  // design mu * Fzr
  // Decision vector holding u in every control step and zero slacks.
  Eigen::VectorXd constant_input(const vehicle::InputVec& u) const;
  vehicle::InputVec input(const Eigen::VectorXd& z, int k) const;
  // Forward simulation of the decision vector; throws DomainError when the
  // prediction leaves the model domain.
  Rollout rollout(const Eigen::VectorXd& z) const;
  bool envelope_fallback() const { return fallback_; }

 private:
  bool evaluate(const Eigen::VectorXd& z, sqp::Evaluation& out) const;
  Eigen::MatrixXd gauss_newton(const Eigen::VectorXd& z) const;
  // Envelope distances and their (Vx, beta, r) derivatives.
  envelope::TableQuery distances(const vehicle::StateVec& x) const;

  vehicle::StateVec x_now_;
  DriftReference ref_;
  NmpcConfig config_;
  equilibrium::Model model_;
  vehicle::ModelContext ctx_;
  OcpLayout layout_;
  vehicle::InputVec scale_;
  double fxr_bound_ = 0.0;
  sqp::NlpProblem problem_;
  mutable bool fallback_ = false;
};

class Controller {
 public:
  Controller(NmpcConfig config, DriftReference ref, equilibrium::Model model);

  // Solves the OCP at x, warm-started from the shifted previous solution.
  ControlCommand step(const vehicle::StateVec& x);
  void reset();
  // Solution of the last solve (empty before the first).
  const Eigen::VectorXd& last_solution() const { return last_; }
  void set_warm_start(const Eigen::VectorXd& z) { warm_ = z; }
  bool record_trace = false;
  const std::vector<sqp::TraceRow>& last_trace() const { return trace_; }

 private:
  NmpcConfig config_;
  DriftReference ref_;
  equilibrium::Model model_;
  Eigen::VectorXd warm_;
  Eigen::VectorXd last_;
  std::optional<ControlCommand> previous_;
  std::vector<sqp::TraceRow> trace_;
};

}  // namespace drift::nmpc

#endif  // DRIFT_NMPC_HPP_
