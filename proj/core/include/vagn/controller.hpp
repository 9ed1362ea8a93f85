#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "vagn/automaton.hpp"
#include "vagn/dmp.hpp"
#include "vagn/geometry.hpp"
#include "vagn/optimizer.hpp"
#include "vagn/perception.hpp"
#include "vagn/quaternion.hpp"
#include "vagn/tensor.hpp"

namespace vagn::ctrl {

// full:       CNN -> automaton -> FC -> modulated DMP -> controls
// vagn_only:  CNN -> automaton -> FC -> controls
// dmp_only:   CNN (pooled) -> FC -> modulated DMP -> controls
// baseline:   CNN (flattened) + goal offset -> FC -> controls
enum class PolicyKind { full, vagn_only, dmp_only, baseline };

const char* kind_name(PolicyKind k);
PolicyKind kind_from_name(const std::string& name);

struct ControllerConfig {
    PolicyKind kind = PolicyKind::full;
    int predicates = 8;   // M
    int qstates = 6;      // N
    int raster_size = 64;
    int raster_channels = 5;
    double resolution = 0.5;
    std::array<int, 3> conv_filters{8, 16, 16};
    int fc_hidden = 32;
    double alpha_max = 8.0;
    double beta_max = 4.0;
    double control_dt = 0.5;
    bool critical_damping = false;  // ties beta = alpha/4
    double zeta_min = 0.0;          // hinge active when zeta_min > 0
    double zeta_weight = 0.0;
    int unroll = 1;
    double lookahead = 6.0;
    double v_max = 15.0;
    double omega_max = 1.5;

    int feature_hw() const;  // spatial extent of the last conv layer
};

struct EgoState {
    geom::Vec2 position;
    quat::Quaternion heading;
    double speed = 0.0;
    double yaw_rate = 0.0;

    double yaw() const { return quat::quat_to_yaw(heading); }
    static EgoState make(double x, double y, double yaw, double speed, double yaw_rate);
};

struct Control {
    double v = 0.0;
    double omega = 0.0;
};

// Moving target on the route: the point (and tangent heading) at arc length
// project(ego) + L, clamped to the route end.
std::pair<geom::Vec2, quat::Quaternion> lookahead_goal(const EgoState& ego,
                                                       const geom::Polyline& route, double L);

// Per-step scalars the policy consumes besides the raster. All of these are
// constants with respect to the learned weights.
struct StepInputs {
    ad::Tensor raster;        // [C,H,W]
    double pos_err_along;     // (g - y) . heading
    double heading_err;       // z of 2 log(g_q * conj(q)), wrapped
    double speed;
    double eta_z;             // yaw rate
    double goal_dx_ego;       // goal offset in the ego frame
    double goal_dy_ego;
    geom::Vec2 goal;
    quat::Quaternion goal_q;
};

struct StepDiag {
    Control control;
    ad::Tensor q_next;
    ad::Tensor pv;
    dmp::DmpParams params;
};

class Policy {
  public:
    Policy(ControllerConfig cfg, std::uint64_t init_seed);

    const ControllerConfig& config() const { return cfg_; }
    ad::ParamSet& params() { return params_; }
    const ad::ParamSet& params() const { return params_; }
    std::int64_t param_count() const { return params_.total_size(); }

    // Tape-bound view of every parameter, in ParamSet order.
    struct Bound {
        std::vector<ad::Tensor> all;
        const ad::Tensor& operator[](int i) const {
            return all[static_cast<std::size_t>(i)];
        }
    };
    Bound bind(ad::Tape& tape) const;

    struct TapeOutput {
        ad::Tensor v;       // [1]
        ad::Tensor omega;   // [1]
        ad::Tensor q_next;  // [N] (passthrough of q_prev for kinds without the automaton)
        ad::Tensor pv;      // [M] (empty for baseline/dmp_only)
        ad::Tensor features;    // last conv feature maps [K,H',W']
        ad::Tensor transition;  // column-stochastic matrix [N,N] (automaton kinds)
        ad::Tensor alpha_y, beta_y, alpha_q, beta_q;  // [1] each, DMP kinds only
        ad::Tensor zeta_penalty;  // [1], present when the hinge is configured
    };

    // One differentiable control step. q_prev must be on the simplex.
    TapeOutput forward_on_tape(ad::Tape& tape, const Bound& bound, const StepInputs& in,
                               const ad::Tensor& q_prev) const;

    // Deployment step: computes inputs from the scene state, runs the
    // forward pass on a scratch tape, clamps the commands.
    StepDiag act(const vision::BevRaster& raster, const EgoState& ego,
                 const geom::Polyline& route, const ad::Tensor& q_prev) const;

    // act() plus the intermediates the explainability exports need.
    struct StepExplain {
        StepDiag diag;
        ad::Tensor features;
        ad::Tensor transition;
    };
    StepExplain act_explained(const vision::BevRaster& raster, const EgoState& ego,
                              const geom::Polyline& route, const ad::Tensor& q_prev) const;

    // DMP gains for a given automaton state (or pooled features for
    // dmp_only), evaluated without gradients.
    dmp::DmpParams fc_params(const ad::Tensor& q) const;

    StepInputs make_step_inputs(const vision::BevRaster& raster, const EgoState& ego,
                                const geom::Polyline& route) const;

  private:
    ControllerConfig cfg_;
    ad::ParamSet params_;

    struct Heads {
        vision::EncoderWeights enc;
        ad::Tensor W;                    // [M,N,N]
        ad::Tensor fc1_w, fc1_b, fc2_w, fc2_b;
    };
    Heads heads(const Bound& bound) const;
    ad::Tensor fc_stack(ad::Tape& tape, const Heads& h, const ad::Tensor& input) const;
};

}  // namespace vagn::ctrl
