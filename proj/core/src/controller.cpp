#include "vagn/controller.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vagn/errors.hpp"

namespace vagn::ctrl {

namespace {

ad::Tensor normal_tensor(std::vector<int> shape, double stddev, std::mt19937_64& rng) {
    ad::Tensor t = ad::Tensor::zeros(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : t.data) {
        v = dist(rng);
    }
    return t;
}

double he_stddev(int fan_in) { return std::sqrt(2.0 / fan_in); }

}  // namespace

const char* kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::full: return "full";
        case PolicyKind::vagn_only: return "vagn_only";
        case PolicyKind::dmp_only: return "dmp_only";
        case PolicyKind::baseline: return "baseline";
    }
    return "full";
}

PolicyKind kind_from_name(const std::string& name) {
    if (name == "full") return PolicyKind::full;
    if (name == "vagn_only") return PolicyKind::vagn_only;
    if (name == "dmp_only") return PolicyKind::dmp_only;
    if (name == "baseline") return PolicyKind::baseline;
    throw SchemaError("unknown policy kind: " + name);
}

int ControllerConfig::feature_hw() const {
    int s = raster_size;
    for (int i = 0; i < 3; ++i) {
        s = (s + 2 * 1 - 3) / 2 + 1;  // stride-2, pad-1, 3x3
    }
    return s;
}

EgoState EgoState::make(double x, double y, double yaw, double speed, double yaw_rate) {
    EgoState e;
    e.position = {x, y};
    e.heading = quat::yaw_to_quat(yaw);
    e.speed = speed;
    e.yaw_rate = yaw_rate;
    return e;
}

std::pair<geom::Vec2, quat::Quaternion> lookahead_goal(const EgoState& ego,
                                                       const geom::Polyline& route, double L) {
    if (route.size() < 2) {
        throw SchemaError("lookahead_goal: route needs at least 2 points");
    }
    const double s = route.project(ego.position);
    const double target = std::min(s + L, route.length());
    return {route.point_at(target), quat::yaw_to_quat(route.tangent_at(target))};
}

Policy::Policy(ControllerConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    std::mt19937_64 rng(init_seed);
    const int c = cfg_.raster_channels;
    const auto& f = cfg_.conv_filters;
    params_.add("conv1.w", normal_tensor({f[0], c, 3, 3}, he_stddev(c * 9), rng));
    params_.add("conv1.b", ad::Tensor::zeros({f[0]}));
    params_.add("conv2.w", normal_tensor({f[1], f[0], 3, 3}, he_stddev(f[0] * 9), rng));
    params_.add("conv2.b", ad::Tensor::zeros({f[1]}));
    params_.add("conv3.w", normal_tensor({f[2], f[1], 3, 3}, he_stddev(f[1] * 9), rng));
    params_.add("conv3.b", ad::Tensor::zeros({f[2]}));

    const int m = cfg_.predicates;
    const int n = cfg_.qstates;
    const bool has_automaton = cfg_.kind == PolicyKind::full || cfg_.kind == PolicyKind::vagn_only;
    if (has_automaton) {
        params_.add("pred.w", normal_tensor({m, f[2]}, std::sqrt(1.0 / f[2]), rng));
        params_.add("pred.b", ad::Tensor::zeros({m}));
        params_.add("vagn.w", normal_tensor({m, n, n}, 0.5, rng));
    }

    int fc_in = 0;
    int fc_out = 0;
    switch (cfg_.kind) {
        case PolicyKind::full: fc_in = n; fc_out = 4; break;
        case PolicyKind::vagn_only: fc_in = n; fc_out = 2; break;
        case PolicyKind::dmp_only: fc_in = f[2]; fc_out = 4; break;
        case PolicyKind::baseline: {
            const int hw = cfg_.feature_hw();
            fc_in = f[2] * hw * hw + 3;
            fc_out = 2;
            break;
        }
    }
    params_.add("fc1.w", normal_tensor({cfg_.fc_hidden, fc_in}, he_stddev(fc_in), rng));
    params_.add("fc1.b", ad::Tensor::zeros({cfg_.fc_hidden}));
    params_.add("fc2.w", normal_tensor({fc_out, cfg_.fc_hidden}, he_stddev(cfg_.fc_hidden), rng));
    params_.add("fc2.b", ad::Tensor::zeros({fc_out}));
}

Policy::Bound Policy::bind(ad::Tape& tape) const {
    Bound b;
    b.all.reserve(static_cast<std::size_t>(params_.count()));
    for (int i = 0; i < params_.count(); ++i) {
        b.all.push_back(tape.leaf(params_[i]));
    }
    return b;
}

Policy::Heads Policy::heads(const Bound& bound) const {
    Heads h;
    auto get = [&](const char* name) -> const ad::Tensor& {
        return bound[params_.index_of(name)];
    };
    h.enc.conv1_w = get("conv1.w");
    h.enc.conv1_b = get("conv1.b");
    h.enc.conv2_w = get("conv2.w");
    h.enc.conv2_b = get("conv2.b");
    h.enc.conv3_w = get("conv3.w");
    h.enc.conv3_b = get("conv3.b");
    if (params_.index_of("pred.w") >= 0) {
        h.enc.pred_w = get("pred.w");
        h.enc.pred_b = get("pred.b");
        h.W = get("vagn.w");
    }
    h.fc1_w = get("fc1.w");
    h.fc1_b = get("fc1.b");
    h.fc2_w = get("fc2.w");
    h.fc2_b = get("fc2.b");
    return h;
}

ad::Tensor Policy::fc_stack(ad::Tape& tape, const Heads& h, const ad::Tensor& input) const {
    const ad::Tensor hidden = tape.relu(tape.add(tape.matvec(h.fc1_w, input), h.fc1_b));
    return tape.sigmoid(tape.add(tape.matvec(h.fc2_w, hidden), h.fc2_b));
}

StepInputs Policy::make_step_inputs(const vision::BevRaster& raster, const EgoState& ego,
                                    const geom::Polyline& route) const {
    StepInputs in;
    in.raster = raster.channels.detached();
    auto [g, g_q] = lookahead_goal(ego, route, cfg_.lookahead);
    in.goal = g;
    in.goal_q = g_q;
    const geom::Vec2 err = g - ego.position;
    const geom::Vec2 h = geom::heading_vec(ego.yaw());
    in.pos_err_along = err.dot(h);
    in.heading_err = quat::rotation_error(g_q, ego.heading)[2];
    in.speed = ego.speed;
    in.eta_z = ego.yaw_rate;
    in.goal_dx_ego = err.dot(h);
    in.goal_dy_ego = err.dot({-h.y, h.x});
    return in;
}

Policy::TapeOutput Policy::forward_on_tape(ad::Tape& tape, const Bound& bound,
                                           const StepInputs& in,
                                           const ad::Tensor& q_prev) const {
    const Heads h = heads(bound);
    TapeOutput out;

    vision::BevRaster raster{in.raster, cfg_.resolution};
    const vision::EncoderOut enc = [&] {
        if (cfg_.kind == PolicyKind::baseline || cfg_.kind == PolicyKind::dmp_only) {
            // No predicate head; run the conv stack + pooling only.
            vision::EncoderOut e;
            ad::Tensor a = tape.relu(tape.conv2d(in.raster, h.enc.conv1_w, h.enc.conv1_b, 2, 1));
            a = tape.relu(tape.conv2d(a, h.enc.conv2_w, h.enc.conv2_b, 2, 1));
            e.features = tape.relu(tape.conv2d(a, h.enc.conv3_w, h.enc.conv3_b, 2, 1));
            e.pooled = tape.global_avg_pool(e.features);
            return e;
        }
        return vision::extract_predicates(tape, raster, h.enc);
    }();
    out.pv = enc.pv;
    out.features = enc.features;

    // Automaton step where the architecture has one.
    if (cfg_.kind == PolicyKind::full || cfg_.kind == PolicyKind::vagn_only) {
        if (!autom::on_simplex(q_prev, 1e-6)) {
            throw SchemaError("forward: q_prev is not on the probability simplex");
        }
        out.transition = autom::transition_matrix(tape, h.W, enc.pv);
        out.q_next = tape.matvec(out.transition, q_prev);
    } else {
        out.q_next = q_prev;
    }

    const double dt = cfg_.control_dt;
    if (cfg_.kind == PolicyKind::vagn_only || cfg_.kind == PolicyKind::baseline) {
        ad::Tensor fc_in;
        if (cfg_.kind == PolicyKind::vagn_only) {
            fc_in = out.q_next;
        } else {
            const ad::Tensor flat = tape.reshape(enc.features, {enc.features.size()});
            const ad::Tensor goal = ad::Tensor::vector({in.goal_dx_ego, in.goal_dy_ego,
                                                        in.heading_err});
            fc_in = tape.concat({flat, goal});
        }
        const ad::Tensor o = fc_stack(tape, h, fc_in);
        out.v = tape.scale(tape.slice(o, 0, 1), cfg_.v_max);
        out.omega = tape.scale(tape.add_scalar(tape.scale(tape.slice(o, 1, 1), 2.0), -1.0),
                               cfg_.omega_max);
        return out;
    }

    // DMP kinds: FC produces the attractor gains, a single integration of the
    // accelerations over one control period produces the velocity commands.
    const ad::Tensor fc_in = cfg_.kind == PolicyKind::full ? out.q_next : enc.pooled;
    const ad::Tensor o = fc_stack(tape, h, fc_in);
    out.alpha_y = tape.scale(tape.slice(o, 0, 1), cfg_.alpha_max);
    out.alpha_q = tape.scale(tape.slice(o, 2, 1), cfg_.alpha_max);
    if (cfg_.critical_damping) {
        out.beta_y = tape.scale(out.alpha_y, 0.25);
        out.beta_q = tape.scale(out.alpha_q, 0.25);
    } else {
        out.beta_y = tape.scale(tape.slice(o, 1, 1), cfg_.beta_max);
        out.beta_q = tape.scale(tape.slice(o, 3, 1), cfg_.beta_max);
    }

    // ydd . heading = alpha_y * (beta_y * (g - y).h - ydot.h); ydot.h = speed.
    const ad::Tensor accel_along =
        tape.mul(out.alpha_y,
                 tape.add_scalar(tape.scale(out.beta_y, in.pos_err_along), -in.speed));
    out.v = tape.add_scalar(tape.scale(accel_along, dt), in.speed);
    const ad::Tensor etadot_z =
        tape.mul(out.alpha_q,
                 tape.add_scalar(tape.scale(out.beta_q, in.heading_err), -in.eta_z));
    out.omega = tape.add_scalar(tape.scale(etadot_z, dt), in.eta_z);

    if (cfg_.zeta_min > 0.0 && cfg_.zeta_weight > 0.0) {
        auto hinge = [&](const ad::Tensor& a, const ad::Tensor& b) {
            const ad::Tensor zeta = tape.scale(tape.sqrt(tape.div(a, b)), 0.5);
            const ad::Tensor gap = tape.relu(tape.add_scalar(tape.neg(zeta), cfg_.zeta_min));
            return tape.scale(tape.mul(gap, gap), cfg_.zeta_weight);
        };
        out.zeta_penalty = tape.add(hinge(out.alpha_y, out.beta_y),
                                    hinge(out.alpha_q, out.beta_q));
    }
    return out;
}

namespace {

StepDiag diag_from_output(const Policy::TapeOutput& out, const ControllerConfig& cfg) {
    StepDiag diag;
    diag.control.v = std::clamp(out.v.item(), 0.0, cfg.v_max);
    diag.control.omega = std::clamp(out.omega.item(), -cfg.omega_max, cfg.omega_max);
    diag.q_next = out.q_next.detached();
    diag.pv = out.pv.empty() ? ad::Tensor{} : out.pv.detached();
    if (!out.alpha_y.empty()) {
        diag.params.alpha_y = out.alpha_y.item();
        diag.params.beta_y = out.beta_y.item();
        diag.params.alpha_q = out.alpha_q.item();
        diag.params.beta_q = out.beta_q.item();
        diag.params.tau = 1.0;
    }
    return diag;
}

}  // namespace

StepDiag Policy::act(const vision::BevRaster& raster, const EgoState& ego,
                     const geom::Polyline& route, const ad::Tensor& q_prev) const {
    ad::Tape tape;
    const Bound bound = bind(tape);
    const StepInputs in = make_step_inputs(raster, ego, route);
    const TapeOutput out = forward_on_tape(tape, bound, in, q_prev);
    return diag_from_output(out, cfg_);
}

Policy::StepExplain Policy::act_explained(const vision::BevRaster& raster, const EgoState& ego,
                                          const geom::Polyline& route,
                                          const ad::Tensor& q_prev) const {
    ad::Tape tape;
    const Bound bound = bind(tape);
    const StepInputs in = make_step_inputs(raster, ego, route);
    const TapeOutput out = forward_on_tape(tape, bound, in, q_prev);
    StepExplain ex;
    ex.diag = diag_from_output(out, cfg_);
    ex.features = out.features.detached();
    ex.transition = out.transition.empty() ? ad::Tensor{} : out.transition.detached();
    return ex;
}

dmp::DmpParams Policy::fc_params(const ad::Tensor& q) const {
    if (cfg_.kind != PolicyKind::full && cfg_.kind != PolicyKind::dmp_only) {
        throw SchemaError("fc_params: policy kind has no DMP head");
    }
    ad::Tape tape;
    const Bound bound = bind(tape);
    const Heads h = heads(bound);
    const ad::Tensor o = fc_stack(tape, h, q);
    dmp::DmpParams p;
    p.alpha_y = o[0] * cfg_.alpha_max;
    p.alpha_q = o[2] * cfg_.alpha_max;
    p.beta_y = cfg_.critical_damping ? p.alpha_y / 4.0 : o[1] * cfg_.beta_max;
    p.beta_q = cfg_.critical_damping ? p.alpha_q / 4.0 : o[3] * cfg_.beta_max;
    p.tau = 1.0;
    return p;
}

}  // namespace vagn::ctrl
