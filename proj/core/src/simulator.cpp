#include "vagn/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vagn/errors.hpp"

namespace vagn::sim {

ctrl::EgoState step_ego(const ctrl::EgoState& ego, const ctrl::Control& u, double dt) {
    if (!(dt > 0.0)) {
        throw SchemaError("step_ego: dt must be positive");
    }
    const double yaw = ego.yaw();
    const double new_yaw = geom::wrap_angle(yaw + u.omega * dt);
    geom::Vec2 pos = ego.position;
    if (std::abs(u.omega) < 1e-9) {
        pos += geom::heading_vec(yaw) * (u.v * dt);
    } else {
        // Exact constant-twist arc.
        const double r = u.v / u.omega;
        pos.x += r * (std::sin(yaw + u.omega * dt) - std::sin(yaw));
        pos.y += r * (std::cos(yaw) - std::cos(yaw + u.omega * dt));
    }
    ctrl::EgoState next;
    next.position = pos;
    next.heading = quat::yaw_to_quat(new_yaw);
    next.speed = u.v;
    next.yaw_rate = u.omega;
    if (!std::isfinite(pos.x) || !std::isfinite(pos.y)) {
        throw NumericError("step_ego: non-finite position");
    }
    return next;
}

RolloutTrace rollout(const Scene& scene, const ctrl::Policy& policy, std::uint64_t seed) {
    const ctrl::ControllerConfig& cfg = policy.config();
    if (cfg.raster_size != scene.raster.size || cfg.raster_channels != scene.raster.channels) {
        throw SchemaError("rollout: policy raster config disagrees with scene raster spec");
    }
    RolloutTrace trace;
    trace.scene_id = scene.id;
    trace.seed = seed;
    ctrl::EgoState ego = scene.ego_init;
    std::mt19937_64 rng(seed);
    ad::Tensor q = autom::init_state(cfg.qstates, autom::QInit::uniform, rng);
    for (int t = 0; t < scene.steps; ++t) {
        const vision::BevRaster raster = rasterize(scene, ego, t, scene.raster);
        const ctrl::StepDiag diag = policy.act(raster, ego, scene.route, q);
        q = diag.q_next;
        TraceStep step;
        step.state = ego;
        step.control = diag.control;
        step.q = q;
        step.pv = diag.pv;
        step.params = diag.params;
        trace.steps.push_back(std::move(step));
        ego = step_ego(ego, diag.control, scene.dt);
    }
    trace.final_state = ego;
    return trace;
}

void save_trace_csv(const RolloutTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const int n = trace.steps.empty() ? 0 : trace.steps.front().q.size();
    const int m = trace.steps.empty() ? 0 : trace.steps.front().pv.size();
    out << "t,x,y,yaw,speed,yaw_rate,v_cmd,w_cmd,alpha_y,beta_y,alpha_q,beta_q";
    for (int i = 0; i < n; ++i) {
        out << ",q" << i;
    }
    for (int i = 0; i < m; ++i) {
        out << ",pv" << i;
    }
    out << "\n";
    char buf[512];
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const TraceStep& s = trace.steps[t];
        std::snprintf(buf, sizeof(buf),
                      "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", t,
                      s.state.position.x, s.state.position.y, s.state.yaw(), s.state.speed,
                      s.state.yaw_rate, s.control.v, s.control.omega, s.params.alpha_y,
                      s.params.beta_y, s.params.alpha_q, s.params.beta_q);
        out << buf;
        for (int i = 0; i < s.q.size(); ++i) {
            std::snprintf(buf, sizeof(buf), ",%.17g", s.q[i]);
            out << buf;
        }
        for (int i = 0; i < s.pv.size(); ++i) {
            std::snprintf(buf, sizeof(buf), ",%.17g", s.pv[i]);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace vagn::sim
