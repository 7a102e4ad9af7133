#include "ckflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ckflow/errors.hpp"

namespace ckflow {

void StepControl::validate() const {
  if (!(cfl > 0.0 && cfl <= 0.5)) throw ConfigError("flow.cfl must lie in (0, 0.5]");
  if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
  if (!(speed_tol > 0.0) || !(leaf_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (!(t_end > 0.0)) throw ConfigError("flow.t_end must be positive");
  if (smooth_every < 0) throw ConfigError("flow.smooth_every must be >= 0");
  if (!(smooth_strength > 0.0 && smooth_strength <= 1.0))
    throw ConfigError("smoothing strength must lie in (0, 1]");
}

double speed(const VertexGeometry& vg, double phi, int n) { return n * phi - vg.hu; }

std::vector<Vec3> vertex_velocities(const TriSurface& mesh, const AmbientGeometry& geom,
                                    const KillingPair& pair, double xi_now, int n) {
  const auto vg = mesh_geometry(mesh, geom, pair, xi_now, false);
  // remove the discrete mean of the speed so that the g-volume rate vanishes
  double flux = 0.0, weight = 0.0;
  for (const auto& p : vg) {
    const double w = std::exp(2.0 * p.f) * p.flat_area;
    flux += speed(p, p.phi, n) * w;
    weight += w;
  }
  const double mean = flux / weight;
  std::vector<Vec3> v(vg.size());
  for (std::size_t i = 0; i < vg.size(); ++i) {
    const Vec3& gv = vg[i].volume_gradient;
    v[i] = (speed(vg[i], vg[i].phi, n) - mean) * std::exp(-vg[i].f) * vg[i].flat_area /
           gv.squaredNorm() * gv;
  }
  return v;
}

double stable_dt(const FlowState& state, const AmbientGeometry& geom, const KillingPair& pair,
                 const StepControl& control) {
  const double xi_now = state.schedule.at(state.t);
  const auto vg = mesh_geometry(state.mesh, geom, pair, xi_now, false);
  double d = 1.0;
  for (const auto& v : vg) d = std::max(d, std::abs(v.u) * std::exp(-2.0 * v.f));
  const double h = state.mesh.min_edge_length();
  return std::min(control.dt_max, control.cfl * h * h / d);
}

void check_starshaped(const TriSurface& mesh, const AmbientGeometry& geom, const KillingPair& pair,
                      double xi_now) {
  const auto vg = mesh_geometry(mesh, geom, pair, xi_now, false);
  double umin = std::numeric_limits<double>::infinity();
  double uperp = std::numeric_limits<double>::infinity();
  for (const auto& v : vg) {
    umin = std::min(umin, v.u);
    uperp = std::min(uperp, v.u_perp);
  }
  if (!(umin > 0.0)) {
    std::ostringstream os;
    os << "strict starshapedness lost: min u = " << umin << " (min u_perp = " << uperp
       << ", xi = " << xi_now << ")";
    throw StarshapeLost(os.str());
  }
}

FlowState step_lagrangian(const FlowState& state, const AmbientGeometry& geom,
                          const KillingPair& pair, double dt, const StepControl& control, int n) {
  control.validate();
  state.mesh.validate(&geom);
  if (!(dt > 0.0)) throw InvariantViolation("time step must be positive");
  const double limit = stable_dt(state, geom, pair, control);
  if (dt > limit * (1.0 + 1e-9)) throw InvariantViolation("time step exceeds the parabolic limit");

  const auto& x0 = state.mesh.vertices();
  const auto k1 = vertex_velocities(state.mesh, geom, pair, state.schedule.at(state.t), n);
  TriSurface mid = state.mesh;
  for (std::size_t i = 0; i < x0.size(); ++i) mid.positions()[i] = x0[i] + dt * k1[i];
  for (const Vec3& p : mid.vertices()) geom.require(p);
  const auto k2 = vertex_velocities(mid, geom, pair, state.schedule.at(state.t + dt), n);

  FlowState next = state;
  next.t = state.t + dt;
  next.step = state.step + 1;
  auto& x = next.mesh.positions();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + 0.5 * dt * (k1[i] + k2[i]);
  if (control.smooth_every > 0 && next.step % control.smooth_every == 0)
    next.mesh = tangential_smooth(next.mesh, control.smooth_strength);
  restore_volume(next.mesh, geom, volume(state.mesh, geom), 1);
  next.mesh.validate(&geom);
  check_starshaped(next.mesh, geom, pair, next.schedule.at(next.t));
  return next;
}

FlowRun::FlowRun(AmbientGeometry geom, KillingPair pair, FlowState initial, StepControl control,
                 int n)
    : geom_(std::move(geom)),
      pair_(pair),
      state_(std::move(initial)),
      control_(control),
      n_(n) {
  control_.validate();
  state_.mesh.validate(&geom_);
  band_.lambda_min = std::numeric_limits<double>::infinity();
  band_.lambda_max = -std::numeric_limits<double>::infinity();
  for (const Vec3& p : state_.mesh.vertices()) {
    const double l = eval_lambda(geom_, pair_, p);
    band_.lambda_min = std::min(band_.lambda_min, l);
    band_.lambda_max = std::max(band_.lambda_max, l);
  }
}

bool FlowRun::run(const RunObserver& observer) {
  trace_ = FlowTrace{};
  band_excursion_ = 0.0;
  const double width = std::max(band_.lambda_max - band_.lambda_min, 1e-300);
  int frame = 0;
  auto record = [&](double dt) {
    TraceRow row = measure(state_.mesh, geom_, pair_, state_.schedule.at(state_.t), n_);
    row.step = state_.step;
    row.time = state_.t;
    row.dt = dt;
    band_excursion_ = std::max({band_excursion_, (band_.lambda_min - row.lambda_min) / width,
                                (row.lambda_max - band_.lambda_max) / width});
    trace_.rows.push_back(row);
    if (observer.on_row) observer.on_row(row);
    return row;
  };

  check_starshaped(state_.mesh, geom_, pair_, state_.schedule.at(state_.t));
  TraceRow row = record(0.0);
  if (observer.on_frame) observer.on_frame(state_, frame++);
  bool converged = false;
  long last_frame_step = state_.step;
  while (state_.t < control_.t_end && state_.step < control_.max_steps) {
    if (row.leaf_distance <= control_.leaf_tol && row.max_speed <= control_.speed_tol * row.H_max) {
      converged = true;
      break;
    }
    double dt = stable_dt(state_, geom_, pair_, control_);
    dt = std::min(dt, control_.t_end - state_.t);
    state_ = step_lagrangian(state_, geom_, pair_, dt, control_, n_);
    row = record(dt);
    if (observer.on_frame && observer.frame_every > 0 && state_.step % observer.frame_every == 0) {
      observer.on_frame(state_, frame++);
      last_frame_step = state_.step;
    }
  }
  if (!converged)
    converged = row.leaf_distance <= control_.leaf_tol &&
                row.max_speed <= control_.speed_tol * row.H_max;
  if (observer.on_frame && last_frame_step != state_.step) observer.on_frame(state_, frame++);
  trace_.converged = converged;
  return converged;
}

}  // namespace ckflow
