#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ckflow/ambient.hpp"
#include "ckflow/ckv.hpp"
#include "ckflow/diagnostics.hpp"
#include "ckflow/surface.hpp"

namespace ckflow {

struct StepControl {
  double cfl = 0.25;
  double dt_max = 1e-2;
  double speed_tol = 1e-2;
  double leaf_tol = 1e-2;
  double t_end = 10.0;
  int smooth_every = 10;  // 0 disables tangential smoothing
  double smooth_strength = 0.5;
  long max_steps = 1000000;

  void validate() const;
};

struct FlowState {
  double t = 0.0;
  TriSurface mesh;
  Schedule schedule;
  long step = 0;
};

// n phi - u H, with the product discretised as in VertexGeometry::hu
double speed(const VertexGeometry& vg, double phi, int n = 2);

// chart velocity of each vertex: speed along the g-unit normal, scaled so that the
// flat volume rate equals sum_i A_i speed_i
std::vector<Vec3> vertex_velocities(const TriSurface& mesh, const AmbientGeometry& geom,
                                    const KillingPair& pair, double xi_now, int n = 2);

double stable_dt(const FlowState& state, const AmbientGeometry& geom, const KillingPair& pair,
                 const StepControl& control);

// Heun step; smoothing is applied after the step when the new step count is a multiple
// of control.smooth_every
FlowState step_lagrangian(const FlowState& state, const AmbientGeometry& geom,
                          const KillingPair& pair, double dt, const StepControl& control,
                          int n = 2);

// throws StarshapeLost when min u(t) <= 0 on the current surface
void check_starshaped(const TriSurface& mesh, const AmbientGeometry& geom, const KillingPair& pair,
                      double xi_now);

struct RunObserver {
  std::function<void(const FlowState&, int frame)> on_frame;
  int frame_every = 0;  // 0 writes only the first and last frame
  std::function<void(const TraceRow&)> on_row;
};

// Lagrangian run. The trace keeps all rows recorded before an exception escapes.
class FlowRun {
 public:
  FlowRun(AmbientGeometry geom, KillingPair pair, FlowState initial, StepControl control,
          int n = 2);

  // returns true on convergence, false when t_end or max_steps is reached first
  bool run(const RunObserver& observer = {});

  const FlowTrace& trace() const { return trace_; }
  const FlowState& state() const { return state_; }
  const Shell& band() const { return band_; }
  // largest excursion of lambda outside the initial band, relative to the band width
  double band_excursion() const { return band_excursion_; }

 private:
  AmbientGeometry geom_;
  KillingPair pair_;
  FlowState state_;
  StepControl control_;
  int n_;
  FlowTrace trace_;
  Shell band_;
  double band_excursion_ = 0.0;
};

}  // namespace ckflow
