#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "ckflow/ambient.hpp"
#include "ckflow/ckv.hpp"

namespace ckflow {

using Face = std::array<int, 3>;

inline constexpr double kAreaFloor = 1e-12;

// Closed oriented triangle mesh in chart coordinates. Connectivity is fixed at
// construction; positions may be edited in place.
class TriSurface {
 public:
  TriSurface() = default;
  TriSurface(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  std::vector<Vec3>& positions() { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_faces() const { return faces_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  long euler_characteristic() const;

  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }
  const std::vector<int>& vertex_faces(int v) const { return vertex_faces_[v]; }
  const std::vector<int>& two_ring(int v) const { return two_ring_[v]; }

  double flat_signed_volume() const;
  double flat_area() const;
  double min_edge_length() const;
  double mean_edge_length() const;

  TriSurface flipped() const;
  // throws InvariantViolation (orientation, topology), MeshDegenerate or DomainExit
  void validate(const AmbientGeometry* geom = nullptr) const;

 private:
  void build();

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> vertex_faces_;
  std::vector<std::vector<int>> two_ring_;
};

struct VertexGeometry {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // flat unit normal, angle-and-length (Max) weights
  Vec3 mean_curvature_vector = Vec3::Zero();  // flat, cotangent Laplacian of position
  double H = 0.0;  // g-mean curvature from the cotangent Laplacian
  double kappa1 = 0.0;  // g-principal curvatures from the quadric fit, kappa1 >= kappa2
  double kappa2 = 0.0;
  double u_perp = 0.0;
  double u_top = 0.0;
  double u = 0.0;
  double hu = 0.0;  // H * u discretized as K . X plus the conformal term
  double area = 0.0;  // g-area weight
  double flat_area = 0.0;  // mixed Voronoi area
  Vec3 volume_gradient = Vec3::Zero();  // d V_flat / d x_i
  double f = 0.0;
  double phi = 0.0;
  double lambda = 0.0;
};

std::vector<VertexGeometry> mesh_geometry(const TriSurface& mesh, const AmbientGeometry& geom,
                                          const KillingPair& pair, double xi_now,
                                          bool principal_curvatures = true);

double area(const TriSurface& mesh, const AmbientGeometry& geom);
double volume(const TriSurface& mesh, const AmbientGeometry& geom);

// Tangent frame and least-squares stencils over the 2-ring of one vertex.
struct LocalFit {
  Vec3 t1, t2, n;
  std::vector<int> stencil;
  // maps [value at vertex, values on stencil] to (c0, ca, cb, caa, cab, cbb)
  Eigen::Matrix<double, 6, Eigen::Dynamic> solver;
  // position quadric w = A a^2 + B a b + C b^2 + D a + E b along n
  double A = 0, B = 0, C = 0, D = 0, E = 0;

  // flat principal curvatures, larger first, positive on convex surfaces
  std::array<double, 2> principal_curvatures() const;
  // point on the quadric above tangent offset (a, b)
  Vec3 lift(const Vec3& origin, double a, double b) const;
};

// the scalar solver is only assembled when with_solver is set
std::vector<LocalFit> local_fits(const TriSurface& mesh, const std::vector<Vec3>& normals,
                                 bool with_solver = true);

// flat surface gradient (chart vector) and flat Laplace-Beltrami of a vertex field
struct ScalarJet {
  Vec3 gradient = Vec3::Zero();
  double laplacian = 0.0;
};
ScalarJet scalar_jet(const LocalFit& fit, int vertex, const std::vector<double>& values);

TriSurface icosphere(int level);
TriSurface ellipsoid(const Vec3& semiaxes, int level);
TriSurface sphere(double radius, int level);

// rotate each point about the axis through the origin by tau * ln(rho)
TriSurface twist(const TriSurface& mesh, const Vec3& axis, double tau);

struct SeedResult {
  TriSurface mesh;
  double min_u = 0.0;       // X(0) support
  double min_u_perp = 0.0;  // dilation support
};

// twist axis is the rotation axis of the pair; throws SeedInfeasible when min u(0) <= 0
SeedResult twisted_seed(const Vec3& semiaxes, double tau, int level, const AmbientGeometry& geom,
                        const KillingPair& pair);

enum class SeedKind { sphere, ellipsoid, twisted };

struct SeedSpec {
  SeedKind kind = SeedKind::ellipsoid;
  double radius = 1.0;
  Vec3 semiaxes{2.0, 1.0, 1.0};
  double tau = 0.0;
  int level = 4;
};

SeedResult make_seed(const SeedSpec& spec, const AmbientGeometry& geom, const KillingPair& pair);

struct MeshQuality {
  double min_angle = 0.0;  // radians
  double max_aspect = 0.0;  // longest edge over shortest altitude
  double min_area = 0.0;
};

MeshQuality quality(const TriSurface& mesh);
TriSurface tangential_smooth(const TriSurface& mesh, double strength = 0.5);

// uniform g-normal offset that returns the enclosed g-volume to target
void restore_volume(TriSurface& mesh, const AmbientGeometry& geom, double target, int passes = 2);

void write_obj(std::ostream& os, const TriSurface& mesh, double time, int frame);

}  // namespace ckflow
