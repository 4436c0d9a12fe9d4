#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentzflow/boundary_profile.hpp"
#include "lorentzflow/lorentz.hpp"

namespace lorentzflow {

enum class GridKind { Curve1D, Radial2D, Disk2D };

const char* to_string(GridKind k);
GridKind parse_grid_kind(const std::string& s);

/// Curve1D: `nodes` points on s in [-1, 1], x = s * x_b.
/// Radial2D: `nodes` points on s in [0, 1], rho = s * rho_b.
/// Disk2D: `nodes` x `nodes` lattice over [-R, R]^2 (padded by two ghost layers),
/// surface nodes are those with |x| <= R.
struct GridSpec {
  GridKind kind = GridKind::Radial2D;
  int nodes = 101;

  void validate() const;
  int spatial_dim() const { return kind == GridKind::Curve1D ? 1 : 2; }
};

bool operator==(const GridSpec& a, const GridSpec& b);

/// A graph t = u over a chart domain. For Disk2D, `u` lives on the padded
/// lattice; entries outside the disk hold ghost values.
struct FlowState {
  double t = 0.0;
  GridSpec grid;
  std::vector<double> u;
  double boundary_pos = 1.0;  // x_b, rho_b or the fixed disk radius
  std::string chart_id = "flat";
};

class SpacelikeViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Padded Cartesian lattice for Disk2D with mirror ghost nodes and
/// area weights for the disk.
struct DiskLattice {
  enum class NodeType : unsigned char { Outside, Inside, Ghost };
  int n = 0;        // nodes per axis of the unpadded lattice
  int m = 0;        // padded size, n + 4
  double radius = 1.0;
  double h = 0.0;
  std::vector<NodeType> type;
  std::vector<int> inside;     // indices of surface nodes
  std::vector<int> ghosts;     // indices of ghost nodes
  std::vector<std::array<int, 4>> ghost_src;
  std::vector<std::array<double, 4>> ghost_w;
  std::vector<double> area;    // quadrature weight per lattice node (zero off the surface)
  std::vector<unsigned char> deep;  // all 8 neighbours are surface nodes

  int index(int i, int j) const { return j * m + i; }
  double coord(int i) const { return -radius + (i - 2) * h; }
};

const DiskLattice& disk_lattice(int nodes, double radius);

/// Overwrites the ghost entries of a Disk2D field by mirror interpolation
/// across the circle, which imposes a homogeneous Neumann condition.
void fill_ghosts(const DiskLattice& lat, std::vector<double>& u);

/// Number of stored values for a grid (padded lattice size for Disk2D).
std::size_t storage_size(const GridSpec& g);
/// Node indices that carry the surface.
std::vector<int> surface_nodes(const FlowState& s);
/// Physical spacing between neighbouring nodes.
double physical_spacing(const FlowState& s);

struct GeometryFields {
  GridKind kind = GridKind::Radial2D;
  std::vector<int> nodes;             // surface node indices (all nodes for 1D kinds)
  std::vector<unsigned char> interior;  // per storage index: discrete operators valid
  std::vector<unsigned char> boundary;  // per storage index: node sits on the boundary
  // Per storage index (entries off the surface are zero):
  std::vector<double> s;        // reference coordinate
  std::vector<double> x, y;     // physical coordinates (rho for Radial2D, y unused in 1D kinds)
  std::vector<double> u;
  std::vector<double> du_x, du_y;  // Du in physical coordinates (radial: du_x = u_rho)
  std::vector<double> hess_xx, hess_xy, hess_yy;
  std::vector<std::array<double, 4>> g, g_inv;  // induced metric in the grid coordinates
  std::vector<double> det_g_hat;
  std::vector<double> v_hat, v, H, normA2;
  std::vector<double> speed;    // g^ij D_ij u: the graph equation right-hand side
  std::vector<double> speed_diag;  // d speed / d u at end nodes (one-sided closure), else 0
  std::vector<double> dV;       // sqrt(det g) in grid coordinates
  std::vector<double> weight;   // quadrature weight of the grid coordinates
  std::vector<SpacetimeVector> nu;
  double volume = 0.0;
  double osc_u = 0.0;
  double max_gradient_sq = 0.0;  // max psi^2 |Du|^2
  double h = 0.0;
  double boundary_slope = 0.0;   // Neumann data used at the boundary node (1D kinds)
};

/// Finite difference geometry of a spacelike graph. Throws SpacelikeViolation
/// when |Du| >= 1 at some node.
GeometryFields geometry(const FlowState& state, const Boundary& boundary);
/// Same as geometry, reusing the storage of `out`.
void geometry_into(const FlowState& state, const Boundary& boundary, GeometryFields& out);

/// Slope the graph must have at the boundary (d u / d(physical coordinate)).
double boundary_slope(const FlowState& state, const Boundary& boundary);

/// Discrete Laplace-Beltrami of a nodal field in divergence form; NaN where
/// the stencil leaves the interior.
std::vector<double> laplace_beltrami(const GeometryFields& geo, const std::vector<double>& f);

/// max - min of the height over the surface nodes.
double oscillation(const FlowState& state);

/// max over interior nodes of | |grad u|^2 - psi^{-2}(hat v^2 - 1) |, where
/// |grad u|^2 is computed intrinsically as Delta(u^2)/2 - u Delta u.
double height_gradient_identity(const FlowState& state, const Boundary& boundary);

/// Writes s, physical_coord, u, H, v, v_hat, normA2, dV.
void write_profile_csv(std::ostream& os, const GeometryFields& geo);

}  // namespace lorentzflow
