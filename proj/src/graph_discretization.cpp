#include "lorentzflow/graph_discretization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>

namespace lorentzflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

const RotationalProfile& need_rotational(const Boundary& b, const char* what) {
  if (auto* p = std::get_if<RotationalProfile>(&b)) return *p;
  throw GridError(std::string(what) + " needs a rotational profile, got " + boundary_name(b));
}

const PlanarBoundary& need_planar(const Boundary& b, const char* what) {
  if (auto* p = std::get_if<PlanarBoundary>(&b)) return *p;
  throw GridError(std::string(what) + " needs a planar boundary, got " + boundary_name(b));
}

void check_finite(double v, const char* what, int node) {
  if (!std::isfinite(v))
    throw SpacelikeViolation(std::string("non-finite ") + what + " at node " + std::to_string(node));
}

[[noreturn, gnu::cold]] void not_spacelike(double grad_sq, int node) {
  if (!std::isfinite(grad_sq)) check_finite(grad_sq, "gradient", node);
  throw SpacelikeViolation("graph is not spacelike at node " + std::to_string(node) +
                           " (|Du|^2 = " + std::to_string(grad_sq) + ")");
}

inline double hat_v_from(double grad_sq, int node) {
  if (!(grad_sq < 1.0)) [[unlikely]] not_spacelike(grad_sq, node);
  return 1.0 / std::sqrt(1.0 - grad_sq);
}

// Second derivative at an end node from the Neumann data d (along the
// direction pointing into the grid) and the next two nodes; second order.
// u'' at an end node from three inward neighbours and the inward slope d, exact on quartics
constexpr double kEndDiag = -85.0 / 18.0;
double one_sided_second(double u0, double u1, double u2, double u3, double d, double h) {
  // differences from u0 keep constants exact (the weights sum to zero)
  return (6.0 * (u1 - u0) - 1.5 * (u2 - u0) + (u3 - u0) * 2.0 / 9.0) / (h * h) - 11.0 / 3.0 * d / h;
}

// Sizes every per-node field; a buffer already laid out for this grid keeps its
// contents, since each geometry pass rewrites all node entries.
void resize_all(GeometryFields& g, std::size_t n, std::size_t dim) {
  if (g.s.size() == n && g.nu.size() == n && (n == 0 || g.nu[0].dim() == dim)) return;
  for (auto* v : {&g.s, &g.x, &g.y, &g.u, &g.du_x, &g.du_y, &g.hess_xx, &g.hess_xy, &g.hess_yy,
                  &g.det_g_hat, &g.v_hat, &g.v, &g.H, &g.normA2, &g.speed, &g.dV, &g.weight})
    v->assign(n, 0.0);
  g.g.assign(n, {0, 0, 0, 0});
  g.g_inv.assign(n, {0, 0, 0, 0});
  g.speed_diag.assign(n, 0.0);
  g.nu.assign(n, SpacetimeVector::zero(dim));
  g.interior.assign(n, 0);
  g.boundary.assign(n, 0);
}

std::unique_ptr<DiskLattice> build_lattice(int n, double radius) {
  auto lat = std::make_unique<DiskLattice>();
  lat->n = n;
  lat->m = n + 4;
  lat->radius = radius;
  lat->h = 2.0 * radius / (n - 1);
  const int m = lat->m;
  const double h = lat->h;
  const double r2 = radius * radius * (1.0 + 1e-12);
  lat->type.assign(static_cast<std::size_t>(m) * m, DiskLattice::NodeType::Outside);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      double x = lat->coord(i), y = lat->coord(j);
      if (x * x + y * y <= r2) {
        lat->type[lat->index(i, j)] = DiskLattice::NodeType::Inside;
        lat->inside.push_back(lat->index(i, j));
      }
    }
  auto is_inside = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < m && j < m &&
           lat->type[lat->index(i, j)] == DiskLattice::NodeType::Inside;
  };
  lat->deep.assign(lat->type.size(), 0);
  for (int j = 1; j < m - 1; ++j)
    for (int i = 1; i < m - 1; ++i) {
      bool any_in = false, all_in = true;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          bool in = is_inside(i + di, j + dj);
          any_in = any_in || in;
          all_in = all_in && in;
        }
      int k = lat->index(i, j);
      if (lat->type[k] == DiskLattice::NodeType::Inside) {
        lat->deep[k] = all_in ? 1 : 0;
      } else if (any_in) {
        lat->type[k] = DiskLattice::NodeType::Ghost;
        lat->ghosts.push_back(k);
      }
    }

  // Mirror sources. The mirror point is kept at least h/2 inside the disk
  // so a ghost never depends mostly on itself.
  for (int k : lat->ghosts) {
    int i = k % m, j = k / m;
    double x = lat->coord(i), y = lat->coord(j);
    double r = std::hypot(x, y);
    double d = std::max(r - radius, 0.5 * h);
    double sc = (radius - d) / r;
    double px = x * sc, py = y * sc;
    double fi = (px + radius) / h + 2.0, fj = (py + radius) / h + 2.0;
    int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, m - 2);
    int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, m - 2);
    double a = fi - i0, b = fj - j0;
    std::array<int, 4> src{lat->index(i0, j0), lat->index(i0 + 1, j0), lat->index(i0, j0 + 1),
                           lat->index(i0 + 1, j0 + 1)};
    std::array<double, 4> w{(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
    double total = 0.0;
    for (int q = 0; q < 4; ++q) {
      if (lat->type[src[q]] == DiskLattice::NodeType::Outside) w[q] = 0.0;
      total += w[q];
    }
    if (total <= 0.0) throw GridError("disk lattice too coarse for mirror ghosts");
    for (double& wq : w) wq /= total;
    lat->ghost_src.push_back(src);
    lat->ghost_w.push_back(w);
  }

  // Cell coverage weights; cut cells owned by a ghost go to the nearest surface node.
  lat->area.assign(lat->type.size(), 0.0);
  constexpr int kSub = 24;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      double x = lat->coord(i), y = lat->coord(j);
      double rmin = std::hypot(std::max(std::abs(x) - h / 2, 0.0), std::max(std::abs(y) - h / 2, 0.0));
      double rmax = std::hypot(std::abs(x) + h / 2, std::abs(y) + h / 2);
      double frac;
      if (rmax <= radius) {
        frac = 1.0;
      } else if (rmin >= radius) {
        frac = 0.0;
      } else {
        int cnt = 0;
        for (int b = 0; b < kSub; ++b)
          for (int a = 0; a < kSub; ++a) {
            double sx = x - h / 2 + (a + 0.5) * h / kSub;
            double sy = y - h / 2 + (b + 0.5) * h / kSub;
            if (sx * sx + sy * sy <= radius * radius) ++cnt;
          }
        frac = static_cast<double>(cnt) / (kSub * kSub);
      }
      if (frac == 0.0) continue;
      int k = lat->index(i, j);
      if (lat->type[k] == DiskLattice::NodeType::Inside) {
        lat->area[k] += frac * h * h;
        continue;
      }
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int dj = -2; dj <= 2; ++dj)
        for (int di = -2; di <= 2; ++di) {
          if (!is_inside(i + di, j + dj)) continue;
          double dd = di * di + dj * dj;
          if (dd < best_d) {
            best_d = dd;
            best = lat->index(i + di, j + dj);
          }
        }
      if (best >= 0) lat->area[best] += frac * h * h;
    }
  double total = std::accumulate(lat->area.begin(), lat->area.end(), 0.0);
  double exact = kPi * radius * radius;
  for (double& a : lat->area) a *= exact / total;
  return lat;
}

}  // namespace

const char* to_string(GridKind k) {
  switch (k) {
    case GridKind::Curve1D: return "Curve1D";
    case GridKind::Radial2D: return "Radial2D";
    case GridKind::Disk2D: return "Disk2D";
  }
  return "?";
}

GridKind parse_grid_kind(const std::string& s) {
  if (s == "Curve1D" || s == "curve1d") return GridKind::Curve1D;
  if (s == "Radial2D" || s == "radial2d") return GridKind::Radial2D;
  if (s == "Disk2D" || s == "disk2d") return GridKind::Disk2D;
  throw GridError("unknown grid kind '" + s + "'");
}

void GridSpec::validate() const {
  if (nodes < 5) throw GridError("grid resolution must be at least 5, got " + std::to_string(nodes));
}

bool operator==(const GridSpec& a, const GridSpec& b) {
  return a.kind == b.kind && a.nodes == b.nodes;
}

const DiskLattice& disk_lattice(int nodes, double radius) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::unique_ptr<DiskLattice>> cache;
  if (nodes < 5) throw GridError("grid resolution must be at least 5");
  if (!(radius > 0.0)) throw GridError("disk radius must be positive");
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nodes, radius}];
  if (!slot) slot = build_lattice(nodes, radius);
  return *slot;
}

void fill_ghosts(const DiskLattice& lat, std::vector<double>& u) {
  if (u.size() != lat.type.size()) throw GridError("field size does not match the disk lattice");
  for (int sweep = 0; sweep < 200; ++sweep) {
    double change = 0.0;
    for (std::size_t q = 0; q < lat.ghosts.size(); ++q) {
      int k = lat.ghosts[q];
      // Offsets from a reference source keep constant fields exact.
      int ref = -1;
      double best = -1.0;
      for (int c = 0; c < 4; ++c)
        if (lat.ghost_src[q][c] != k && lat.ghost_w[q][c] > best) {
          best = lat.ghost_w[q][c];
          ref = lat.ghost_src[q][c];
        }
      double self = 0.0, acc = 0.0;
      for (int c = 0; c < 4; ++c) {
        int src = lat.ghost_src[q][c];
        if (src == k)
          self += lat.ghost_w[q][c];
        else
          acc += lat.ghost_w[q][c] * (u[src] - u[ref]);
      }
      double val = u[ref] + acc / (1.0 - self);
      change = std::max(change, std::abs(val - u[k]));
      u[k] = val;
    }
    if (change == 0.0) return;
  }
}

std::size_t storage_size(const GridSpec& g) {
  if (g.kind == GridKind::Disk2D) return static_cast<std::size_t>(g.nodes + 4) * (g.nodes + 4);
  return static_cast<std::size_t>(g.nodes);
}

std::vector<int> surface_nodes(const FlowState& s) {
  if (s.grid.kind == GridKind::Disk2D) return disk_lattice(s.grid.nodes, s.boundary_pos).inside;
  std::vector<int> out(s.grid.nodes);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

double physical_spacing(const FlowState& s) {
  const double n1 = s.grid.nodes - 1;
  switch (s.grid.kind) {
    case GridKind::Curve1D: return 2.0 * s.boundary_pos / n1;
    case GridKind::Radial2D: return s.boundary_pos / n1;
    case GridKind::Disk2D: return 2.0 * s.boundary_pos / n1;
  }
  return 0.0;
}

double boundary_slope(const FlowState& state, const Boundary& boundary) {
  switch (state.grid.kind) {
    case GridKind::Curve1D: {
      const auto& b = need_planar(boundary, "Curve1D");
      return 1.0 / b.ds(state.boundary_pos);
    }
    case GridKind::Radial2D: {
      const auto& p = need_rotational(boundary, "Radial2D");
      double ub = state.u.back();
      if (!p.contains(ub)) throw GridError("boundary height outside the profile domain");
      return p.df(ub);
    }
    case GridKind::Disk2D:
      return 0.0;
  }
  return 0.0;
}

namespace {

// value one spacing beyond an end node, extrapolated by the quartic through five nodes;
// central slopes through it share the truncation error of the interior stencil
double extrapolated_ghost(const std::vector<double>& u, int end, int inward) {
  auto at = [&](int k) { return u[end + k * inward]; };
  const double u0 = at(0);
  return u0 - 10.0 * (at(1) - u0) + 10.0 * (at(2) - u0) - 5.0 * (at(3) - u0) + (at(4) - u0);
}

void geometry_curve(const FlowState& st, const Boundary& bd, GeometryFields& g) {
  const int n = st.grid.nodes;
  const double h = physical_spacing(st);
  const double sigma = boundary_slope(st, bd);
  const auto& u = st.u;
  resize_all(g, n, 2);
  g.h = h;
  g.boundary_slope = sigma;
  const double inv2h = 0.5 / h, invh2 = 1.0 / (h * h), ds = 2.0 / (n - 1);
  double max_sq = sigma * sigma;
  auto fill = [&](int i, double ux, double uxx) {
    const double vh = hat_v_from(ux * ux, i);
    const double s = -1.0 + ds * i;
    g.s[i] = s;
    g.x[i] = s * st.boundary_pos;
    g.u[i] = u[i];
    g.du_x[i] = ux;
    g.hess_xx[i] = uxx;
    g.g[i] = {1.0 - ux * ux, 0.0, 0.0, 1.0};
    g.g_inv[i] = {vh * vh, 0.0, 0.0, 1.0};
    g.det_g_hat[i] = 1.0;
    g.v_hat[i] = vh;
    g.v[i] = vh;
    g.speed[i] = vh * vh * uxx;
    g.H[i] = vh * g.speed[i];
    g.normA2[i] = g.H[i] * g.H[i];
    g.dV[i] = 1.0 / vh;
    g.weight[i] = h;
    g.nu[i] = SpacetimeVector(vh * ux, vh);
    g.interior[i] = 1;
    max_sq = std::max(max_sq, ux * ux);
  };
  for (int i = 1; i < n - 1; ++i)
    fill(i, (u[i + 1] - u[i - 1]) * inv2h, (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invh2);
  fill(0, (u[1] - extrapolated_ghost(u, 0, 1)) * inv2h,
       one_sided_second(u[0], u[1], u[2], u[3], -sigma, h));
  fill(n - 1, (extrapolated_ghost(u, n - 1, -1) - u[n - 2]) * inv2h,
       one_sided_second(u[n - 1], u[n - 2], u[n - 3], u[n - 4], -sigma, h));
  for (int i : {0, n - 1}) {
    g.weight[i] = 0.5 * h;
    g.interior[i] = 0;
    g.boundary[i] = 1;
    g.speed_diag[i] = kEndDiag * g.v_hat[i] * g.v_hat[i] * invh2;
  }
  g.max_gradient_sq = max_sq;
}

void geometry_radial(const FlowState& st, const Boundary& bd, GeometryFields& g) {
  const auto& p = need_rotational(bd, "Radial2D");
  const int n = st.grid.nodes;
  const double h = physical_spacing(st);
  const double sigma = boundary_slope(st, bd);
  const auto& u = st.u;
  resize_all(g, n, 3);
  g.h = h;
  g.boundary_slope = sigma;
  g.max_gradient_sq = sigma * sigma;
  for (int i = 0; i < n; ++i) {
    double rho = i * h;
    double ur, urr;
    if (i == 0) {
      ur = 0.0;
      urr = 2.0 * (u[1] - u[0]) / (h * h);
    } else if (i == n - 1) {
      double gh = extrapolated_ghost(u, i, -1);
      ur = (gh - u[i - 1]) / (2.0 * h);
      urr = one_sided_second(u[i], u[i - 1], u[i - 2], u[i - 3], -sigma, h);
    } else {
      ur = (u[i + 1] - u[i - 1]) / (2.0 * h);
      urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    }
    double vh = hat_v_from(ur * ur, i);
    double k_rho, k_theta;
    if (i == 0) {
      k_rho = k_theta = urr;
    } else {
      k_rho = vh * vh * vh * urr;
      k_theta = vh * ur / rho;
    }
    double ui = u[i];
    if (!p.contains(ui)) throw GridError("node height outside the profile domain");
    double fp = p.df(ui);
    g.s[i] = static_cast<double>(i) / (n - 1);
    g.x[i] = rho;
    g.u[i] = ui;
    g.du_x[i] = ur;
    g.hess_xx[i] = urr;
    g.hess_yy[i] = (i == 0) ? urr : ur / rho;
    g.g[i] = {1.0 - ur * ur, 0.0, 0.0, rho * rho};
    g.g_inv[i] = {vh * vh, 0.0, 0.0, i == 0 ? 0.0 : 1.0 / (rho * rho)};
    g.det_g_hat[i] = rho * rho;
    g.v_hat[i] = vh;
    g.v[i] = vh * (1.0 - fp * ur) / std::sqrt(1.0 - fp * fp);
    g.H[i] = k_rho + k_theta;
    g.speed[i] = g.H[i] / vh;
    g.normA2[i] = k_rho * k_rho + k_theta * k_theta;
    g.dV[i] = rho / vh;
    g.weight[i] = 2.0 * kPi * ((i == n - 1) ? 0.5 * h : h);
    g.nu[i] = SpacetimeVector(vh * ur, 0.0, vh);
    g.interior[i] = (i < n - 1) ? 1 : 0;
    g.boundary[i] = (i == n - 1) ? 1 : 0;
    if (g.boundary[i]) g.speed_diag[i] = kEndDiag * vh * vh / (h * h);
    g.max_gradient_sq = std::max(g.max_gradient_sq, ur * ur);
  }
}

void geometry_disk(const FlowState& st, const Boundary& bd, GeometryFields& g) {
  const auto& p = need_rotational(bd, "Disk2D");
  const auto& lat = disk_lattice(st.grid.nodes, st.boundary_pos);
  if (st.u.size() != lat.type.size()) throw GridError("Disk2D state has the wrong storage size");
  const double probe = st.u[lat.inside.front()];
  if (!p.contains(probe) || std::abs(p.df(probe)) > 1e-14 ||
      std::abs(p.f(probe) - st.boundary_pos) > 1e-12 * std::max(1.0, st.boundary_pos))
    throw GridError("Disk2D requires a cylinder whose radius matches the disk");
  std::vector<double> w = st.u;
  fill_ghosts(lat, w);
  const int m = lat.m;
  const double h = lat.h;
  resize_all(g, w.size(), 3);
  g.h = h;
  g.nodes = lat.inside;
  for (int k : lat.inside) {
    const double c = w[k];
    const double e = w[k + 1], wst = w[k - 1], nn = w[k + m], ss = w[k - m];
    const double ne = w[k + m + 1], nw = w[k + m - 1], se = w[k - m + 1], sw = w[k - m - 1];
    double ux = (e - wst) / (2 * h), uy = (nn - ss) / (2 * h);
    double uxx = (e - 2 * c + wst) / (h * h), uyy = (nn - 2 * c + ss) / (h * h);
    double uxy = (ne - nw - se + sw) / (4 * h * h);
    double vh = hat_v_from(ux * ux + uy * uy, k);
    double a11 = 1 + vh * vh * ux * ux, a22 = 1 + vh * vh * uy * uy, a12 = vh * vh * ux * uy;
    // Monotone cross derivative: pick the diagonal that matches the sign of a12.
    double uxy_m = (a12 >= 0) ? (ne + sw + 2 * c - e - wst - nn - ss) / (2 * h * h)
                              : (e + wst + nn + ss - 2 * c - se - nw) / (2 * h * h);
    double speed = a11 * uxx + 2 * a12 * uxy_m + a22 * uyy;
    double m11 = a11 * uxx + a12 * uxy, m12 = a11 * uxy + a12 * uyy;
    double m21 = a12 * uxx + a22 * uxy, m22 = a12 * uxy + a22 * uyy;
    int i = k % m, j = k / m;
    g.x[k] = lat.coord(i);
    g.y[k] = lat.coord(j);
    g.s[k] = std::hypot(g.x[k], g.y[k]) / lat.radius;
    g.u[k] = c;
    g.du_x[k] = ux;
    g.du_y[k] = uy;
    g.hess_xx[k] = uxx;
    g.hess_xy[k] = uxy;
    g.hess_yy[k] = uyy;
    g.g[k] = {1 - ux * ux, -ux * uy, -ux * uy, 1 - uy * uy};
    g.g_inv[k] = {a11, a12, a12, a22};
    g.det_g_hat[k] = 1.0;
    g.v_hat[k] = vh;
    g.v[k] = vh;
    g.speed[k] = speed;
    g.H[k] = vh * speed;
    g.normA2[k] = vh * vh * (m11 * m11 + 2 * m12 * m21 + m22 * m22);
    g.dV[k] = 1.0 / vh;
    g.weight[k] = lat.area[k];
    g.nu[k] = SpacetimeVector(vh * ux, vh * uy, vh);
    g.interior[k] = lat.deep[k];
    g.boundary[k] = lat.deep[k] ? 0 : 1;
    g.max_gradient_sq = std::max(g.max_gradient_sq, ux * ux + uy * uy);
  }
}

}  // namespace

GeometryFields geometry(const FlowState& state, const Boundary& boundary) {
  GeometryFields g;
  geometry_into(state, boundary, g);
  return g;
}

void geometry_into(const FlowState& state, const Boundary& boundary, GeometryFields& g) {
  state.grid.validate();
  if (state.chart_id != "flat")
    throw GridError("geometry is only available in flat ambient coordinates (chart '" +
                    state.chart_id + "')");
  if (state.u.size() != storage_size(state.grid)) throw GridError("state size does not match grid");
  if (g.kind != state.grid.kind) g.s.clear();
  g.kind = state.grid.kind;
  g.volume = 0.0;
  g.max_gradient_sq = 0.0;
  switch (state.grid.kind) {
    case GridKind::Curve1D: geometry_curve(state, boundary, g); break;
    case GridKind::Radial2D: geometry_radial(state, boundary, g); break;
    case GridKind::Disk2D: geometry_disk(state, boundary, g); break;
  }
  if (state.grid.kind != GridKind::Disk2D && g.nodes.size() != static_cast<std::size_t>(state.grid.nodes)) {
    g.nodes.resize(state.grid.nodes);
    std::iota(g.nodes.begin(), g.nodes.end(), 0);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double probe = 0.0;
  for (int k : g.nodes) probe += g.speed[k] + g.normA2[k];
  if (!std::isfinite(probe))
    for (int k : g.nodes) check_finite(g.speed[k] + g.normA2[k], "second derivative", k);
  for (int k : g.nodes) {
    g.volume += g.weight[k] * g.dV[k];
    lo = std::min(lo, g.u[k]);
    hi = std::max(hi, g.u[k]);
  }
  g.osc_u = hi - lo;
}

std::vector<double> laplace_beltrami(const GeometryFields& geo, const std::vector<double>& f) {
  const std::size_t n = geo.v_hat.size();
  if (f.size() != n) throw GridError("field size does not match geometry");
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  const double h = geo.h;
  const auto& vh = geo.v_hat;
  switch (geo.kind) {
    case GridKind::Curve1D:
      for (std::size_t i = 1; i + 1 < n; ++i) {
        double vp = 0.5 * (vh[i] + vh[i + 1]), vm = 0.5 * (vh[i] + vh[i - 1]);
        out[i] = vh[i] * (vp * (f[i + 1] - f[i]) - vm * (f[i] - f[i - 1])) / (h * h);
      }
      break;
    case GridKind::Radial2D:
      out[0] = 4.0 * vh[0] * 0.5 * (vh[0] + vh[1]) * (f[1] - f[0]) / (h * h);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        double vp = 0.5 * (vh[i] + vh[i + 1]), vm = 0.5 * (vh[i] + vh[i - 1]);
        double rp = (i + 0.5) * h, rm = (i - 0.5) * h, r = i * h;
        out[i] = vh[i] / (r * h * h) * (rp * vp * (f[i + 1] - f[i]) - rm * vm * (f[i] - f[i - 1]));
      }
      break;
    case GridKind::Disk2D: {
      const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
      auto q = [&](int k, int c) { return geo.g_inv[k][c] / vh[k]; };
      auto fy = [&](int k) { return (f[k + m] - f[k - m]) / (2 * h); };
      auto fx = [&](int k) { return (f[k + 1] - f[k - 1]) / (2 * h); };
      for (int k : geo.nodes) {
        if (!geo.interior[k]) continue;
        auto flux_x = [&](int a, int b) {  // face between a (left) and b = a + 1
          double q11 = 0.5 * (q(a, 0) + q(b, 0)), q12 = 0.5 * (q(a, 1) + q(b, 1));
          return q11 * (f[b] - f[a]) / h + q12 * 0.5 * (fy(a) + fy(b));
        };
        auto flux_y = [&](int a, int b) {  // face between a (below) and b = a + m
          double q22 = 0.5 * (q(a, 3) + q(b, 3)), q21 = 0.5 * (q(a, 2) + q(b, 2));
          return q22 * (f[b] - f[a]) / h + q21 * 0.5 * (fx(a) + fx(b));
        };
        double div = (flux_x(k, k + 1) - flux_x(k - 1, k) + flux_y(k, k + m) - flux_y(k - m, k)) / h;
        out[k] = vh[k] * div;
      }
      break;
    }
  }
  return out;
}

double oscillation(const FlowState& state) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int k : surface_nodes(state)) {
    lo = std::min(lo, state.u[k]);
    hi = std::max(hi, state.u[k]);
  }
  return hi - lo;
}

double height_gradient_identity(const FlowState& state, const Boundary& boundary) {
  GeometryFields geo = geometry(state, boundary);
  double mean = 0.0;
  for (int k : geo.nodes) mean += state.u[k];
  mean /= static_cast<double>(geo.nodes.size());
  std::vector<double> u(state.u.size(), 0.0), u2(state.u.size(), 0.0);
  std::vector<double> full = state.u;
  if (state.grid.kind == GridKind::Disk2D)
    fill_ghosts(disk_lattice(state.grid.nodes, state.boundary_pos), full);
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k] = full[k] - mean;
    u2[k] = u[k] * u[k];
  }
  auto lu = laplace_beltrami(geo, u);
  auto lu2 = laplace_beltrami(geo, u2);
  double worst = 0.0;
  for (int k : geo.nodes) {
    if (!geo.interior[k]) continue;
    double intrinsic = 0.5 * lu2[k] - u[k] * lu[k];
    double vh = geo.v_hat[k];
    worst = std::max(worst, std::abs(intrinsic - (vh * vh - 1.0)));
  }
  return worst;
}

void write_profile_csv(std::ostream& os, const GeometryFields& geo) {
  os << "s,physical_coord,u,H,v,v_hat,normA2,dV\n";
  char buf[512];
  for (int k : geo.nodes) {
    double coord = geo.kind == GridKind::Disk2D ? std::hypot(geo.x[k], geo.y[k]) : geo.x[k];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", geo.s[k],
                  coord, geo.u[k], geo.H[k], geo.v[k], geo.v_hat[k], geo.normA2[k], geo.dV[k]);
    os << buf;
  }
}

}  // namespace lorentzflow
