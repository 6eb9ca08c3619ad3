#include "dsw/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace dsw {

namespace {

double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

SimplicialMesh::SimplicialMesh(int dim, std::vector<Point> nodes, std::vector<int> cell_nodes)
    : dim_(dim), nodes_(std::move(nodes)), cell_nodes_(std::move(cell_nodes)) {
  if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("mesh dimension must be 1 or 2");
  if (cell_nodes_.empty() || cell_nodes_.size() % nodes_per_cell() != 0)
    throw std::invalid_argument("cell connectivity size is not a multiple of dim+1");

  const int n_nodes = static_cast<int>(nodes_.size());
  for (std::size_t k = 0; k < num_cells(); ++k) {
    auto c = cell(k);
    for (int a = 0; a < nodes_per_cell(); ++a) {
      if (c[a] < 0 || c[a] >= n_nodes) throw std::invalid_argument("cell node index out of range");
      for (int b = a + 1; b < nodes_per_cell(); ++b)
        if (c[a] == c[b]) throw std::invalid_argument("cell with repeated node");
    }
    // zero measure is left to the assembly routines to reject
    if (cell_measure(k) < 0.0) throw std::invalid_argument("negatively oriented cell");
  }

  // A boundary facet belongs to exactly one cell.
  boundary_.assign(nodes_.size(), 0);
  if (dim_ == 1) {
    std::vector<int> count(nodes_.size(), 0);
    for (int v : cell_nodes_) ++count[v];
    for (std::size_t j = 0; j < nodes_.size(); ++j) boundary_[j] = count[j] == 1;
  } else {
    std::vector<std::uint64_t> edges;
    edges.reserve(3 * num_cells());
    for (std::size_t k = 0; k < num_cells(); ++k) {
      auto c = cell(k);
      for (int e = 0; e < 3; ++e) {
        auto a = static_cast<std::uint64_t>(std::min(c[e], c[(e + 1) % 3]));
        auto b = static_cast<std::uint64_t>(std::max(c[e], c[(e + 1) % 3]));
        edges.push_back((a << 32) | b);
      }
    }
    std::sort(edges.begin(), edges.end());
    for (std::size_t e = 0; e < edges.size();) {
      std::size_t next = e;
      while (next < edges.size() && edges[next] == edges[e]) ++next;
      if (next - e == 1) {
        boundary_[edges[e] >> 32] = 1;
        boundary_[edges[e] & 0xffffffffu] = 1;
      }
      e = next;
    }
  }

  h_min_ = std::numeric_limits<double>::infinity();
  h_max_ = 0.0;
  for (std::size_t k = 0; k < num_cells(); ++k) {
    auto c = cell(k);
    for (int a = 0; a < nodes_per_cell(); ++a)
      for (int b = a + 1; b < nodes_per_cell(); ++b)
        h_min_ = std::min(h_min_, distance(nodes_[c[a]], nodes_[c[b]]));
    h_max_ = std::max(h_max_, cell_diameter(k));
  }
}

std::size_t SimplicialMesh::num_interior_nodes() const {
  return static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), 0));
}

double SimplicialMesh::cell_measure(std::size_t k) const {
  auto c = cell(k);
  if (dim_ == 1) return nodes_[c[1]][0] - nodes_[c[0]][0];
  const Point& a = nodes_[c[0]];
  const Point& b = nodes_[c[1]];
  const Point& d = nodes_[c[2]];
  return 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
}

double SimplicialMesh::cell_diameter(std::size_t k) const {
  auto c = cell(k);
  double diam = 0.0;
  for (int a = 0; a < nodes_per_cell(); ++a)
    for (int b = a + 1; b < nodes_per_cell(); ++b)
      diam = std::max(diam, distance(nodes_[c[a]], nodes_[c[b]]));
  return diam;
}

Point SimplicialMesh::barycenter(std::size_t k) const {
  Point center{0.0, 0.0};
  for (int v : cell(k)) {
    center[0] += nodes_[v][0];
    center[1] += nodes_[v][1];
  }
  center[0] /= nodes_per_cell();
  center[1] /= nodes_per_cell();
  return center;
}

SimplicialMesh build_interval_mesh(int n_cells, double perturb_fraction, std::uint64_t seed) {
  if (n_cells < 1) throw std::invalid_argument("interval mesh needs at least one cell");
  if (!(perturb_fraction >= 0.0 && perturb_fraction < 0.45))
    throw std::invalid_argument("perturb_fraction must lie in [0, 0.45)");

  const double h = 1.0 / n_cells;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift(-perturb_fraction, perturb_fraction);

  std::vector<Point> nodes(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) {
    double x = i * h;
    if (i > 0 && i < n_cells && perturb_fraction > 0.0) x += shift(rng) * h;
    nodes[i] = {x, 0.0};
  }
  nodes.front()[0] = 0.0;
  nodes.back()[0] = 1.0;

  std::vector<int> cells;
  cells.reserve(2 * n_cells);
  for (int i = 0; i < n_cells; ++i) {
    cells.push_back(i);
    cells.push_back(i + 1);
  }
  return SimplicialMesh(1, std::move(nodes), std::move(cells));
}

SimplicialMesh build_unit_square_mesh(int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("unit square mesh needs nx, ny >= 1");

  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      nodes.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny});

  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(6) * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // lower-right and upper-left triangles, counter-clockwise
      cells.insert(cells.end(), {id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.insert(cells.end(), {id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return SimplicialMesh(2, std::move(nodes), std::move(cells));
}

NodeAdjacency build_adjacency(const SimplicialMesh& mesh) {
  NodeAdjacency adj;
  const std::size_t n_nodes = mesh.num_nodes();
  const std::size_t n_cells = mesh.num_cells();

  adj.node_cell_offsets.assign(n_nodes + 1, 0);
  for (std::size_t k = 0; k < n_cells; ++k)
    for (int v : mesh.cell(k)) ++adj.node_cell_offsets[v + 1];
  for (std::size_t j = 0; j < n_nodes; ++j) adj.node_cell_offsets[j + 1] += adj.node_cell_offsets[j];
  adj.node_cells.resize(adj.node_cell_offsets.back());
  std::vector<int> fill(adj.node_cell_offsets.begin(), adj.node_cell_offsets.end() - 1);
  for (std::size_t k = 0; k < n_cells; ++k)
    for (int v : mesh.cell(k)) adj.node_cells[fill[v]++] = static_cast<int>(k);

  adj.cell_offsets.assign(n_cells + 1, 0);
  std::vector<int> scratch;
  for (std::size_t k = 0; k < n_cells; ++k) {
    scratch.clear();
    for (int v : mesh.cell(k)) {
      auto around = adj.cells_of_node(v);
      scratch.insert(scratch.end(), around.begin(), around.end());
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    adj.cell_neighbors.insert(adj.cell_neighbors.end(), scratch.begin(), scratch.end());
    adj.cell_offsets[k + 1] = static_cast<int>(adj.cell_neighbors.size());
  }
  return adj;
}

void write_mesh_text(const SimplicialMesh& mesh, std::ostream& out) {
  out.precision(17);
  for (const Point& p : mesh.nodes()) {
    out << p[0];
    if (mesh.dim() == 2) out << ' ' << p[1];
    out << '\n';
  }
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    auto c = mesh.cell(k);
    for (int a = 0; a < mesh.nodes_per_cell(); ++a) out << (a ? " " : "") << c[a];
    out << '\n';
  }
}

}  // namespace dsw
