#include "dsw/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dsw {

namespace {

int block_index(double x, int blocks) {
  return std::clamp(static_cast<int>(std::floor(x * blocks)), 0, blocks - 1);
}

}  // namespace

std::vector<int> partition_blocks(const SimplicialMesh& mesh, int nx_sub, int ny_sub) {
  if (mesh.dim() == 1) ny_sub = 1;
  if (nx_sub < 1 || ny_sub < 1) throw std::invalid_argument("subdomain counts must be >= 1");

  std::vector<int> owner(mesh.num_cells());
  std::vector<int> count(static_cast<std::size_t>(nx_sub) * ny_sub, 0);
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const Point c = mesh.barycenter(k);
    const int bx = block_index(c[0], nx_sub);
    const int by = mesh.dim() == 2 ? block_index(c[1], ny_sub) : 0;
    owner[k] = by * nx_sub + bx;
    ++count[owner[k]];
  }
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] == 0)
      throw std::invalid_argument("subdomain " + std::to_string(i) + " is empty; too many blocks for the mesh");
  }
  return owner;
}

Decomposition grow_overlap(const SimplicialMesh& mesh, const NodeAdjacency& adjacency,
                           const std::vector<int>& cell_owner, int ell) {
  if (ell < 0) throw std::invalid_argument("overlap layer count must be >= 0");
  if (cell_owner.size() != mesh.num_cells()) throw std::invalid_argument("cell_owner size mismatch");

  const int n_sub = cell_owner.empty() ? 0 : *std::max_element(cell_owner.begin(), cell_owner.end()) + 1;
  Decomposition dec;
  dec.ell = ell;
  dec.cell_owner = cell_owner;
  dec.subdomains.resize(n_sub);
  for (std::size_t k = 0; k < cell_owner.size(); ++k) {
    if (cell_owner[k] < 0) throw std::invalid_argument("negative cell owner");
    dec.subdomains[cell_owner[k]].owned_cells.push_back(static_cast<int>(k));
  }

  std::vector<std::uint8_t> in_region(mesh.num_cells());
  std::vector<int> frontier, next;
  for (int i = 0; i < n_sub; ++i) {
    Subdomain& sub = dec.subdomains[i];
    if (sub.owned_cells.empty()) throw std::invalid_argument("subdomain " + std::to_string(i) + " owns no cell");

    std::fill(in_region.begin(), in_region.end(), 0);
    std::vector<int> cells = sub.owned_cells;
    for (int k : cells) in_region[k] = 1;
    frontier = cells;
    for (int layer = 0; layer < ell && !frontier.empty(); ++layer) {
      next.clear();
      for (int k : frontier) {
        for (int nb : adjacency.neighbors_of_cell(k)) {
          if (!in_region[nb]) {
            in_region[nb] = 1;
            next.push_back(nb);
          }
        }
      }
      cells.insert(cells.end(), next.begin(), next.end());
      std::swap(frontier, next);
    }
    sub.overlap = LocalNumbering::from_cells(mesh, std::move(cells));

    sub.role.assign(sub.overlap.size(), NodeRole::Interior);
    for (std::size_t l = 0; l < sub.overlap.size(); ++l) {
      const int j = sub.overlap.nodes[l];
      if (mesh.on_boundary(j)) {
        sub.role[l] = NodeRole::PhysicalBoundary;
        sub.physical_boundary_nodes.push_back(j);
        continue;
      }
      for (int k : adjacency.cells_of_node(j)) {
        if (!in_region[k]) {
          sub.role[l] = NodeRole::ArtificialInterface;
          sub.artificial_interface_nodes.push_back(j);
          break;
        }
      }
    }

    std::vector<std::uint8_t> touched(mesh.num_nodes(), 0);
    for (int k : sub.owned_cells)
      for (int v : mesh.cell(k)) touched[v] = 1;
    for (std::size_t j = 0; j < mesh.num_nodes(); ++j) {
      if (!touched[j]) continue;
      sub.closure_nodes.push_back(static_cast<int>(j));
      if (mesh.on_boundary(j)) continue;
      bool inside = true;
      for (int k : adjacency.cells_of_node(j)) inside = inside && cell_owner[k] == i;
      if (inside) sub.interior_nodes.push_back(static_cast<int>(j));
    }
  }
  return dec;
}

AveragingPlan build_averaging_plan(const SimplicialMesh& mesh, const Decomposition& decomposition) {
  const std::size_t n = mesh.num_nodes();
  const NodeAdjacency adjacency = build_adjacency(mesh);

  std::vector<int> interior_owner(n, -1);
  for (int i = 0; i < decomposition.n_sub(); ++i) {
    for (int j : decomposition.subdomains[i].interior_nodes) {
      if (interior_owner[j] >= 0) throw std::logic_error("node interior to two subdomains");
      interior_owner[j] = i;
    }
  }

  AveragingPlan plan;
  plan.offsets.assign(n + 1, 0);
  plan.dirichlet = mesh.boundary_flags();
  std::vector<int> owners;
  for (std::size_t j = 0; j < n; ++j) {
    if (!plan.dirichlet[j]) {
      owners.clear();
      if (interior_owner[j] >= 0) {
        owners.push_back(interior_owner[j]);
      } else {
        for (int k : adjacency.cells_of_node(j)) owners.push_back(decomposition.cell_owner[k]);
        std::sort(owners.begin(), owners.end());
        owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
      }
      if (owners.empty()) throw std::logic_error("node " + std::to_string(j) + " has no contributing subdomain");
      const double weight = 1.0 / static_cast<double>(owners.size());
      for (int i : owners) {
        const int local = decomposition.subdomains[i].overlap.global_to_local[j];
        if (local < 0) throw std::logic_error("contributor does not cover node " + std::to_string(j));
        plan.entries.push_back({i, local, weight});
      }
    }
    plan.offsets[j + 1] = static_cast<int>(plan.entries.size());
  }
  return plan;
}

Vector average_nodal(const AveragingPlan& plan, const std::vector<Vector>& local_values) {
  const std::size_t n = plan.offsets.size() - 1;
  Vector out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    auto contrib = plan.contributors(j);
    if (contrib.empty()) continue;
    auto value_of = [&](const AveragingPlan::Entry& e) {
      const Vector& v = local_values.at(e.subdomain);
      if (static_cast<std::size_t>(e.local_node) >= v.size())
        throw std::out_of_range("missing contributor value for node " + std::to_string(j));
      return v[e.local_node];
    };
    // shifted mean: equal contributions reproduce the value bit for bit
    const double base = value_of(contrib[0]);
    double shift = 0.0;
    for (std::size_t c = 1; c < contrib.size(); ++c) shift += (value_of(contrib[c]) - base) * contrib[c].weight;
    out[j] = base + shift;
  }
  return out;
}

State apply_averaging(const AveragingPlan& plan, const std::vector<State>& subdomain_states) {
  std::vector<Vector> q, p;
  q.reserve(subdomain_states.size());
  p.reserve(subdomain_states.size());
  for (const State& s : subdomain_states) {
    q.push_back(s.q);
    p.push_back(s.p);
  }
  const double t = subdomain_states.empty() ? 0.0 : subdomain_states.front().t;
  return State(average_nodal(plan, q), average_nodal(plan, p), t);
}

Vector restrict_to_subdomain(const Decomposition& decomposition, int i, std::span<const double> global) {
  const auto& nodes = decomposition.subdomains.at(i).overlap.nodes;
  Vector local(nodes.size());
  for (std::size_t l = 0; l < nodes.size(); ++l) local[l] = global[nodes[l]];
  return local;
}

State restrict_to_subdomain(const Decomposition& decomposition, int i, const State& global_state) {
  return State(restrict_to_subdomain(decomposition, i, global_state.q),
               restrict_to_subdomain(decomposition, i, global_state.p), global_state.t);
}

int local_overlap_count(const Decomposition& decomposition, std::size_t num_nodes) {
  std::vector<int> count(num_nodes, 0);
  for (const Subdomain& sub : decomposition.subdomains)
    for (int j : sub.overlap.nodes) ++count[j];
  return count.empty() ? 0 : *std::max_element(count.begin(), count.end());
}

double realized_overlap_width(const SimplicialMesh& mesh, const Decomposition& decomposition, int i) {
  const Subdomain& sub = decomposition.subdomains.at(i);
  double best = std::numeric_limits<double>::infinity();
  for (int a : sub.artificial_interface_nodes) {
    const Point& pa = mesh.node(a);
    for (int b : sub.closure_nodes) {
      const Point& pb = mesh.node(b);
      best = std::min(best, std::hypot(pa[0] - pb[0], pa[1] - pb[1]));
    }
  }
  return best;
}

double realized_overlap_width(const SimplicialMesh& mesh, const Decomposition& decomposition) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < decomposition.n_sub(); ++i) best = std::min(best, realized_overlap_width(mesh, decomposition, i));
  return best;
}

}  // namespace dsw
