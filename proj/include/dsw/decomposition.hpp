/**
 * @file decomposition.hpp
 * @brief Non-overlapping block partitions, overlap growth by element layers,
 * node classification and the nodal averaging operator.
 *
 * Node sets are stored as ascending global node ids. Subdomain-local vectors
 * follow the numbering of Decomposition::overlap[i].
 */
#pragma once

#include <cstdint>
#include <vector>

#include "dsw/fem.hpp"
#include "dsw/mesh.hpp"

namespace dsw {

/// Owner of every cell: the axis-aligned block containing its barycenter.
/// In 1D ny_sub is ignored. Throws when a block receives no cell.
std::vector<int> partition_blocks(const SimplicialMesh& mesh, int nx_sub, int ny_sub = 1);

enum class NodeRole : std::uint8_t {
  Interior = 0,           // every incident cell lies in the overlapping subdomain
  ArtificialInterface,    // on the subdomain boundary, inside the domain
  PhysicalBoundary,       // on the domain boundary
};

struct Subdomain {
  std::vector<int> owned_cells;
  LocalNumbering overlap;               // cells and nodes of the overlapping subdomain
  std::vector<NodeRole> role;           // per local node
  std::vector<int> interior_nodes;      // strictly inside the owned region
  std::vector<int> closure_nodes;       // nodes of owned cells
  std::vector<int> artificial_interface_nodes;
  std::vector<int> physical_boundary_nodes;
};

struct Decomposition {
  int ell = 0;
  std::vector<int> cell_owner;
  std::vector<Subdomain> subdomains;

  int n_sub() const { return static_cast<int>(subdomains.size()); }
};

/// Grows each owned region by `ell` rings of node-adjacent cells and
/// classifies nodes.
Decomposition grow_overlap(const SimplicialMesh& mesh, const NodeAdjacency& adjacency,
                           const std::vector<int>& cell_owner, int ell);

/// Contributors to each global node of the averaged function.
struct AveragingPlan {
  struct Entry {
    int subdomain;
    int local_node;
    double weight;
  };
  std::vector<int> offsets;  // CSR over global nodes
  std::vector<Entry> entries;
  std::vector<std::uint8_t> dirichlet;

  std::span<const Entry> contributors(std::size_t j) const {
    return {entries.data() + offsets[j], static_cast<std::size_t>(offsets[j + 1] - offsets[j])};
  }
};

AveragingPlan build_averaging_plan(const SimplicialMesh& mesh, const Decomposition& decomposition);

/// Nodal averaging of subdomain functions. A single contributor is copied;
/// several are averaged with weight 1/|J|. Dirichlet nodes become zero.
Vector average_nodal(const AveragingPlan& plan, const std::vector<Vector>& local_values);
State apply_averaging(const AveragingPlan& plan, const std::vector<State>& subdomain_states);

State restrict_to_subdomain(const Decomposition& decomposition, int i, const State& global_state);
Vector restrict_to_subdomain(const Decomposition& decomposition, int i, std::span<const double> global);

/// Maximum number of overlapping subdomains sharing a node.
int local_overlap_count(const Decomposition& decomposition, std::size_t num_nodes);

/// Minimal distance between the owned closure of subdomain i and its
/// artificial interface; +inf when the interface is empty.
double realized_overlap_width(const SimplicialMesh& mesh, const Decomposition& decomposition, int i);
double realized_overlap_width(const SimplicialMesh& mesh, const Decomposition& decomposition);

}  // namespace dsw
