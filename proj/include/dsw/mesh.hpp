/**
 * @file mesh.hpp
 * @brief Simplicial meshes of the unit interval and the unit square.
 *
 * Cells are stored as flat node-index lists with dim+1 entries per cell.
 * 1D nodes keep a zero y coordinate so both dimensions share one point type.
 */
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace dsw {

using Point = std::array<double, 2>;

class SimplicialMesh {
public:
  SimplicialMesh() = default;
  SimplicialMesh(int dim, std::vector<Point> nodes, std::vector<int> cell_nodes);

  int dim() const { return dim_; }
  int nodes_per_cell() const { return dim_ + 1; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_cells() const { return cell_nodes_.size() / nodes_per_cell(); }

  const Point& node(std::size_t j) const { return nodes_[j]; }
  const std::vector<Point>& nodes() const { return nodes_; }
  std::span<const int> cell(std::size_t k) const {
    return {cell_nodes_.data() + k * nodes_per_cell(), static_cast<std::size_t>(nodes_per_cell())};
  }

  bool on_boundary(std::size_t j) const { return boundary_[j] != 0; }
  const std::vector<std::uint8_t>& boundary_flags() const { return boundary_; }
  std::size_t num_interior_nodes() const;

  /// Shortest cell edge over the mesh.
  double h_min() const { return h_min_; }
  /// Largest cell diameter over the mesh.
  double h_max() const { return h_max_; }

  /// Length (1D) or signed area (2D) of cell k.
  double cell_measure(std::size_t k) const;
  double cell_diameter(std::size_t k) const;
  Point barycenter(std::size_t k) const;

private:
  int dim_ = 1;
  std::vector<Point> nodes_;
  std::vector<int> cell_nodes_;
  std::vector<std::uint8_t> boundary_;
  double h_min_ = 0.0;
  double h_max_ = 0.0;
};

/// Interval (0,1) with n_cells cells. Interior nodes are displaced
/// independently by up to perturb_fraction/n_cells; endpoints stay pinned.
SimplicialMesh build_interval_mesh(int n_cells, double perturb_fraction = 0.0,
                                   std::uint64_t seed = 0);

/// Unit square, nx*ny grid squares each split along the (0,0)-(1,1) diagonal.
SimplicialMesh build_unit_square_mesh(int nx, int ny);

/// Node-to-cell and cell-to-cell (shared node) incidence in CSR form.
struct NodeAdjacency {
  std::vector<int> node_cell_offsets;
  std::vector<int> node_cells;
  std::vector<int> cell_offsets;
  std::vector<int> cell_neighbors;  // sorted, includes the cell itself

  std::span<const int> cells_of_node(std::size_t j) const {
    return {node_cells.data() + node_cell_offsets[j],
            static_cast<std::size_t>(node_cell_offsets[j + 1] - node_cell_offsets[j])};
  }
  std::span<const int> neighbors_of_cell(std::size_t k) const {
    return {cell_neighbors.data() + cell_offsets[k],
            static_cast<std::size_t>(cell_offsets[k + 1] - cell_offsets[k])};
  }
};

NodeAdjacency build_adjacency(const SimplicialMesh& mesh);

/// Plain-text dump: one node per line ("x" or "x y"), then one cell per line.
void write_mesh_text(const SimplicialMesh& mesh, std::ostream& out);

}  // namespace dsw
