#pragma once
// Ground-truth checkpoint grid: id -> (x, y) meters plus an undirected
// adjacency graph, with the parity thinning used by the sparser-grid study.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wifiloc/common.hpp"

namespace wifiloc {

struct CheckpointGrid {
  std::map<int, Point2> points;
  std::set<std::pair<int, int>> adjacency;  // normalized (a < b)
  double nominal_spacing_m = 0.0;

  bool contains(int id) const { return points.count(id) != 0; }
  bool adjacent(int a, int b) const {
    if (a > b) std::swap(a, b);
    return adjacency.count({a, b}) != 0;
  }
  void add_edge(int a, int b) {
    if (a > b) std::swap(a, b);
    adjacency.insert({a, b});
  }
  bool connected() const;
};

struct GridFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DuplicateId : GridFormatError {
  explicit DuplicateId(int id)
      : GridFormatError("duplicate checkpoint id " + std::to_string(id)) {}
};
struct DanglingEdge : GridFormatError {
  DanglingEdge(int a, int b)
      : GridFormatError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                        ") references an unknown id") {}
};
struct NegativeCoordinate : GridFormatError {
  explicit NegativeCoordinate(int id)
      : GridFormatError("checkpoint " + std::to_string(id) + " has a negative coordinate") {}
};
struct EmptyGrid : std::runtime_error {
  EmptyGrid() : std::runtime_error("grid has no checkpoints") {}
};

// CSV schema: header `id,x_m,y_m`, point rows, a `#edges` section header,
// then `id_a,id_b` rows.
CheckpointGrid load_grid(const std::string& file);
CheckpointGrid parse_grid(std::string_view text);
std::string grid_to_csv(const CheckpointGrid& grid);
void save_grid(const CheckpointGrid& grid, const std::string& file);

enum class Parity { Even, Odd };

// Keeps every second checkpoint of the deterministic (y, x, id) ordering.
// Even and Odd partition the grid. The thinned nominal spacing is measured
// (mean nearest-neighbor distance) rather than scaled, since the ratio
// depends on the grid layout.
CheckpointGrid thin_grid(const CheckpointGrid& grid, Parity parity);

// Closest checkpoint by Euclidean distance; ties break to the smallest id.
int nearest_checkpoint(const CheckpointGrid& grid, Point2 query);

double mean_nearest_neighbor_distance(const CheckpointGrid& grid);

}  // namespace wifiloc
