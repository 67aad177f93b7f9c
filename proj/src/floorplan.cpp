#include "wifiloc/floorplan.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace wifiloc {

bool CheckpointGrid::connected() const {
  if (points.empty()) return true;
  std::set<int> seen;
  std::queue<int> frontier;
  frontier.push(points.begin()->first);
  seen.insert(points.begin()->first);
  while (!frontier.empty()) {
    const int id = frontier.front();
    frontier.pop();
    for (const auto& [a, b] : adjacency) {
      int other = -1;
      if (a == id) other = b;
      else if (b == id) other = a;
      else continue;
      if (seen.insert(other).second) frontier.push(other);
    }
  }
  return seen.size() == points.size();
}

CheckpointGrid parse_grid(std::string_view text) {
  CheckpointGrid grid;
  bool in_edges = false;
  bool header_seen = false;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos <= text.size()) {
    const size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    if (line == "#edges") {
      in_edges = true;
      continue;
    }
    if (!header_seen && line == "id,x_m,y_m") {
      header_seen = true;
      continue;
    }
    const auto fields = split_char(line, ',');
    if (!in_edges) {
      if (fields.size() != 3)
        throw GridFormatError("line " + std::to_string(line_no) + ": expected id,x_m,y_m");
      const auto id = parse_int64(fields[0]);
      const auto x = parse_double(fields[1]);
      const auto y = parse_double(fields[2]);
      if (!id || !x || !y)
        throw GridFormatError("line " + std::to_string(line_no) + ": bad point row");
      if (*x < 0.0 || *y < 0.0) throw NegativeCoordinate(static_cast<int>(*id));
      if (!grid.points.emplace(static_cast<int>(*id), Point2{*x, *y}).second)
        throw DuplicateId(static_cast<int>(*id));
    } else {
      if (fields.size() != 2)
        throw GridFormatError("line " + std::to_string(line_no) + ": expected id_a,id_b");
      const auto a = parse_int64(fields[0]);
      const auto b = parse_int64(fields[1]);
      if (!a || !b)
        throw GridFormatError("line " + std::to_string(line_no) + ": bad edge row");
      if (!grid.contains(static_cast<int>(*a)) || !grid.contains(static_cast<int>(*b)))
        throw DanglingEdge(static_cast<int>(*a), static_cast<int>(*b));
      grid.add_edge(static_cast<int>(*a), static_cast<int>(*b));
    }
  }
  grid.nominal_spacing_m = mean_nearest_neighbor_distance(grid);
  return grid;
}

CheckpointGrid load_grid(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw GridFormatError("cannot open grid file '" + file + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid(buf.str());
}

std::string grid_to_csv(const CheckpointGrid& grid) {
  std::string out = "id,x_m,y_m\n";
  for (const auto& [id, p] : grid.points) {
    out += std::to_string(id);
    out += ',';
    out += format_double(p.x);
    out += ',';
    out += format_double(p.y);
    out += '\n';
  }
  out += "#edges\n";
  for (const auto& [a, b] : grid.adjacency) {
    out += std::to_string(a);
    out += ',';
    out += std::to_string(b);
    out += '\n';
  }
  return out;
}

void save_grid(const CheckpointGrid& grid, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  out << grid_to_csv(grid);
}

double mean_nearest_neighbor_distance(const CheckpointGrid& grid) {
  if (grid.points.size() < 2) return 0.0;
  double sum = 0.0;
  for (const auto& [id, p] : grid.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [other_id, q] : grid.points) {
      if (other_id == id) continue;
      best = std::min(best, squared_distance(p, q));
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(grid.points.size());
}

CheckpointGrid thin_grid(const CheckpointGrid& grid, Parity parity) {
  std::vector<std::pair<Point2, int>> ordered;
  ordered.reserve(grid.points.size());
  for (const auto& [id, p] : grid.points) ordered.push_back({p, id});
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.first.y != b.first.y) return a.first.y < b.first.y;
    if (a.first.x != b.first.x) return a.first.x < b.first.x;
    return a.second < b.second;
  });

  CheckpointGrid out;
  const size_t offset = (parity == Parity::Even) ? 0 : 1;
  for (size_t i = offset; i < ordered.size(); i += 2)
    out.points.emplace(ordered[i].second, ordered[i].first);
  for (const auto& [a, b] : grid.adjacency)
    if (out.contains(a) && out.contains(b)) out.add_edge(a, b);
  out.nominal_spacing_m = mean_nearest_neighbor_distance(out);
  return out;
}

int nearest_checkpoint(const CheckpointGrid& grid, Point2 query) {
  if (grid.points.empty()) throw EmptyGrid();
  int best_id = grid.points.begin()->first;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [id, p] : grid.points) {
    const double d = squared_distance(p, query);
    if (d < best) {  // map iteration is id-ascending, so ties keep the smaller id
      best = d;
      best_id = id;
    }
  }
  return best_id;
}

}  // namespace wifiloc
