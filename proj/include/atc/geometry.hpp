#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace atc {

// Planar point in nautical miles.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using RouteId = int;

double euclidean_separation(Point a, Point b);

// Arc-length parameterized polyline.
class Route {
 public:
  Route(RouteId id, std::vector<Point> waypoints);

  RouteId id() const { return id_; }
  const std::vector<Point>& waypoints() const { return waypoints_; }
  const std::vector<double>& cumulative_lengths() const { return cumulative_; }
  double length() const { return cumulative_.back(); }

  // Throws std::out_of_range unless 0 <= s <= length().
  Point position_at(double s) const;
  double distance_to_goal(double s) const;

 private:
  void check_arc(double s) const;

  RouteId id_;
  std::vector<Point> waypoints_;
  std::vector<double> cumulative_;
};

struct CrossingPoint {
  RouteId routes[2] = {0, 0};
  double arc_positions[2] = {0.0, 0.0};
};

// Several upstream routes joining a single downstream segment. Each upstream
// route's polyline continues along shared_segment after its arc position.
struct MergePoint {
  std::vector<RouteId> upstream_routes;
  std::vector<double> arc_positions;
  std::vector<Point> shared_segment;
};

enum class SharedPointKind { Crossing, Merge };

// A crossing or merge seen from one route towards another.
struct SharedPoint {
  SharedPointKind kind;
  double arc_on_route = 0.0;
  double arc_on_other = 0.0;
};

struct UpcomingPoint {
  double distance = 0.0;
  SharedPointKind kind = SharedPointKind::Crossing;
  // Index into crossings() or merge_points() depending on kind.
  std::size_t index = 0;
};

// Immutable sector description. The constructor validates every invariant
// (dense unique route ids, annotations lying on their routes, merge geometry).
class SectorLayout {
 public:
  static constexpr double kOnRouteTolerance = 1e-6;

  SectorLayout(std::vector<Route> routes, std::vector<CrossingPoint> crossings,
               std::vector<MergePoint> merges);

  std::size_t route_count() const { return routes_.size(); }
  const std::vector<Route>& routes() const { return routes_; }
  const std::vector<CrossingPoint>& crossings() const { return crossings_; }
  const std::vector<MergePoint>& merge_points() const { return merges_; }

  // Throws LookupError on an unknown id.
  const Route& route(RouteId id) const;

  double max_route_length() const;

  // Nearest crossing/merge strictly ahead of s on the route.
  std::optional<UpcomingPoint> next_intersection_distance(RouteId id, double s) const;

  // Sorted ids of every route sharing a crossing or merge with `id`.
  std::vector<RouteId> conflicting_routes(RouteId id) const;
  bool routes_conflict(RouteId a, RouteId b) const;

  // Every crossing/merge shared by routes a and b (a != b).
  std::vector<SharedPoint> shared_points(RouteId a, RouteId b) const;

  Point position(RouteId id, double s) const { return route(id).position_at(s); }

 private:
  std::vector<Route> routes_;
  std::vector<CrossingPoint> crossings_;
  std::vector<MergePoint> merges_;
  // Per route: sorted (arc, kind, index) of annotated points.
  std::vector<std::vector<std::pair<double, UpcomingPoint>>> marks_;
  std::vector<std::vector<char>> conflict_;
};

}  // namespace atc
