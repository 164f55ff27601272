#include "atc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "atc/errors.hpp"

namespace atc {

double euclidean_separation(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Route::Route(RouteId id, std::vector<Point> waypoints) : id_(id), waypoints_(std::move(waypoints)) {
  if (waypoints_.size() < 2) {
    throw ContractError("route " + std::to_string(id_) + " needs at least 2 waypoints");
  }
  cumulative_.reserve(waypoints_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    const double seg = euclidean_separation(waypoints_[i - 1], waypoints_[i]);
    if (!(seg > 0.0)) {
      throw ContractError("route " + std::to_string(id_) + " has a zero-length segment at waypoint " +
                          std::to_string(i));
    }
    cumulative_.push_back(cumulative_.back() + seg);
  }
}

void Route::check_arc(double s) const {
  if (!(s >= 0.0 && s <= length())) {
    std::ostringstream msg;
    msg << "arc position " << s << " outside route " << id_ << " [0, " << length() << "]";
    throw std::out_of_range(msg.str());
  }
}

Point Route::position_at(double s) const {
  check_arc(s);
  // First waypoint whose cumulative length is >= s.
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), s);
  const auto hi = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cumulative_.begin(), 1));
  const std::size_t lo = hi - 1;
  const double seg = cumulative_[hi] - cumulative_[lo];
  const double t = (s - cumulative_[lo]) / seg;
  const Point& a = waypoints_[lo];
  const Point& b = waypoints_[hi];
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

double Route::distance_to_goal(double s) const {
  check_arc(s);
  return length() - s;
}

namespace {

void require_on_route(const Route& r, double arc, Point expected, const std::string& what) {
  if (!(arc >= 0.0 && arc <= r.length())) {
    throw ContractError(what + ": arc position outside route " + std::to_string(r.id()));
  }
  if (euclidean_separation(r.position_at(arc), expected) > SectorLayout::kOnRouteTolerance) {
    throw ContractError(what + " does not lie on route " + std::to_string(r.id()));
  }
}

}  // namespace

SectorLayout::SectorLayout(std::vector<Route> routes, std::vector<CrossingPoint> crossings,
                           std::vector<MergePoint> merges)
    : routes_(std::move(routes)), crossings_(std::move(crossings)), merges_(std::move(merges)) {
  if (routes_.empty()) throw ContractError("layout has no routes");
  std::sort(routes_.begin(), routes_.end(),
            [](const Route& a, const Route& b) { return a.id() < b.id(); });
  for (std::size_t i = 0; i < routes_.size(); ++i) {
    if (routes_[i].id() != static_cast<RouteId>(i)) {
      throw ContractError("route ids must be unique and dense 0..R-1");
    }
  }

  const std::size_t n = routes_.size();
  marks_.assign(n, {});
  conflict_.assign(n, std::vector<char>(n, 0));

  for (std::size_t c = 0; c < crossings_.size(); ++c) {
    const CrossingPoint& cp = crossings_[c];
    const std::string what = "crossing " + std::to_string(c);
    if (cp.routes[0] == cp.routes[1]) throw ContractError(what + " references one route twice");
    const Route& a = route(cp.routes[0]);
    const Route& b = route(cp.routes[1]);
    if (!(cp.arc_positions[0] >= 0.0 && cp.arc_positions[0] <= a.length())) {
      throw ContractError(what + ": arc position outside route " + std::to_string(a.id()));
    }
    const Point p = a.position_at(cp.arc_positions[0]);
    require_on_route(b, cp.arc_positions[1], p, what);
    for (int k = 0; k < 2; ++k) {
      marks_[cp.routes[k]].push_back(
          {cp.arc_positions[k], UpcomingPoint{0.0, SharedPointKind::Crossing, c}});
    }
    conflict_[cp.routes[0]][cp.routes[1]] = conflict_[cp.routes[1]][cp.routes[0]] = 1;
  }

  for (std::size_t m = 0; m < merges_.size(); ++m) {
    const MergePoint& mp = merges_[m];
    const std::string what = "merge point " + std::to_string(m);
    if (mp.upstream_routes.size() < 2 || mp.upstream_routes.size() != mp.arc_positions.size()) {
      throw ContractError(what + " needs >= 2 upstream routes with one arc position each");
    }
    if (mp.shared_segment.size() < 2) throw ContractError(what + " has no shared segment");
    const Route shared(-1, mp.shared_segment);
    for (std::size_t k = 0; k < mp.upstream_routes.size(); ++k) {
      const Route& r = route(mp.upstream_routes[k]);
      const double arc = mp.arc_positions[k];
      require_on_route(r, arc, mp.shared_segment.front(), what);
      if (std::abs((r.length() - arc) - shared.length()) > kOnRouteTolerance) {
        throw ContractError(what + ": route " + std::to_string(r.id()) +
                            " downstream length differs from the shared segment");
      }
      for (std::size_t w = 0; w < shared.waypoints().size(); ++w) {
        const double s = std::min(arc + shared.cumulative_lengths()[w], r.length());
        require_on_route(r, s, shared.waypoints()[w], what + " shared segment");
      }
      for (std::size_t w = 0; w < r.waypoints().size(); ++w) {
        const double s = r.cumulative_lengths()[w];
        if (s <= arc) continue;
        const double t = std::min(s - arc, shared.length());
        if (euclidean_separation(shared.position_at(t), r.waypoints()[w]) > kOnRouteTolerance) {
          throw ContractError(what + ": route " + std::to_string(r.id()) +
                              " leaves the shared segment");
        }
      }
      marks_[r.id()].push_back({arc, UpcomingPoint{0.0, SharedPointKind::Merge, m}});
      for (RouteId other : mp.upstream_routes) {
        if (other != r.id()) conflict_[r.id()][other] = 1;
      }
    }
  }

  for (auto& v : marks_) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
}

const Route& SectorLayout::route(RouteId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= routes_.size()) {
    throw LookupError("unknown route id " + std::to_string(id));
  }
  return routes_[static_cast<std::size_t>(id)];
}

double SectorLayout::max_route_length() const {
  double best = 0.0;
  for (const Route& r : routes_) best = std::max(best, r.length());
  return best;
}

std::optional<UpcomingPoint> SectorLayout::next_intersection_distance(RouteId id, double s) const {
  const Route& r = route(id);
  if (!(s >= 0.0 && s <= r.length())) throw std::out_of_range("arc position outside route");
  for (const auto& [arc, mark] : marks_[static_cast<std::size_t>(id)]) {
    if (arc > s) {
      UpcomingPoint out = mark;
      out.distance = arc - s;
      return out;
    }
  }
  return std::nullopt;
}

std::vector<RouteId> SectorLayout::conflicting_routes(RouteId id) const {
  route(id);
  std::vector<RouteId> out;
  for (std::size_t j = 0; j < routes_.size(); ++j) {
    if (conflict_[static_cast<std::size_t>(id)][j]) out.push_back(static_cast<RouteId>(j));
  }
  return out;
}

bool SectorLayout::routes_conflict(RouteId a, RouteId b) const {
  route(a);
  route(b);
  return conflict_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] != 0;
}

std::vector<SharedPoint> SectorLayout::shared_points(RouteId a, RouteId b) const {
  route(a);
  route(b);
  std::vector<SharedPoint> out;
  if (a == b) return out;
  for (const CrossingPoint& cp : crossings_) {
    if (cp.routes[0] == a && cp.routes[1] == b) {
      out.push_back({SharedPointKind::Crossing, cp.arc_positions[0], cp.arc_positions[1]});
    } else if (cp.routes[0] == b && cp.routes[1] == a) {
      out.push_back({SharedPointKind::Crossing, cp.arc_positions[1], cp.arc_positions[0]});
    }
  }
  for (const MergePoint& mp : merges_) {
    const auto ia = std::find(mp.upstream_routes.begin(), mp.upstream_routes.end(), a);
    const auto ib = std::find(mp.upstream_routes.begin(), mp.upstream_routes.end(), b);
    if (ia == mp.upstream_routes.end() || ib == mp.upstream_routes.end()) continue;
    out.push_back({SharedPointKind::Merge, mp.arc_positions[ia - mp.upstream_routes.begin()],
                   mp.arc_positions[ib - mp.upstream_routes.begin()]});
  }
  return out;
}

}  // namespace atc
