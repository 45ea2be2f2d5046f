#include "dpa/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace dpa {

namespace {

// Axial hex coordinates; spacing s between adjacent centers.
Vec2 axial_to_xy(int q, int r, double s) {
  return {s * (q + 0.5 * r), s * (std::sqrt(3.0) / 2.0) * r};
}

}  // namespace

std::vector<Vec2> build_hex_layout(int n_cells, double R) {
  if (n_cells < 1) throw std::invalid_argument("n_cells must be >= 1");
  if (R <= 0.0) throw std::invalid_argument("R must be > 0");
  const double s = 2.0 * R;
  std::vector<Vec2> centers;
  centers.reserve(n_cells);
  centers.push_back({0.0, 0.0});
  // ring walk: start each ring at axial (-ring, ring), then six legs
  static const int dirs[6][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};
  for (int ring = 1; static_cast<int>(centers.size()) < n_cells; ++ring) {
    int q = -ring;
    int r = ring;
    for (int d = 0; d < 6; ++d) {
      for (int step = 0; step < ring; ++step) {
        if (static_cast<int>(centers.size()) >= n_cells) return centers;
        centers.push_back(axial_to_xy(q, r, s));
        q += dirs[d][0];
        r += dirs[d][1];
      }
    }
  }
  return centers;
}

bool point_in_hex(const Vec2& p, const Vec2& c, double R) {
  const double vx = p.x - c.x;
  const double vy = p.y - c.y;
  // |projection| <= R on the three neighbor axes (0, 60, 120 degrees)
  static const double ang[3] = {0.0, M_PI / 3.0, 2.0 * M_PI / 3.0};
  for (double a : ang) {
    if (std::fabs(vx * std::cos(a) + vy * std::sin(a)) > R) return false;
  }
  return true;
}

NetworkLayout place_links(const std::vector<Vec2>& centers, double R, double r,
                          const LinksPerCell& links, std::uint64_t seed) {
  if (r >= R) throw std::invalid_argument("inner radius must be below the cell inradius");
  NetworkLayout out;
  out.n_cells = static_cast<int>(centers.size());
  out.R = R;
  out.r = r;
  out.cell_centers = centers;
  out.seed = seed;

  Rng rng = make_stream(seed, Stream::geometry);
  const double box = 2.0 * R / std::sqrt(3.0);  // hexagon circumradius
  constexpr int kMaxAttempts = 100000;

  for (int ci = 0; ci < out.n_cells; ++ci) {
    const int k = links.random
                      ? 1 + static_cast<int>(rng.uniform_index(
                                static_cast<std::size_t>(links.random_max)))
                      : links.fixed;
    for (int l = 0; l < k; ++l) {
      Vec2 rx;
      bool placed = false;
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        rx = {centers[ci].x + rng.uniform(-box, box),
              centers[ci].y + rng.uniform(-box, box)};
        if (point_in_hex(rx, centers[ci], R) && distance(rx, centers[ci]) >= r) {
          placed = true;
          break;
        }
      }
      if (!placed) throw std::runtime_error("receiver placement failed: inner radius leaves no room");
      out.tx_positions.push_back(centers[ci]);
      out.rx_positions.push_back(rx);
      out.cell_of_link.push_back(ci);
    }
  }
  return out;
}

double path_loss_db(double d_km) {
  if (d_km <= 0.0) throw std::domain_error("path loss needs a positive distance");
  return 120.9 + 37.6 * std::log10(d_km);
}

LargeScaleGains compose_large_scale(const NetworkLayout& layout, Rng& rng,
                                    double shadow_sigma_db) {
  const int n = layout.n_links();
  LargeScaleGains g;
  g.alpha.resize(n, n);
  g.shadow_db.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d_km = distance(layout.tx_positions[i], layout.rx_positions[j]) / 1000.0;
      const double x = rng.normal(0.0, shadow_sigma_db);
      g.shadow_db(i, j) = x;
      g.alpha(i, j) = std::pow(10.0, -(path_loss_db(d_km) + x) / 10.0);
    }
  }
  return g;
}

std::string layout_to_json(const NetworkLayout& layout) {
  nlohmann::json j;
  j["n_cells"] = layout.n_cells;
  j["R_m"] = layout.R;
  j["r_m"] = layout.r;
  j["seed"] = layout.seed;
  auto pts = [](const std::vector<Vec2>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({p.x, p.y});
    return a;
  };
  j["cell_centers"] = pts(layout.cell_centers);
  j["tx_positions"] = pts(layout.tx_positions);
  j["rx_positions"] = pts(layout.rx_positions);
  j["cell_of_link"] = layout.cell_of_link;
  return j.dump(2);
}

NetworkLayout layout_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NetworkLayout out;
  out.n_cells = j.at("n_cells").get<int>();
  out.R = j.at("R_m").get<double>();
  out.r = j.at("r_m").get<double>();
  out.seed = j.at("seed").get<std::uint64_t>();
  auto pts = [](const nlohmann::json& a) {
    std::vector<Vec2> v;
    for (const auto& p : a) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return v;
  };
  out.cell_centers = pts(j.at("cell_centers"));
  out.tx_positions = pts(j.at("tx_positions"));
  out.rx_positions = pts(j.at("rx_positions"));
  out.cell_of_link = j.at("cell_of_link").get<std::vector<int>>();
  return out;
}

}  // namespace dpa
