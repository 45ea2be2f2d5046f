#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dpa/rng.hpp"

namespace dpa {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Per-cell link count: fixed k, or uniform random in [1, k_max].
struct LinksPerCell {
  int fixed = 1;      // used when random == false
  int random_max = 4; // used when random == true
  bool random = false;
};

/// Cell layout plus transmitter/receiver drops. Transmitters sit at cell
/// centers (co-located for multi-link cells); receivers are uniform over
/// their hexagonal cell minus an inner disk of radius r.
struct NetworkLayout {
  int n_cells = 0;
  double R = 0.0;  // half transmitter-to-transmitter distance, m
  double r = 0.0;  // receiver-free inner radius, m
  std::vector<Vec2> cell_centers;   // size n_cells
  std::vector<Vec2> tx_positions;   // size n_links
  std::vector<Vec2> rx_positions;   // size n_links
  std::vector<int> cell_of_link;    // size n_links
  std::uint64_t seed = 0;

  int n_links() const { return static_cast<int>(tx_positions.size()); }
};

/// Episode-fixed large-scale gains (path loss + log-normal shadowing).
struct LargeScaleGains {
  Eigen::MatrixXd alpha;      // alpha(i,j): linear gain, tx i -> rx j
  Eigen::MatrixXd shadow_db;  // the shadowing draws, dB
};

/// Hexagonal grid filled center-outward in concentric rings (spiral order),
/// truncated to n_cells. Adjacent centers are 2R apart.
std::vector<Vec2> build_hex_layout(int n_cells, double R);

/// True if p lies in the regular hexagon of inradius R centered at c
/// (vertices toward the 30/90/... degree directions, matching the Voronoi
/// cell of the hex grid used here).
bool point_in_hex(const Vec2& p, const Vec2& c, double R);

/// Drop links: tx at cell centers, rx uniform over hexagon-minus-inner-disk
/// by rejection sampling. Throws std::runtime_error if a receiver cannot be
/// placed within a bounded number of attempts (r too close to cell size).
NetworkLayout place_links(const std::vector<Vec2>& centers, double R, double r,
                          const LinksPerCell& links, std::uint64_t seed);

/// 120.9 + 37.6 log10(d), d in km. Throws std::domain_error for d <= 0.
double path_loss_db(double d_km);

/// alpha(i,j) = 10^-((PL(d_ij) + X_ij)/10), X i.i.d. Normal(0, shadow_sigma_db)
/// per ordered pair, drawn once per episode.
LargeScaleGains compose_large_scale(const NetworkLayout& layout, Rng& rng,
                                    double shadow_sigma_db = 8.0);

std::string layout_to_json(const NetworkLayout& layout);
NetworkLayout layout_from_json(const std::string& text);

}  // namespace dpa
