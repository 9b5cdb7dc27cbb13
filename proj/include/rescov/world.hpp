#pragma once

// Monitored domain: a rectangular grid of cells carrying a discrete event
// density, plus square (infinity-norm) neighborhood queries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/error.hpp"
#include "rescov/geometry.hpp"

namespace rescov {

using CellIndex = std::size_t;

class Grid {
 public:
  Grid(Vec2 origin, double cell_size, std::size_t nx, std::size_t ny,
       std::vector<double> weights)
      : origin_(origin), cell_size_(cell_size), nx_(nx), ny_(ny), weights_(std::move(weights)) {
    if (!(cell_size_ > 0.0) || nx_ == 0 || ny_ == 0) {
      throw Error(Errc::kInvalidArgument, "grid needs positive cell size and counts");
    }
    if (weights_.size() != nx_ * ny_) {
      throw Error(Errc::kSizeMismatch, "weights length must equal nx*ny");
    }
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw Error(Errc::kInvalidArgument, "negative cell weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(Errc::kInvalidArgument, "cell weights must sum to 1");
    }
  }

  Vec2 origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return weights_.size(); }
  double weight(CellIndex i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }

  Rect bounds() const {
    return {origin_, {origin_.x + cell_size_ * static_cast<double>(nx_),
                      origin_.y + cell_size_ * static_cast<double>(ny_)}};
  }

  CellIndex index(std::size_t ix, std::size_t iy) const { return iy * nx_ + ix; }
  std::size_t column(CellIndex i) const { return i % nx_; }
  std::size_t row(CellIndex i) const { return i / nx_; }

  Vec2 center(CellIndex i) const {
    return {origin_.x + (static_cast<double>(column(i)) + 0.5) * cell_size_,
            origin_.y + (static_cast<double>(row(i)) + 0.5) * cell_size_};
  }

  /// Inclusive index range [first, last] of columns (or rows) whose centers
  /// could lie within [lo, hi] along one axis; empty when first > last.
  std::pair<long, long> axis_range(double lo, double hi, double axis_origin,
                                   std::size_t count) const {
    long first = static_cast<long>(std::floor((lo - axis_origin) / cell_size_ - 0.5)) - 1;
    long last = static_cast<long>(std::ceil((hi - axis_origin) / cell_size_ - 0.5)) + 1;
    first = std::max(first, 0L);
    last = std::min(last, static_cast<long>(count) - 1);
    return {first, last};
  }

  /// Visits every cell whose center lies in the closed box [lo, hi].
  template <class F>
  void for_each_in_box(Vec2 lo, Vec2 hi, F&& visit) const {
    auto [x0, x1] = axis_range(lo.x, hi.x, origin_.x, nx_);
    auto [y0, y1] = axis_range(lo.y, hi.y, origin_.y, ny_);
    for (long iy = y0; iy <= y1; ++iy) {
      for (long ix = x0; ix <= x1; ++ix) {
        CellIndex i = index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
        Vec2 c = center(i);
        if (c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y) visit(i, c);
      }
    }
  }

  Grid with_weights(std::vector<double> weights) const {
    return Grid(origin_, cell_size_, nx_, ny_, std::move(weights));
  }

 private:
  Vec2 origin_;
  double cell_size_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<double> weights_;
};

/// Sorted, duplicate-free list of cell indices into one grid.
class CellSet {
 public:
  CellSet() = default;

  CellSet(std::vector<CellIndex> cells, std::size_t grid_size) : cells_(std::move(cells)) {
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      if (cells_[k] >= grid_size) throw Error(Errc::kInvalidArgument, "cell index out of range");
      if (k > 0 && cells_[k] <= cells_[k - 1]) {
        throw Error(Errc::kInvalidArgument, "cell set must be strictly increasing");
      }
    }
  }

  static CellSet all(const Grid& grid) {
    std::vector<CellIndex> v(grid.size());
    std::iota(v.begin(), v.end(), CellIndex{0});
    CellSet s;
    s.cells_ = std::move(v);
    return s;
  }

  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  auto begin() const { return cells_.begin(); }
  auto end() const { return cells_.end(); }
  CellIndex operator[](std::size_t k) const { return cells_[k]; }
  std::span<const CellIndex> indices() const { return cells_; }

  bool contains(CellIndex c) const { return std::binary_search(cells_.begin(), cells_.end(), c); }

  bool is_subset_of(const CellSet& other) const {
    return std::includes(other.cells_.begin(), other.cells_.end(), cells_.begin(), cells_.end());
  }

  friend bool operator==(const CellSet&, const CellSet&) = default;

 private:
  std::vector<CellIndex> cells_;
};

/// Dense membership bitmap over a grid, built once per region for O(1) lookups.
class CellMask {
 public:
  CellMask(const Grid& grid, const CellSet& cells) : bits_(grid.size(), 0) {
    for (CellIndex c : cells) bits_[c] = 1;
  }
  bool contains(CellIndex c) const { return bits_[c] != 0; }
  std::size_t grid_size() const { return bits_.size(); }

 private:
  std::vector<char> bits_;
};

struct UniformDensity {};

struct GaussianBump {
  Vec2 center;
  double spread = 1.0;
  double mass = 1.0;
};

struct MixtureDensity {
  std::vector<GaussianBump> bumps;
};

using DensitySpec = std::variant<UniformDensity, MixtureDensity>;

/// Tiles `bounds` with square cells of side `cell_size`; weights start uniform.
inline Grid build_grid(const Rect& bounds, double cell_size) {
  if (!(cell_size > 0.0)) throw Error(Errc::kInvalidArgument, "cell_size must be positive");
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw Error(Errc::kInvalidArgument, "bounds must have positive area");
  }
  auto cells_along = [&](double side) {
    double ratio = side / cell_size;
    double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 || rounded < 1.0) {
      throw Error(Errc::kNonDivisibleBounds,
                  "side " + std::to_string(side) + " is not a multiple of " +
                      std::to_string(cell_size));
    }
    return static_cast<std::size_t>(rounded);
  };
  std::size_t nx = cells_along(bounds.width());
  std::size_t ny = cells_along(bounds.height());
  std::size_t w = nx * ny;
  return Grid(bounds.lo, cell_size, nx, ny, std::vector<double>(w, 1.0 / static_cast<double>(w)));
}

inline double evaluate_density(const DensitySpec& spec, Vec2 p) {
  if (std::holds_alternative<UniformDensity>(spec)) return 1.0;
  double value = 0.0;
  for (const GaussianBump& b : std::get<MixtureDensity>(spec).bumps) {
    double s2 = b.spread * b.spread;
    Vec2 d = p - b.center;
    value += b.mass / (2.0 * std::numbers::pi * s2) * std::exp(-dot(d, d) / (2.0 * s2));
  }
  return value;
}

/// Returns a grid whose weights are the density sampled at cell centers,
/// normalized to unit total mass.
inline Grid set_density(const Grid& grid, const DensitySpec& spec) {
  if (const auto* mix = std::get_if<MixtureDensity>(&spec)) {
    for (const GaussianBump& b : mix->bumps) {
      if (!(b.mass > 0.0) || !(b.spread > 0.0)) {
        throw Error(Errc::kInvalidArgument, "mixture bumps need positive mass and spread");
      }
    }
  }
  std::vector<double> w(grid.size());
  double total = 0.0;
  for (CellIndex i = 0; i < grid.size(); ++i) {
    w[i] = evaluate_density(spec, grid.center(i));
    total += w[i];
  }
  if (!(total > 0.0)) throw Error(Errc::kZeroMass, "density vanishes at every cell center");
  for (double& x : w) x /= total;
  return grid.with_weights(std::move(w));
}

/// Cells whose center lies within infinity-norm distance L of `center`.
inline CellSet neighborhood_cells(const Grid& grid, Vec2 center, double L) {
  if (!(L >= 0.0)) throw Error(Errc::kInvalidArgument, "L must be nonnegative");
  std::vector<CellIndex> out;
  grid.for_each_in_box({center.x - L, center.y - L}, {center.x + L, center.y + L},
                       [&](CellIndex i, Vec2 c) {
                         if (inf_distance(c, center) <= L) out.push_back(i);
                       });
  // Row-major traversal already yields ascending indices.
  return CellSet(std::move(out), grid.size());
}

inline void to_json(nlohmann::json& j, const Grid& g) {
  j = {{"origin", g.origin()},
       {"cell_size", g.cell_size()},
       {"nx", g.nx()},
       {"ny", g.ny()},
       {"weights", std::vector<double>(g.weights().begin(), g.weights().end())}};
}

inline Grid grid_from_json(const nlohmann::json& j) {
  return Grid(j.at("origin").get<Vec2>(), j.at("cell_size").get<double>(),
              j.at("nx").get<std::size_t>(), j.at("ny").get<std::size_t>(),
              j.at("weights").get<std::vector<double>>());
}

inline void to_json(nlohmann::json& j, const DensitySpec& spec) {
  if (std::holds_alternative<UniformDensity>(spec)) {
    j = {{"kind", "uniform"}};
    return;
  }
  nlohmann::json bumps = nlohmann::json::array();
  for (const GaussianBump& b : std::get<MixtureDensity>(spec).bumps) {
    bumps.push_back({{"center", b.center}, {"spread", b.spread}, {"mass", b.mass}});
  }
  j = {{"kind", "mixture"}, {"bumps", bumps}};
}

inline void from_json(const nlohmann::json& j, DensitySpec& spec) {
  std::string kind = j.value("kind", "uniform");
  if (kind == "uniform") {
    spec = UniformDensity{};
  } else if (kind == "mixture") {
    MixtureDensity mix;
    for (const auto& b : j.at("bumps")) {
      mix.bumps.push_back({b.at("center").get<Vec2>(), b.at("spread").get<double>(),
                           b.at("mass").get<double>()});
    }
    spec = std::move(mix);
  } else {
    throw Error(Errc::kInvalidArgument, "unknown density kind '" + kind + "'");
  }
}

}  // namespace rescov
