#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abslab/errors.hpp"

namespace abslab {

// Burckhardt coefficient triple.
struct RoadSurface {
  std::string name;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;

  void validate() const {
    if (!(theta1 > 0.0) || !(theta2 > 0.0) || !(theta3 >= 0.0) || !std::isfinite(theta1) ||
        !std::isfinite(theta2) || !std::isfinite(theta3))
      throw ConfigError("surface '" + name + "': require theta1 > 0, theta2 > 0, theta3 >= 0");
  }
};

struct FrictionCurvePoint {
  double lambda;
  double mu;
};

namespace detail {
inline void check_slip(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw DomainError("slip " + std::to_string(lambda) + " outside [0, 1]");
}
}  // namespace detail

inline double mu(const RoadSurface& s, double lambda) {
  detail::check_slip(lambda);
  return s.theta1 * (1.0 - std::exp(-lambda * s.theta2)) - lambda * s.theta3;
}

inline double mu_prime(const RoadSurface& s, double lambda) {
  detail::check_slip(lambda);
  return s.theta1 * s.theta2 * std::exp(-lambda * s.theta2) - s.theta3;
}

struct OptimalSlip {
  double lambda;
  bool monotone;  // no interior peak; lambda reported as 1
};

inline OptimalSlip optimal_slip(const RoadSurface& s) {
  s.validate();
  if (s.theta3 == 0.0) return {1.0, true};
  if (s.theta1 * s.theta2 <= s.theta3)
    throw DomainError("surface '" + s.name + "' has no peak");
  const double l = std::log(s.theta1 * s.theta2 / s.theta3) / s.theta2;
  if (l >= 1.0) return {1.0, true};
  return {l, false};
}

inline double lambda_opt(const RoadSurface& s) { return optimal_slip(s).lambda; }

inline std::vector<FrictionCurvePoint> friction_curve(const RoadSurface& s, std::size_t n_points) {
  if (n_points < 2) throw ConfigError("friction_curve needs at least 2 points");
  std::vector<FrictionCurvePoint> out;
  out.reserve(n_points);
  const double last = static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double l = static_cast<double>(i) / last;
    out.push_back({l, mu(s, l)});
  }
  return out;
}

// Surface presets file: {"surfaces": [{"name", "theta1", "theta2", "theta3"}, ...]}
inline std::vector<RoadSurface> parse_surfaces(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_array() ? j : j.at("surfaces");
  if (!arr.is_array() || arr.empty()) throw ConfigError("surface list must be a non-empty array");
  std::vector<RoadSurface> out;
  for (const auto& rec : arr) {
    RoadSurface s{rec.at("name").get<std::string>(), rec.at("theta1").get<double>(),
                  rec.at("theta2").get<double>(), rec.at("theta3").get<double>()};
    s.validate();
    for (const auto& prev : out)
      if (prev.name == s.name) throw ConfigError("duplicate surface '" + s.name + "'");
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<RoadSurface> load_surfaces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open surface file: " + path);
  try {
    return parse_surfaces(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

#ifdef ABSLAB_DATA_DIR
inline std::string default_surface_file() { return std::string(ABSLAB_DATA_DIR) + "/surfaces.json"; }
#endif

inline const RoadSurface& find_surface(const std::vector<RoadSurface>& lib, const std::string& name) {
  auto it = std::find_if(lib.begin(), lib.end(), [&](const RoadSurface& s) { return s.name == name; });
  if (it == lib.end()) throw ConfigError("unknown surface '" + name + "'");
  return *it;
}

}  // namespace abslab
