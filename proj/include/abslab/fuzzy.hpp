#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "abslab/errors.hpp"
#include "abslab/friction.hpp"

namespace abslab {

enum class MembershipKind { Triangular, ShoulderedLeft, ShoulderedRight };

inline MembershipKind parse_membership_kind(const std::string& s) {
  if (s == "triangular") return MembershipKind::Triangular;
  if (s == "shouldered-left") return MembershipKind::ShoulderedLeft;
  if (s == "shouldered-right") return MembershipKind::ShoulderedRight;
  throw ConfigError("unknown membership kind '" + s + "'");
}

inline const char* to_string(MembershipKind k) {
  switch (k) {
    case MembershipKind::Triangular: return "triangular";
    case MembershipKind::ShoulderedLeft: return "shouldered-left";
    case MembershipKind::ShoulderedRight: return "shouldered-right";
  }
  return "?";
}

struct MembershipFunction {
  std::string label;
  MembershipKind kind = MembershipKind::Triangular;
  double center = 0.0;
  double left_foot = 0.0;
  double right_foot = 0.0;

  void validate() const {
    if (!(left_foot <= center && center <= right_foot))
      throw ConfigError("membership '" + label + "': require left_foot <= center <= right_foot");
  }

  double operator()(double x) const {
    const bool rise_flat = kind == MembershipKind::ShoulderedLeft;
    const bool fall_flat = kind == MembershipKind::ShoulderedRight;
    if (x == center) return 1.0;
    if (x < center) {
      if (rise_flat) return x >= left_foot ? 1.0 : 0.0;
      if (x <= left_foot) return 0.0;
      return (x - left_foot) / (center - left_foot);
    }
    if (fall_flat) return x <= right_foot ? 1.0 : 0.0;
    if (x >= right_foot) return 0.0;
    return (right_foot - x) / (right_foot - center);
  }
};

using MembershipBank = std::vector<MembershipFunction>;

// Centers at each surface's optimal slip, feet at the neighbouring centers; the lowest
// is shouldered down to slip 0 and the highest shouldered up to slip 1.
inline MembershipBank make_default_bank(std::vector<RoadSurface> surfaces) {
  if (surfaces.empty()) throw ConfigError("membership bank needs at least one surface");
  std::vector<std::pair<double, std::string>> c;
  for (const auto& s : surfaces) c.emplace_back(lambda_opt(s), s.name);
  std::sort(c.begin(), c.end());
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i].first == c[i - 1].first) throw ConfigError("surfaces with identical optimal slip");
  MembershipBank bank;
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n; ++i) {
    MembershipFunction f;
    f.label = c[i].second;
    f.center = c[i].first;
    f.left_foot = i == 0 ? 0.0 : c[i - 1].first;
    f.right_foot = i + 1 == n ? 1.0 : c[i + 1].first;
    f.kind = n == 1 || i == 0 ? MembershipKind::ShoulderedLeft
             : i + 1 == n     ? MembershipKind::ShoulderedRight
                              : MembershipKind::Triangular;
    if (n == 1) f.right_foot = 1.0;
    bank.push_back(f);
  }
  return bank;
}

struct MembershipValues {
  std::vector<double> values;
  bool coverage_warning = false;
};

inline MembershipValues memberships(double lambda_opt_est, const MembershipBank& bank) {
  if (bank.empty()) throw ConfigError("empty membership bank");
  double lo = bank.front().left_foot, hi = bank.front().right_foot;
  for (const auto& f : bank) {
    lo = std::min(lo, f.left_foot);
    hi = std::max(hi, f.right_foot);
  }
  MembershipValues out;
  double x = lambda_opt_est;
  if (!(x >= lo && x <= hi)) {
    out.coverage_warning = true;
    x = x < lo || std::isnan(x) ? lo : hi;
  }
  for (const auto& f : bank) out.values.push_back(f(x));
  return out;
}

struct RoadWeights {
  std::vector<std::string> labels;
  std::vector<double> weights;
};

inline RoadWeights weights(const std::vector<double>& raw, std::vector<std::string> labels = {}) {
  double sum = 0.0;
  for (double m : raw) {
    if (!(m >= 0.0 && m <= 1.0)) throw DomainError("membership value outside [0, 1]");
    sum += m;
  }
  if (!(sum > 0.0)) throw DomainError("all memberships are zero");
  if (!labels.empty() && labels.size() != raw.size()) throw ConfigError("label count mismatch");
  RoadWeights w{std::move(labels), {}};
  for (double m : raw) w.weights.push_back(m / sum);
  return w;
}

inline RoadWeights weights(const MembershipValues& m, const MembershipBank& bank) {
  std::vector<std::string> labels;
  for (const auto& f : bank) labels.push_back(f.label);
  return weights(m.values, std::move(labels));
}

inline double blend(const RoadWeights& w, const std::vector<double>& commands) {
  if (commands.size() != w.weights.size()) throw ConfigError("blend: one command per weight required");
  double T = 0.0;
  for (std::size_t i = 0; i < commands.size(); ++i) T += w.weights[i] * commands[i];
  return T;
}

inline double weighted_reference(const RoadWeights& w, const std::vector<double>& lambda_opts) {
  return blend(w, lambda_opts);
}

}  // namespace abslab
