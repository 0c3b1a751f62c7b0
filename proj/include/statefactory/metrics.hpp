#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statefactory/errors.hpp"
#include "statefactory/trajectory.hpp"

namespace statefactory {

// Predicted rewards aligned to a trajectory's steps. Values are clamped to
// [0, 1] on construction.
class RewardSeries {
 public:
  RewardSeries() = default;

  explicit RewardSeries(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw EmptyInputError("reward series is empty");
    for (double& v : values_) {
      if (!std::isfinite(v)) throw EmptyInputError("reward series contains a non-finite value");
      v = std::clamp(v, 0.0, 1.0);
    }
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const RewardSeries&, const RewardSeries&) = default;

 private:
  std::vector<double> values_;
};

// Sample Pearson correlation. nullopt when either series has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  if (x.size() < 2) throw TooShort(x.size());
  auto constant = [](std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
  };
  if (constant(x) || constant(y)) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  sxy /= n - 1.0;
  sxx /= n - 1.0;
  syy /= n - 1.0;
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// D = sqrt(1 - rho) / sqrt(2), in [0, 1].
inline std::optional<double> epic_distance(std::span<const double> pred, std::span<const double> truth) {
  const auto rho = pearson(pred, truth);
  if (!rho) return std::nullopt;
  return std::sqrt(std::max(0.0, 1.0 - *rho)) / std::sqrt(2.0);
}

inline std::optional<double> epic_distance(const RewardSeries& pred, const RewardSeries& truth) {
  return epic_distance(std::span<const double>(pred.values()), std::span<const double>(truth.values()));
}

enum class EvalMode { PerPair, PerTrajectory };

inline std::string_view to_string(EvalMode m) { return m == EvalMode::PerPair ? "per-pair" : "per-traj"; }

inline std::optional<EvalMode> eval_mode_from_string(std::string_view s) {
  if (s == "per-pair") return EvalMode::PerPair;
  if (s == "per-traj") return EvalMode::PerTrajectory;
  return std::nullopt;
}

struct ItemResult {
  std::string id;  // pair mode: "<positive_id>+<negative_id>"
  Domain domain = Domain::Synthetic;
  std::optional<double> distance;
};

struct DomainSummary {
  double mean = 0.0;
  std::size_t included = 0;
  std::size_t degenerate = 0;
};

struct EvaluationReport {
  EvalMode mode = EvalMode::PerPair;
  std::vector<ItemResult> items;
  std::map<Domain, DomainSummary> domains;
  double overall = 0.0;
  std::size_t included = 0;
  std::size_t degenerate = 0;
};

using PredictionMap = std::map<std::string, std::vector<double>>;

namespace detail {

inline const std::vector<double>& aligned(const PredictionMap& preds, const Trajectory& t) {
  auto it = preds.find(t.id);
  if (it == preds.end()) throw MisalignmentError(t.id, "no prediction for trajectory");
  if (it->second.size() != t.steps.size()) {
    throw MisalignmentError(t.id, "prediction has " + std::to_string(it->second.size()) + " values, trajectory has " +
                                      std::to_string(t.steps.size()) + " steps");
  }
  for (double v : it->second) {
    if (!std::isfinite(v)) throw MisalignmentError(t.id, "prediction contains a non-finite value");
  }
  return it->second;
}

inline std::vector<double> clamped(const std::vector<double>& v) {
  std::vector<double> out(v);
  for (double& x : out) x = std::clamp(x, 0.0, 1.0);
  return out;
}

inline std::optional<double> safe_epic(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() < 2) return std::nullopt;
  return epic_distance(pred, truth);
}

}  // namespace detail

// Checks alignment for every trajectory first, then scores. Degenerate items
// (undefined correlation) are counted but excluded from means.
inline EvaluationReport evaluate(std::span<const PairedInstance> dataset, const PredictionMap& predictions,
                                 EvalMode mode = EvalMode::PerPair) {
  for (const auto& p : dataset) {
    detail::aligned(predictions, p.positive);
    detail::aligned(predictions, p.negative);
  }
  EvaluationReport r;
  r.mode = mode;
  auto score = [&](std::string id, Domain d, std::vector<double> pred, std::vector<double> truth) {
    r.items.push_back({std::move(id), d, detail::safe_epic(detail::clamped(pred), truth)});
  };
  for (const auto& p : dataset) {
    const auto& pp = detail::aligned(predictions, p.positive);
    const auto& np = detail::aligned(predictions, p.negative);
    if (mode == EvalMode::PerPair) {
      std::vector<double> pred = pp, truth = p.positive.rewards();
      pred.insert(pred.end(), np.begin(), np.end());
      const auto nt = p.negative.rewards();
      truth.insert(truth.end(), nt.begin(), nt.end());
      score(p.positive.id + "+" + p.negative.id, p.positive.domain, std::move(pred), std::move(truth));
    } else {
      score(p.positive.id, p.positive.domain, pp, p.positive.rewards());
      score(p.negative.id, p.negative.domain, np, p.negative.rewards());
    }
  }
  std::map<Domain, double> sums;
  double total = 0.0;
  for (const auto& it : r.items) {
    auto& d = r.domains[it.domain];
    if (!it.distance) {
      ++d.degenerate;
      ++r.degenerate;
      continue;
    }
    ++d.included;
    ++r.included;
    sums[it.domain] += *it.distance;
    total += *it.distance;
  }
  for (auto& [dom, s] : r.domains)
    if (s.included > 0) s.mean = sums[dom] / static_cast<double>(s.included);
  if (r.included > 0) r.overall = total / static_cast<double>(r.included);
  return r;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : r.items) {
    items.push_back({{"id", it.id},
                     {"domain", to_string(it.domain)},
                     {"distance", it.distance ? nlohmann::json(*it.distance) : nlohmann::json(nullptr)}});
  }
  nlohmann::json domains = nlohmann::json::object();
  for (const auto& [d, s] : r.domains) {
    domains[std::string(to_string(d))] = {
        {"mean", s.included ? nlohmann::json(s.mean) : nlohmann::json(nullptr)},
        {"included", s.included},
        {"degenerate", s.degenerate}};
  }
  return {{"mode", to_string(r.mode)},
          {"overall", r.included ? nlohmann::json(r.overall) : nlohmann::json(nullptr)},
          {"included", r.included},
          {"degenerate", r.degenerate},
          {"domains", domains},
          {"items", items}};
}

// Fixed-column table: one row per method, one column per benchmark domain
// plus Overall. Domains without scored items print "-".
inline std::string format_table(const std::vector<std::pair<std::string, EvaluationReport>>& rows) {
  std::vector<Domain> cols{Domain::AlfWorld, Domain::ScienceWorld, Domain::WebShop, Domain::BlocksWorld,
                           Domain::TextWorld};
  for (const auto& [name, rep] : rows) {
    if (rep.domains.contains(Domain::Synthetic) &&
        std::find(cols.begin(), cols.end(), Domain::Synthetic) == cols.end()) {
      cols.push_back(Domain::Synthetic);
    }
  }
  std::size_t w0 = 6;
  for (const auto& [name, rep] : rows) w0 = std::max(w0, name.size());
  auto cell = [](const std::string& s, std::size_t w) {
    std::string out = s;
    if (out.size() < w) out.insert(0, w - out.size(), ' ');
    return out;
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  std::string out = "Method" + std::string(w0 - 6, ' ');
  for (Domain d : cols) out += "  " + cell(std::string(display_name(d)), 12);
  out += "  " + cell("Overall", 8) + "\n";
  for (const auto& [name, rep] : rows) {
    out += name + std::string(w0 - name.size(), ' ');
    for (Domain d : cols) {
      auto it = rep.domains.find(d);
      const bool has = it != rep.domains.end() && it->second.included > 0;
      out += "  " + cell(has ? num(it->second.mean) : "-", 12);
    }
    out += "  " + cell(rep.included ? num(rep.overall) : "-", 8) + "\n";
  }
  return out;
}

}  // namespace statefactory
