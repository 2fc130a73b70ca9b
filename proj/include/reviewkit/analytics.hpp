#pragma once

// Decision statistics over normalized paper records: rating-bin histograms,
// per-bin decision entropy, the venue-size scaling fit, the ordered-logit
// decision model, and grouped aggregates. Bin assignment is exact integer
// arithmetic on micro-unit scores; only report-time values become doubles.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reviewkit/core.hpp"
#include "reviewkit/decimal.hpp"

namespace reviewkit {

// ---------------------------------------------------------------------------
// Rating bins

/// Half-open bins [origin + k*width, origin + (k+1)*width). A mean exactly on
/// an edge belongs to the upper bin, which floor division gives for free.
struct BinSpec {
  Decimal origin = Decimal::from_int(0);
  Decimal width = *Decimal::parse("0.2");

  void validate() const {
    if (width.micros() <= 0) raise(ErrorKind::InvalidConfig, "bin width must be positive");
  }

  /// Bin index of the exact rational mean sum/count, no floating point.
  int64_t bin_of(int64_t sum_micros, int64_t count) const {
    // k = floor((sum - n*origin) / (n*width))
    __int128 num = static_cast<__int128>(sum_micros) -
                   static_cast<__int128>(count) * origin.micros();
    __int128 den = static_cast<__int128>(count) * width.micros();
    __int128 q = num / den;
    if (num % den != 0 && ((num < 0) != (den < 0))) --q;
    return static_cast<int64_t>(q);
  }

  int64_t bin_of(const MeanAccumulator& m) const { return bin_of(m.sum_micros, m.count); }

  Decimal lower_edge(int64_t k) const {
    return Decimal::from_micros(origin.micros() + k * width.micros());
  }
  Decimal upper_edge(int64_t k) const { return lower_edge(k + 1); }
};

/// Bin assignment per paper mean rating. Papers without ratings are absent
/// from the result.
inline std::map<std::string, int64_t> bin_scores(const std::vector<PaperRecord>& papers,
                                                 const BinSpec& spec) {
  spec.validate();
  std::map<std::string, int64_t> out;
  for (const auto& p : papers) {
    auto mean = p.rating_mean();
    if (!mean.empty()) out[p.paper_id] = spec.bin_of(mean);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decision entropy

inline constexpr double kMaxTierEntropy = 1.3862943611198906;  // ln 4

struct EntropyBin {
  int64_t bin_index = 0;
  Decimal lo;
  Decimal hi;
  std::array<int64_t, kTierCount> tier_counts{};  // Reject, Poster, Spotlight, Oral
  int64_t papers = 0;
  double entropy = 0.0;
};

struct EntropyResult {
  std::vector<EntropyBin> bins;  // ascending bin index, empty bins omitted
  int64_t included = 0;
  int64_t excluded = 0;  // non-tier status or no ratings
  double weighted_mean = 0.0;
};

/// Shannon entropy (natural log) of the decision mix in each rating bin, and
/// the paper-count-weighted mean across bins. Only papers with a decision
/// tier and at least one rating participate; the rest are counted excluded.
/// Raises EmptyYear when nothing participates.
inline EntropyResult decision_entropy(const std::vector<PaperRecord>& papers,
                                      const BinSpec& spec) {
  spec.validate();
  EntropyResult out;
  std::map<int64_t, std::array<int64_t, kTierCount>> counts;
  for (const auto& p : papers) {
    int rank = tier_rank(p.final_status);
    auto mean = p.rating_mean();
    if (rank < 0 || mean.empty()) {
      ++out.excluded;
      continue;
    }
    ++counts[spec.bin_of(mean)][static_cast<size_t>(rank)];
    ++out.included;
  }
  if (out.included == 0) raise(ErrorKind::EmptyYear, "no papers with a decision tier and ratings");

  double weighted = 0.0;
  for (const auto& [k, tiers] : counts) {
    EntropyBin bin;
    bin.bin_index = k;
    bin.lo = spec.lower_edge(k);
    bin.hi = spec.upper_edge(k);
    bin.tier_counts = tiers;
    for (auto c : tiers) bin.papers += c;
    double h = 0.0;
    for (auto c : tiers) {
      if (c == 0) continue;  // 0 * ln 0 contributes nothing
      double pr = static_cast<double>(c) / static_cast<double>(bin.papers);
      h -= pr * std::log(pr);
    }
    bin.entropy = h;
    weighted += (static_cast<double>(bin.papers) / static_cast<double>(out.included)) * h;
    out.bins.push_back(bin);
  }
  out.weighted_mean = weighted;
  return out;
}

// ---------------------------------------------------------------------------
// Scaling fit: mean entropy vs log venue size

struct YearPoint {
  int year = 0;
  double submissions = 0.0;
  double mean_entropy = 0.0;
};

struct ScalingFit {
  double slope = 0.0;      // a in  H ~ a*ln(X) + b
  double intercept = 0.0;  // b
  double r_squared = 0.0;  // on the fitted points
  std::vector<double> residuals;  // one per input point, fitted or not
  std::optional<int> held_out_year;
};

/// Least squares of mean entropy on ln(submissions). When target_year is
/// given it is held out of the fit (the default analysis asks how far the
/// target year sits from the trend of the others); its residual is still
/// reported. Raises DegenerateFit when fewer than two points remain or the
/// regressor does not vary.
inline ScalingFit fit_log_scaling(const std::vector<YearPoint>& points,
                                  std::optional<int> target_year = std::nullopt) {
  ScalingFit fit;
  fit.held_out_year = target_year;
  std::vector<size_t> use;
  for (size_t i = 0; i < points.size(); ++i) {
    if (points[i].submissions <= 0.0) {
      raise(ErrorKind::DegenerateFit,
            "submissions must be positive for year " + std::to_string(points[i].year));
    }
    if (!target_year || points[i].year != *target_year) use.push_back(i);
  }
  if (use.size() < 2) {
    raise(ErrorKind::DegenerateFit, "need at least two years to fit");
  }
  double sx = 0.0, sy = 0.0;
  for (size_t i : use) {
    sx += std::log(points[i].submissions);
    sy += points[i].mean_entropy;
  }
  double n = static_cast<double>(use.size());
  double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i : use) {
    double dx = std::log(points[i].submissions) - mx;
    double dy = points[i].mean_entropy - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) raise(ErrorKind::DegenerateFit, "log-submissions do not vary across years");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (size_t i : use) {
      double pred = fit.slope * std::log(points[i].submissions) + fit.intercept;
      double e = points[i].mean_entropy - pred;
      ss_res += e * e;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  } else {
    fit.r_squared = 1.0;  // all fitted values identical and matched exactly
  }
  for (const auto& p : points) {
    fit.residuals.push_back(p.mean_entropy - (fit.slope * std::log(p.submissions) + fit.intercept));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Ordered logit

inline double logistic_cdf(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

/// P(tier | x) for tiers (Reject, Poster, Spotlight, Oral) under thresholds
/// tau (strictly increasing) and slope kappa:
///   P(s) = sigma(tau_s - kappa*x) - sigma(tau_{s-1} - kappa*x)
/// with tau_0 = -inf and tau_4 = +inf.
inline std::array<double, 4> ordered_logit_probs(double kappa, const std::array<double, 3>& tau,
                                                 double x) {
  double c1 = logistic_cdf(tau[0] - kappa * x);
  double c2 = logistic_cdf(tau[1] - kappa * x);
  double c3 = logistic_cdf(tau[2] - kappa * x);
  return {c1, c2 - c1, c3 - c2, 1.0 - c3};
}

struct LogitObservation {
  double x = 0.0;
  int tier = 0;  // 0..3, the tier_rank of the decision
};

struct OrderedLogitOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;   // on the log-likelihood improvement
  double kappa_cap = 50.0;   // separation guard
};

struct OrderedLogitModel {
  double kappa = 0.0;
  std::array<double, 3> tau{};
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
};

namespace detail {

/// Threshold gaps are kept as exponentials so tau stays strictly increasing:
/// theta = (tau1, log gap2, log gap3, kappa).
inline std::array<double, 3> tau_from_theta(const std::array<double, 4>& th) {
  double t1 = th[0];
  double t2 = t1 + std::exp(th[1]);
  double t3 = t2 + std::exp(th[2]);
  return {t1, t2, t3};
}

inline double ordered_logit_nll(const std::vector<LogitObservation>& obs,
                                const std::array<double, 4>& th) {
  auto tau = tau_from_theta(th);
  double nll = 0.0;
  for (const auto& o : obs) {
    auto p = ordered_logit_probs(th[3], tau, o.x);
    double pi = p[static_cast<size_t>(o.tier)];
    nll -= std::log(pi > 1e-300 ? pi : 1e-300);
  }
  return nll;
}

/// Analytic gradient of the negative log-likelihood in theta.
inline std::array<double, 4> ordered_logit_grad(const std::vector<LogitObservation>& obs,
                                                const std::array<double, 4>& th) {
  auto tau = tau_from_theta(th);
  double g2 = std::exp(th[1]);
  double g3 = std::exp(th[2]);
  std::array<double, 4> grad{};
  // d tau_j / d theta_k for j in 1..3 (0-indexed 0..2)
  // theta0: 1,1,1   theta1: 0,g2,g2   theta2: 0,0,g3
  auto dtau = [&](int j, int k) -> double {
    if (k == 0) return 1.0;
    if (k == 1) return j >= 1 ? g2 : 0.0;
    return j >= 2 ? g3 : 0.0;
  };
  for (const auto& o : obs) {
    int s = o.tier;
    double upper_u = s <= 2 ? tau[static_cast<size_t>(s)] - th[3] * o.x : 0.0;
    double lower_u = s >= 1 ? tau[static_cast<size_t>(s - 1)] - th[3] * o.x : 0.0;
    double a = s <= 2 ? logistic_cdf(upper_u) : 1.0;   // sigma at upper threshold
    double b = s >= 1 ? logistic_cdf(lower_u) : 0.0;   // sigma at lower threshold
    double p = a - b;
    if (p < 1e-300) p = 1e-300;
    double da = s <= 2 ? a * (1.0 - a) : 0.0;  // sigma'
    double db = s >= 1 ? b * (1.0 - b) : 0.0;
    // d nll / d tau_j and d nll / d kappa for this observation
    for (int k = 0; k < 3; ++k) {
      double d = 0.0;
      if (s <= 2) d += da * dtau(s, k);
      if (s >= 1) d -= db * dtau(s - 1, k);
      grad[static_cast<size_t>(k)] -= d / p;
    }
    grad[3] -= (-o.x) * (da - db) / p;
  }
  return grad;
}

/// Solves the 4x4 system H*x = g in place (partial pivoting). Returns false
/// when the matrix is numerically singular.
inline bool solve4(std::array<std::array<double, 4>, 4>& h, std::array<double, 4>& g) {
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::fabs(h[r][col]) > std::fabs(h[pivot][col])) pivot = r;
    }
    if (std::fabs(h[pivot][col]) < 1e-12) return false;
    std::swap(h[col], h[pivot]);
    std::swap(g[col], g[pivot]);
    for (int r = col + 1; r < 4; ++r) {
      double f = h[r][col] / h[col][col];
      for (int c = col; c < 4; ++c) h[r][c] -= f * h[col][c];
      g[r] -= f * g[col];
    }
  }
  for (int col = 3; col >= 0; --col) {
    for (int r = 0; r < col; ++r) {
      g[r] -= h[r][col] / h[col][col] * g[col];
      h[r][col] = 0.0;
    }
    g[col] /= h[col][col];
  }
  return true;
}

}  // namespace detail

/// Maximum-likelihood fit of the ordered logit. Newton steps with an
/// analytic gradient and a finite-difference Hessian, damped by halving
/// until the likelihood improves. Separation (kappa running past the cap)
/// stops the fit with converged=false and kappa clamped at the cap.
/// Raises EmptyInput with no observations and InvalidSpec unless at least
/// two adjacent tiers are populated (no interior boundary is identified
/// otherwise). Tiers with no observations push their thresholds toward
/// infinity, so such fits come back flagged converged=false.
inline OrderedLogitModel fit_ordered_logit(const std::vector<LogitObservation>& obs,
                                           const OrderedLogitOptions& opt = {}) {
  if (obs.empty()) raise(ErrorKind::EmptyInput, "no observations for the ordered logit");
  std::array<int64_t, 4> tier_n{};
  double mean_x = 0.0;
  for (const auto& o : obs) {
    if (o.tier < 0 || o.tier > 3) raise(ErrorKind::InvalidSpec, "tier out of range");
    ++tier_n[static_cast<size_t>(o.tier)];
    mean_x += o.x;
  }
  mean_x /= static_cast<double>(obs.size());
  bool adjacent_pair = false;
  bool all_tiers = true;
  for (int s = 0; s < 4; ++s) {
    if (s < 3 && tier_n[static_cast<size_t>(s)] > 0 && tier_n[static_cast<size_t>(s + 1)] > 0) {
      adjacent_pair = true;
    }
    if (tier_n[static_cast<size_t>(s)] == 0) all_tiers = false;
  }
  if (!adjacent_pair) {
    raise(ErrorKind::InvalidSpec, "need two adjacent tiers with observations");
  }

  // start from the empirical cumulative shares, centered at the mean x
  double n = static_cast<double>(obs.size());
  std::array<double, 3> tau0;
  double cum = 0.0;
  double kappa0 = 1.0;
  for (int s = 0; s < 3; ++s) {
    cum += static_cast<double>(tier_n[static_cast<size_t>(s)]) / n;
    double c = std::min(std::max(cum, 1e-4), 1.0 - 1e-4);
    tau0[static_cast<size_t>(s)] = std::log(c / (1.0 - c)) + kappa0 * mean_x;
  }
  std::array<double, 4> th;
  th[0] = tau0[0];
  th[1] = std::log(std::max(tau0[1] - tau0[0], 0.05));
  th[2] = std::log(std::max(tau0[2] - tau0[1], 0.05));
  th[3] = kappa0;

  OrderedLogitModel model;
  double nll = detail::ordered_logit_nll(obs, th);
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    model.iterations = iter;
    auto grad = detail::ordered_logit_grad(obs, th);

    // forward-difference Hessian from the analytic gradient
    std::array<std::array<double, 4>, 4> hess{};
    for (int k = 0; k < 4; ++k) {
      double eps = 1e-6 * std::max(1.0, std::fabs(th[static_cast<size_t>(k)]));
      auto bumped = th;
      bumped[static_cast<size_t>(k)] += eps;
      auto gb = detail::ordered_logit_grad(obs, bumped);
      for (int r = 0; r < 4; ++r) {
        hess[static_cast<size_t>(r)][static_cast<size_t>(k)] =
            (gb[static_cast<size_t>(r)] - grad[static_cast<size_t>(r)]) / eps;
      }
    }
    // symmetrize
    for (int r = 0; r < 4; ++r) {
      for (int c = r + 1; c < 4; ++c) {
        double v = 0.5 * (hess[static_cast<size_t>(r)][static_cast<size_t>(c)] +
                          hess[static_cast<size_t>(c)][static_cast<size_t>(r)]);
        hess[static_cast<size_t>(r)][static_cast<size_t>(c)] = v;
        hess[static_cast<size_t>(c)][static_cast<size_t>(r)] = v;
      }
    }

    auto step = grad;
    bool solved = detail::solve4(hess, step);
    if (!solved) {
      // fall back to plain gradient descent for this iteration
      for (int k = 0; k < 4; ++k) step[static_cast<size_t>(k)] = grad[static_cast<size_t>(k)];
    }

    double scale = 1.0;
    double next_nll = nll;
    std::array<double, 4> next = th;
    for (int halving = 0; halving < 40; ++halving) {
      for (int k = 0; k < 4; ++k) {
        next[static_cast<size_t>(k)] = th[static_cast<size_t>(k)] -
                                       scale * step[static_cast<size_t>(k)];
      }
      next_nll = detail::ordered_logit_nll(obs, next);
      if (std::isfinite(next_nll) && next_nll <= nll) break;
      scale *= 0.5;
    }
    if (!std::isfinite(next_nll) || next_nll > nll) {
      break;  // no downhill direction left; report the best point found
    }
    double improvement = nll - next_nll;
    th = next;
    nll = next_nll;
    if (th[3] > opt.kappa_cap) {
      // separation: the slope runs away, the likelihood has no interior optimum
      th[3] = opt.kappa_cap;
      model.kappa = opt.kappa_cap;
      model.tau = detail::tau_from_theta(th);
      model.converged = false;
      model.log_likelihood = -detail::ordered_logit_nll(obs, th);
      return model;
    }
    if (improvement < opt.tolerance) {
      model.converged = true;
      break;
    }
  }
  model.kappa = th[3];
  model.tau = detail::tau_from_theta(th);
  model.log_likelihood = -nll;
  if (!all_tiers) model.converged = false;  // some threshold ran unconstrained
  return model;
}

/// Observations for the fit: one per paper with a decision tier and at least
/// one rating; x is the paper's mean rating.
inline std::vector<LogitObservation> logit_observations(const std::vector<PaperRecord>& papers) {
  std::vector<LogitObservation> out;
  for (const auto& p : papers) {
    int rank = tier_rank(p.final_status);
    auto mean = p.rating_mean();
    if (rank < 0 || mean.empty()) continue;
    out.push_back(LogitObservation{mean.value(), rank});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Descriptive statistics

struct TierStats {
  int year = 0;
  DecisionStatus status = DecisionStatus::Reject;
  int64_t papers = 0;
  double mean_rating = 0.0;
  double variance = 0.0;  // population variance of the paper mean ratings
};

/// Mean and spread of paper mean ratings per (year, status) group, every
/// status included (the drift of withdrawn papers is part of the story).
/// Papers without ratings are skipped; empty groups are omitted. Rows come
/// back sorted by year, then status.
inline std::vector<TierStats> tier_stats(const std::vector<PaperRecord>& papers) {
  std::map<std::pair<int, DecisionStatus>, std::vector<double>> values;
  for (const auto& p : papers) {
    auto mean = p.rating_mean();
    if (mean.empty()) continue;
    values[{p.year, p.final_status}].push_back(mean.value());
  }
  std::vector<TierStats> out;
  for (const auto& [key, v] : values) {
    TierStats st;
    st.year = key.first;
    st.status = key.second;
    st.papers = static_cast<int64_t>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    st.mean_rating = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - st.mean_rating) * (x - st.mean_rating);
    st.variance = ss / static_cast<double>(v.size());
    out.push_back(st);
  }
  return out;
}

struct StatusMixCell {
  int year = 0;
  int64_t bin_index = 0;
  Decimal lo;
  Decimal hi;
  std::map<DecisionStatus, int64_t> counts;  // every status, Withdrawn included
  int64_t volume = 0;                        // papers in the cell

  double proportion(DecisionStatus s) const {
    auto it = counts.find(s);
    if (it == counts.end() || volume == 0) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(volume);
  }
};

/// Status composition per (year, bin) cell of the chosen score dimension
/// (papers binned by their per-paper mean of it). Papers without that
/// dimension are skipped; empty cells are omitted. Cells come back sorted
/// by year, then bin.
inline std::vector<StatusMixCell> status_mix_by_bin(const std::vector<PaperRecord>& papers,
                                                    const std::string& dimension,
                                                    const BinSpec& spec) {
  spec.validate();
  std::map<std::pair<int, int64_t>, std::map<DecisionStatus, int64_t>> cells;
  for (const auto& p : papers) {
    auto mean = p.dimension_mean(dimension);
    if (mean.empty()) continue;
    ++cells[{p.year, spec.bin_of(mean)}][p.final_status];
  }
  std::vector<StatusMixCell> out;
  for (auto& [key, counts] : cells) {
    StatusMixCell b;
    b.year = key.first;
    b.bin_index = key.second;
    b.lo = spec.lower_edge(key.second);
    b.hi = spec.upper_edge(key.second);
    for (const auto& [s, c] : counts) b.volume += c;
    b.counts = std::move(counts);
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Acceptance by score combination

struct CombinationStat {
  std::string scores;  // sorted ratings joined with '|', e.g. "5|6|8"
  int64_t papers = 0;
  int64_t accepted = 0;
  double acceptance_rate = 0.0;
  std::string mean;   // exact mean of the combination, canonical token
  std::string min;    // lowest rating in the combination
  std::string max;    // highest rating
  std::string range;  // max - min, the spread borderline analyses key on
};

/// Acceptance rate per exact multiset of ratings. Only decided papers count:
/// withdrawn papers and other non-tier statuses stay out of the denominator.
/// Combinations seen fewer than min_papers times are dropped (tiny cells are
/// all noise). Output is sorted by combination mean, then lexically.
inline std::vector<CombinationStat> acceptance_by_combination(
    const std::vector<PaperRecord>& papers, int64_t min_papers = 30) {
  struct Cell {
    int64_t papers = 0;
    int64_t accepted = 0;
    int64_t sum_micros = 0;
    int64_t count = 0;
    int64_t min_micros = 0;
    int64_t max_micros = 0;
  };
  std::map<std::string, Cell> cells;
  for (const auto& p : papers) {
    if (!is_tier(p.final_status)) continue;
    std::vector<Decimal> ratings;
    for (const auto& r : p.reviews) {
      auto it = r.scores.find(kRatingDimension);
      if (it != r.scores.end()) ratings.push_back(it->second);
    }
    if (ratings.empty()) continue;
    std::sort(ratings.begin(), ratings.end());
    std::string key;
    int64_t sum = 0;
    for (size_t i = 0; i < ratings.size(); ++i) {
      if (i > 0) key += '|';
      key += ratings[i].str();
      sum += ratings[i].micros();
    }
    auto& cell = cells[key];
    ++cell.papers;
    if (is_accepted(p.final_status)) ++cell.accepted;
    cell.sum_micros = sum;
    cell.count = static_cast<int64_t>(ratings.size());
    cell.min_micros = ratings.front().micros();
    cell.max_micros = ratings.back().micros();
  }
  std::vector<CombinationStat> out;
  for (const auto& [key, cell] : cells) {
    if (cell.papers < min_papers) continue;
    CombinationStat st;
    st.scores = key;
    st.papers = cell.papers;
    st.accepted = cell.accepted;
    st.acceptance_rate = static_cast<double>(cell.accepted) / static_cast<double>(cell.papers);
    st.mean = format_mean(cell.sum_micros, cell.count);
    st.min = Decimal::from_micros(cell.min_micros).str();
    st.max = Decimal::from_micros(cell.max_micros).str();
    st.range = Decimal::from_micros(cell.max_micros - cell.min_micros).str();
    out.push_back(std::move(st));
  }
  std::sort(out.begin(), out.end(), [](const CombinationStat& a, const CombinationStat& b) {
    double ma = std::stod(a.mean), mb = std::stod(b.mean);
    if (ma != mb) return ma < mb;
    return a.scores < b.scores;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Grouped aggregates

enum class GroupBy { PrimaryArea, Country, Institution, Keyword, Year };

struct GroupStat {
  std::string key;
  int64_t papers = 0;
  int64_t decided = 0;   // papers with a tier decision
  int64_t accepted = 0;
  double mean_rating = 0.0;  // over papers in the group that have ratings
  int64_t rated = 0;
};

/// Aggregates per group value. A paper contributes once to each distinct
/// value it carries (a paper with authors in two countries counts once for
/// each country, never twice for one).
inline std::vector<GroupStat> aggregate_by_group(const std::vector<PaperRecord>& papers,
                                                 GroupBy by) {
  std::map<std::string, GroupStat> groups;
  for (const auto& p : papers) {
    std::set<std::string> values;
    switch (by) {
      case GroupBy::PrimaryArea:
        if (!p.primary_area.empty()) values.insert(p.primary_area);
        break;
      case GroupBy::Keyword:
        for (const auto& k : p.keywords) values.insert(k);
        break;
      case GroupBy::Country:
        for (const auto& a : p.authors) {
          for (const auto& aff : a.affiliations) {
            if (aff.country) values.insert(*aff.country);
          }
        }
        break;
      case GroupBy::Institution:
        for (const auto& a : p.authors) {
          for (const auto& aff : a.affiliations) {
            if (!aff.institution.empty()) values.insert(aff.institution);
          }
        }
        break;
      case GroupBy::Year:
        values.insert(std::to_string(p.year));
        break;
    }
    auto mean = p.rating_mean();
    for (const auto& v : values) {
      auto& g = groups[v];
      g.key = v;
      ++g.papers;
      if (is_tier(p.final_status)) {
        ++g.decided;
        if (is_accepted(p.final_status)) ++g.accepted;
      }
      if (!mean.empty()) {
        g.mean_rating += mean.value();
        ++g.rated;
      }
    }
  }
  std::vector<GroupStat> out;
  for (auto& [key, g] : groups) {
    if (g.rated > 0) g.mean_rating /= static_cast<double>(g.rated);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace reviewkit
