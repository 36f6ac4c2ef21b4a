#pragma once

// Local hidden state simulation. For each projective measurement of Alice the
// response beta_j in [0, 1] says how often hidden state j answers outcome 1:
// (P_1)' = sum_j beta_j B_j and (P_2)' = sum_j (1 - beta_j) B_j.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "steer/geometry.hpp"
#include "steer/parallel.hpp"
#include "steer/radius.hpp"

namespace steer {

/// The steering outcome lies outside the box of the given ensemble. Either the
/// state is steerable or the ensemble is too coarse; the residual tells how far
/// the best attempt was.
class OutcomeOutsideBox : public Error {
 public:
  OutcomeOutsideBox(const Vec3& axis, double residual, double gap, std::optional<Vec4> separator)
      : Error(ErrorKind::OutcomeOutsideBox, describe(axis, residual, gap)),
        residual_(residual),
        gap_(gap),
        separator_(std::move(separator)) {}

  /// Smallest |sum beta_j g_j - outcome| reached by the solver.
  double residual() const noexcept { return residual_; }
  /// Certified lower bound on the distance from the outcome to the box.
  double gap() const noexcept { return gap_; }
  const std::optional<Vec4>& separator() const noexcept { return separator_; }

 private:
  static std::string describe(const Vec3& axis, double residual, double gap) {
    std::ostringstream os;
    os << "outcome for axis (" << axis.transpose() << ") not in box: best residual " << residual
       << ", separation gap " << gap;
    return os.str();
  }
  double residual_;
  double gap_;
  std::optional<Vec4> separator_;
};

struct ResponseModel {
  SphereMeasure measure;
  Vec3 measurement;
  /// G_1j = beta_j, G_2j = 1 - beta_j.
  std::vector<double> beta;
};

inline ResponseModel build_response(const SphereMeasure& measure, const EprMap& map,
                                    const Vec3& measurement_bloch) {
  require_unit(measurement_bloch, "measurement Bloch vector");
  ResponseModel model{conform_to_map(measure, map), measurement_bloch, {}};
  const SteeringBox box = build_box(model.measure);
  const auto fit = box_membership(box, steering_outcome(map, measurement_bloch));
  if (!fit.feasible) throw OutcomeOutsideBox(measurement_bloch, fit.residual, fit.gap, fit.separator);
  model.beta = fit.beta;
  return model;
}

struct ResponseResidual {
  double outcome1 = 0.0;
  double outcome2 = 0.0;
  double max() const { return std::max(outcome1, outcome2); }
};

inline ResponseResidual verify_response(const ResponseModel& model, const EprMap& map,
                                        const Vec3& measurement_bloch) {
  Vec4 row1 = Vec4::Zero(), row2 = Vec4::Zero();
  for (std::size_t j = 0; j < model.measure.size(); ++j) {
    const Vec4 g = lift(model.measure.atoms[j].weight, model.measure.atoms[j].n);
    row1 += model.beta[j] * g;
    row2 += (1.0 - model.beta[j]) * g;
  }
  const Vec4 p1 = map.phi * Vec4(1.0, measurement_bloch.x(), measurement_bloch.y(),
                                 measurement_bloch.z());
  const Vec4 p2 = map.phi * Vec4(1.0, -measurement_bloch.x(), -measurement_bloch.y(),
                                 -measurement_bloch.z());
  return {(row1 - p1).norm(), (row2 - p2).norm()};
}

struct OutcomeStats {
  double predicted_probability = 0.0;
  double simulated_probability = 0.0;
  double z_probability = 0.0;
  Vec3 predicted_bloch = Vec3::Zero();
  Vec3 simulated_bloch = Vec3::Zero();
  Vec3 z_bloch = Vec3::Zero();
  std::int64_t count = 0;
};

struct MeasurementStats {
  Vec3 axis;
  OutcomeStats outcome[2];
};

struct SimulationReport {
  std::int64_t shots = 0;
  std::uint64_t seed = 0;
  std::vector<MeasurementStats> measurements;
  double max_abs_z = 0.0;
  double max_probability_deviation = 0.0;
  double max_bloch_deviation = 0.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double z_score(double observed, double expected, double variance, double count) {
  if (count <= 0.0) return 0.0;
  const double sd = std::sqrt(std::max(variance, 0.0) / count);
  const double diff = observed - expected;
  if (sd <= 0.0) return std::abs(diff) <= 1e-12 ? 0.0 : std::copysign(HUGE_VAL, diff);
  return diff / sd;
}

}  // namespace detail

/// Shots are split into a fixed number of chunks, each with its own derived
/// seed, and reduced in chunk order: results do not depend on the thread count.
inline SimulationReport simulate(const std::vector<ResponseModel>& models, const EprMap& map,
                                 std::int64_t shots, std::uint64_t seed) {
  SimulationReport rep;
  rep.shots = shots;
  rep.seed = seed;
  if (shots <= 0 || models.empty()) return rep;
  const SphereMeasure& measure = models.front().measure;
  const std::size_t m = measure.size();
  const std::size_t k_count = models.size();
  for (const auto& mod : models)
    if (mod.beta.size() != m)
      throw Error(ErrorKind::InvalidArgument, "response models use different ensembles");

  std::vector<double> cdf(m);
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) cdf[j] = (acc += measure.atoms[j].weight);

  struct Tally {
    std::vector<std::int64_t> count;  // [k][outcome]
    std::vector<Vec3> sum;
  };
  constexpr std::int64_t kChunks = 64;
  std::vector<Tally> tallies(kChunks);
  parallel_for(kChunks, [&](std::size_t c) {
    Tally& t = tallies[c];
    t.count.assign(2 * k_count, 0);
    t.sum.assign(2 * k_count, Vec3::Zero());
    std::mt19937_64 rng(detail::splitmix64(seed + c));
    const std::int64_t begin = shots * static_cast<std::int64_t>(c) / kChunks;
    const std::int64_t end = shots * static_cast<std::int64_t>(c + 1) / kChunks;
    for (std::int64_t s = begin; s < end; ++s) {
      const double u = uniform01(rng) * acc;
      const std::size_t j = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
          m - 1);
      const Vec3& n = measure.atoms[j].n;
      for (std::size_t k = 0; k < k_count; ++k) {
        const int outcome = uniform01(rng) < models[k].beta[j] ? 0 : 1;
        ++t.count[2 * k + static_cast<std::size_t>(outcome)];
        t.sum[2 * k + static_cast<std::size_t>(outcome)] += n;
      }
    }
  });

  rep.measurements.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const ResponseModel& mod = models[k];
    MeasurementStats& ms = rep.measurements[k];
    ms.axis = mod.measurement;
    for (int o = 0; o < 2; ++o) {
      OutcomeStats& st = ms.outcome[o];
      const Vec3 x = o == 0 ? mod.measurement : Vec3(-mod.measurement);
      const Vec4 pred = map.phi * Vec4(1.0, x.x(), x.y(), x.z());
      st.predicted_probability = pred[0];
      st.predicted_bloch = pred.tail<3>() / pred[0];

      Vec3 sum = Vec3::Zero();
      for (const auto& t : tallies) {
        st.count += t.count[2 * k + static_cast<std::size_t>(o)];
        sum += t.sum[2 * k + static_cast<std::size_t>(o)];
      }
      st.simulated_probability = static_cast<double>(st.count) / static_cast<double>(shots);
      st.simulated_bloch = st.count > 0 ? Vec3(sum / static_cast<double>(st.count)) : Vec3::Zero();

      // Conditional second moments under the model, for the Bloch z-scores.
      double mass = 0.0;
      Vec3 second = Vec3::Zero();
      for (std::size_t j = 0; j < m; ++j) {
        const double g = o == 0 ? mod.beta[j] : 1.0 - mod.beta[j];
        const double w = measure.atoms[j].weight * g;
        mass += w;
        second += w * measure.atoms[j].n.cwiseProduct(measure.atoms[j].n);
      }
      const double p = st.predicted_probability;
      st.z_probability = detail::z_score(st.simulated_probability, p, p * (1.0 - p),
                                         static_cast<double>(shots));
      for (int c = 0; c < 3; ++c) {
        const double var = mass > 0.0 ? second[c] / mass - st.predicted_bloch[c] * st.predicted_bloch[c]
                                      : 0.0;
        st.z_bloch[c] = detail::z_score(st.simulated_bloch[c], st.predicted_bloch[c], var,
                                        static_cast<double>(st.count));
      }
      rep.max_abs_z = std::max({rep.max_abs_z, std::abs(st.z_probability),
                                st.z_bloch.cwiseAbs().maxCoeff()});
      rep.max_probability_deviation =
          std::max(rep.max_probability_deviation,
                   std::abs(st.simulated_probability - st.predicted_probability));
      if (st.count > 0)
        rep.max_bloch_deviation = std::max(
            rep.max_bloch_deviation, (st.simulated_bloch - st.predicted_bloch).cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

}  // namespace steer
