#include "rmeta/tasks.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rmeta/errors.hpp"

namespace rmeta::tasks {

double TaskSpec::target(double x) const { return amplitude * std::sin(x - phase); }

void TaskRange::validate() const {
  if (!(amp_lo < amp_hi) || !(phase_lo < phase_hi)) {
    throw ConfigError("task range bounds must satisfy lo < hi");
  }
  if (amp_lo < kAmpMin || amp_hi > kAmpMax || phase_lo < kPhaseMin || phase_hi > kPi) {
    throw ConfigError("task range exceeds the global sinusoid ranges");
  }
}

bool TaskRange::disjoint_from(const TaskRange& o) const {
  const bool amp_dis = amp_hi <= o.amp_lo || o.amp_hi <= amp_lo;
  const bool phase_dis = phase_hi <= o.phase_lo || o.phase_hi <= phase_lo;
  return amp_dis && phase_dis;
}

TaskRange train_range(Distribution d) {
  if (d == Distribution::identical) return TaskRange{kAmpMin, kAmpMax, kPhaseMin, kPi};
  return TaskRange{2.5, kAmpMax, kPi / 2.0, kPi};
}

TaskRange eval_range(Distribution d) {
  if (d == Distribution::identical) return TaskRange{kAmpMin, kAmpMax, kPhaseMin, kPi};
  TaskRange r{kAmpMin, 2.5, kPhaseMin, kPi / 2.0};
  // the skewed split must never leak between train and eval
  if (!r.disjoint_from(train_range(Distribution::skewed))) {
    throw ConfigError("skewed train and eval ranges overlap");
  }
  return r;
}

AtomGrid AtomGrid::over(const TaskRange& range) {
  range.validate();
  AtomGrid g;
  g.amp_atoms.resize(kAtomsPerAxis);
  g.phase_atoms.resize(kAtomsPerAxis);
  const double aw = (range.amp_hi - range.amp_lo) / kAtomsPerAxis;
  const double pw = (range.phase_hi - range.phase_lo) / kAtomsPerAxis;
  for (int i = 0; i < kAtomsPerAxis; ++i) {
    g.amp_atoms[static_cast<std::size_t>(i)] = range.amp_lo + (i + 0.5) * aw;
    g.phase_atoms[static_cast<std::size_t>(i)] = range.phase_lo + (i + 0.5) * pw;
  }
  return g;
}

namespace {

int nearest_cell(const std::vector<double>& atoms, double v) {
  // atoms are cell centers of a uniform partition
  const double lo = atoms.front();
  const double w = atoms[1] - atoms[0];
  const int i = static_cast<int>(std::floor((v - (lo - 0.5 * w)) / w));
  return std::clamp(i, 0, static_cast<int>(atoms.size()) - 1);
}

}  // namespace

std::pair<int, int> AtomGrid::bucket(const TaskSpec& t) const {
  return {nearest_cell(amp_atoms, t.amplitude), nearest_cell(phase_atoms, t.phase)};
}

std::size_t AtomGrid::bucket_index(const TaskSpec& t) const {
  const auto [i, j] = bucket(t);
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(kAtomsPerAxis) + static_cast<std::size_t>(j);
}

TaskSpec sample_task(const TaskRange& range, Rng& rng) {
  range.validate();
  TaskSpec t;
  t.amplitude = rng.uniform(range.amp_lo, range.amp_hi);
  t.phase = rng.uniform(range.phase_lo, range.phase_hi);
  return t;
}

std::vector<double> categorical_probs(std::span<const double> tau_u) {
  std::vector<double> p(tau_u.size());
  double mx = tau_u[0];
  for (double v : tau_u) mx = std::max(mx, v);
  double z = 0.0;
  for (std::size_t i = 0; i < tau_u.size(); ++i) {
    p[i] = std::exp(tau_u[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

namespace {

int draw_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

AtomDraw sample_adversarial_task(const AtomGrid& grid, std::span<const double> tau_u_amp,
                                 std::span<const double> tau_u_phase, Rng& rng) {
  if (tau_u_amp.size() != grid.amp_atoms.size() || tau_u_phase.size() != grid.phase_atoms.size()) {
    throw ShapeError("adversarial logits do not match the atom grid");
  }
  const std::vector<double> pa = categorical_probs(tau_u_amp);
  const std::vector<double> pp = categorical_probs(tau_u_phase);
  AtomDraw d;
  d.amp_index = draw_categorical(pa, rng);
  d.phase_index = draw_categorical(pp, rng);
  d.task.amplitude = grid.amp_atoms[static_cast<std::size_t>(d.amp_index)];
  d.task.phase = grid.phase_atoms[static_cast<std::size_t>(d.phase_index)];
  return d;
}

Episode make_episode(const TaskSpec& task, int k, int n_query, Rng& rng) {
  if (k < 0) throw ConfigError("support size must be >= 0");
  if (n_query < 1) throw ConfigError("query size must be >= 1");
  Episode ep;
  ep.task = task;
  ep.support_x.resize(static_cast<std::size_t>(k));
  ep.support_y.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    ep.support_x[static_cast<std::size_t>(i)] = rng.uniform(kInputMin, kInputMax);
    ep.support_y[static_cast<std::size_t>(i)] = task.target(ep.support_x[static_cast<std::size_t>(i)]);
  }
  ep.query_x.resize(static_cast<std::size_t>(n_query));
  ep.query_y.resize(static_cast<std::size_t>(n_query));
  for (int i = 0; i < n_query; ++i) {
    ep.query_x[static_cast<std::size_t>(i)] = rng.uniform(kInputMin, kInputMax);
    ep.query_y[static_cast<std::size_t>(i)] = task.target(ep.query_x[static_cast<std::size_t>(i)]);
  }
  return ep;
}

std::string episode_to_json(const Episode& ep) {
  nlohmann::json j;
  j["amplitude"] = ep.task.amplitude;
  j["phase"] = ep.task.phase;
  j["support_x"] = ep.support_x;
  j["support_y"] = ep.support_y;
  j["query_x"] = ep.query_x;
  j["query_y"] = ep.query_y;
  return j.dump();
}

Episode episode_from_json(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  Episode ep;
  ep.task.amplitude = j.at("amplitude").get<double>();
  ep.task.phase = j.at("phase").get<double>();
  ep.support_x = j.at("support_x").get<std::vector<double>>();
  ep.support_y = j.at("support_y").get<std::vector<double>>();
  ep.query_x = j.at("query_x").get<std::vector<double>>();
  ep.query_y = j.at("query_y").get<std::vector<double>>();
  return ep;
}

}  // namespace rmeta::tasks
