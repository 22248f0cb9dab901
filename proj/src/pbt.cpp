#include "smx/pbt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <sstream>

namespace smx {

void PbtConfig::validate() const {
  if (population < 2) fail(ErrorCode::invalid_config, "pbt population must be >= 2");
  if (intervals < 1) fail(ErrorCode::invalid_config, "pbt intervals must be >= 1");
  if (!(top_frac > 0.0 && top_frac <= 0.5))
    fail(ErrorCode::invalid_config, "pbt top_frac must lie in (0,0.5]");
  if (!(bottom_frac > 0.0 && bottom_frac <= 0.5))
    fail(ErrorCode::invalid_config, "pbt bottom_frac must lie in (0,0.5]");
  start.validate();
}

StylePolicy perturb(const StylePolicy& policy, Rng& rng) {
  StylePolicy out = policy;
  for (double* v : {&out.lambda, &out.lambda_o, &out.lambda_s}) {
    const double factor = rng.bernoulli(0.5) ? 0.8 : 1.2;
    *v = std::clamp(*v * factor, 0.0, 1.0);
  }
  return out;
}

void save_schedule_csv(const PbtSchedule& s, const std::string& path) {
  std::string out = "epoch,lambda,lambda_o,lambda_s,winner_id\n";
  char line[160];
  for (size_t e = 0; e < s.entries.size(); ++e) {
    const ScheduleEntry& en = s.entries[e];
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%d\n", e, en.lambda,
                  en.lambda_o, en.lambda_s, en.winner_id);
    out += line;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f << out;
  }
  std::filesystem::rename(tmp, path);
}

PbtSchedule load_schedule_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::io_error, "cannot open schedule " + path);
  std::string line;
  if (!std::getline(f, line) || line != "epoch,lambda,lambda_o,lambda_s,winner_id")
    fail(ErrorCode::format_error, path + ": bad schedule header");
  PbtSchedule s;
  size_t expected = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    ScheduleEntry e;
    size_t epoch = 0;
    try {
      std::getline(ss, field, ',');
      epoch = std::stoul(field);
      std::getline(ss, field, ',');
      e.lambda = std::stod(field);
      std::getline(ss, field, ',');
      e.lambda_o = std::stod(field);
      std::getline(ss, field, ',');
      e.lambda_s = std::stod(field);
      std::getline(ss, field, ',');
      e.winner_id = std::stoi(field);
    } catch (const std::exception&) {
      fail(ErrorCode::format_error, path + ": malformed schedule row \"" + line + "\"");
    }
    if (epoch != expected)
      fail(ErrorCode::format_error, path + ": schedule rows out of order");
    ++expected;
    s.entries.push_back(e);
  }
  if (s.entries.empty()) fail(ErrorCode::format_error, path + ": empty schedule");
  return s;
}

PbtResult run_pbt(const PbtConfig& cfg, const TrialStepFn& step) {
  cfg.validate();
  if (!step) fail(ErrorCode::invalid_config, "run_pbt: null step function");

  std::vector<Trial> trials(cfg.population);
  for (int i = 0; i < cfg.population; ++i) {
    trials[i].id = i;
    trials[i].policy = cfg.start;
  }

  PbtResult res;
  const int n_top = std::max(1, static_cast<int>(cfg.population * cfg.top_frac));
  const int n_bottom = std::max(1, static_cast<int>(cfg.population * cfg.bottom_frac));

  for (int interval = 0; interval < cfg.intervals; ++interval) {
    std::vector<double> score(cfg.population);
    for (int i = 0; i < cfg.population; ++i) {
      const TrialScore s = step(i, interval, trials[i].policy, trials[i].state);
      // non-finite scores disqualify the trial for this interval
      score[i] = std::isfinite(s.mean()) ? s.mean()
                                         : -std::numeric_limits<double>::infinity();
      trials[i].score_history.push_back(score[i]);
    }

    std::vector<int> rank(cfg.population);
    for (int i = 0; i < cfg.population; ++i) rank[i] = i;
    std::stable_sort(rank.begin(), rank.end(),
                     [&](int a, int b) { return score[a] > score[b]; });

    // record the leader's policy for this interval
    res.schedule.entries.push_back({trials[rank[0]].policy.lambda,
                                    trials[rank[0]].policy.lambda_o,
                                    trials[rank[0]].policy.lambda_s, rank[0]});

    // bottom quartile copies a uniformly drawn top-quartile trial, then perturbs
    for (int b = 0; b < n_bottom; ++b) {
      const int loser = rank[cfg.population - 1 - b];
      Rng rng(stream_key(cfg.seed, "pbt-exploit", static_cast<uint64_t>(interval),
                         static_cast<uint64_t>(loser)));
      const int winner = rank[rng.uniform_int(n_top)];
      trials[loser].policy = trials[winner].policy;
      trials[loser].state = trials[winner].state;  // checkpoint copy
      trials[loser].policy = perturb(trials[loser].policy, rng);
    }

    if (interval == cfg.intervals - 1) res.best = trials[rank[0]];
  }
  return res;
}

void replay(const PbtSchedule& schedule, const StylePolicy& base, int epochs,
            const ReplayStepFn& step) {
  if (static_cast<int>(schedule.entries.size()) != epochs)
    fail(ErrorCode::length_mismatch,
         "replay: schedule has " + std::to_string(schedule.entries.size()) +
             " entries but the run needs " + std::to_string(epochs));
  if (!step) fail(ErrorCode::invalid_config, "replay: null step function");
  for (int e = 0; e < epochs; ++e) {
    StylePolicy p = base;
    p.lambda = schedule.entries[e].lambda;
    p.lambda_o = schedule.entries[e].lambda_o;
    p.lambda_s = schedule.entries[e].lambda_s;
    p.validate();
    step(e, p);
  }
}

}  // namespace smx
