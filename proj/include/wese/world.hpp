#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wese/env.hpp"
#include "wese/household.hpp"
#include "wese/wiki.hpp"

namespace wese::env {

/// A loaded environment definition: one deterministic world (or corpus) plus
/// its task suite and stored witness solutions.
struct WorldBundle {
  std::string kind;  // "household" | "wiki-qa"
  household::World world;
  wiki::Corpus corpus;
  std::string source;  // provenance label for task descriptors

  std::vector<Task> tasks() const;
  Task task_by_id(const std::string& id) const;  // throws ConfigError

  /// The stored witness solution generated alongside the task.
  std::vector<std::string> witness(const std::string& task_id) const;
};

/// Deterministic task-suite generation; witnesses are produced alongside and
/// replay-validated before the bundle is returned.
WorldBundle generate_bundle(const std::string& kind, uint64_t seed, int count,
                            bool milestone_rewards = false);

WorldBundle load_bundle(const std::string& path);
void save_bundle(const WorldBundle& bundle, const std::string& path);

std::unique_ptr<Episode> make_episode(const WorldBundle& bundle, const std::string& task_id);

struct WitnessReport {
  bool ok = false;
  int steps = 0;
  std::string detail;
};

/// Replays the stored witness through step; ok iff it ends done with a full
/// reward and no action fell through to "Nothing happens."
WitnessReport replay_witness(const WorldBundle& bundle, const std::string& task_id);

}  // namespace wese::env
