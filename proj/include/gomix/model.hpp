#pragma once

#include <memory>
#include <optional>

#include "gomix/graybox.hpp"
#include "gomix/linkage.hpp"
#include "gomix/scheduling.hpp"

namespace gomix {

enum class LinkageKind {
  learned_lt,   // relearned from the population every generation
  fixed_tree,   // learned once from problem structure (FLT / bounded FLT)
};

struct ModelConfig {
  LinkageKind kind = LinkageKind::fixed_tree;
  std::optional<std::size_t> bound;              // max linkage-set size
  std::optional<SimilarityMatrix> similarity;    // fixed_tree; defaults to 0/1 adjacency
};

// Everything derivable from the problem alone for a fixed model; built once
// per run and shared by all populations.
struct ModelArtifacts {
  Fos fos;
  Vig vig;
  ColorGroups groups;  // empty unless built with groups
};

inline std::shared_ptr<const ModelArtifacts> build_fixed_model(
    const GrayBoxProblem& problem, const ModelConfig& cfg, bool with_groups) {
  if (cfg.kind != LinkageKind::fixed_tree)
    throw std::invalid_argument("model: only fixed models can be prebuilt");
  auto artifacts = std::make_shared<ModelArtifacts>();
  artifacts->vig = build_vig(problem);
  if (problem.num_variables() == 1) {
    // Too small for clustering; the only sensible family is the singleton.
    artifacts->fos.num_variables = 1;
    artifacts->fos.sets = {{0}};
    artifacts->fos.children = {{-1, -1}};
  } else {
    const SimilarityMatrix sim =
        cfg.similarity ? *cfg.similarity : vig_similarity(artifacts->vig);
    if (sim.size() != problem.num_variables())
      throw std::invalid_argument("model: similarity size mismatch");
    artifacts->fos = learn_tree_upgma(sim, cfg.bound);
  }
  if (with_groups)
    artifacts->groups = welsh_powell(build_lmig(artifacts->fos, artifacts->vig));
  return artifacts;
}

}  // namespace gomix
