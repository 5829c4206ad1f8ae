#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "langgrid/corpus.hpp"
#include "langgrid/rng.hpp"
#include "langgrid/types.hpp"

namespace langgrid::text {

using WordPair = std::pair<std::string, std::string>;

/// Allowed RTFM dynamics for one split. An episode may only state
/// "<monster> belongs to <team>" for pairs in monster_team and
/// "<modifier> beats <element>" for pairs in modifier_element.
struct RtfmSplitSets {
  std::vector<std::string> monsters;
  std::vector<std::string> weapons;
  std::vector<std::string> modifiers;
  std::vector<std::string> elements;
  std::vector<std::string> teams;
  std::set<WordPair> monster_team;
  std::set<WordPair> modifier_element;

  std::vector<std::string> monsters_of(const std::string& team) const;
  std::vector<std::string> modifiers_beating(const std::string& element) const;
  std::vector<std::string> teams_of(const std::string& monster) const;
};

/// Allowed MESSENGER (entity, role) pairs and template ids for one split.
struct MessengerSplitSets {
  std::set<std::pair<std::string, Role>> entity_role;
  std::vector<int> template_ids;

  std::vector<std::string> entities_with(Role role) const;
};

/// Deterministic partition of the assignment space into train / eval / eval_new.
struct SplitSpec {
  std::uint64_t seed = 0;
  RtfmSplitSets rtfm_train;
  RtfmSplitSets rtfm_eval;
  RtfmSplitSets rtfm_eval_new;
  MessengerSplitSets messenger_train;
  MessengerSplitSets messenger_eval;

  const RtfmSplitSets& rtfm(Split split) const;
  /// Throws ConfigError for eval_new (MESSENGER has no new-word split).
  const MessengerSplitSets& messenger(Split split) const;

  std::string canonical() const;
  std::string digest() const;
};

inline constexpr std::uint64_t kDefaultSplitSeed = 1;

/// Builds the partition. Every train monster gets exactly one eval team and
/// every train modifier exactly one eval element (balanced over teams and
/// elements); the remaining pairs form the train set, so train and eval
/// monster-team-modifier-element assignments never coincide. MESSENGER entities
/// each get one held-out role; templates follow the corpus split tags.
SplitSpec make_splits(Rng& rng, const TemplateCorpus& corpus);

/// Shared immutable resources: corpus plus split partition.
struct Resources {
  const TemplateCorpus* corpus = nullptr;
  SplitSpec splits;

  static const Resources& builtin();
};

}  // namespace langgrid::text
