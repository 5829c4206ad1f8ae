#pragma once

#include <map>
#include <string>
#include <vector>

#include "langgrid/corpus.hpp"
#include "langgrid/messenger.hpp"
#include "langgrid/rng.hpp"
#include "langgrid/rtfm.hpp"
#include "langgrid/splits.hpp"

namespace langgrid::text {

/// Where a sentence came from. template_id -1 selects the canonical pattern of the kind.
struct SentenceSource {
  TemplateKind kind = TemplateKind::rtfm_goal;
  int template_id = -1;
  std::map<std::string, std::string> fillers;
  friend bool operator==(const SentenceSource&, const SentenceSource&) = default;
};

struct Manual {
  std::vector<std::string> sentences;  // document, shuffled per episode
  std::string goal;
  std::vector<SentenceSource> provenance;  // parallel to sentences
  SentenceSource goal_source;
};

/// Canonical (untemplated) patterns:
///   rtfm_goal     "defeat {team}"
///   rtfm_team     "{monster} belongs to {team}"
///   rtfm_modifier "{modifier} beats {element}"
///   messenger     "{task}"  (goal sentences only)
std::string_view canonical_pattern(TemplateKind kind);

/// Renders one sentence from its provenance.
std::string render_sentence(const SentenceSource& source, const TemplateCorpus& corpus);

/// Rebuilds the sentences and goal of `manual` from provenance alone.
Manual reconstruct(const Manual& manual, const TemplateCorpus& corpus);

/// One team statement per monster_team pair and one modifier statement per
/// modifier_element pair, plus the goal. S1-S4 use the canonical forms, S5 samples
/// a template per statement. Throws GenerationError on an out-of-vocabulary word.
Manual render_rtfm_manual(const rtfm::Assignment& assignment, Stage stage,
                          const TemplateCorpus& corpus, Rng& rng);

/// One description per placed entity from the split's templates, with uniformly
/// drawn entity, role and adjective synonyms. At S3 the entity phrase carries the
/// movement type ("chasing hound").
Manual render_messenger_manual(const messenger::RoleAssignment& assignment, Stage stage,
                               Split split, const Resources& resources, Rng& rng);

/// Goal sentence for a MESSENGER episode mode.
std::string messenger_task(Stage stage, bool start_with_messages);

/// Every filling of `tmpl` describing `entity` in `role` (entity x role x adjective synonyms).
std::vector<std::string> messenger_fillings(const Template& tmpl, const std::string& entity,
                                            Role role, const TemplateCorpus& corpus);

}  // namespace langgrid::text
