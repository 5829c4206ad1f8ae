#pragma once

#include <string>
#include <vector>

namespace langgrid::text {

/// Word lists for multi-agent RTFM. Teams and elements are shared by every split.
struct RtfmVocabulary {
  std::vector<std::string> monsters;
  std::vector<std::string> weapons;
  std::vector<std::string> modifiers;
  std::vector<std::string> elements;
  std::vector<std::string> teams;
};

/// Words used by the train and eval splits.
const RtfmVocabulary& rtfm_base_vocabulary();

/// Entirely new monsters, weapons and modifiers for the eval_new split.
const RtfmVocabulary& rtfm_new_vocabulary();

/// The twelve MESSENGER entity names; symbol ids follow this order.
const std::vector<std::string>& messenger_entities();

/// First entity symbol; entity k renders as kFirstEntitySymbol + k.
inline constexpr int kFirstEntitySymbol = 2;

/// Agent symbols in MESSENGER observations.
inline constexpr int kSymbolSelf = 15;
inline constexpr int kSymbolSelfWithMessage = 16;
inline constexpr int kSymbolAlly = 17;
inline constexpr int kSymbolAllyWithMessage = 18;

}  // namespace langgrid::text
