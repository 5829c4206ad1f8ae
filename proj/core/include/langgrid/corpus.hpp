#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langgrid/types.hpp"

namespace langgrid::text {

enum class TemplateKind { rtfm_goal, rtfm_team, rtfm_modifier, messenger };
enum class TemplateSplit { all, train, eval };

std::string_view to_string(TemplateKind k);

struct Template {
  TemplateKind kind = TemplateKind::rtfm_goal;
  int id = 0;
  TemplateSplit split = TemplateSplit::all;
  std::string text;  // blanks written as {name}

  /// Replaces every {name} with fillers.at(name). Throws FormatError on a missing filler.
  std::string fill(const std::map<std::string, std::string>& fillers) const;
  std::vector<std::string> blanks() const;
};

struct CorpusCounts {
  int goal_templates = 0;
  int team_templates = 0;
  int modifier_templates = 0;
  int messenger_templates = 0;
  int fillings_per_template = 0;  // entity x role x adjective synonyms
  int messenger_descriptions = 0;

  friend bool operator==(const CorpusCounts&, const CorpusCounts&) = default;
};

inline constexpr CorpusCounts kExpectedCounts{12, 10, 10, 82, 27, 2214};

/// Template corpus loaded from the line-oriented corpus format (see docs/formats.md).
/// Immutable after construction.
class TemplateCorpus {
 public:
  static TemplateCorpus parse(std::string_view text);
  /// The corpus compiled into the library from core/data/corpus.txt.
  static const TemplateCorpus& builtin();
  static std::string_view builtin_text();

  std::span<const Template> templates(TemplateKind kind) const;
  const Template& get(TemplateKind kind, int id) const;

  const std::vector<std::string>& entity_synonyms(std::string_view entity) const;
  const std::vector<std::string>& role_words(Role role) const;
  const std::vector<std::string>& adjectives(Role role) const;
  std::vector<std::string> entities() const;

  CorpusCounts counts() const;
  /// Throws FormatError unless counts() equals kExpectedCounts and every
  /// template carries exactly the blanks of its kind.
  void verify() const;

 private:
  std::map<TemplateKind, std::vector<Template>> templates_;
  std::map<std::string, std::vector<std::string>, std::less<>> entity_synonyms_;
  std::map<Role, std::vector<std::string>> role_words_;
  std::map<Role, std::vector<std::string>> adjectives_;
};

}  // namespace langgrid::text
