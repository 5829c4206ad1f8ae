#include "langgrid/manual.hpp"

#include <algorithm>
#include <numeric>

#include "langgrid/error.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::text {

std::string_view canonical_pattern(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::rtfm_goal: return "defeat {team}";
    case TemplateKind::rtfm_team: return "{monster} belongs to {team}";
    case TemplateKind::rtfm_modifier: return "{modifier} beats {element}";
    case TemplateKind::messenger: return "{task}";
  }
  return "";
}

std::string render_sentence(const SentenceSource& source, const TemplateCorpus& corpus) {
  if (source.template_id < 0) {
    Template t{source.kind, -1, TemplateSplit::all, std::string(canonical_pattern(source.kind))};
    return t.fill(source.fillers);
  }
  return corpus.get(source.kind, source.template_id).fill(source.fillers);
}

Manual reconstruct(const Manual& manual, const TemplateCorpus& corpus) {
  Manual out;
  out.provenance = manual.provenance;
  out.goal_source = manual.goal_source;
  for (const SentenceSource& s : manual.provenance) {
    out.sentences.push_back(render_sentence(s, corpus));
  }
  out.goal = render_sentence(manual.goal_source, corpus);
  return out;
}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& w) {
  return std::find(v.begin(), v.end(), w) != v.end();
}

void check_rtfm_word(const std::vector<std::string> RtfmVocabulary::*list, const std::string& word,
                     std::string_view what) {
  if (contains(rtfm_base_vocabulary().*list, word) || contains(rtfm_new_vocabulary().*list, word)) {
    return;
  }
  throw GenerationError("manual: out-of-vocabulary " + std::string(what) + " '" + word + "'");
}

int pick_template(TemplateKind kind, bool templated, const TemplateCorpus& corpus, Rng& rng) {
  if (!templated) return -1;
  const auto list = corpus.templates(kind);
  return list[static_cast<std::size_t>(rng.below(list.size()))].id;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  if (v.empty()) throw GenerationError("manual: empty choice");
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

void shuffle_document(Manual& m, Rng& rng) {
  std::vector<std::size_t> order(m.sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));
  Manual shuffled;
  for (std::size_t i : order) {
    shuffled.sentences.push_back(m.sentences[i]);
    shuffled.provenance.push_back(m.provenance[i]);
  }
  m.sentences = std::move(shuffled.sentences);
  m.provenance = std::move(shuffled.provenance);
}

}  // namespace

Manual render_rtfm_manual(const rtfm::Assignment& a, Stage stage, const TemplateCorpus& corpus,
                          Rng& rng) {
  const bool templated = stage.value >= 5;
  check_rtfm_word(&RtfmVocabulary::teams, a.target_team, "team");
  Manual m;
  for (const auto& [monster, team] : a.monster_team) {
    check_rtfm_word(&RtfmVocabulary::monsters, monster, "monster");
    check_rtfm_word(&RtfmVocabulary::teams, team, "team");
    SentenceSource s{TemplateKind::rtfm_team, pick_template(TemplateKind::rtfm_team, templated,
                                                            corpus, rng),
                     {{"monster", monster}, {"team", team}}};
    m.sentences.push_back(render_sentence(s, corpus));
    m.provenance.push_back(std::move(s));
  }
  for (const auto& [modifier, element] : a.modifier_element) {
    check_rtfm_word(&RtfmVocabulary::modifiers, modifier, "modifier");
    check_rtfm_word(&RtfmVocabulary::elements, element, "element");
    SentenceSource s{TemplateKind::rtfm_modifier,
                     pick_template(TemplateKind::rtfm_modifier, templated, corpus, rng),
                     {{"modifier", modifier}, {"element", element}}};
    m.sentences.push_back(render_sentence(s, corpus));
    m.provenance.push_back(std::move(s));
  }
  m.goal_source = SentenceSource{TemplateKind::rtfm_goal,
                                 pick_template(TemplateKind::rtfm_goal, templated, corpus, rng),
                                 {{"team", a.target_team}}};
  m.goal = render_sentence(m.goal_source, corpus);
  shuffle_document(m, rng);
  return m;
}

std::string messenger_task(Stage stage, bool start_with_messages) {
  if (stage.value >= 3) return "get a message and deliver it to a goal";
  return start_with_messages ? "deliver your message to a goal" : "get a message";
}

Manual render_messenger_manual(const messenger::RoleAssignment& a, Stage stage, Split split,
                               const Resources& resources, Rng& rng) {
  const TemplateCorpus& corpus = *resources.corpus;
  const MessengerSplitSets& sets = resources.splits.messenger(split);
  Manual m;
  for (const messenger::PlacedEntity& e : a.entities) {
    std::string entity = pick(corpus.entity_synonyms(e.name), rng);
    if (stage.value >= 3) entity = std::string(to_string(e.movement)) + " " + entity;
    SentenceSource s{TemplateKind::messenger, pick(sets.template_ids, rng),
                     {{"entity", std::move(entity)},
                      {"role", pick(corpus.role_words(e.role), rng)},
                      {"adjective", pick(corpus.adjectives(e.role), rng)}}};
    m.sentences.push_back(render_sentence(s, corpus));
    m.provenance.push_back(std::move(s));
  }
  m.goal_source = SentenceSource{TemplateKind::messenger, -1,
                                 {{"task", messenger_task(stage, a.start_with_messages)}}};
  m.goal = render_sentence(m.goal_source, corpus);
  shuffle_document(m, rng);
  return m;
}

std::vector<std::string> messenger_fillings(const Template& tmpl, const std::string& entity,
                                            Role role, const TemplateCorpus& corpus) {
  std::vector<std::string> out;
  for (const auto& e : corpus.entity_synonyms(entity)) {
    for (const auto& r : corpus.role_words(role)) {
      for (const auto& adj : corpus.adjectives(role)) {
        out.push_back(tmpl.fill({{"entity", e}, {"role", r}, {"adjective", adj}}));
      }
    }
  }
  return out;
}

}  // namespace langgrid::text
