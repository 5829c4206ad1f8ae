#include "langgrid/splits.hpp"

#include <algorithm>
#include <sstream>

#include "langgrid/error.hpp"
#include "langgrid/transcript.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::text {

std::vector<std::string> RtfmSplitSets::monsters_of(const std::string& team) const {
  std::vector<std::string> out;
  for (const auto& m : monsters) {
    if (monster_team.count({m, team})) out.push_back(m);
  }
  return out;
}

std::vector<std::string> RtfmSplitSets::modifiers_beating(const std::string& element) const {
  std::vector<std::string> out;
  for (const auto& m : modifiers) {
    if (modifier_element.count({m, element})) out.push_back(m);
  }
  return out;
}

std::vector<std::string> RtfmSplitSets::teams_of(const std::string& monster) const {
  std::vector<std::string> out;
  for (const auto& t : teams) {
    if (monster_team.count({monster, t})) out.push_back(t);
  }
  return out;
}

std::vector<std::string> MessengerSplitSets::entities_with(Role role) const {
  std::vector<std::string> out;
  for (const auto& name : messenger_entities()) {
    if (entity_role.count({name, role})) out.push_back(name);
  }
  return out;
}

const RtfmSplitSets& SplitSpec::rtfm(Split split) const {
  switch (split) {
    case Split::train: return rtfm_train;
    case Split::eval: return rtfm_eval;
    case Split::eval_new: return rtfm_eval_new;
  }
  return rtfm_train;
}

const MessengerSplitSets& SplitSpec::messenger(Split split) const {
  switch (split) {
    case Split::train: return messenger_train;
    case Split::eval: return messenger_eval;
    case Split::eval_new: break;
  }
  throw ConfigError("messenger has no eval_new split");
}

namespace {

void write_rtfm(std::ostream& os, std::string_view name, const RtfmSplitSets& s) {
  os << name << ".monster_team";
  for (const auto& [a, b] : s.monster_team) os << ' ' << a << '/' << b;
  os << '\n' << name << ".modifier_element";
  for (const auto& [a, b] : s.modifier_element) os << ' ' << a << '/' << b;
  os << '\n' << name << ".weapons";
  for (const auto& w : s.weapons) os << ' ' << w;
  os << '\n';
}

void write_messenger(std::ostream& os, std::string_view name, const MessengerSplitSets& s) {
  os << name << ".entity_role";
  for (const auto& [e, r] : s.entity_role) os << ' ' << e << '/' << to_string(r);
  os << '\n' << name << ".templates";
  for (int id : s.template_ids) os << ' ' << id;
  os << '\n';
}

RtfmSplitSets full_sets(const RtfmVocabulary& v) {
  RtfmSplitSets s{v.monsters, v.weapons, v.modifiers, v.elements, v.teams, {}, {}};
  for (const auto& m : v.monsters) {
    for (const auto& t : v.teams) s.monster_team.insert({m, t});
  }
  for (const auto& m : v.modifiers) {
    for (const auto& e : v.elements) s.modifier_element.insert({m, e});
  }
  return s;
}

}  // namespace

std::string SplitSpec::canonical() const {
  std::ostringstream os;
  write_rtfm(os, "rtfm.train", rtfm_train);
  write_rtfm(os, "rtfm.eval", rtfm_eval);
  write_rtfm(os, "rtfm.eval_new", rtfm_eval_new);
  write_messenger(os, "messenger.train", messenger_train);
  write_messenger(os, "messenger.eval", messenger_eval);
  return os.str();
}

std::string SplitSpec::digest() const { return hex64(fnv1a64(canonical())); }

SplitSpec make_splits(Rng& rng, const TemplateCorpus& corpus) {
  const RtfmVocabulary& base = rtfm_base_vocabulary();
  if (base.monsters.size() < base.teams.size() * 2 ||
      base.modifiers.size() < base.elements.size() * 2) {
    throw GenerationError("make_splits: vocabulary too small to partition");
  }

  SplitSpec spec;
  spec.seed = rng.key();
  RtfmSplitSets all = full_sets(base);
  spec.rtfm_train = all;
  spec.rtfm_eval = all;
  spec.rtfm_eval.monster_team.clear();
  spec.rtfm_eval.modifier_element.clear();

  // Round-robin over a shuffled order keeps every team / element equally
  // represented in the held-out pairs.
  std::vector<std::string> monsters = base.monsters;
  Rng mrng = rng.child("rtfm-monsters");
  mrng.shuffle(std::span(monsters));
  std::vector<std::string> teams = base.teams;
  mrng.shuffle(std::span(teams));
  for (std::size_t i = 0; i < monsters.size(); ++i) {
    WordPair p{monsters[i], teams[i % teams.size()]};
    spec.rtfm_eval.monster_team.insert(p);
    spec.rtfm_train.monster_team.erase(p);
  }

  std::vector<std::string> modifiers = base.modifiers;
  Rng frng = rng.child("rtfm-modifiers");
  frng.shuffle(std::span(modifiers));
  std::vector<std::string> elements = base.elements;
  frng.shuffle(std::span(elements));
  for (std::size_t i = 0; i < modifiers.size(); ++i) {
    WordPair p{modifiers[i], elements[i % elements.size()]};
    spec.rtfm_eval.modifier_element.insert(p);
    spec.rtfm_train.modifier_element.erase(p);
  }

  spec.rtfm_eval_new = full_sets(rtfm_new_vocabulary());

  // MESSENGER: each entity gets one held-out role, four entities per role.
  std::vector<std::string> ents = messenger_entities();
  Rng erng = rng.child("messenger-entities");
  erng.shuffle(std::span(ents));
  const Role roles[] = {Role::enemy, Role::message, Role::goal};
  for (const auto& e : messenger_entities()) {
    for (Role r : roles) spec.messenger_train.entity_role.insert({e, r});
  }
  for (std::size_t i = 0; i < ents.size(); ++i) {
    std::pair<std::string, Role> p{ents[i], roles[i % 3]};
    spec.messenger_eval.entity_role.insert(p);
    spec.messenger_train.entity_role.erase(p);
  }
  for (const Template& t : corpus.templates(TemplateKind::messenger)) {
    if (t.split == TemplateSplit::eval) {
      spec.messenger_eval.template_ids.push_back(t.id);
    } else {
      spec.messenger_train.template_ids.push_back(t.id);
    }
  }
  if (spec.messenger_eval.template_ids.empty() || spec.messenger_train.template_ids.empty()) {
    throw GenerationError("make_splits: corpus lacks train or eval messenger templates");
  }
  return spec;
}

const Resources& Resources::builtin() {
  static const Resources r = [] {
    Resources out;
    out.corpus = &TemplateCorpus::builtin();
    Rng rng(kDefaultSplitSeed);
    out.splits = make_splits(rng, *out.corpus);
    return out;
  }();
  return r;
}

}  // namespace langgrid::text
