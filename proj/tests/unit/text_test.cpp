#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <set>

#include "langgrid/corpus.hpp"
#include "langgrid/error.hpp"
#include "langgrid/manual.hpp"
#include "langgrid/splits.hpp"
#include "langgrid/vocabulary.hpp"

namespace langgrid::text {
namespace {

const Resources& res() { return Resources::builtin(); }

TEST(Corpus, BuiltinCountsAreExact) {
  const TemplateCorpus& c = TemplateCorpus::builtin();
  EXPECT_NO_THROW(c.verify());
  const CorpusCounts n = c.counts();
  EXPECT_EQ(n.goal_templates, 12);
  EXPECT_EQ(n.team_templates, 10);
  EXPECT_EQ(n.modifier_templates, 10);
  EXPECT_EQ(n.messenger_templates, 82);
  EXPECT_EQ(n.fillings_per_template, 27);
  EXPECT_EQ(n.messenger_descriptions, 2214);
}

TEST(Corpus, EveryTemplateHasTwentySevenDistinctFillings) {
  const TemplateCorpus& c = TemplateCorpus::builtin();
  for (const Template& t : c.templates(TemplateKind::messenger)) {
    for (Role role : {Role::enemy, Role::message, Role::goal}) {
      const auto fills = messenger_fillings(t, "dog", role, c);
      EXPECT_EQ(fills.size(), 27u);
      EXPECT_EQ(std::set<std::string>(fills.begin(), fills.end()).size(), 27u) << t.text;
    }
  }
}

TEST(Corpus, ParseRejectsBadInput) {
  EXPECT_THROW(TemplateCorpus::parse("template rtfm.goal 0 all | defeat {monster}\n"),
               FormatError);
  EXPECT_THROW(TemplateCorpus::parse("template rtfm.goal 1 all | defeat {team}\n"), FormatError);
  EXPECT_THROW(TemplateCorpus::parse("bogus line\n"), FormatError);
}

TEST(Corpus, VerifyRejectsTruncatedCorpus) {
  const std::string text(TemplateCorpus::builtin_text());
  const auto cut = text.find("template rtfm.goal 11");
  std::string truncated = text.substr(0, cut) + text.substr(text.find('\n', cut) + 1);
  EXPECT_THROW(TemplateCorpus::parse(truncated).verify(), FormatError);
}

TEST(Splits, RtfmTrainEvalDisjoint) {
  const SplitSpec& s = res().splits;
  for (const auto& mt : s.rtfm_train.monster_team) {
    for (const auto& me : s.rtfm_train.modifier_element) {
      EXPECT_FALSE(s.rtfm_eval.monster_team.count(mt) && s.rtfm_eval.modifier_element.count(me));
    }
  }
  for (const auto& p : s.rtfm_eval.monster_team) EXPECT_FALSE(s.rtfm_train.monster_team.count(p));
  for (const auto& p : s.rtfm_eval.modifier_element) {
    EXPECT_FALSE(s.rtfm_train.modifier_element.count(p));
  }
}

TEST(Splits, EvalNewUsesOnlyNewWords) {
  const RtfmSplitSets& n = res().splits.rtfm_eval_new;
  const RtfmVocabulary& base = rtfm_base_vocabulary();
  const RtfmVocabulary& fresh = rtfm_new_vocabulary();
  for (const auto& [m, t] : n.monster_team) {
    EXPECT_NE(std::find(fresh.monsters.begin(), fresh.monsters.end(), m), fresh.monsters.end());
    EXPECT_EQ(std::find(base.monsters.begin(), base.monsters.end(), m), base.monsters.end());
  }
  for (const auto& [m, e] : n.modifier_element) {
    EXPECT_NE(std::find(fresh.modifiers.begin(), fresh.modifiers.end(), m), fresh.modifiers.end());
  }
  for (const auto& w : n.weapons) {
    EXPECT_NE(std::find(fresh.weapons.begin(), fresh.weapons.end(), w), fresh.weapons.end());
  }
  for (const char* m : {"tiger", "bear", "puma"}) {
    EXPECT_NE(std::find(n.monsters.begin(), n.monsters.end(), m), n.monsters.end()) << m;
  }
}

TEST(Splits, MessengerEvalUnseenInTrain) {
  const SplitSpec& s = res().splits;
  for (const auto& p : s.messenger_eval.entity_role) {
    EXPECT_FALSE(s.messenger_train.entity_role.count(p));
  }
  for (int id : s.messenger_eval.template_ids) {
    EXPECT_EQ(std::count(s.messenger_train.template_ids.begin(),
                         s.messenger_train.template_ids.end(), id),
              0);
  }
  EXPECT_EQ(s.messenger_eval.template_ids.size() + s.messenger_train.template_ids.size(), 82u);
  for (Role r : {Role::enemy, Role::message, Role::goal}) {
    EXPECT_GE(s.messenger_eval.entities_with(r).size(), 2u);
    EXPECT_GE(s.messenger_train.entities_with(r).size(), 2u);
  }
}

TEST(Splits, SameSeedSameDigest) {
  Rng a(kDefaultSplitSeed);
  Rng b(kDefaultSplitSeed);
  const SplitSpec x = make_splits(a, TemplateCorpus::builtin());
  const SplitSpec y = make_splits(b, TemplateCorpus::builtin());
  EXPECT_EQ(x.digest(), y.digest());
  EXPECT_EQ(x.canonical(), y.canonical());
  Rng c(kDefaultSplitSeed + 1);
  EXPECT_NE(make_splits(c, TemplateCorpus::builtin()).digest(), x.digest());
}

rtfm::Assignment s1_assignment() {
  rtfm::Assignment a;
  a.monster_team = {{"goblin", "star alliance"}, {"wolf", "star alliance"}};
  a.modifier_element = {{"blessed", "cold"}, {"shimmering", "fire"}};
  a.target_team = "star alliance";
  a.target_monsters = {0, 1};
  a.correct_items = {2, 3};
  return a;
}

TEST(RtfmManual, S1CanonicalFacts) {
  Rng rng(1);
  const Manual m = render_rtfm_manual(s1_assignment(), Stage{1}, TemplateCorpus::builtin(), rng);
  ASSERT_EQ(m.sentences.size(), 4u);
  EXPECT_EQ(m.goal, "defeat star alliance");
  std::set<std::string> got(m.sentences.begin(), m.sentences.end());
  EXPECT_EQ(got, (std::set<std::string>{"goblin belongs to star alliance",
                                        "wolf belongs to star alliance", "blessed beats cold",
                                        "shimmering beats fire"}));
  for (const auto& p : m.provenance) EXPECT_EQ(p.template_id, -1);
}

TEST(RtfmManual, S5SameFactsDifferentSurface) {
  Rng a(1), b(2);
  const Manual x = render_rtfm_manual(s1_assignment(), Stage{5}, TemplateCorpus::builtin(), a);
  const Manual y = render_rtfm_manual(s1_assignment(), Stage{5}, TemplateCorpus::builtin(), b);
  auto facts = [](const Manual& m) {
    std::multiset<std::map<std::string, std::string>> out;
    for (const auto& p : m.provenance) out.insert(p.fillers);
    return out;
  };
  EXPECT_EQ(facts(x), facts(y));
  EXPECT_NE(x.sentences, y.sentences);
}

TEST(RtfmManual, OutOfVocabularyThrows) {
  rtfm::Assignment a = s1_assignment();
  a.monster_team[0].first = "dragon";
  Rng rng(1);
  EXPECT_THROW(render_rtfm_manual(a, Stage{1}, TemplateCorpus::builtin(), rng), GenerationError);
}

TEST(RtfmManual, ShuffledAcrossSeeds) {
  std::set<std::vector<std::string>> orders;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    orders.insert(render_rtfm_manual(s1_assignment(), Stage{1}, TemplateCorpus::builtin(), rng)
                      .sentences);
  }
  EXPECT_GT(orders.size(), 5u);
}

TEST(Manual, ProvenanceReconstructsSentences) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Manual m = render_rtfm_manual(s1_assignment(), Stage{1 + static_cast<int>(seed % 5)},
                                        TemplateCorpus::builtin(), rng);
    const Manual r = reconstruct(m, TemplateCorpus::builtin());
    EXPECT_EQ(r.sentences, m.sentences);
    EXPECT_EQ(r.goal, m.goal);
  }
}

}  // namespace
}  // namespace langgrid::text
