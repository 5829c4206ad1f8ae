#include "langgrid/vocabulary.hpp"

namespace langgrid::text {

const RtfmVocabulary& rtfm_base_vocabulary() {
  static const RtfmVocabulary v{
      {"wolf", "jaguar", "panther", "goblin", "bat", "imp", "shaman", "ghost", "zombie"},
      {"sword", "axe", "morningstar", "polearm", "knife", "katana", "cutlass", "spear"},
      {"grandmaster", "blessed", "shimmering", "gleaming", "fanatical", "mysterious", "soldier",
       "arcane"},
      {"cold", "fire", "lightning", "poison"},
      {"star alliance", "order of the forest", "rebel enclave"},
  };
  return v;
}

const RtfmVocabulary& rtfm_new_vocabulary() {
  static const RtfmVocabulary v{
      {"tiger", "bear", "puma", "elf", "vampire", "gremlin", "witch", "specter", "robot"},
      {"sabre", "tomahawk", "sunglow"},
      {"superstars", "sacred", "glittering", "shiny", "obsessive", "bizarre", "secret",
       "esoteric"},
      rtfm_base_vocabulary().elements,
      rtfm_base_vocabulary().teams,
  };
  return v;
}

const std::vector<std::string>& messenger_entities() {
  static const std::vector<std::string> names{"airplane", "mage",  "dog",   "bird",
                                              "fish",     "scientist", "thief", "ship",
                                              "ball",     "robot", "queen", "sword"};
  return names;
}

}  // namespace langgrid::text
