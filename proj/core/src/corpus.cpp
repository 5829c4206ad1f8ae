#include "langgrid/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "langgrid/error.hpp"

namespace langgrid::text {

extern const char kBuiltinCorpus[];

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<TemplateKind> parse_kind(std::string_view s) {
  if (s == "rtfm.goal") return TemplateKind::rtfm_goal;
  if (s == "rtfm.team") return TemplateKind::rtfm_team;
  if (s == "rtfm.modifier") return TemplateKind::rtfm_modifier;
  if (s == "messenger") return TemplateKind::messenger;
  return std::nullopt;
}

std::optional<Role> parse_role(std::string_view s) {
  if (s == "enemy") return Role::enemy;
  if (s == "message") return Role::message;
  if (s == "goal") return Role::goal;
  return std::nullopt;
}

std::vector<std::string> expected_blanks(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::rtfm_goal: return {"team"};
    case TemplateKind::rtfm_team: return {"monster", "team"};
    case TemplateKind::rtfm_modifier: return {"element", "modifier"};
    case TemplateKind::messenger: return {"adjective", "entity", "role"};
  }
  return {};
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw FormatError("corpus line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

std::string_view to_string(TemplateKind k) {
  switch (k) {
    case TemplateKind::rtfm_goal: return "rtfm.goal";
    case TemplateKind::rtfm_team: return "rtfm.team";
    case TemplateKind::rtfm_modifier: return "rtfm.modifier";
    case TemplateKind::messenger: return "messenger";
  }
  return "";
}

std::vector<std::string> Template::blanks() const {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    const std::size_t end = text.find('}', pos);
    if (end == std::string::npos) break;
    out.push_back(text.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  return out;
}

std::string Template::fill(const std::map<std::string, std::string>& fillers) const {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    const std::size_t close = text.find('}', open);
    if (close == std::string::npos) throw FormatError("template: unterminated blank");
    out.append(text, pos, open - pos);
    const std::string name = text.substr(open + 1, close - open - 1);
    auto it = fillers.find(name);
    if (it == fillers.end()) throw FormatError("template: no filler for {" + name + "}");
    out += it->second;
    pos = close + 1;
  }
  return out;
}

TemplateCorpus TemplateCorpus::parse(std::string_view text) {
  TemplateCorpus corpus;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;

    const std::size_t bar = line.find('|');
    if (bar == std::string_view::npos) fail(line_no, "missing '|'");
    auto head = words(line.substr(0, bar));
    std::string_view body = trim(line.substr(bar + 1));
    if (head.empty()) fail(line_no, "empty record");

    if (head[0] == "template") {
      if (head.size() != 4) fail(line_no, "expected 'template <kind> <id> <split>'");
      auto kind = parse_kind(head[1]);
      if (!kind) fail(line_no, "unknown template kind '" + std::string(head[1]) + "'");
      Template t;
      t.kind = *kind;
      auto [p, ec] = std::from_chars(head[2].data(), head[2].data() + head[2].size(), t.id);
      if (ec != std::errc() || p != head[2].data() + head[2].size()) fail(line_no, "bad id");
      if (head[3] == "all") {
        t.split = TemplateSplit::all;
      } else if (head[3] == "train") {
        t.split = TemplateSplit::train;
      } else if (head[3] == "eval") {
        t.split = TemplateSplit::eval;
      } else {
        fail(line_no, "bad split tag");
      }
      t.text = std::string(body);
      auto& list = corpus.templates_[t.kind];
      if (t.id != static_cast<int>(list.size())) fail(line_no, "template ids must be dense");
      auto blanks = t.blanks();
      std::sort(blanks.begin(), blanks.end());
      if (blanks != expected_blanks(t.kind)) fail(line_no, "wrong blanks for template kind");
      list.push_back(std::move(t));
    } else if (head[0] == "synonyms") {
      if (head.size() != 3) fail(line_no, "expected 'synonyms <class> <key>'");
      std::vector<std::string> list;
      std::size_t p = 0;
      while (p <= body.size()) {
        std::size_t comma = body.find(',', p);
        if (comma == std::string_view::npos) comma = body.size();
        std::string_view w = trim(body.substr(p, comma - p));
        if (w.empty()) fail(line_no, "empty synonym");
        list.emplace_back(w);
        p = comma + 1;
      }
      if (head[1] == "entity") {
        corpus.entity_synonyms_[std::string(head[2])] = std::move(list);
      } else {
        auto role = parse_role(head[2]);
        if (!role) fail(line_no, "unknown role '" + std::string(head[2]) + "'");
        if (head[1] == "role") {
          corpus.role_words_[*role] = std::move(list);
        } else if (head[1] == "adjective") {
          corpus.adjectives_[*role] = std::move(list);
        } else {
          fail(line_no, "unknown synonym class");
        }
      }
    } else {
      fail(line_no, "unknown record '" + std::string(head[0]) + "'");
    }
  }
  return corpus;
}

std::string_view TemplateCorpus::builtin_text() { return kBuiltinCorpus; }

const TemplateCorpus& TemplateCorpus::builtin() {
  static const TemplateCorpus corpus = [] {
    TemplateCorpus c = parse(builtin_text());
    c.verify();
    return c;
  }();
  return corpus;
}

std::span<const Template> TemplateCorpus::templates(TemplateKind kind) const {
  auto it = templates_.find(kind);
  if (it == templates_.end()) return {};
  return it->second;
}

const Template& TemplateCorpus::get(TemplateKind kind, int id) const {
  auto list = templates(kind);
  if (id < 0 || static_cast<std::size_t>(id) >= list.size()) {
    throw FormatError("corpus: no " + std::string(to_string(kind)) + " template " +
                      std::to_string(id));
  }
  return list[static_cast<std::size_t>(id)];
}

const std::vector<std::string>& TemplateCorpus::entity_synonyms(std::string_view entity) const {
  auto it = entity_synonyms_.find(entity);
  if (it == entity_synonyms_.end()) {
    throw FormatError("corpus: no synonyms for entity '" + std::string(entity) + "'");
  }
  return it->second;
}

const std::vector<std::string>& TemplateCorpus::role_words(Role role) const {
  auto it = role_words_.find(role);
  if (it == role_words_.end()) throw FormatError("corpus: no role words");
  return it->second;
}

const std::vector<std::string>& TemplateCorpus::adjectives(Role role) const {
  auto it = adjectives_.find(role);
  if (it == adjectives_.end()) throw FormatError("corpus: no adjectives");
  return it->second;
}

std::vector<std::string> TemplateCorpus::entities() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entity_synonyms_) out.push_back(name);
  return out;
}

CorpusCounts TemplateCorpus::counts() const {
  CorpusCounts c;
  c.goal_templates = static_cast<int>(templates(TemplateKind::rtfm_goal).size());
  c.team_templates = static_cast<int>(templates(TemplateKind::rtfm_team).size());
  c.modifier_templates = static_cast<int>(templates(TemplateKind::rtfm_modifier).size());
  c.messenger_templates = static_cast<int>(templates(TemplateKind::messenger).size());

  // Fillings per (template, entity-role assignment): every synonym choice must
  // have the same count for the combinatorics to be uniform; use the minimum.
  std::set<std::size_t> entity_counts, role_counts, adjective_counts;
  for (const auto& [_, syn] : entity_synonyms_) entity_counts.insert(syn.size());
  for (const auto& [_, syn] : role_words_) role_counts.insert(syn.size());
  for (const auto& [_, syn] : adjectives_) adjective_counts.insert(syn.size());
  if (entity_counts.size() == 1 && role_counts.size() == 1 && adjective_counts.size() == 1 &&
      role_words_.size() == 3 && adjectives_.size() == 3) {
    c.fillings_per_template =
        static_cast<int>(*entity_counts.begin() * *role_counts.begin() * *adjective_counts.begin());
  }
  c.messenger_descriptions = c.messenger_templates * c.fillings_per_template;
  return c;
}

void TemplateCorpus::verify() const {
  const CorpusCounts c = counts();
  if (c != kExpectedCounts) {
    throw FormatError("corpus counts " + std::to_string(c.goal_templates) + "/" +
                      std::to_string(c.team_templates) + "/" +
                      std::to_string(c.modifier_templates) + ", " +
                      std::to_string(c.messenger_templates) + "x" +
                      std::to_string(c.fillings_per_template) + "=" +
                      std::to_string(c.messenger_descriptions) + " do not match 12/10/10, 82x27=2214");
  }
  std::set<std::string> seen;
  for (const Template& t : templates(TemplateKind::messenger)) {
    if (!seen.insert(t.text).second) throw FormatError("corpus: duplicate template '" + t.text + "'");
  }
  for (const std::string& name : entities()) {
    if (entity_synonyms(name).empty()) throw FormatError("corpus: empty synonym list");
  }
}

}  // namespace langgrid::text
