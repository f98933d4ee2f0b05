#include "wese/wiki.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "wese/errors.hpp"
#include "wese/text.hpp"

namespace wese::env::wiki {

const QaInstance* Corpus::find_qa(const std::string& id) const {
  for (const auto& q : qa) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

const FeverInstance* Corpus::find_fever(const std::string& id) const {
  for (const auto& f : fever) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

void Corpus::validate() const {
  auto check_supporting = [&](const std::vector<std::string>& titles, const std::string& id) {
    for (const auto& t : titles) {
      if (!articles.contains(t)) {
        throw ConfigError("instance " + id + " cites missing article '" + t + "'");
      }
    }
  };
  for (const auto& q : qa) {
    if (q.answers.empty()) throw ConfigError("qa instance " + q.id + " has no answers");
    check_supporting(q.supporting, q.id);
  }
  for (const auto& f : fever) {
    if (f.label != "True" && f.label != "False" && f.label != "Not Clear") {
      throw ConfigError("fever instance " + f.id + " has bad label '" + f.label + "'");
    }
    check_supporting(f.supporting, f.id);
  }
}

std::string normalize_answer(std::string_view raw) {
  std::string lowered = to_lower(raw);
  std::string no_punct;
  no_punct.reserve(lowered.size());
  for (char c : lowered) {
    if (std::isalnum(static_cast<unsigned char>(c)) || std::isspace(static_cast<unsigned char>(c))) {
      no_punct.push_back(c);
    } else {
      no_punct.push_back(' ');
    }
  }
  std::string out;
  for (const auto& tok : split(collapse_ws(no_punct), ' ')) {
    if (tok == "a" || tok == "an" || tok == "the" || tok.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

// ── Generation ──────────────────────────────────────────────────

namespace {

size_t pick(std::mt19937& rng, size_t n) { return n == 0 ? 0 : rng() % n; }

struct Person {
  std::string name;
  std::string city;
  std::string profession;
  std::optional<std::string> film;
};
struct City {
  std::string name;
  std::string country;
  std::string landmark;
};
struct Film {
  std::string name;
  std::string director;
  int year;
};

const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v = {"Alice", "Boris",  "Clara", "Dmitri", "Elena",  "Felix",
                                             "Greta", "Hector", "Irene", "Jonas",  "Katrin", "Lionel",
                                             "Mara",  "Nestor", "Odette", "Pavel"};
  return v;
}
const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v = {"Merrin", "Quent",  "Sorvel", "Tarrow", "Ulmet", "Vantre",
                                             "Welkin", "Yarrow", "Zellic", "Ashford", "Brell", "Corvan"};
  return v;
}
const std::vector<std::string>& city_names() {
  static const std::vector<std::string> v = {"Breton Falls", "Carding",  "Duskmere",  "Eastvale",
                                             "Fennwick",     "Gladeholm", "Harrowgate", "Ironmoor"};
  return v;
}
const std::vector<std::string>& country_names() {
  static const std::vector<std::string> v = {"Valdoria", "Westmark", "Norlund", "Suvania"};
  return v;
}
const std::vector<std::string>& landmark_names() {
  static const std::vector<std::string> v = {"Grand Arch",   "Mirror Canal", "Stone Observatory",
                                             "Old Lighthouse", "Copper Bridge", "Sunken Library"};
  return v;
}
const std::vector<std::string>& professions() {
  static const std::vector<std::string> v = {"baker", "cartographer", "violinist", "botanist",
                                             "printer", "astronomer"};
  return v;
}
const std::vector<std::string>& film_names() {
  static const std::vector<std::string> v = {"The Silent Orchard", "Winter Letters", "A Distant Shore",
                                             "The Glass Season",  "Night Ferry",    "The Last Meridian"};
  return v;
}

}  // namespace

Corpus generate_corpus(uint64_t seed, int qa_count, int fever_count) {
  if (qa_count < 0 || fever_count < 0 || qa_count + fever_count < 1) {
    throw ConfigError("corpus needs at least one instance");
  }
  std::mt19937 rng(static_cast<uint32_t>(seed ^ 0x51f15eedu));
  Corpus corpus;
  corpus.seed = seed;

  std::vector<City> cities;
  for (const auto& name : city_names()) {
    cities.push_back(City{name, country_names()[pick(rng, country_names().size())],
                          landmark_names()[pick(rng, landmark_names().size())]});
  }

  std::vector<Person> people;
  std::set<std::string> used;
  for (const auto& fn : first_names()) {
    const auto& ln = last_names()[pick(rng, last_names().size())];
    std::string name = fn + " " + ln;
    if (!used.insert(name).second) continue;
    Person p;
    p.name = name;
    p.city = cities[pick(rng, cities.size())].name;
    p.profession = professions()[pick(rng, professions().size())];
    people.push_back(std::move(p));
  }

  std::vector<Film> films;
  for (const auto& name : film_names()) {
    films.push_back(Film{name, people[pick(rng, people.size())].name, 1950 + static_cast<int>(pick(rng, 70))});
  }
  for (const auto& f : films) {
    for (auto& p : people) {
      if (p.name == f.director) p.film = f.name;
    }
  }

  for (const auto& p : people) {
    std::vector<std::string> para{p.name + " was born in " + p.city + ".",
                                  p.name + " works as a " + p.profession + "."};
    if (p.film) para.push_back(p.name + " directed " + *p.film + ".");
    corpus.articles[p.name] = {std::move(para)};
  }
  for (const auto& c : cities) {
    corpus.articles[c.name] = {{c.name + " is a city in " + c.country + ".",
                                c.name + " is known for the " + c.landmark + "."}};
  }
  for (const auto& f : films) {
    corpus.articles[f.name] = {{f.name + " was directed by " + f.director + ".",
                                f.name + " was released in " + std::to_string(f.year) + "."}};
  }

  auto city_of = [&](const std::string& name) -> const City& {
    for (const auto& c : cities) {
      if (c.name == name) return c;
    }
    throw ConfigError("unknown city " + name);
  };

  for (int i = 0; i < qa_count; ++i) {
    QaInstance q;
    q.id = "qa-" + std::to_string(i);
    switch (pick(rng, 4)) {
      case 0: {  // one hop: birthplace
        const auto& p = people[pick(rng, people.size())];
        q.question = "Where was " + p.name + " born?";
        q.answers = {p.city};
        q.supporting = {p.name};
        q.witness = {"search[" + p.name + "]", "finish[" + p.city + "]"};
        break;
      }
      case 1: {  // two hop: birth country
        const auto& p = people[pick(rng, people.size())];
        const auto& c = city_of(p.city);
        q.question = "In which country was " + p.name + " born?";
        q.answers = {c.country};
        q.supporting = {p.name, c.name};
        q.witness = {"search[" + p.name + "]", "search[" + c.name + "]", "finish[" + c.country + "]"};
        break;
      }
      case 2: {  // one hop: director
        const auto& f = films[pick(rng, films.size())];
        q.question = "Who directed " + f.name + "?";
        q.answers = {f.director};
        q.supporting = {f.name};
        q.witness = {"search[" + f.name + "]", "finish[" + f.director + "]"};
        break;
      }
      default: {  // two hop: director's birthplace
        const auto& f = films[pick(rng, films.size())];
        std::string city;
        for (const auto& p : people) {
          if (p.name == f.director) city = p.city;
        }
        q.question = "In which city was the director of " + f.name + " born?";
        q.answers = {city};
        q.supporting = {f.name, f.director};
        q.witness = {"search[" + f.name + "]", "search[" + f.director + "]", "finish[" + city + "]"};
        break;
      }
    }
    corpus.qa.push_back(std::move(q));
  }

  for (int i = 0; i < fever_count; ++i) {
    FeverInstance f;
    f.id = "fever-" + std::to_string(i);
    const auto& p = people[pick(rng, people.size())];
    switch (pick(rng, 3)) {
      case 0:
        f.claim = p.name + " was born in " + p.city + ".";
        f.label = "True";
        break;
      case 1: {
        std::string other;
        do {
          other = cities[pick(rng, cities.size())].name;
        } while (other == p.city);
        f.claim = p.name + " was born in " + other + ".";
        f.label = "False";
        break;
      }
      default:
        // The corpus never states anyone's favorite season.
        f.claim = p.name + "'s favorite season is winter.";
        f.label = "Not Clear";
        break;
    }
    f.supporting = {p.name};
    f.witness = {"search[" + p.name + "]", "finish[" + f.label + "]"};
    corpus.fever.push_back(std::move(f));
  }

  corpus.validate();
  return corpus;
}

// ── Search / lookup / finish ────────────────────────────────────

std::vector<std::string> similar_titles(const Corpus& corpus, const std::string& query, int k) {
  if (k < 1) throw UsageError("similar_titles needs k >= 1");
  std::vector<std::string> q_tokens = tokenize_lower(query);
  std::set<std::string> q_set(q_tokens.begin(), q_tokens.end());

  std::vector<std::pair<double, std::string>> scored;
  for (const auto& [title, _] : corpus.articles) {
    std::vector<std::string> t_tokens = tokenize_lower(title);
    std::set<std::string> t_set(t_tokens.begin(), t_tokens.end());
    size_t shared = 0;
    for (const auto& tok : t_set) shared += q_set.contains(tok) ? 1 : 0;
    std::set<std::string> uni = t_set;
    uni.insert(q_set.begin(), q_set.end());
    double score = uni.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni.size());
    scored.emplace_back(score, title);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (const auto& [score, title] : scored) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(title);
  }
  return out;
}

uint64_t State::fingerprint() const {
  std::ostringstream os;
  os << task_id << '\x1f' << page.value_or("-") << '\x1f' << keyword << '\x1f' << cursor << '\x1f'
     << cumulative_reward << '\x1f' << done;
  return fnv1a64(os.str());
}

std::pair<State, Feedback> reset(const Corpus& corpus, const std::string& task_id) {
  State s;
  s.corpus = &corpus;
  s.task_id = task_id;
  Feedback fb;
  if (const QaInstance* q = corpus.find_qa(task_id)) {
    s.is_fever = false;
    fb.text = "Question: " + q->question;
  } else if (const FeverInstance* f = corpus.find_fever(task_id)) {
    s.is_fever = true;
    fb.text = "Claim: " + f->claim + " Is the claim True, False, or Not Clear?";
  } else {
    throw ConfigError("unknown wiki task: " + task_id);
  }
  return {std::move(s), std::move(fb)};
}

ParsedAction parse_action(const std::string& action) {
  std::string a = trim(action);
  auto bracketed = [&](const char* verb) -> std::optional<std::string> {
    std::string lower = to_lower(a);
    std::string v(verb);
    if (lower.rfind(v + "[", 0) != 0) return std::nullopt;
    if (a.back() != ']') return std::nullopt;
    return trim(a.substr(v.size() + 1, a.size() - v.size() - 2));
  };
  if (auto arg = bracketed("search")) return {ParsedAction::Search, *arg};
  if (auto arg = bracketed("lookup")) return {ParsedAction::Lookup, *arg};
  if (auto arg = bracketed("finish")) return {ParsedAction::Finish, *arg};
  return {ParsedAction::Invalid, ""};
}

bool explore_legal(const std::string& action) {
  auto kind = parse_action(action).kind;
  return kind == ParsedAction::Search || kind == ParsedAction::Lookup;
}

bool exploit_legal(const std::string& action) {
  return parse_action(action).kind != ParsedAction::Invalid;
}

namespace {

/// Sentences of an article in document order.
std::vector<std::string> flatten(const Corpus& corpus, const std::string& title) {
  std::vector<std::string> out;
  for (const auto& para : corpus.articles.at(title)) {
    for (const auto& s : para) out.push_back(s);
  }
  return out;
}

std::optional<std::string> exact_title(const Corpus& corpus, const std::string& query) {
  std::string nq = to_lower(collapse_ws(query));
  for (const auto& [title, _] : corpus.articles) {
    if (to_lower(title) == nq) return title;
  }
  return std::nullopt;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return false;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

}  // namespace

std::pair<State, Feedback> step(const State& state, const std::string& action) {
  if (state.done) throw UsageError("step on a finished episode");
  State s = state;
  Feedback fb;
  ParsedAction act = parse_action(action);
  const Corpus& corpus = *s.corpus;

  switch (act.kind) {
    case ParsedAction::Search: {
      if (auto title = exact_title(corpus, act.arg)) {
        s.page = *title;
        s.keyword.clear();
        s.cursor = 0;
        const auto& first_para = corpus.articles.at(*title).front();
        std::string text;
        for (const auto& sentence : first_para) {
          if (!text.empty()) text += ' ';
          text += sentence;
        }
        fb.text = text;
      } else {
        auto similar = similar_titles(corpus, act.arg, 5);
        std::string list;
        for (size_t i = 0; i < similar.size(); ++i) {
          if (i > 0) list += ", ";
          list += similar[i];
        }
        fb.text = "Could not find " + act.arg + ". Similar: [" + list + "].";
      }
      break;
    }

    case ParsedAction::Lookup: {
      if (!s.page.has_value()) {
        fb.text = kNothingHappens;
        break;
      }
      if (s.keyword != to_lower(act.arg)) {
        s.keyword = to_lower(act.arg);
        s.cursor = 0;
      }
      auto sentences = flatten(corpus, *s.page);
      std::optional<size_t> hit;
      for (size_t i = s.cursor; i < sentences.size(); ++i) {
        if (contains_ci(sentences[i], act.arg)) {
          hit = i;
          break;
        }
      }
      if (hit) {
        s.cursor = *hit + 1;
        fb.text = sentences[*hit];
      } else {
        s.cursor = sentences.size();
        fb.text = "No more results.";
      }
      break;
    }

    case ParsedAction::Finish: {
      s.done = true;
      fb.done = true;
      bool correct = false;
      if (s.is_fever) {
        const FeverInstance* f = corpus.find_fever(s.task_id);
        correct = normalize_answer(act.arg) == normalize_answer(f->label);
      } else {
        const QaInstance* q = corpus.find_qa(s.task_id);
        for (const auto& gold : q->answers) {
          correct = correct || normalize_answer(act.arg) == normalize_answer(gold);
        }
      }
      if (correct) {
        fb.reward = 1.0;
        s.cumulative_reward += 1.0;
        fb.text = std::string("Answer accepted. ") + kCompletedMarker;
      } else {
        fb.text = "Answer rejected. Episode over.";
      }
      break;
    }

    case ParsedAction::Invalid:
      fb.text = kNothingHappens;
      return {state, fb};
  }
  return {std::move(s), std::move(fb)};
}

WikiEpisode::WikiEpisode(const Corpus& corpus, Task descriptor)
    : corpus_(corpus), descriptor_(std::move(descriptor)) {
  reset();
}

Feedback WikiEpisode::reset() {
  auto [state, fb] = wiki::reset(corpus_, descriptor_.id);
  state_ = std::move(state);
  return fb;
}

Feedback WikiEpisode::step(const std::string& action) {
  auto [state, fb] = wiki::step(state_, action);
  state_ = std::move(state);
  return fb;
}

bool WikiEpisode::well_formed(const std::string& action) const {
  return parse_action(action).kind != ParsedAction::Invalid;
}

bool WikiEpisode::explore_legal(const std::string& action) const { return wiki::explore_legal(action); }

bool WikiEpisode::exploit_legal(const std::string& action) const { return wiki::exploit_legal(action); }

}  // namespace wese::env::wiki
