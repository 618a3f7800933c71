#include "support.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unistd.h>

#include "mango/config.hpp"
#include "mango/consolidate.hpp"
#include "mango/generation.hpp"
#include "mango/prompts.hpp"
#include "mango/text.hpp"

namespace mango::testing {

using nlohmann::ordered_json;

std::filesystem::path fixtures_dir() { return MANGO_TEST_FIXTURES_DIR; }
std::filesystem::path golden_dir() { return MANGO_TEST_GOLDEN_DIR; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("mango-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

// ---------------------------------------------------------------------------------------------

namespace {

struct Triple {
  std::string concept_name, culture, statement;
};

std::string after(std::string_view text, std::string_view marker) {
  const auto pos = text.find(marker);
  if (pos == std::string_view::npos) return {};
  auto rest = text.substr(pos + marker.size());
  return text::trim(rest.substr(0, rest.find('\n')));
}

std::string strip_period(std::string s) {
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string assertions_json(const std::vector<Triple>& triples) {
  ordered_json list = ordered_json::array();
  for (const auto& t : triples) {
    list.push_back({{"concept", t.concept_name}, {"culture", t.culture}, {"statement", t.statement}});
  }
  return ordered_json{{"assertions", list}}.dump();
}

std::string concept_reply(const std::string& entry, std::uint32_t s) {
  std::vector<Triple> out;
  if (entry == "tipping") {
    out.push_back({"tipping", "Japanese", "Not a common practice"});
    out.push_back({"tipping", "USA", "Common and expected practice in the service industry."});
    if (s < 2) out.push_back({"leaving tip", "Japanese culture", "Not a common practice and may even be seen as rude."});
    if (s == 2) {
      out.push_back({"tipping at restaurants.", "Japan",
                     "Tipping is not commonly practiced and can even be considered rude as it implies that the "
                     "service is not already included in the price."});
    }
    if (s == 3) {
      out.push_back({"tipping service staff", "Japan",
                     "Not a common practice and can even be considered rude or disrespectful."});
    }
  } else if (entry == "chopsticks") {
    out.push_back({"chopsticks", "Japan", "Standard eating utensils."});
    if (s % 2 == 0) {
      out.push_back({"chopsticks", "Western countries", "Considered exotic and less commonly used for everyday meals"});
    }
    if (s == 1) out.push_back({"chopsticks", "Other cultures", "Used only occasionally at home."});
    if (s == 4) out.push_back({"chopsticks", "China", "Used daily. Also given as wedding gifts."});
  } else if (entry == "greeting") {
    if (s == 4) return "Sorry, I cannot help with that request.";
    out.push_back({"greeting", "Japan", "Bowing is the customary way to greet someone."});
    out.push_back({"greeting", "USA", "A firm handshake is the usual greeting in business settings."});
    if (s == 2) out.push_back({"greeting", "Some parts of Asia", "Bowing"});
  } else {
    out.push_back({entry, "Japan", "People in Japan have their own customs around " + entry + "."});
    if (s % 2 == 1) out.push_back({entry, "Brazil", "In Brazil " + entry + " is an everyday matter."});
  }
  return assertions_json(out);
}

std::string culture_reply(const std::string& entry, std::uint32_t s) {
  std::vector<Triple> out;
  if (entry == "Japan") {
    if (s < 2) out.push_back({"tipping", "Japan", "Not a common practice"});
    out.push_back({"bathing", "Japan", "Public baths are a popular way to relax."});
    if (s % 2 == 1) out.push_back({"bathing", "Finland", "Saunas are part of everyday life."});
    out.push_back({"gift wrapping", "Japan", "Gifts are carefully wrapped and presented with both hands."});
  } else if (entry == "USA") {
    out.push_back({"tipping", "USA", "Common and expected practice in the service industry."});
    out.push_back({"portion size", "USA", "Restaurant portions are large."});
    if (s % 2 == 0) out.push_back({"portion size", "France", "Restaurant portions are small and courses are many."});
    if (s == 3) {
      out.push_back({"road trips", "USA",
                     "Long road trips across many states are a popular way to spend summer holidays with family "
                     "and friends while seeing national parks small towns and famous roadside attractions"});
    }
  } else {
    out.push_back({"tea", entry, "Tea is enjoyed in " + entry + " in its own way."});
  }
  // Nested layout: one concept with a list of views.
  if (s == 1 && !out.empty()) {
    ordered_json views = ordered_json::array();
    for (const auto& t : out) {
      if (t.concept_name == out.front().concept_name) views.push_back({{"culture", t.culture}, {"statement", t.statement}});
    }
    ordered_json rest = ordered_json::array();
    for (const auto& t : out) {
      if (t.concept_name != out.front().concept_name) {
        rest.push_back({{"concept", t.concept_name}, {"culture", t.culture}, {"statement", t.statement}});
      }
    }
    ordered_json j = {{"concept", out.front().concept_name}, {"views", views}, {"more", rest}};
    return "```json\n" + j.dump(2) + "\n```";
  }
  return assertions_json(out);
}

struct Member {
  std::string concept_name, culture, statement;
};

std::vector<Member> parse_members(std::string_view user) {
  std::vector<Member> out;
  std::size_t pos = 0;
  while (pos < user.size()) {
    auto eol = user.find('\n', pos);
    if (eol == std::string_view::npos) eol = user.size();
    std::string_view line = user.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.starts_with("- Concept: ")) continue;
    const auto c = line.find(" Culture: ");
    const auto st = line.find(" Statement: ");
    const auto fq = line.rfind(" (Frequency: ");
    out.push_back({strip_period(std::string(line.substr(11, c - 11))),
                   strip_period(std::string(line.substr(c + 10, st - c - 10))),
                   std::string(line.substr(st + 12, fq - st - 12))});
  }
  return out;
}

std::string representative_reply(std::string_view user, std::uint32_t sample) {
  const auto members = parse_members(user);
  bool tipping = false, japan = false;
  for (const auto& m : members) {
    tipping = tipping || m.concept_name.find("tip") != std::string::npos;
    japan = japan || m.culture.find("Japan") != std::string::npos;
  }
  if (tipping && japan) {
    return std::string("Concept: tipping. Culture: Japan. Statement: ") + kTippingRepresentative + " (Frequency: 9)";
  }
  if (members.empty()) return "{}";
  if (members.front().concept_name == "bathing" && sample == 0) return "I am not sure.";
  const auto& top = members.front();
  return ordered_json{{"concept", top.concept_name}, {"culture", top.culture}, {"statement", top.statement}}.dump();
}

std::string judgment_reply(std::string_view user) {
  ordered_json list = ordered_json::array();
  std::size_t pos = 0;
  while (pos < user.size()) {
    auto eol = user.find('\n', pos);
    if (eol == std::string_view::npos) eol = user.size();
    std::string_view line = user.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.starts_with("- ")) continue;
    const std::string c(line.substr(2));
    const bool keep = std::all_of(c.begin(), c.end(), [](unsigned char ch) { return std::isalpha(ch) || ch == ' '; });
    list.push_back({{"concept", c}, {"keep", keep}});
  }
  return ordered_json{{"judgments", list}}.dump();
}

const char* const kNarrativeBatches[] = {
    "- Maria, a Mexican, is visiting Japan and is shopping in a local market. She meets Yuki, a Japanese woman, and "
    "asks for help in choosing a traditional Japanese outfit for a festival.\n"
    "- Pablo, a Spaniard, is traveling in India and meets Rajesh, a local, at a temple. They both want to participate "
    "in a religious ceremony, and Pablo asks Rajesh for guidance on the proper etiquette.\n"
    "- Fatima, a Saudi Arabian, is studying in France and meets Pierre, a French student, at a party. They both want "
    "to dance, and Fatima asks Pierre to teach her a traditional French dance.",
    "Here are three more narratives:\n"
    "- John, an American, is visiting his friend Kenji, who lives in Tokyo. They are paying their bill for dinner at "
    "a restaurant.\n"
    "- Carlos from Argentina is visiting Korea. He greets his new Korean friend, Jihoon, by giving him a friendly pat "
    "on the back.\n"
    "- Lena from Germany is visiting her friend Aiko in Osaka. Aiko is wrapping a present for Lena's host family.",
};

struct People {
  const char* first_word;
  const char* a_name;
  const char* a_culture;
  const char* b_name;
  const char* b_culture;
};

constexpr People kPeople[] = {
    {"Maria", "Maria", "Mexico", "Yuki", "Japan"},       {"Pablo", "Pablo", "Spain", "Rajesh", "India"},
    {"Fatima", "Fatima", "Saudi Arabia", "Pierre", "France"}, {"John", "John", "USA", "Kenji", "Japan"},
    {"Carlos", "Carlos", "Argentina", "Jihoon", "Korea"}, {"Lena", "Lena", "Germany", "Aiko", "Japan"},
};

const People* people_for(std::string_view narrative) {
  for (const auto& p : kPeople) {
    if (narrative.starts_with(p.first_word)) return &p;
  }
  return nullptr;
}

std::string participant_reply(std::string_view user) {
  const auto* p = people_for(after(user, "Narrative: "));
  if (p == nullptr) return "{\"participants\": []}";
  return ordered_json{{"participants",
                       {{{"name", p->a_name}, {"culture", p->a_culture}},
                        {{"name", p->b_name}, {"culture", p->b_culture}}}}}
      .dump();
}

std::string seed_dialogue_reply(std::string_view user) {
  const auto* p = people_for(after(user, "Situation: "));
  if (p == nullptr) return "No dialogue.";
  if (std::string_view(p->a_name) == "John") {
    return "John: That's a great meal, Kenji. I really liked the sushi.\n"
           "Kenji: My pleasure, John. I'm glad you enjoyed it.\n"
           "John: Let me see the bill. It is 8,000 yen. I'm gonna leave 10,000 yen.\n"
           "Kenji: Let me get the waiter.";
  }
  if (std::string_view(p->a_name) == "Fatima") return "Fatima: Hello!\nPierre: Hi.";
  const std::string a = p->a_name, b = p->b_name;
  return "**" + a + ":** Hi " + b + ", thank you for meeting me here.\n" + b + ": Of course, " + a +
         ". What would you like to do first?\n" + a + ": I was hoping you could show me how things are done here.";
}

std::string next_utterance_reply(std::string_view user) {
  const std::string narrative = after(user, "Narrative: ");
  const std::string speaker = after(user, "Next speaker: ");
  const bool knowledge = user.find(prompts::kKnowledgeHeader) != std::string_view::npos;
  if (narrative.starts_with("John")) {
    if (knowledge) {
      return "Kenji: Oh, no, John. You don't need to leave a tip here in Japan. Just 8,000 yen is fine. Thank you for "
             "offering though.";
    }
    return "Kenji: Thank you, John. You're too kind. Next time, dinner is on me. It's a very generous tip too.";
  }
  if (knowledge) {
    const std::string first = after(user, std::string(prompts::kKnowledgeHeader) + "\n- ");
    return "\"Good question. One thing worth knowing: " + first + "\"";
  }
  return speaker + ": Sure, let me think about the best way to do that.";
}

std::string full_dialogue_reply(std::string_view user) {
  const auto* p = people_for(after(user, "Narrative: "));
  if (p == nullptr) return "Nothing.";
  const std::string a = p->a_name, b = p->b_name;
  const bool knowledge = user.find(prompts::kKnowledgeHeader) != std::string_view::npos;
  std::string out = a + ": Hi " + b + ", I am glad we could meet.\n" + b + ": Me too, " + a + ".\n";
  if (knowledge) {
    out += a + ": I read that " + after(user, std::string(prompts::kKnowledgeHeader) + "\n- ") + "\n";
    out += b + ": That is right, thank you for paying attention to it.\n";
  } else {
    out += a + ": What should we do now?\n" + a + ": I have never done this before.\n";
    out += b + ": Let me show you.\n";
  }
  return out;
}

}  // namespace

llm::CompletionResult FixtureBackend::complete(const llm::CompletionRequest& r) {
  ++calls_;
  const std::string_view sys = r.system_text;
  const std::string_view user = r.user_text;
  std::string text;
  if (sys.starts_with(prompts::kAssertionPreamble)) {
    if (auto c = after(user, prompts::kConceptClosing); !c.empty()) {
      text = concept_reply(strip_period(c), r.sample_index);
    } else {
      text = culture_reply(strip_period(after(user, prompts::kCultureClosing)), r.sample_index);
    }
  } else if (sys.starts_with(prompts::kRepresentativeSystem)) {
    text = representative_reply(user, r.sample_index);
  } else if (sys.starts_with(prompts::kSeedJudgeSystem)) {
    text = judgment_reply(user);
  } else if (user == prompts::kNarrativePrompt) {
    text = r.sample_index < std::size(kNarrativeBatches) ? kNarrativeBatches[r.sample_index] : "No more ideas.";
  } else if (sys.starts_with(prompts::kParticipantSystem)) {
    text = participant_reply(user);
  } else if (user.starts_with(prompts::kSeedDialogueInstruction)) {
    text = seed_dialogue_reply(user);
  } else if (sys.starts_with(prompts::kNextUtteranceTask)) {
    text = next_utterance_reply(user);
  } else if (sys.starts_with(prompts::kFullDialogueTask)) {
    text = full_dialogue_reply(user);
  } else {
    text = "I do not understand the request.";
  }
  return {text, llm::TokenUsage{(sys.size() + user.size() + 3) / 4, (text.size() + 3) / 4}};
}

std::vector<kb::Assertion> tipping_assertions() {
  return {
      {"tipping", "Japanese", "Not a common practice", 5, {"t1"}},
      {"leaving tip", "Japanese culture", "Not a common practice and may even be seen as rude.", 2, {"t2"}},
      {"tipping at restaurants.", "Japan",
       "Tipping is not commonly practiced and can even be considered rude as it implies that the service is not "
       "already included in the price.",
       1, {"t3"}},
      {"tipping service staff", "Japan", "Not a common practice and can even be considered rude or disrespectful.", 1,
       {"t4"}},
  };
}

std::vector<consolidate::RepresentativeResult> consolidate_tipping_bucket(embedding::Embedder& embedder,
                                                                         llm::Gateway& gateway) {
  const consolidate::Bucket bucket{"concept-0001", "culture-0001", tipping_assertions()};
  std::vector<consolidate::RepresentativeResult> out;
  for (const auto& cluster : consolidate::cluster_bucket(bucket, embedder, consolidate::HacParams{})) {
    out.push_back(consolidate::generate_representative(cluster, gateway));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

namespace {

struct OracleCluster {
  std::vector<std::size_t> leaves;
  std::vector<double> centroid;
  std::size_t min_leaf;
};

}  // namespace

std::vector<OracleMerge> oracle_ward_merges(const std::vector<std::vector<double>>& points) {
  std::vector<OracleCluster> clusters;
  for (std::size_t i = 0; i < points.size(); ++i) clusters.push_back({{i}, points[i], i});
  std::vector<OracleMerge> merges;
  while (clusters.size() > 1) {
    // clusters stay sorted by min_leaf, so (i, j) order equals (min_leaf_a, min_leaf_b) order
    std::size_t bi = 0, bj = 1;
    double best = INFINITY;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double na = static_cast<double>(clusters[i].leaves.size());
        const double nb = static_cast<double>(clusters[j].leaves.size());
        double sq = 0.0;
        for (std::size_t k = 0; k < clusters[i].centroid.size(); ++k) {
          const double diff = clusters[i].centroid[k] - clusters[j].centroid[k];
          sq += diff * diff;
        }
        const double d = std::sqrt(2.0 * na * nb / (na + nb)) * std::sqrt(sq);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    merges.push_back({clusters[bi].min_leaf, clusters[bj].min_leaf, best});
    OracleCluster& a = clusters[bi];
    const OracleCluster& b = clusters[bj];
    const double na = static_cast<double>(a.leaves.size());
    const double nb = static_cast<double>(b.leaves.size());
    for (std::size_t k = 0; k < a.centroid.size(); ++k) {
      a.centroid[k] = (na * a.centroid[k] + nb * b.centroid[k]) / (na + nb);
    }
    a.leaves.insert(a.leaves.end(), b.leaves.begin(), b.leaves.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return merges;
}

std::vector<std::size_t> oracle_ward_labels(const std::vector<std::vector<double>>& points, double threshold) {
  const std::size_t n = points.size();
  std::vector<std::size_t> group(n);
  std::iota(group.begin(), group.end(), std::size_t{0});
  for (const auto& m : oracle_ward_merges(points)) {
    if (m.distance > threshold) break;
    const std::size_t from = group[m.min_leaf_b];
    const std::size_t to = group[m.min_leaf_a];
    for (auto& g : group) {
      if (g == from) g = to;
    }
  }
  std::map<std::size_t, std::size_t> relabel;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = relabel.emplace(group[i], relabel.size());
    labels[i] = it->second;
  }
  return labels;
}

std::vector<double> random_unit_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = g(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) return false;
  std::map<std::size_t, std::size_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [i1, n1] = ab.emplace(a[i], b[i]);
    auto [i2, n2] = ba.emplace(b[i], a[i]);
    if (i1->second != b[i] || i2->second != a[i]) return false;
  }
  return true;
}

std::vector<std::pair<std::string, llm::CompletionRequest>> golden_requests() {
  const auto pool = generation::load_example_pool(config::data_dir() / "example_pool.jsonl");
  std::vector<generation::FewShotExample> examples(pool.begin(), pool.begin() + 5);
  std::vector<std::pair<std::string, llm::CompletionRequest>> out;
  out.emplace_back("step1a.txt", generation::build_concept_prompt("chopsticks", examples));
  std::rotate(examples.begin(), examples.begin() + 1, examples.end());
  out.emplace_back("step1b.txt", generation::build_culture_prompt("Japan", examples));
  kb::AssertionCluster cluster;
  cluster.members = tipping_assertions();
  cluster.frequency = 9;
  out.emplace_back("step2b.txt", consolidate::build_representative_prompt(cluster));
  return out;
}

std::string render_request(const llm::CompletionRequest& r) {
  return "[system]\n" + r.system_text + "\n[user]\n" + r.user_text + "\n";
}

std::shared_ptr<llm::Gateway> fixture_gateway(std::shared_ptr<FixtureBackend> backend) {
  if (!backend) backend = std::make_shared<FixtureBackend>();
  llm::GatewayOptions options;
  options.mode = llm::GatewayMode::kLive;
  options.model_id = "fixture";
  return std::make_shared<llm::Gateway>(options, backend, nullptr, std::make_shared<llm::SimulatedClock>());
}

std::shared_ptr<llm::Gateway> replay_gateway() {
  llm::GatewayOptions options;
  options.mode = llm::GatewayMode::kReplay;
  options.model_id = "gpt-3.5-turbo-1106";
  auto store = std::make_shared<llm::RecordReplayStore>(fixtures_dir() / "replay", llm::StoreMode::kReplay);
  return std::make_shared<llm::Gateway>(options, nullptr, store, std::make_shared<llm::SimulatedClock>());
}

}  // namespace mango::testing
