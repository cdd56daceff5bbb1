#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace bhtest {

namespace {

const char* const kSubjects[] = {"The senator", "City officials", "The new tax plan", "Protesters", "The governor",
                                 "Local police", "The trade deal", "Immigration reform", "The school board",
                                 "Climate activists"};
const char* const kVerbs[] = {"announced", "defended", "slammed", "reviewed", "delayed", "praised", "questioned",
                              "rejected", "funded", "debated"};
const char* const kObjects[] = {"the budget", "a controversial measure", "the ruling", "new guidelines",
                                "the proposal", "an independent audit", "the election results", "the report"};
const char* const kOutlets[] = {"usa-today", "fox-news", "reuters", "breitbart", "huffpost", "msnbc", "alternet",
                                "federalist"};
const char* const kTopics[] = {"abortion", "immigration", "gun-control", "environment", "vaccines", "elections"};

}  // namespace

std::string synthetic_sentence(std::size_t i) {
  std::ostringstream s;
  s << kSubjects[i % 10] << " " << kVerbs[(i / 10) % 10] << " " << kObjects[(i / 100) % 8] << " on day " << i
    << ".";
  return s.str();
}

std::string mbic_csv(const MbicShape& shape, std::uint64_t seed) {
  std::vector<int> labels;
  labels.insert(labels.end(), shape.biased, 0);
  labels.insert(labels.end(), shape.non_biased, 1);
  labels.insert(labels.end(), shape.undecided, 2);
  TestRng rng(seed);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);

  static const char* const kLabelText[] = {"Biased", "Non-biased", "No agreement"};
  static const char* const kOpinion[] = {"Expresses writer's opinion", "Entirely factual",
                                         "Somewhat factual but also opinionated"};
  std::ostringstream out;
  out << "sentence,news_link,outlet,topic,type,group_id,num_sent,Label_bias,Label_opinion,article,biased_words\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::string sentence = synthetic_sentence(i);
    // Sprinkle in the quoting cases real exports contain.
    if (i % 17 == 3) sentence.insert(sentence.size() - 1, ", critics said");
    if (i % 29 == 5) sentence = "\"\"" + sentence.substr(0, sentence.size() - 1) + "\"\" they called it.";
    if (i % 31 == 7) sentence += " \xE2\x80\x94 again";
    const bool quote = sentence.find_first_of(",\"") != std::string::npos;
    out << (quote ? "\"" + sentence + "\"" : sentence) << ",https://example.org/a/" << i << ","
        << kOutlets[i % 8] << "," << kTopics[i % 6] << "," << (i % 2 ? "left" : "right") << "," << (i % 5 + 1)
        << "," << (i % 3 + 1) << "," << kLabelText[labels[i]] << "," << kOpinion[rng.below(3)]
        << ",\"Full article text " << i << ", abbreviated.\",\"['word" << i << "']\"\n";
  }
  return out.str();
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("bhtest-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace bhtest
