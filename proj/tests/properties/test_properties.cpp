#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "biasharness/evaluation.hpp"
#include "biasharness/pipeline.hpp"
#include "fixtures.hpp"

using namespace biasharness;

namespace {

constexpr int kCases = 500;

std::string random_word(bhtest::TestRng& rng) {
  static const char* const pieces[] = {"the", "vote", "lied", "tax", "ré", "sumé", "—", "“q”", "a,b", "x\"y", "  ",
                                       "news", "über", "\t", "budget", "claim"};
  std::string w;
  const auto n = 1 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) w += pieces[rng.below(std::size(pieces))];
  return w;
}

// Single-line sentence, never empty.
std::string random_sentence(bhtest::TestRng& rng) {
  std::string s = random_word(rng);
  const auto words = rng.below(8);
  for (std::size_t i = 0; i < words; ++i) s += " " + random_word(rng);
  return s;
}

std::vector<BiasFinding> random_findings(bhtest::TestRng& rng) {
  std::vector<BiasFinding> out;
  const auto n = rng.below(12);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({random_sentence(rng), BiasType(kCanonicalCategories[rng.below(9)]),
                   std::floor(rng.unit() * 100.0) / 100.0, "d"});
  }
  return out;
}

Dataset random_dataset(bhtest::TestRng& rng, std::size_t n) {
  Dataset d;
  d.provenance = {"generated", "h" + std::to_string(n)};
  for (std::size_t i = 0; i < n; ++i) {
    d.sentences.push_back({i, bhtest::synthetic_sentence(i + 1000 * rng.below(50)),
                           rng.coin() ? GoldLabel::Biased : GoldLabel::NonBiased});
  }
  return d;
}

const TemplateSet& templates() {
  static const auto t = TemplateSet::load(bhtest::kTemplateDir);
  return t;
}

}  // namespace

TEST_CASE("raising the threshold only removes findings") {
  bhtest::TestRng rng(1);
  for (int c = 0; c < kCases; ++c) {
    const auto fs = random_findings(rng);
    double t1 = std::floor(rng.unit() * 100.0) / 100.0;
    double t2 = std::floor(rng.unit() * 100.0) / 100.0;
    if (t1 > t2) std::swap(t1, t2);
    const auto low = apply_threshold(fs, t1);
    const auto high = apply_threshold(fs, t2);
    // high is a subsequence of low
    std::size_t k = 0;
    for (const auto& f : low) {
      if (k < high.size() && f == high[k]) ++k;
    }
    CHECK(k == high.size());
    for (const auto& f : high) CHECK(f.bias_score >= t2);
  }
}

TEST_CASE("threshold monotonicity holds for flagged sets of whole runs") {
  bhtest::TestRng rng(2);
  for (int c = 0; c < kCases; ++c) {
    const auto d = random_dataset(rng, 10);
    const auto blocks = make_blocks(d, 10);
    std::vector<BiasFinding> fs;
    for (const auto& s : d.sentences) {
      if (rng.coin()) fs.push_back({s.text, BiasType(BiasCategory::Political), std::floor(rng.unit() * 10.0) / 10.0, ""});
    }
    double t1 = std::floor(rng.unit() * 10.0) / 10.0, t2 = std::floor(rng.unit() * 10.0) / 10.0;
    if (t1 > t2) std::swap(t1, t2);
    const auto mode = EvaluationMode::blocks(10);
    std::set<std::size_t> f1, f2;
    for (const auto& a : align_findings(apply_threshold(filter_findings(fs), t1), blocks[0], mode).aligned) {
      f1.insert(a.sentence_id);
    }
    for (const auto& a : align_findings(apply_threshold(filter_findings(fs), t2), blocks[0], mode).aligned) {
      f2.insert(a.sentence_id);
    }
    CHECK(std::includes(f1.begin(), f1.end(), f2.begin(), f2.end()));
  }
}

TEST_CASE("joining sentences into blocks and splitting them back is lossless") {
  bhtest::TestRng rng(3);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t size = 1 + rng.below(12);
    const std::size_t blocks_n = 1 + rng.below(5);
    Dataset d;
    for (std::size_t i = 0; i < size * blocks_n; ++i) d.sentences.push_back({i * 3, random_sentence(rng)});
    const auto blocks = make_blocks(d, size);
    REQUIRE(blocks.size() == blocks_n);
    std::size_t k = 0;
    for (const auto& b : blocks) {
      const auto texts = b.sentence_texts();
      REQUIRE(texts.size() == size);
      for (std::size_t j = 0; j < size; ++j, ++k) {
        CHECK(texts[j] == d.sentences[k].text);
        CHECK(b.sentence_ids[j] == d.sentences[k].id);
      }
    }
  }
}

TEST_CASE("F1 lies between precision and recall") {
  bhtest::TestRng rng(4);
  for (int c = 0; c < kCases; ++c) {
    ConfusionMatrix cm{rng.below(2000), rng.below(2000), rng.below(2000), rng.below(2000)};
    if (c % 50 == 0) cm.tp = 0;
    const auto m = metrics(cm);
    CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-12);
    CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-12);
    CHECK(m.precision >= 0.0);
    CHECK(m.recall <= 1.0);
  }
}

TEST_CASE("confusion counts sum to the number of evaluated sentences") {
  bhtest::TestRng rng(5);
  for (int c = 0; c < kCases; ++c) {
    const auto d = random_dataset(rng, 1 + rng.below(200));
    std::set<std::size_t> flagged;
    for (auto id : d.ids()) {
      if (rng.coin()) flagged.insert(id);
    }
    const auto cm = count_confusion(d, d.ids(), flagged);
    CHECK(cm.total() == d.size());
    CHECK(cm.tp + cm.fp == flagged.size());
  }
}

TEST_CASE("majority vote does not depend on judge order") {
  bhtest::TestRng rng(6);
  for (int c = 0; c < kCases; ++c) {
    std::vector<Verdict> v(1 + 2 * rng.below(5));
    for (auto& x : v) x = rng.coin() ? Verdict::Correct : Verdict::Incorrect;
    const auto expected = silver_label(v);
    for (int p = 0; p < 5; ++p) {
      for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[rng.below(i + 1)]);
      CHECK(silver_label(v) == expected);
    }
  }
}

TEST_CASE("the cache calls the backend once per distinct request") {
  bhtest::TestRng rng(7);
  bhtest::TempDir dir;
  ResponseCache cache(dir.path());
  auto mock = MockBackend::keyed({});
  mock.set_default("[]");
  std::set<std::string> distinct;
  for (int c = 0; c < kCases; ++c) {
    ChatRequest req;
    req.model = "m" + std::to_string(rng.below(3));
    req.temperature = rng.below(2) * 0.7;
    req.messages = {{"system", "s"}, {"user", "text " + std::to_string(rng.below(200))}};
    distinct.insert(cache_key(req));
    const auto before = mock.call_count();
    const bool seen = cache.lookup(req).has_value();
    auto out = cached_complete(req, mock, &cache);
    CHECK(out.text == "[]");
    CHECK(mock.call_count() == before + (seen ? 0 : 1));
  }
  CHECK(mock.call_count() == distinct.size());
}

TEST_CASE("a warm-cache re-run reproduces the run exactly") {
  bhtest::TestRng rng(8);
  // Each case is a one-unit run; 500 cases against one shared cache directory.
  bhtest::TempDir dir;
  ResponseCache cache(dir / "cache");
  for (int c = 0; c < kCases; ++c) {
    const auto d = random_dataset(rng, 10);
    auto mock = MockBackend::keyed({});
    std::vector<BiasFinding> fs;
    for (const auto& s : d.sentences) {
      if (rng.coin()) fs.push_back({s.text, BiasType(BiasCategory::Racial), 0.5, ""});
    }
    mock.set_default(serialize_findings(fs));
    RunOptions opt;
    opt.mode = EvaluationMode::blocks(10);
    opt.concurrency = 1;
    const auto first = run_detection(d, opt, templates(), mock, &cache);
    const auto calls = mock.call_count();
    const auto second = run_detection(d, opt, templates(), mock, &cache);
    CHECK(mock.call_count() == calls);
    CHECK(second.flagged == first.flagged);
    REQUIRE(second.units.size() == first.units.size());
    CHECK(second.units[0].raw_output == first.units[0].raw_output);
    CHECK(second.units[0].validated == first.units[0].validated);
    CHECK(second.units[0].from_cache);
  }
}
