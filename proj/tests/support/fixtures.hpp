#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bhtest {

#ifndef BH_TEMPLATE_DIR
#error "BH_TEMPLATE_DIR must be defined by the build"
#endif
#ifndef BH_FIXTURE_DIR
#error "BH_FIXTURE_DIR must be defined by the build"
#endif

inline const std::filesystem::path kTemplateDir = BH_TEMPLATE_DIR;
inline const std::filesystem::path kFixtureDir = BH_FIXTURE_DIR;

// Small deterministic generator for test data. Deliberately not the
// library's RNG, so fixtures do not move when that changes.
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : state_(seed * 2862933555777941757ULL + 3037000493ULL) {}
  std::uint64_t next() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }
  bool coin() { return next() & 1; }

 private:
  std::uint64_t state_;
};

struct MbicShape {
  std::size_t biased = 1018;
  std::size_t non_biased = 533;
  std::size_t undecided = 149;
};

// CSV with the column layout of the MBIC release (sentence, news_link,
// outlet, topic, type, group_id, num_sent, Label_bias, Label_opinion,
// article, biased_words). Labels are interleaved pseudo-randomly; some
// sentences carry commas, doubled quotes and non-ASCII punctuation.
std::string mbic_csv(const MbicShape& shape, std::uint64_t seed = 7);

// Unique single-line sentence number `i`.
std::string synthetic_sentence(std::size_t i);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& text);

}  // namespace bhtest
