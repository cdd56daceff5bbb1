#include "biasharness/parsing.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <optional>

#include "text_util.hpp"

namespace biasharness {

using nlohmann::json;

std::string_view parse_kind_name(ParseKind k) {
  switch (k) {
    case ParseKind::Parsed: return "parsed";
    case ParseKind::Repaired: return "repaired";
    case ParseKind::Failed: return "failed";
  }
  return "?";
}

namespace {

constexpr std::string_view kLeftDouble = "“";
constexpr std::string_view kRightDouble = "”";
constexpr std::string_view kLowDouble = "„";

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::size_t skip_ws(std::string_view s, std::size_t i) {
  while (i < s.size() && is_ws(s[i])) ++i;
  return i;
}

// Index one past the closing quote of the string starting at `open`, or npos
// when the string runs to the end of the text.
std::size_t skip_string(std::string_view s, std::size_t open) {
  for (std::size_t i = open + 1; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
    } else if (s[i] == '"') {
      return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<std::string> string_field(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    for (const auto& [key, value] : obj.items()) {
      if (text::to_lower_ascii(key) != k) continue;
      if (value.is_string()) return value.get<std::string>();
      if (value.is_array()) {
        // "bias_type": ["political bias", "gender bias"] is kept as one label.
        std::vector<std::string> parts;
        for (const auto& v : value) {
          if (v.is_string()) parts.push_back(v.get<std::string>());
        }
        if (!parts.empty()) return text::join(parts, ", ");
      }
      if (value.is_number()) return value.dump();
    }
  }
  return std::nullopt;
}

std::optional<double> number_field(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    for (const auto& [key, value] : obj.items()) {
      if (text::to_lower_ascii(key) != k) continue;
      if (value.is_number()) return value.get<double>();
      if (value.is_string()) {
        const auto s = text::trim(value.get<std::string>());
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (ec == std::errc() && ptr == s.data() + s.size()) return d;
      }
    }
  }
  return std::nullopt;
}

bool looks_like_finding(const json& obj) {
  for (const auto& [key, value] : obj.items()) {
    const auto k = text::to_lower_ascii(key);
    if (k == "sentence" || k == "sentence_text" || k == "bias_type") return true;
  }
  return false;
}

RawFinding to_raw(const json& obj) {
  RawFinding f;
  f.sentence_text = string_field(obj, {"sentence", "sentence_text", "text"});
  f.bias_type = string_field(obj, {"bias_type", "type"});
  f.bias_score = number_field(obj, {"bias_score", "score"});
  f.description = string_field(obj, {"bias_description", "description", "explanation"});
  return f;
}

std::optional<std::vector<RawFinding>> findings_from_array(const json& arr) {
  std::vector<RawFinding> out;
  for (const auto& el : arr) {
    if (!el.is_object()) return std::nullopt;
    out.push_back(to_raw(el));
  }
  return out;
}

struct Interpretation {
  std::vector<RawFinding> findings;
  std::optional<std::string_view> reshape;  // repair applied to the shape
};

std::optional<Interpretation> interpret(const json& doc) {
  if (doc.is_array()) {
    if (auto f = findings_from_array(doc)) return Interpretation{std::move(*f), std::nullopt};
    return std::nullopt;
  }
  if (!doc.is_object()) return std::nullopt;
  if (looks_like_finding(doc)) return Interpretation{{to_raw(doc)}, kRepairWrapObject};
  const json* only_array = nullptr;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_array()) {
      if (only_array) return std::nullopt;
      only_array = &value;
    }
  }
  if (only_array) {
    if (auto f = findings_from_array(*only_array)) {
      return Interpretation{std::move(*f), kRepairUnwrapContainer};
    }
  }
  return std::nullopt;
}

struct Attempt {
  std::optional<Interpretation> result;
  std::string error;
};

Attempt try_parse(std::string_view text) {
  Attempt a;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    a.error = e.what();
    return a;
  }
  a.result = interpret(doc);
  if (!a.result) a.error = "JSON is not a finding array";
  return a;
}

// Incremental scanner used by balance_brackets: walks a JSON prefix and
// remembers the last position where closing every open container yields a
// valid document.
class PrefixScanner {
 public:
  explicit PrefixScanner(std::string_view s) : s_(s) {}

  // Returns the completed text, or nullopt when the input is not a truncated
  // prefix of a JSON value (syntax error, or nothing to close).
  std::optional<std::string> complete() {
    std::size_t i = skip_ws(s_, 0);
    while (i < s_.size()) {
      const char c = s_[i];
      if (done_) return std::nullopt;  // trailing garbage after a full value
      if (c == '"') {
        auto end = skip_string(s_, i);
        const bool key = expecting_key();
        if (end == std::string_view::npos) {
          if (key) return finish();
          if (!expecting_value()) return std::nullopt;
          // Close the dangling string value.
          std::string body(s_.substr(0, s_.size()));
          trim_partial_escape(body);
          safe_ = Safe{body.size(), stack_, true};
          safe_text_ = std::move(body);
          return finish();
        }
        if (key) {
          top().state = State::Colon;
        } else if (expecting_value()) {
          value_done(end);
        } else {
          return std::nullopt;
        }
        i = end;
      } else if (c == '{' || c == '[') {
        if (!expecting_value()) return std::nullopt;
        stack_.push_back({c, c == '{' ? State::KeyOrEnd : State::ValueOrEnd});
        mark_safe(i + 1);
        ++i;
      } else if (c == '}' || c == ']') {
        if (stack_.empty()) return std::nullopt;
        auto& f = top();
        const bool ok = (c == '}' && f.kind == '{' && (f.state == State::KeyOrEnd || f.state == State::After)) ||
                        (c == ']' && f.kind == '[' && (f.state == State::ValueOrEnd || f.state == State::After));
        if (!ok) return std::nullopt;
        stack_.pop_back();
        value_done(i + 1);
        ++i;
      } else if (c == ',') {
        if (stack_.empty() || top().state != State::After) return std::nullopt;
        top().state = top().kind == '{' ? State::Key : State::Value;
        ++i;
      } else if (c == ':') {
        if (stack_.empty() || top().state != State::Colon) return std::nullopt;
        top().state = State::Value;
        ++i;
      } else {
        if (!expecting_value()) return std::nullopt;
        std::size_t j = i;
        while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '.' ||
                                 s_[j] == '-' || s_[j] == '+')) {
          ++j;
        }
        if (j == i) return std::nullopt;
        if (j == s_.size()) return finish();  // token may be cut short
        if (!valid_scalar(s_.substr(i, j - i))) return std::nullopt;
        value_done(j);
        i = j;
      }
      i = skip_ws(s_, i);
    }
    return finish();
  }

 private:
  enum class State { KeyOrEnd, Key, Colon, Value, ValueOrEnd, After };
  struct Frame {
    char kind;
    State state;
  };
  struct Safe {
    std::size_t pos = 0;
    std::vector<Frame> stack;
    bool close_string = false;
  };

  Frame& top() { return stack_.back(); }

  bool expecting_key() const {
    return !stack_.empty() && stack_.back().kind == '{' &&
           (stack_.back().state == State::KeyOrEnd || stack_.back().state == State::Key);
  }
  bool expecting_value() const {
    if (stack_.empty()) return !done_;
    const auto st = stack_.back().state;
    return st == State::Value || (stack_.back().kind == '[' && st == State::ValueOrEnd);
  }

  void value_done(std::size_t pos) {
    if (stack_.empty()) {
      done_ = true;
    } else {
      top().state = State::After;
    }
    mark_safe(pos);
  }

  void mark_safe(std::size_t pos) {
    safe_ = Safe{pos, stack_, false};
    safe_text_.clear();
  }

  static bool valid_scalar(std::string_view tok) {
    if (tok == "true" || tok == "false" || tok == "null") return true;
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
    return ec == std::errc() && ptr == tok.data() + tok.size();
  }

  static void trim_partial_escape(std::string& body) {
    // A multi-byte UTF-8 sequence cut short.
    std::size_t k = body.size();
    while (k > 0 && (static_cast<unsigned char>(body[k - 1]) & 0xC0) == 0x80) --k;
    if (k > 0 && static_cast<unsigned char>(body[k - 1]) >= 0xC0) {
      const auto lead = static_cast<unsigned char>(body[k - 1]);
      const std::size_t need = lead >= 0xF0 ? 4 : lead >= 0xE0 ? 3 : 2;
      if (body.size() - (k - 1) < need) body.resize(k - 1);
    }
    // An unfinished \uXXXX or a lone trailing backslash.
    auto bs = body.rfind('\\');
    if (bs == std::string::npos) return;
    std::size_t run = 0;
    for (std::size_t j = bs + 1; j-- > 0 && body[j] == '\\';) ++run;
    const std::size_t tail = body.size() - bs - 1;
    if (run % 2 == 1 && (tail == 0 || (body[bs + 1] == 'u' && tail < 5))) body.resize(bs);
  }

  std::optional<std::string> finish() {
    if (done_ && stack_.empty()) return std::nullopt;  // nothing was truncated
    if (!safe_) return std::nullopt;
    std::string out = safe_->close_string ? safe_text_ : std::string(s_.substr(0, safe_->pos));
    if (safe_->close_string) out.push_back('"');
    for (auto it = safe_->stack.rbegin(); it != safe_->stack.rend(); ++it) {
      out.push_back(it->kind == '{' ? '}' : ']');
    }
    return out;
  }

  std::string_view s_;
  std::vector<Frame> stack_;
  std::optional<Safe> safe_;
  std::string safe_text_;
  bool done_ = false;
};

}  // namespace

namespace repair {

std::string strip_code_fences(std::string_view text) {
  constexpr std::string_view kFence = "```";
  auto first = text.find(kFence);
  if (first == std::string_view::npos) return std::string(text);

  std::string fallback;
  std::size_t pos = first;
  while (pos != std::string_view::npos) {
    auto body_start = text.find('\n', pos + kFence.size());
    if (body_start == std::string_view::npos) break;
    ++body_start;
    auto close = text.find(kFence, body_start);
    auto body = text.substr(body_start, close == std::string_view::npos ? std::string_view::npos
                                                                       : close - body_start);
    if (body.find_first_of("[{") != std::string_view::npos) return std::string(body);
    if (fallback.empty()) fallback = std::string(body);
    if (close == std::string_view::npos) break;
    pos = text.find(kFence, close + kFence.size());
  }
  if (!fallback.empty()) return fallback;
  // Fence markers without a usable body: drop the marker lines.
  std::string out;
  for (const auto& line : text::split(text, '\n')) {
    if (text::starts_with(text::trim(line), kFence)) continue;
    out += line;
    out += '\n';
  }
  return out;
}

std::string extract_bracketed_region(std::string_view text) {
  std::size_t start = std::string_view::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[') continue;
    auto next = skip_ws(text, i + 1);
    if (next < text.size() && (text[next] == '{' || text[next] == ']')) {
      start = i;
      break;
    }
  }
  if (start == std::string_view::npos) start = text.find('{');
  if (start == std::string_view::npos) return std::string(text);

  std::size_t depth = 0;
  std::size_t end = text.size();
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '"') {
      auto after = skip_string(text, i);
      if (after == std::string_view::npos) break;
      i = after - 1;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (depth > 0 && --depth == 0) {
        end = i + 1;
        break;
      }
    }
  }
  const auto region = text.substr(start, end - start);
  // Only surrounding whitespace: nothing to extract.
  if (text::trim(text) == region) return std::string(text);
  return std::string(region);
}

std::string normalize_smart_quotes(std::string_view text) {
  auto curly_at = [&](std::size_t i) -> std::size_t {
    for (auto q : {kLeftDouble, kRightDouble, kLowDouble}) {
      if (text.substr(i, q.size()) == q) return q.size();
    }
    return 0;
  };
  // A quote character closes a string when the next non-space character is
  // structural.
  auto closes_here = [&](std::size_t after) {
    auto j = skip_ws(text, after);
    return j >= text.size() || text[j] == ',' || text[j] == ':' || text[j] == '}' || text[j] == ']';
  };

  std::string out;
  out.reserve(text.size());
  enum class Mode { Outside, Ascii, Curly } mode = Mode::Outside;
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    const std::size_t curly = curly_at(i);
    switch (mode) {
      case Mode::Outside:
        if (c == '"') {
          mode = Mode::Ascii;
        } else if (curly) {
          out.push_back('"');
          mode = Mode::Curly;
          i += curly;
          continue;
        }
        out.push_back(c);
        ++i;
        break;
      case Mode::Ascii:
        if (c == '\\' && i + 1 < text.size()) {
          out.append(text.substr(i, 2));
          i += 2;
          continue;
        }
        if (c == '"') mode = Mode::Outside;
        if (curly && closes_here(i + curly)) {
          out.push_back('"');
          mode = Mode::Outside;
          i += curly;
          continue;
        }
        out.push_back(c);
        ++i;
        break;
      case Mode::Curly:
        if (c == '\\' && i + 1 < text.size()) {
          out.append(text.substr(i, 2));
          i += 2;
          continue;
        }
        if (curly && (text.substr(i, curly) == kRightDouble || closes_here(i + curly))) {
          out.push_back('"');
          mode = Mode::Outside;
          i += curly;
          continue;
        }
        if (c == '"') {
          if (closes_here(i + 1)) {
            mode = Mode::Outside;
            out.push_back('"');
          } else {
            out += "\\\"";
          }
          ++i;
          continue;
        }
        out.push_back(c);
        ++i;
        break;
    }
  }
  return out;
}

std::string remove_trailing_commas(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '"') {
      auto after = skip_string(text, i);
      if (after == std::string_view::npos) after = text.size();
      out.append(text.substr(i, after - i));
      i = after - 1;
      continue;
    }
    if (c == ',') {
      auto j = skip_ws(text, i + 1);
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::string balance_brackets(std::string_view text) {
  PrefixScanner scanner(text);
  if (auto done = scanner.complete()) return *done;
  return std::string(text);
}

}  // namespace repair

ParseOutcome parse_findings(std::string_view raw) {
  ParseOutcome out;
  if (text::trim(raw).empty()) {
    out.reason = "empty model output";
    out.raw_text = std::string(raw);
    return out;
  }

  auto strict = try_parse(raw);
  if (strict.result && !strict.result->reshape) {
    out.kind = ParseKind::Parsed;
    out.findings = std::move(strict.result->findings);
    return out;
  }

  using Pass = std::string (*)(std::string_view);
  static constexpr std::pair<std::string_view, Pass> kPasses[] = {
      {kRepairStripFences, &repair::strip_code_fences},
      {kRepairExtractRegion, &repair::extract_bracketed_region},
      {kRepairSmartQuotes, &repair::normalize_smart_quotes},
      {kRepairTrailingCommas, &repair::remove_trailing_commas},
      {kRepairBalance, &repair::balance_brackets},
  };

  std::string current(raw);
  std::vector<std::string> applied;
  Attempt last = std::move(strict);
  auto accept = [&](Attempt& a) {
    out.kind = ParseKind::Repaired;
    out.findings = std::move(a.result->findings);
    out.repairs = applied;
    if (a.result->reshape) out.repairs.emplace_back(*a.result->reshape);
  };
  if (last.result) {
    accept(last);
    return out;
  }
  for (const auto& [name, pass] : kPasses) {
    auto next = pass(current);
    if (next == current) continue;
    current = std::move(next);
    applied.emplace_back(name);
    last = try_parse(current);
    if (last.result) {
      accept(last);
      return out;
    }
  }

  out.kind = ParseKind::Failed;
  out.raw_text = std::string(raw);
  out.reason = last.error;
  if (!applied.empty()) out.reason += " (after " + text::join(applied, ", ") + ")";
  return out;
}

std::string serialize_findings(const std::vector<BiasFinding>& findings) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : findings) {
    nlohmann::ordered_json o;
    o["sentence"] = f.sentence_text;
    o["bias_type"] = f.bias_type.is_other() ? f.bias_type.verbatim() : f.bias_type.display_name();
    o["bias_score"] = f.bias_score;
    o["bias_description"] = f.description;
    arr.push_back(std::move(o));
  }
  return arr.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

}  // namespace biasharness
