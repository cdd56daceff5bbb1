#include "biasharness/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "biasharness/random.hpp"
#include "json_io.hpp"
#include "text_util.hpp"

namespace biasharness {

ConfusionMatrix count_confusion(const Dataset& d, const std::vector<std::size_t>& ids,
                                const std::set<std::size_t>& flagged) {
  ConfusionMatrix cm;
  for (auto id : ids) {
    const auto& s = d.by_id(id);
    const bool positive = flagged.count(id) > 0;
    switch (s.gold) {
      case GoldLabel::Biased: (positive ? cm.tp : cm.fn)++; break;
      case GoldLabel::NonBiased: (positive ? cm.fp : cm.tn)++; break;
      case GoldLabel::Undecided:
        throw DataError("sentence " + std::to_string(id) + " has no gold decision; clean the dataset first");
    }
  }
  return cm;
}

ConfusionMatrix confusion(const DetectionRun& run, const Dataset& d) {
  if (run.dataset.content_hash != d.provenance.content_hash) {
    throw DataError("run was produced from a different dataset (hash " + run.dataset.content_hash.substr(0, 12) +
                    " vs " + d.provenance.content_hash.substr(0, 12) + ")");
  }
  return count_confusion(d, run.evaluated_ids, run.flagged);
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  const auto ratio = [&m](std::size_t num, std::size_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.degenerate = true;
  }
  return m;
}

namespace {

std::array<double, 3> columns_of(const Metrics& m) { return {m.f1, m.recall, m.precision}; }

}  // namespace

void mark_comparisons(std::vector<ResultRow>& rows, std::size_t base_index) {
  for (auto& r : rows) {
    r.delta.reset();
    r.best = {};
  }
  if (rows.size() < 2) return;
  if (base_index >= rows.size()) throw ConfigError("base row index out of range");

  const auto base = columns_of(rows[base_index].m);
  std::array<double, 3> top{-1.0, -1.0, -1.0};
  for (auto& r : rows) {
    const auto v = columns_of(r.m);
    for (int c = 0; c < 3; ++c) top[c] = std::max(top[c], text::round_half_up(v[c], 3));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = columns_of(rows[i].m);
    std::array<int, 3> delta{};
    for (int c = 0; c < 3; ++c) {
      const double here = text::round_half_up(v[c], 3);
      const double there = text::round_half_up(base[c], 3);
      delta[c] = here > there ? 1 : (here < there ? -1 : 0);
      rows[i].best[c] = here == top[c];
    }
    if (i != base_index) rows[i].delta = delta;
  }
}

std::vector<ResultRow> ablation_table(const std::vector<NamedRun>& runs, const Dataset& d,
                                      std::size_t base_index) {
  std::vector<ResultRow> rows;
  for (const auto& nr : runs) {
    if (!nr.run) throw ConfigError("ablation entry '" + nr.name + "' has no run");
    const auto& first = *runs.front().run;
    if (nr.run->dataset.content_hash != first.dataset.content_hash) {
      throw ConfigError("ablation runs use different datasets: '" + runs.front().name + "' and '" + nr.name + "'");
    }
    if (!(nr.run->mode == first.mode)) {
      throw ConfigError("ablation runs use different modes: '" + runs.front().name + "' and '" + nr.name + "'");
    }
    ResultRow row;
    row.name = nr.name;
    row.cm = confusion(*nr.run, d);
    row.m = metrics(row.cm);
    row.coverage = std::pair{nr.run->covered_units(), nr.run->units.size()};
    rows.push_back(std::move(row));
  }
  mark_comparisons(rows, base_index);
  return rows;
}

Verdict silver_label(const std::vector<Verdict>& verdicts) {
  if (verdicts.empty() || verdicts.size() % 2 == 0) {
    throw ConfigError("majority vote needs an odd number of judges, got " + std::to_string(verdicts.size()));
  }
  const auto correct = std::count(verdicts.begin(), verdicts.end(), Verdict::Correct);
  return 2 * static_cast<std::size_t>(correct) > verdicts.size() ? Verdict::Correct : Verdict::Incorrect;
}

SubtypeReport subtype_accuracy(const std::vector<SubtypeJudgment>& judgments) {
  if (judgments.empty()) throw ValidationError("no subtype judgments to evaluate");

  std::map<BiasCategory, SubtypeRow> per_category;
  SubtypeRow violation_row;
  violation_row.label = "Sub-type violation (hallucination)";
  violation_row.violation = true;

  SubtypeReport report;
  for (const auto& j : judgments) {
    const bool right = j.silver() == Verdict::Correct;
    ++report.total;
    if (!j.category.is_canonical()) {
      ++violation_row.incorrect;
      ++report.violations;
      continue;
    }
    auto& row = per_category[j.category.category()];
    if (right) {
      ++row.correct;
      ++report.correct;
    } else {
      ++row.incorrect;
    }
  }
  for (auto c : kCanonicalCategories) {
    auto it = per_category.find(c);
    if (it == per_category.end()) continue;
    it->second.label = std::string(category_display_name(c));
    report.rows.push_back(it->second);
  }
  if (report.violations) report.rows.push_back(violation_row);
  return report;
}

std::vector<SubtypeJudgment> parse_judgments(std::string_view csv_text, const AliasTable& aliases) {
  const auto rows = parse_delimited(csv_text, ',');
  if (rows.empty()) throw DataError("judgment file is empty");

  const auto& header = rows.front();
  std::optional<std::size_t> id_col, cat_col;
  std::map<int, std::size_t> judge_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = text::to_lower_ascii(text::trim(header[c]));
    if (name == "sample_id") id_col = c;
    else if (name == "category") cat_col = c;
    else if (name.size() > 5 && text::starts_with(name, "judge") &&
             std::all_of(name.begin() + 5, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      judge_cols[std::stoi(name.substr(5))] = c;
    }
  }
  if (!id_col || !cat_col) throw DataError("judgment file needs sample_id and category columns");
  if (judge_cols.empty() || judge_cols.size() % 2 == 0) {
    throw ConfigError("judgment file needs an odd number of judge columns, found " +
                      std::to_string(judge_cols.size()));
  }

  std::vector<SubtypeJudgment> out;
  std::vector<std::string> problems;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto cell = [&](std::size_t c) { return c < row.size() ? text::trim(row[c]) : std::string(); };
    SubtypeJudgment j;
    j.sample_id = cell(*id_col);
    const auto cat = cell(*cat_col);
    if (j.sample_id.empty() || cat.empty()) {
      problems.push_back("row " + std::to_string(r) + ": missing sample_id or category");
      continue;
    }
    j.category = parse_bias_type(cat, aliases);
    for (const auto& [num, col] : judge_cols) {
      const auto v = text::to_lower_ascii(cell(col));
      if (v == "right") j.verdicts.push_back(Verdict::Correct);
      else if (v == "wrong") j.verdicts.push_back(Verdict::Incorrect);
      else problems.push_back("row " + std::to_string(r) + ": judge" + std::to_string(num) + " verdict '" + v +
                              "' is not right|wrong");
    }
    out.push_back(std::move(j));
  }
  if (!problems.empty()) throw DataError("bad judgment file:\n  " + text::join(problems, "\n  "));
  return out;
}

std::vector<SubtypeJudgment> load_judgments(const std::filesystem::path& path, const AliasTable& aliases) {
  return parse_judgments(jsonio::read_text_file(path), aliases);
}

std::vector<DistributionEntry> type_distribution(const DetectionRun& run) {
  std::map<std::string, DistributionEntry> by_key;
  std::size_t total = 0;
  for (const auto& u : run.units) {
    for (const auto& a : u.aligned) {
      const auto& t = a.finding.bias_type;
      const std::string key = t.is_other() ? "other:" + t.label() : std::string(category_slug(t.category()));
      auto& e = by_key[key];
      if (e.count == 0) e.label = t.is_other() ? t.verbatim() : t.display_name();
      ++e.count;
      ++total;
    }
  }
  if (total == 0) throw ValidationError("run has no aligned findings to summarize");

  std::vector<DistributionEntry> out;
  for (auto& [key, e] : by_key) {
    e.percent = 100.0 * static_cast<double>(e.count) / static_cast<double>(total);
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.count != b.count) return a.count > b.count;
    return text::to_lower_ascii(a.label) < text::to_lower_ascii(b.label);
  });
  return out;
}

std::vector<SampleItem> draw_subtype_sample(const DetectionRun& run, std::size_t n, std::uint64_t seed) {
  std::vector<AlignedFinding> population;
  for (const auto& u : run.units) {
    for (const auto& a : u.aligned) population.push_back(a);
  }
  if (n > population.size()) {
    throw ConfigError("sample size " + std::to_string(n) + " exceeds the run's " +
                      std::to_string(population.size()) + " aligned findings");
  }
  const auto order = shuffled_indices(population.size(), seed);
  std::vector<SampleItem> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    char id[32];
    std::snprintf(id, sizeof id, "s%03zu", k + 1);
    out.push_back({id, population[order[k]]});
  }
  return out;
}

std::string sample_sheet_csv(const std::vector<SampleItem>& sample, std::size_t judges) {
  std::string out = "sample_id,category";
  for (std::size_t j = 1; j <= judges; ++j) out += ",judge" + std::to_string(j);
  out += ",sentence_id,bias_score,sentence,bias_description\n";
  for (const auto& s : sample) {
    const auto& f = s.finding.finding;
    out += quote_field(s.sample_id) + "," +
           quote_field(f.bias_type.is_other() ? f.bias_type.verbatim() : f.bias_type.display_name());
    for (std::size_t j = 0; j < judges; ++j) out += ",";
    out += "," + std::to_string(s.finding.sentence_id) + "," + text::format_fixed(f.bias_score, 3) + "," +
           quote_field(f.sentence_text) + "," + quote_field(f.description) + "\n";
  }
  return out;
}

}  // namespace biasharness
