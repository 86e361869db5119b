#include "tsqa/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tsqa/error.hpp"

namespace tsqa {
namespace {

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& w : gold) ++counts[w];
  int common = 0;
  for (const auto& w : pred) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / pred.size();
  const double r = static_cast<double>(common) / gold.size();
  return 2.0 * p * r / (p + r);
}

}  // namespace

std::string normalize_answer(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
  }
  std::string out;
  for (auto& w : split_ws(cleaned)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  const std::string p = normalize_answer(pred);
  for (const auto& g : golds)
    if (normalize_answer(g) == p) return 1;
  return 0;
}

double f1(std::string_view pred, const std::vector<std::string>& golds) {
  const auto p = split_ws(normalize_answer(pred));
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_single(p, split_ws(normalize_answer(g))));
  return best;
}

void MetricsBuilder::add(QuestionType type, std::string_view pred,
                         const std::vector<std::string>& golds) {
  auto& s = sums_[type];
  s.em += exact_match(pred, golds);
  s.f1 += f1(pred, golds);
  ++s.n;
}

Metrics MetricsBuilder::finish() const {
  Metrics m;
  double em = 0.0, f = 0.0;
  for (const auto& [type, s] : sums_) {
    if (s.n == 0) continue;
    m.by_type[type] = {s.em / s.n, s.f1 / s.n, s.n};
    em += s.em;
    f += s.f1;
    m.n += s.n;
  }
  if (m.n) {
    m.em = em / m.n;
    m.f1 = f / m.n;
  }
  return m;
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  if (s == "md" || s == "markdown") return ReportFormat::markdown;
  throw Error("unknown report format: " + std::string(s));
}

std::string report(const Metrics& metrics, ReportFormat format, std::string_view label) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::csv:
      out << "scope,em,f1,n\n";
      if (metrics.n == 0) break;
      out << "overall," << fmt17(metrics.em) << ',' << fmt17(metrics.f1) << ',' << metrics.n << '\n';
      for (const auto& [type, s] : metrics.by_type)
        out << to_string(type) << ',' << fmt17(s.em) << ',' << fmt17(s.f1) << ',' << s.n << '\n';
      break;
    case ReportFormat::json: {
      nlohmann::json j = {{"em", metrics.em}, {"f1", metrics.f1}, {"n", metrics.n}};
      j["by_type"] = nlohmann::json::object();
      for (const auto& [type, s] : metrics.by_type)
        j["by_type"][std::string(to_string(type))] = {{"em", s.em}, {"f1", s.f1}, {"n", s.n}};
      out << j.dump(2) << '\n';
      break;
    }
    case ReportFormat::markdown: {
      out << "| dataset | type | EM | F1 | n |\n|---|---|---:|---:|---:|\n";
      if (metrics.n == 0) break;
      char buf[160];
      const std::string name = label.empty() ? std::string("-") : std::string(label);
      for (const auto& [type, s] : metrics.by_type) {
        std::snprintf(buf, sizeof(buf), "| %s | %s | %.1f | %.1f | %zu |\n", name.c_str(),
                      std::string(to_string(type)).c_str(), 100.0 * s.em, 100.0 * s.f1, s.n);
        out << buf;
      }
      std::snprintf(buf, sizeof(buf), "| %s | all | %.1f | %.1f | %zu |\n", name.c_str(),
                    100.0 * metrics.em, 100.0 * metrics.f1, metrics.n);
      out << buf;
      break;
    }
  }
  return out.str();
}

Metrics metrics_from_csv(std::string_view csv) {
  Metrics m;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "scope,em,f1,n") throw ParseError(line_no, "expected header scope,em,f1,n");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    if (cells.size() != 4) throw ParseError(line_no, "expected 4 CSV cells");
    try {
      const double em = std::stod(cells[1]), f = std::stod(cells[2]);
      const auto n = static_cast<std::size_t>(std::stoull(cells[3]));
      if (cells[0] == "overall") {
        m.em = em;
        m.f1 = f;
        m.n = n;
      } else if (auto type = question_type_from_string(cells[0])) {
        m.by_type[*type] = {em, f, n};
      } else {
        throw ParseError(line_no, "unknown scope " + cells[0]);
      }
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "bad number");
    }
  }
  return m;
}

}  // namespace tsqa
