#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tsqa/corpus.hpp"
#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/fact_store.hpp"
#include "tsqa/policy_model.hpp"
#include "tsqa/reward.hpp"
#include "tsqa/temporal_features.hpp"
#include "tsqa/temporal_tagger.hpp"
#include "tsqa/trainer.hpp"

namespace py = pybind11;
using namespace tsqa;

namespace {

py::object interval_obj(const std::optional<Interval>& iv) {
  if (!iv) return py::none();
  return py::make_tuple(format_month(iv->start), format_month(iv->end));
}

Month month_arg(const std::string& s) {
  auto m = parse_month(s);
  if (!m) throw ValidationError("month", "expected YYYY-MM, got '" + s + "'");
  return *m;
}

std::vector<TimeFact> facts_from_lines(const std::vector<std::string>& lines) {
  std::vector<TimeFact> facts;
  std::size_t n = 0;
  for (const auto& l : lines) facts.push_back(parse_fact_line(l, ++n));
  return facts;
}

py::dict spec_dict(const QuestionTimeSpec& s) {
  py::dict d;
  d["kind"] = std::string(to_string(s.kind));
  d["interval"] = interval_obj(s.interval);
  d["event"] = s.event_name ? py::object(py::str(*s.event_name)) : py::none();
  return d;
}

QuestionTimeSpec spec_from(const std::string& kind, const std::optional<std::string>& start,
                           const std::optional<std::string>& end, const std::optional<std::string>& event) {
  auto k = time_spec_kind_from_string(kind);
  if (!k) throw ValidationError("kind", "unknown time spec kind '" + kind + "'");
  QuestionTimeSpec s{*k, std::nullopt, event};
  if (start && end) s.interval = Interval{month_arg(*start), month_arg(*end)};
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Temporal question answering core";

  // pybind11 tries the most recently registered translator first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ResolutionError>(m, "ResolutionError", PyExc_LookupError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  m.def("tokenize", [](const std::string& text) {
    std::vector<std::string> out;
    for (const auto& t : tokenize(text)) out.push_back(t.text);
    return out;
  });

  m.def("tag", [](const std::string& text) {
    py::list out;
    for (const auto& s : tag(tokenize(text))) {
      py::dict d;
      d["start"] = s.tok_start;
      d["end"] = s.tok_end;
      d["kind"] = std::string(to_string(s.kind));
      d["interval"] = interval_obj(s.interval);
      out.append(d);
    }
    return out;
  });

  m.def("parse_question_time", [](const std::string& q) { return spec_dict(parse_question_time(q)); });

  m.def("dilate", [](const std::vector<std::uint8_t>& bits, std::size_t half_width) {
    for (auto b : bits)
      if (b > 1) throw ValidationError("mask", "bits must be 0 or 1");
    return dilate(TemporalMask{bits}, half_width).bits;
  }, py::arg("bits"), py::arg("half_width"));

  m.def("reward", [](double t, double alpha, double beta, double delta) {
    RewardParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.delta = delta;
    p.validate();
    return reward(t, p);
  }, py::arg("t"), py::arg("alpha") = 4.0, py::arg("beta") = 2.0, py::arg("delta") = 1e-6);

  m.def("score_prediction", [](const std::string& gt, const std::string& pred,
                               const std::vector<std::string>& negatives, double margin) {
    RewardParams p;
    p.margin = margin;
    const auto s = score_prediction(gt, pred, negatives, p);
    return py::make_tuple(s.triplet, s.reward);
  }, py::arg("gt"), py::arg("pred"), py::arg("negatives") = std::vector<std::string>{}, py::arg("margin") = 1.0);

  m.def("normalize_answer", [](const std::string& s) { return normalize_answer(s); });
  m.def("exact_match", [](const std::string& pred, const std::vector<std::string>& golds) {
    return exact_match(pred, golds);
  });
  m.def("f1", [](const std::string& pred, const std::vector<std::string>& golds) { return f1(pred, golds); });

  m.def("generate_synthetic", [](int n_records, std::uint64_t seed, int n_entities,
                                 std::array<double, 4> mix, int distractors) {
    SyntheticConfig c;
    c.n_records = n_records;
    c.seed = seed;
    c.n_entities = n_entities;
    c.question_type_mix = mix;
    c.distractor_sentences_per_context = distractors;
    const auto corpus = [&] {
      py::gil_scoped_release release;
      return generate_synthetic(c);
    }();
    py::dict out;
    for (auto [name, split] : {std::pair{"train", &corpus.train}, {"dev", &corpus.dev}, {"test", &corpus.test}}) {
      std::vector<std::string> lines;
      for (const auto& r : *split) lines.push_back(serialize_record(r));
      out[name] = lines;
    }
    std::vector<std::string> facts;
    for (const auto& f : corpus.facts) facts.push_back(serialize_fact(f));
    out["facts"] = facts;
    return out;
  }, py::arg("n_records") = 1000, py::arg("seed") = 42, py::arg("n_entities") = 120,
     py::arg("question_type_mix") = std::array<double, 4>{1, 1, 1, 1}, py::arg("distractors") = 3,
     "Returns JSONL lines per split plus the fact lines.");

  m.def("resolve", [](const std::vector<std::string>& fact_lines, const std::string& subject,
                      const std::string& relation, const std::string& kind, std::optional<std::string> start,
                      std::optional<std::string> end, std::optional<std::string> event) {
    const FactIndex index = bulk_load(facts_from_lines(fact_lines));
    return resolve_question(spec_from(kind, start, end, event), subject, relation, index);
  }, py::arg("facts"), py::arg("subject"), py::arg("relation"), py::arg("kind"), py::arg("start") = py::none(),
     py::arg("end") = py::none(), py::arg("event") = py::none());

  m.def("mine", [](const std::vector<std::string>& fact_lines, const std::string& subject,
                   const std::string& relation, const std::string& gold, const std::string& start,
                   const std::string& end) {
    const FactIndex index = bulk_load(facts_from_lines(fact_lines));
    const Interval q{month_arg(start), month_arg(end)};
    if (!q.valid()) throw ValidationError("interval", "start after end");
    return py::make_tuple(mine_remote(subject, relation, gold, q, index),
                          mine_proximal(subject, relation, gold, q, index));
  }, py::arg("facts"), py::arg("subject"), py::arg("relation"), py::arg("gold"), py::arg("start"),
     py::arg("end"), "Returns (remote, proximal) negatives.");

  m.def("evaluate_checkpoint", [](const std::string& ckpt_path, const std::string& data_path) {
    Metrics metrics;
    {
      py::gil_scoped_release release;
      const Checkpoint ck = load_checkpoint(ckpt_path);
      const auto examples = prepare_examples(load_dataset(data_path), ck.vocab, ck.features);
      metrics = evaluate(examples, ck.params);
    }
    py::dict d;
    d["em"] = metrics.em;
    d["f1"] = metrics.f1;
    d["n"] = metrics.n;
    py::dict by_type;
    for (const auto& [type, s] : metrics.by_type)
      by_type[py::str(std::string(to_string(type)))] = py::dict(py::arg("em") = s.em, py::arg("f1") = s.f1,
                                                                py::arg("n") = s.n);
    d["by_type"] = by_type;
    return d;
  });
}
