// tsqa: command-line front end for the temporal QA pipeline.
//
// Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "run_config.hpp"
#include "tsqa/corpus.hpp"
#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/fact_store.hpp"
#include "tsqa/policy_model.hpp"
#include "tsqa/reward.hpp"
#include "tsqa/temporal_features.hpp"
#include "tsqa/temporal_tagger.hpp"
#include "tsqa/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tsqa;
using tsqa::cli::RunConfig;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;

  RunConfig load() const {
    RunConfig c = config.empty() ? RunConfig{} : cli::load_run_config(config);
    if (seed) c.apply_seed(*seed);
    return c;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Overrides every seed in the configuration");
}

fs::path or_default(const std::string& flag, const fs::path& fallback) {
  return flag.empty() ? fallback : fs::path(flag);
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error("no such file " + p.string());
}

json interval_json(const std::optional<Interval>& iv) {
  if (!iv) return nullptr;
  return json::array({format_month(iv->start), format_month(iv->end)});
}

std::string mask_string(const TemporalMask& m) {
  std::string s;
  for (auto b : m.bits) s += b ? '1' : '0';
  return s;
}

void write_report(const fs::path& dir, const std::string& name, const std::string& contents) {
  fs::create_directories(dir);
  write_file_atomic(dir / name, contents);
}

std::string history_markdown(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  bool header = true;
  while (std::getline(in, line)) {
    std::string row = "|";
    std::size_t cells = 0;
    std::istringstream cs(line);
    for (std::string cell; std::getline(cs, cell, ',');) {
      row += " " + cell + " |";
      ++cells;
    }
    out += row + "\n";
    if (header) {
      out += "|";
      for (std::size_t i = 0; i < cells; ++i) out += "---|";
      out += "\n";
      header = false;
    }
  }
  return out;
}

Interval parse_interval_flag(const std::string& from, const std::string& to, int year) {
  if (year) return year_interval(year);
  auto a = parse_month(from), b = parse_month(to);
  if (!a || !b || *a > *b) throw Error("need --year or a valid --from/--to pair (YYYY-MM)");
  return {*a, *b};
}

// --- subcommands ----------------------------------------------------------

int run_gen(const Common& common, const std::string& out_dir) {
  const RunConfig cfg = common.load();
  const fs::path dir = or_default(out_dir, cfg.paths.data);
  const auto corpus = generate_synthetic(cfg.synthetic);
  fs::create_directories(dir);
  save_dataset(dir / "train.jsonl", corpus.train);
  save_dataset(dir / "dev.jsonl", corpus.dev);
  save_dataset(dir / "test.jsonl", corpus.test);
  save_facts(dir / "facts.jsonl", corpus.facts);
  std::printf("wrote %zu train, %zu dev, %zu test records and %zu facts to %s\n", corpus.train.size(),
              corpus.dev.size(), corpus.test.size(), corpus.facts.size(), dir.string().c_str());
  return 0;
}

int run_tag(const std::string& text, const std::string& file, bool question) {
  std::vector<std::string> lines;
  if (!file.empty()) {
    require_file(file);
    std::ifstream in(file);
    for (std::string l; std::getline(in, l);)
      if (!l.empty()) lines.push_back(l);
  } else {
    lines.push_back(text);
  }
  for (const auto& l : lines) {
    const auto tokens = tokenize(l);
    json j;
    j["tokens"] = json::array();
    for (const auto& t : tokens) j["tokens"].push_back(t.text);
    j["spans"] = json::array();
    for (const auto& s : tag(tokens))
      j["spans"].push_back({{"start", s.tok_start},
                            {"end", s.tok_end},
                            {"kind", std::string(to_string(s.kind))},
                            {"interval", interval_json(s.interval)}});
    if (question) {
      const auto spec = parse_question_time(l);
      j["time_spec"] = {{"kind", std::string(to_string(spec.kind))},
                        {"interval", interval_json(spec.interval)},
                        {"event", spec.event_name ? json(*spec.event_name) : json(nullptr)}};
    }
    std::cout << j.dump() << '\n';
  }
  return 0;
}

int run_mask(const std::string& text, std::size_t window) {
  const auto tokens = tokenize(text);
  const auto raw = build_mask(tokens.size(), tag(tokens));
  std::string words;
  for (const auto& t : tokens) words += (words.empty() ? "" : " ") + t.text;
  std::printf("tokens  %s\nmask    %s\ndilated %s\n", words.c_str(), mask_string(raw).c_str(),
              mask_string(dilate(raw, window)).c_str());
  return 0;
}

int run_mine(const Common& common, const std::string& facts_path, const std::string& subject,
             const std::string& relation, const std::string& gold, const Interval& q, std::size_t k) {
  const RunConfig cfg = common.load();
  const fs::path path = or_default(facts_path, cfg.paths.facts.empty() ? cfg.paths.data / "facts.jsonl" : cfg.paths.facts);
  require_file(path);
  const FactIndex index = bulk_load(load_facts(path));
  const auto remote = mine_remote(subject, relation, gold, q, index);
  const auto prox = mine_proximal(subject, relation, gold, q, index);
  std::mt19937_64 rng(cfg.seed);
  const auto sampled = sample_negatives(remote, prox, k, rng);
  json j{{"interval", interval_json(q)},
         {"remote", remote},
         {"proximal", prox},
         {"sampled", {{"remote", sampled.remote}, {"proximal", sampled.proximal}}}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_reward(const Common& common, const std::string& gt, const std::string& pred,
               const std::vector<std::string>& negs) {
  const RunConfig cfg = common.load();
  const auto s = score_prediction(gt, pred, negs, cfg.reward);
  std::printf("T = %.12g\nR = %.12f\n", s.triplet, s.reward);
  return 0;
}

std::vector<QARecord> load_split(const std::string& flag, const fs::path& fallback) {
  const fs::path p = or_default(flag, fallback);
  require_file(p);
  return load_dataset(p);
}

int run_train_sft(const Common& common, const std::string& train_path, const std::string& dev_path,
                  const std::string& out) {
  const RunConfig cfg = common.load();
  const auto train_records = load_split(train_path, cfg.paths.data / "train.jsonl");
  const auto dev_records = load_split(dev_path, cfg.paths.data / "dev.jsonl");
  const Vocabulary vocab = Vocabulary::build(train_records);
  const auto train = prepare_examples(train_records, vocab, cfg.features);
  const auto dev = prepare_examples(dev_records, vocab, cfg.features);
  const PolicyDims dims{vocab.size(), cfg.features.d, cfg.features.hidden, cfg.features.fusion};
  const SFTResult r = train_sft(train, dev, cfg.sft, dims);

  const fs::path ckpt = or_default(out, cfg.paths.checkpoints / "sft.ckpt");
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(ckpt, Checkpoint{r.params, cfg.features, vocab});
  const std::string csv = history_csv(r.history);
  write_report(cfg.paths.reports, "sft_history.csv", csv);
  write_report(cfg.paths.reports, "sft_history.md", history_markdown(csv));
  const Metrics m = evaluate(dev, r.params);
  std::printf("sft: best epoch %d, dev EM %.4f F1 %.4f, skipped %zu; checkpoint %s\n", r.best_epoch, m.em, m.f1,
              r.skipped, ckpt.string().c_str());
  return 0;
}

int run_train_ppo(const Common& common, const std::string& train_path, const std::string& dev_path,
                  const std::string& in, const std::string& out, const std::string& reward_kind) {
  RunConfig cfg = common.load();
  if (!reward_kind.empty()) cfg.ppo.reward_kind = reward_kind_from_string(reward_kind);
  const fs::path sft_path = or_default(in, cfg.paths.checkpoints / "sft.ckpt");
  require_file(sft_path);
  const Checkpoint sft = load_checkpoint(sft_path);
  const auto train = prepare_examples(load_split(train_path, cfg.paths.data / "train.jsonl"), sft.vocab, sft.features);
  const auto dev = prepare_examples(load_split(dev_path, cfg.paths.data / "dev.jsonl"), sft.vocab, sft.features);
  const PPOResult r = train_ppo(train, dev, sft.params, cfg.ppo, cfg.reward);

  const fs::path ckpt = or_default(out, cfg.paths.checkpoints / "ppo.ckpt");
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(ckpt, Checkpoint{r.params, sft.features, sft.vocab});
  const std::string csv = history_csv(r.history);
  write_report(cfg.paths.reports, "ppo_history.csv", csv);
  write_report(cfg.paths.reports, "ppo_history.md", history_markdown(csv));
  const auto& best = r.history.at(static_cast<std::size_t>(r.best_iteration));
  std::printf("ppo (%s): best iteration %d, dev EM %.4f F1 %.4f; checkpoint %s\n",
              std::string(to_string(cfg.ppo.reward_kind)).c_str(), r.best_iteration, best.dev_em, best.dev_f1,
              ckpt.string().c_str());
  return 0;
}

int run_eval(const std::string& data, const std::string& ckpt_path, const std::string& format,
             const std::string& out) {
  require_file(data);
  require_file(ckpt_path);
  const ReportFormat fmt = report_format_from_string(format);
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const auto examples = prepare_examples(load_dataset(data), ck.vocab, ck.features);
  const std::string text = report(evaluate(examples, ck.params), fmt, fs::path(data).stem().string());
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
  return 0;
}

int run_ablate(const Common& common, const std::string& data_dir) {
  const RunConfig cfg = common.load();
  const fs::path dir = or_default(data_dir, cfg.paths.data);
  const auto train_records = load_split("", dir / "train.jsonl");
  const auto dev_records = load_split("", dir / "dev.jsonl");
  const auto test_records = load_split("", dir / "test.jsonl");

  struct Cell {
    FusionMode fusion;
    RewardKind reward;
    double sft_em, em, f1;
  };
  std::vector<Cell> cells;
  for (auto fusion : {FusionMode::add, FusionMode::off}) {
    FeatureConfig fc = cfg.features;
    fc.fusion = fusion;
    const Vocabulary vocab = Vocabulary::build(train_records);
    const auto train = prepare_examples(train_records, vocab, fc);
    const auto dev = prepare_examples(dev_records, vocab, fc);
    const auto test = prepare_examples(test_records, vocab, fc);
    const SFTResult sft = train_sft(train, dev, cfg.sft, PolicyDims{vocab.size(), fc.d, fc.hidden, fusion});
    const double sft_em = evaluate(test, sft.params).em;
    for (auto kind : {RewardKind::contrastive, RewardKind::exact_match}) {
      PPOConfig pc = cfg.ppo;
      pc.reward_kind = kind;
      const PPOResult r = train_ppo(train, dev, sft.params, pc, cfg.reward);
      const Metrics m = evaluate(test, r.params);
      cells.push_back({fusion, kind, sft_em, m.em, m.f1});
      std::fprintf(stderr, "ablate: fusion=%s reward=%s test EM %.4f\n", std::string(to_string(fusion)).c_str(),
                   std::string(to_string(kind)).c_str(), m.em);
    }
  }

  std::string csv = "fusion,reward,sft_test_em,test_em,test_f1\n";
  std::string md = "| temporal fusion | reward | SFT test EM | PPO test EM | PPO test F1 |\n|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& c : cells) {
    const std::string f(to_string(c.fusion)), k(to_string(c.reward));
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f\n", f.c_str(), k.c_str(), c.sft_em, c.em, c.f1);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "| %s | %s | %.4f | %.4f | %.4f |\n", f.c_str(), k.c_str(), c.sft_em, c.em,
                  c.f1);
    md += buf;
  }
  write_report(cfg.paths.reports, "ablation.csv", csv);
  write_report(cfg.paths.reports, "ablation.md", md);
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal question answering: synthetic data, tagging, negative mining, SFT and PPO training"};
  app.name("tsqa");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  std::string out_dir, text, file, facts, subject, relation, gold, from, to, gt, pred, train, dev, data, ckpt,
      out, format = "md", reward_kind;
  std::vector<std::string> negs;
  bool question = false;
  int year = 0;
  std::size_t window = 10, k = 2;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus (train/dev/test JSONL plus facts)");
  add_common(gen, common);
  gen->add_option("--out-dir", out_dir, "Output directory (default: paths.data)");

  auto* tag_cmd = app.add_subcommand("tag", "Tokenize and tag temporal expressions; one JSON line per input");
  auto* text_opt = tag_cmd->add_option("--text", text, "Text to tag");
  auto* file_opt = tag_cmd->add_option("--file", file, "File with one text per line");
  text_opt->excludes(file_opt);
  tag_cmd->add_flag("--question", question, "Also parse the question time specification");

  auto* mask_cmd = app.add_subcommand("mask", "Print the temporal mask and its dilation");
  mask_cmd->add_option("--text", text, "Text")->required();
  mask_cmd->add_option("--window", window, "Dilation half-width")->capture_default_str();

  auto* mine_cmd = app.add_subcommand("mine", "Mine remote and proximal negatives from a fact file");
  add_common(mine_cmd, common);
  mine_cmd->add_option("--facts", facts, "Fact JSONL (default: paths.facts)");
  mine_cmd->add_option("--subject", subject)->required();
  mine_cmd->add_option("--relation", relation)->required();
  mine_cmd->add_option("--gold", gold, "Gold answer to exclude");
  mine_cmd->add_option("--year", year, "Question year");
  mine_cmd->add_option("--from", from, "Question interval start, YYYY-MM");
  mine_cmd->add_option("--to", to, "Question interval end, YYYY-MM");
  mine_cmd->add_option("--k", k, "Negatives per side when sampling")->capture_default_str();

  auto* reward_cmd = app.add_subcommand("reward", "Score one prediction with the contrastive reward");
  add_common(reward_cmd, common);
  reward_cmd->add_option("--gt", gt, "Ground truth")->required();
  reward_cmd->add_option("--pred", pred, "Prediction")->required();
  reward_cmd->add_option("--neg", negs, "Negative answer (repeatable)");

  auto* sft_cmd = app.add_subcommand("train-sft", "Supervised training of the candidate scorer");
  add_common(sft_cmd, common);
  sft_cmd->add_option("--train", train, "Training JSONL (default: <data>/train.jsonl)");
  sft_cmd->add_option("--dev", dev, "Dev JSONL (default: <data>/dev.jsonl)");
  sft_cmd->add_option("--out", out, "Checkpoint path (default: <checkpoints>/sft.ckpt)");

  auto* ppo_cmd = app.add_subcommand("train-ppo", "PPO fine-tuning from an SFT checkpoint");
  add_common(ppo_cmd, common);
  ppo_cmd->add_option("--train", train, "Training JSONL (default: <data>/train.jsonl)");
  ppo_cmd->add_option("--dev", dev, "Dev JSONL (default: <data>/dev.jsonl)");
  ppo_cmd->add_option("--ckpt", ckpt, "SFT checkpoint (default: <checkpoints>/sft.ckpt)");
  ppo_cmd->add_option("--out", out, "Checkpoint path (default: <checkpoints>/ppo.ckpt)");
  ppo_cmd->add_option("--reward", reward_kind, "contrastive or exact_match");

  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--data", data, "JSONL to evaluate")->required();
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--format", format, "md, csv or json")->capture_default_str();
  eval_cmd->add_option("--out", out, "Write the report here instead of stdout");

  auto* ablate_cmd = app.add_subcommand("ablate", "Temporal fusion x reward kind grid on one corpus");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--data-dir", data, "Directory with train/dev/test JSONL (default: paths.data)");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n\n";
    auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 1;
  }

  try {
    if (*gen) return run_gen(common, out_dir);
    if (*tag_cmd) {
      if (text.empty() && file.empty()) {
        std::cerr << "error: tag needs --text or --file\n\n" << tag_cmd->help();
        return 1;
      }
      return run_tag(text, file, question);
    }
    if (*mask_cmd) return run_mask(text, window);
    if (*mine_cmd) {
      Interval q;
      try {
        q = parse_interval_flag(from, to, year);
      } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n\n" << mine_cmd->help();
        return 1;
      }
      return run_mine(common, facts, subject, relation, gold, q, k);
    }
    if (*reward_cmd) return run_reward(common, gt, pred, negs);
    if (*sft_cmd) return run_train_sft(common, train, dev, out);
    if (*ppo_cmd) return run_train_ppo(common, train, dev, ckpt, out, reward_kind);
    if (*eval_cmd) return run_eval(data, ckpt, format, out);
    if (*ablate_cmd) return run_ablate(common, data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
