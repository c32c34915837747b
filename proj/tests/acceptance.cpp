// Runs the acceptance criteria in order and prints one PASS/FAIL line each.
// Progress goes to stderr. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "medreg/cli.hpp"
#include "medreg/config.hpp"
#include "medreg/evaluation.hpp"
#include "medreg/pipeline.hpp"
#include "medreg/text.hpp"
#include "medreg/training.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace medreg;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kDesk = fs::path(MEDREG_SOURCE_DIR) / "configs" / "desk.conf";
const fs::path kWork = fs::temp_directory_path() / "medreg_acceptance";

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string w(const std::string& name) { return (kWork / name).string(); }

// Runs the command-line tool in-process; throws on a non-zero exit.
void medreg_tool(std::vector<std::string> args) {
  std::ostringstream out, err;
  std::cerr << "  medreg";
  for (const auto& a : args) std::cerr << ' ' << a;
  std::cerr << '\n';
  const auto t = Clock::now();
  const int code = cli::run(args, out, err, [](const std::string&) { return std::nullopt; });
  if (code != 0) throw std::runtime_error("medreg " + args.front() + " exited " + std::to_string(code) + ": " + err.str());
  std::cerr << "    " << std::fixed << std::setprecision(1) << seconds_since(t) << " s\n";
}

Vocabulary toy_vocab() {
  return Vocabulary({"none", "take", "rx-aspirin", "rx-coumadin", "eighty-one", "ten", "daily", "twice", "a", "day",
                     "what", "is", "the", "dosage", "frequency", "for", "at", "night"});
}

// Dosage reports from every evaluation run in this binary, checked under criterion 4.
std::vector<json> g_reports;

// --- 1 ----------------------------------------------------------------------------------------

Outcome distribution_soundness() {
  Outcome o;
  const auto t = Clock::now();
  const Vocabulary vocab = toy_vocab();
  const Tokens pool = {"none", "take", "rx-aspirin", "rx-coumadin", "ten", "daily", "twice", "a", "day",
                       "zorb", "blick", "quux", "eighty-one", "the", "at", "night"};
  std::mt19937_64 rng(2024);
  int trials = 0, distributions = 0;
  double worst_sum = 0, most_negative = 0;
  for (; trials < 1000; ++trials) {
    ModelConfig mc = test::toy_config(trials % 2 ? Architecture::kMultiDecoder : Architecture::kSharedDecoder);
    mc.init_seed = rng();
    mc.init_range = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
    mc.frequency_steps = 3;
    PointerGeneratorModel model(mc, vocab);
    Tokens input = {"none"};
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) input.push_back(pool[rng() % pool.size()]);
    const std::string med = rng() % 2 ? "rx-aspirin" : "rx-coumadin";
    const Example ex = test::toy_example(mc.condition_mode(), input, med, {"ten"}, {"daily"});
    ad::Graph g;
    for (Field f : kFields) {
      const FieldDecode d = model.decode(g, ex, f, rng() % 2 == 0);
      for (const auto& s : d.steps) {
        const Matrix& p = s.distribution.value();
        worst_sum = std::max(worst_sum, std::abs(p.sum() - 1));
        most_negative = std::min(most_negative, p.minCoeff());
        ++distributions;
      }
    }
  }
  const double elapsed = seconds_since(t);
  o.detail << trials << " trials, " << distributions << " distributions, max |sum-1| " << worst_sum << ", min "
           << most_negative << ", " << elapsed << " s";
  o.require(worst_sum <= 1e-6, "sum within 1e-6");
  o.require(most_negative >= 0, "non-negative");
  o.require(elapsed < 60, "under 1 min");
  return o;
}

// --- 2 ----------------------------------------------------------------------------------------

Outcome gradient_fidelity() {
  Outcome o;
  const auto t = Clock::now();
  for (Architecture a : {Architecture::kSharedDecoder, Architecture::kMultiDecoder}) {
    PointerGeneratorModel model(test::toy_config(a, 8), toy_vocab());
    // Six input tokens, one of them out of vocabulary.
    const Example ex = test::toy_example(model.config().condition_mode(),
                                         {"none", "take", "rx-coumadin", "zorb", "at", "night"}, "rx-coumadin",
                                         {"zorb"}, {"at", "night"});
    const auto r = test::check_gradients(model.parameters(), [&](ad::Graph& g) { return model.loss(g, ex); }, 20,
                                         a == Architecture::kSharedDecoder ? 11 : 12, 1e-5);
    o.detail << architecture_name(a) << " worst rel " << r.worst << " over " << r.checked << "; ";
    o.require(r.checked == 20 && r.worst <= 1e-4, std::string(architecture_name(a)) + " within 1e-4");
  }
  const double elapsed = seconds_since(t);
  o.detail << elapsed << " s";
  o.require(elapsed < 120, "under 2 min");
  return o;
}

// --- 3 ----------------------------------------------------------------------------------------

Outcome copy_mechanism() {
  Outcome o;
  PointerGeneratorModel model(test::toy_config(Architecture::kSharedDecoder), toy_vocab());
  const Example ex = test::toy_example(ConditionMode::kQuestion, {"none", "zorb"}, "rx-aspirin", {"zorb"}, {"daily"});
  model.decoder(0).pgen_bias().value()(0, 0) = -1e6;
  ad::Graph g;
  const FieldDecode d = model.decode(g, ex, Field::kDosage, true);
  const DecoderStep& s = d.steps.front();
  const ExtendedVocab ext(model.vocabulary(), ex.input);
  const int zorb = *ext.find("zorb");
  const double p = s.distribution.value()(zorb, 0), a = s.attention.value()(1, 0);
  // With two source positions the copy mass splits as a and 1 - a.
  const double none_mass = s.distribution.value()(model.vocabulary().id("none"), 0);
  o.detail << "p_gen " << s.p_gen.value()(0, 0) << ", P(zorb) " << p << ", attention " << a << ", |diff| "
           << std::abs(p - a);
  o.require(s.p_gen.value()(0, 0) == 0.0, "p_gen forced to 0");
  o.require(std::abs(p - a) <= 1e-9, "P(OOV) equals attention");
  o.require(std::abs(none_mass - (1 - a)) <= 1e-9, "remaining mass on the other position");
  return o;
}

// --- 4 ----------------------------------------------------------------------------------------

RougeScore brute_rouge(const Tokens& hyp, const Tokens& ref) {
  if (hyp.empty() && ref.empty()) return {1, 1, 1};
  if (hyp.empty() || ref.empty()) return {0, 0, 0};
  std::vector<bool> used(ref.size(), false);
  int overlap = 0;
  for (const auto& h : hyp)
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!used[j] && ref[j] == h) {
        used[j] = true;
        ++overlap;
        break;
      }
  const double p = static_cast<double>(overlap) / static_cast<double>(hyp.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return {overlap ? 2 * p * r / (p + r) : 0.0, p, r};
}

Outcome rouge_oracle() {
  Outcome o;
  static const Tokens words = {"once", "twice", "a", "day", "daily", "at", "night", "none", "every", "other"};
  std::mt19937_64 rng(99);
  auto draw = [&] {
    Tokens t(rng() % 6);
    for (auto& x : t) x = words[rng() % words.size()];
    return t;
  };
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const Tokens h = draw(), r = draw();
    if (!(rouge1(h, r) == brute_rouge(h, r))) ++mismatches;
  }
  std::size_t records = 0, broken = 0;
  for (const auto& rep : g_reports) {
    const auto& d = rep.at("dosage");
    if (!(d.at("f1") == d.at("precision") && d.at("f1") == d.at("recall"))) ++broken;
    for (const auto& rec : rep.at("records")) {
      ++records;
      const auto& rd = rec.at("dosage_score");
      if (!(rd.at("f1") == rd.at("precision") && rd.at("f1") == rd.at("recall"))) ++broken;
    }
  }
  o.detail << "10000 pairs, " << mismatches << " mismatches; " << g_reports.size() << " evaluation runs, " << records
           << " dosage records, " << broken << " with F1 != P != R";
  o.require(mismatches == 0, "exact equality");
  o.require(!g_reports.empty() && broken == 0, "dosage F1 = P = R");
  return o;
}

// --- 5 ----------------------------------------------------------------------------------------

json read_report(const std::string& path) {
  json j = json::parse(slurp(path));
  g_reports.push_back(j);
  return j;
}

Outcome end_to_end() {
  Outcome o;
  const auto t = Clock::now();
  medreg_tool({"generate", "--seed", "7", "--transcripts", "500", "--out", w("corpus.jsonl")});
  medreg_tool({"split", "--seed", "7", "--in", w("corpus.jsonl"), "--out", w("split.json")});
  const json gen = json::parse(slurp(w("corpus.jsonl.manifest.json")));
  const double mm = std::stod(gen["config"]["multiple_medication_rate"].get<std::string>());
  const double nbm = std::stod(gen["config"]["number_between_rate"].get<std::string>());
  o.detail << "MM " << mm << " NBM " << nbm << ";";
  o.require(mm >= 0.3 && nbm >= 0.3, "distractor rates >= 0.3");
  for (const std::string m : {"qa", "md"}) {
    medreg_tool({"preprocess", "--config", kDesk.string(), "--model", m, "--in", w("corpus.jsonl"), "--split",
                 w("split.json"), "--out", w(m + ".examples.jsonl")});
    medreg_tool({"train", "--config", kDesk.string(), "--model", m, "--embedding", "lookup", "--in",
                 w(m + ".examples.jsonl"), "--out", w(m + ".ckpt")});
    medreg_tool({"evaluate", "--in", w(m + ".examples.jsonl"), "--model-path", w(m + ".ckpt"), "--out",
                 w(m + ".eval.json")});
    medreg_tool({"evaluate", "--baseline", "nearest", "--in", w(m + ".examples.jsonl"), "--out", w(m + ".nearest.json")});
    medreg_tool({"evaluate", "--baseline", "random", "--in", w(m + ".examples.jsonl"), "--out", w(m + ".random.json")});
    const json r = read_report(w(m + ".eval.json"));
    const json nn = read_report(w(m + ".nearest.json")), rt = read_report(w(m + ".random.json"));
    const double em = r["dosage_exact_match"], freq = r["frequency"]["f1"];
    const double mean = r["mean_f1"], dose = r["dosage"]["f1"];
    o.detail << ' ' << m << ": test examples " << r["examples"] << ", dosage EM " << em << ", frequency F1 " << freq
             << ", mean F1 " << mean << " vs nearest " << nn["mean_f1"] << " random " << rt["mean_f1"] << ";";
    o.require(em >= 0.95, m + " dosage EM >= 0.95");
    o.require(freq >= 0.90, m + " frequency F1 >= 0.90");
    o.require(mean > nn["mean_f1"].get<double>() && mean > rt["mean_f1"].get<double>(), m + " beats baselines on mean F1");
    o.require(dose > nn["dosage"]["f1"].get<double>() && dose > rt["dosage"]["f1"].get<double>(),
              m + " beats baselines on dosage F1");
  }
  const double elapsed = seconds_since(t);
  o.detail << ' ' << elapsed << " s";
  o.require(elapsed < 900, "within 15 min");
  return o;
}

// --- 6 ----------------------------------------------------------------------------------------

Config desk_config() {
  Config c;
  c.merge_file(kDesk);
  return c;
}

Outcome pretraining_transfer() {
  Outcome o;
  // (a) values after transfer.
  const Corpus corpus = load_corpus(w("corpus.jsonl"));
  const CorpusSplit split = split_from_json(slurp(w("split.json")));
  const Config c = desk_config();
  const PreprocessConfig pc = c.preprocess_config();
  ModelConfig sc = c.model_config();
  sc.architecture = Architecture::kSummarizer;
  const auto steps = static_cast<std::size_t>(sc.summary_steps);
  const auto summaries = build_summary_examples(select(corpus, split.train), pc, steps);
  PointerGeneratorModel source(sc, build_vocabulary(summaries, 2));
  TrainConfig quick = c.pretrain_config();
  quick.max_iterations = 50;
  quick.eval_every = 50;
  pretrain_summarization(source, summaries, {}, quick);
  const auto examples = build_examples(select(corpus, split.train), ConditionMode::kQuestion, pc);
  PointerGeneratorModel target(c.model_config(), build_vocabulary(examples, 2));
  transfer_encoder(source, target);
  std::size_t tensors = 0, differing = 0, words = 0;
  for (const auto* p : source.parameters().all()) {
    if (!p->name().starts_with("encoder.")) continue;
    ++tensors;
    if (target.parameters().at(p->name()).value() != p->value()) ++differing;
  }
  const Matrix& st = source.parameters().at("embedding.table").value();
  const Matrix& tt = target.parameters().at("embedding.table").value();
  for (int i = Vocabulary::kReserved; i < target.vocabulary().size(); ++i) {
    const std::string& word = target.vocabulary().word(i);
    if (!source.vocabulary().contains(word)) continue;
    ++words;
    if (tt.col(i) != st.col(source.vocabulary().id(word))) ++differing;
  }
  o.detail << tensors << " encoder tensors and " << words << " shared word vectors, " << differing << " differ;";
  o.require(tensors > 0 && words > 0 && differing == 0, "value-identical transfer");

  // (b) cold start vs pretrained at 100 training transcripts. Six models, so a shorter schedule.
  medreg_tool({"ablate", "--config", kDesk.string(), "--model", "qa", "--embedding", "lookup", "--in",
               w("corpus.jsonl"), "--split", w("split.json"), "--sizes", "100", "--seeds", "1,2,3", "--set",
               "augment=false", "--set", "max_iterations=4000", "--set", "eval_every=500", "--set", "patience=4",
               "--out", w("ablation.tsv")});
  std::istringstream table(slurp(w("ablation.tsv")));
  std::string line;
  std::getline(table, line);
  std::map<std::string, std::vector<double>> f1;
  while (std::getline(table, line)) {
    std::vector<std::string> cols;
    std::istringstream row(line);
    for (std::string cell; std::getline(row, cell, '\t');) cols.push_back(cell);
    if (cols.size() >= 7) f1[cols[1]].push_back(std::stod(cols[6]));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  const double cold = mean(f1["cold"]), pre = mean(f1["pretrained"]);
  o.detail << " mean test F1 over " << f1["cold"].size() << " seeds: cold " << cold << ", pretrained " << pre;
  o.require(f1["cold"].size() == 3 && f1["pretrained"].size() == 3, "three seeds each");
  o.require(pre >= cold, "pretrained >= cold");
  return o;
}

// --- 7 ----------------------------------------------------------------------------------------

Outcome augmentation_count() {
  Outcome o;
  std::size_t corpora = 0, wrong = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GenerationProfile p = GenerationProfile::defaults();
    p.multiple_medication_rate = 0.1 * static_cast<double>(seed % 6);
    const Corpus corpus = generate_synthetic_corpus(seed, 80, p);
    for (ConditionMode m : {ConditionMode::kQuestion, ConditionMode::kEntity}) {
      const auto ex = build_examples(corpus, m, PreprocessConfig{});
      const auto eligible = static_cast<std::size_t>(std::count_if(ex.begin(), ex.end(), shuffle_eligible));
      ++corpora;
      if (augment_by_shuffle(ex, seed).size() != ex.size() + eligible) ++wrong;
    }
  }
  const std::size_t original = 8654, augmented = 11521, eligible = augmented - original;
  std::vector<Example> fixture(original);
  for (std::size_t i = 0; i < original; ++i) {
    fixture[i].id = "f" + std::to_string(i);
    fixture[i].medication = "rx-a";
    fixture[i].dosage_target = {"five"};
    fixture[i].frequency_target = {"daily"};
    fixture[i].input = i < eligible ? Tokens{"none", "rx-a", "five", "rx-b", "ten"} : Tokens{"none", "rx-a", "five"};
  }
  const auto fixture_eligible =
      static_cast<std::size_t>(std::count_if(fixture.begin(), fixture.end(), shuffle_eligible));
  const std::size_t fixture_size = augment_by_shuffle(fixture, 7).size();
  o.detail << corpora << " corpora, " << wrong << " miscounted; fixture " << original << " + " << fixture_eligible
           << " eligible -> " << fixture_size;
  o.require(wrong == 0, "size = original + eligible");
  o.require(fixture_eligible == 2867 && fixture_size == augmented, "8654 -> 11521");
  return o;
}

// --- 8 ----------------------------------------------------------------------------------------

Outcome segmentation_contract() {
  Outcome o;
  const Corpus corpus = generate_synthetic_corpus(808, 1000, GenerationProfile::defaults());
  const Lexicon lex = default_medication_lexicon();
  std::size_t segments = 0, bad_window = 0, missing_med = 0, bad_fallback = 0, fallback = 0;
  for (const auto& rec : corpus) {
    for (const auto& s : segment_transcript(rec.transcript, detect_medications(rec.transcript, lex))) {
      ++segments;
      if (s.window < 2 || s.window > 5) ++bad_window;
      const Tokens med = split_whitespace(s.medication);
      if (std::search(s.tokens.begin(), s.tokens.end(), med.begin(), med.end()) == s.tokens.end()) ++missing_med;
      if (!detect_quantity(s.tokens).found) {
        ++fallback;
        if (s.window != 2) ++bad_fallback;
      }
    }
  }
  o.detail << "1000 transcripts, " << segments << " segments (" << fallback << " without a quantity); " << bad_window
           << " outside [2,5], " << missing_med << " missing their medication, " << bad_fallback << " bad fallbacks";
  o.require(segments > 0 && fallback > 0, "non-trivial fuzz");
  o.require(bad_window == 0 && missing_med == 0 && bad_fallback == 0, "contract");
  return o;
}

// --- 9 ----------------------------------------------------------------------------------------

Outcome asr_robustness() {
  Outcome o;
  const Corpus corpus = load_corpus(w("corpus.jsonl"));
  const CorpusSplit split = split_from_json(slurp(w("split.json")));
  const Corpus test = select(corpus, split.test);
  const Config c = desk_config();
  const PreprocessConfig pc = c.preprocess_config();
  AsrNoise noise = c.asr_noise();
  noise.substitution_rate = 0.1;
  for (const std::string m : {"qa", "md"}) {
    const auto model = load_checkpoint(w(m + ".ckpt"));
    const double clean = run_pipeline(test, *model, pc.medications, pc, nullptr, 0).score.mean_f1();
    o.detail << m << " clean " << clean << " noised";
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const double noised = run_pipeline(test, *model, pc.medications, pc, &noise, seed).score.mean_f1();
      o.detail << ' ' << noised;
      o.require(clean >= noised, m + " clean >= noised, seed " + std::to_string(seed));
    }
    o.detail << "; ";
  }

  std::size_t tags = 0, invented = 0, wrong = 0, dropped = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& rec : test) {
      const Transcript asr = simulate_asr(rec.transcript, noise, seed);
      const Alignment a = align_tags(rec, asr);
      tags += rec.mr_tags.size();
      dropped += a.dropped.size();
      if (a.tags.size() + a.dropped.size() != rec.mr_tags.size()) ++invented;
      for (const auto& kept : a.tags) {
        bool known = false;
        for (std::size_t k = 0; k < rec.mr_tags.size(); ++k)
          known |= kept.id == tag_id(rec.transcript.id, k) && kept.tag == rec.mr_tags[k];
        if (!known) ++invented;
      }
      for (std::size_t k = 0; k < rec.mr_tags.size(); ++k) {
        const auto& tag = rec.mr_tags[k];
        Tokens spoken;
        for (const auto& s : asr.sentences)
          if (s.start_s < tag.grounding.end_s && tag.grounding.start_s < s.end_s) {
            const Tokens t = normalize_text(s.text);
            spoken.insert(spoken.end(), t.begin(), t.end());
          }
        const Tokens med = normalize_text(tag.medication);
        const bool corrupted = std::search(spoken.begin(), spoken.end(), med.begin(), med.end()) == spoken.end();
        const bool was_dropped =
            std::find(a.dropped.begin(), a.dropped.end(), tag_id(rec.transcript.id, k)) != a.dropped.end();
        if (corrupted != was_dropped) ++wrong;
      }
    }
  }
  o.detail << "alignment over 3 seeds: " << tags << " tags, " << dropped << " dropped, " << invented << " invented, "
           << wrong << " drops not matching corrupted medications";
  o.require(invented == 0 && wrong == 0, "alignment");
  o.require(dropped > 0, "noise corrupts some medications");
  return o;
}

// --- 10 ---------------------------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  // Second runs of the commands behind criterion 5, compared byte for byte.
  medreg_tool({"generate", "--seed", "7", "--transcripts", "500", "--out", w("corpus.again.jsonl")});
  medreg_tool({"train", "--config", kDesk.string(), "--model", "qa", "--embedding", "lookup", "--in",
               w("qa.examples.jsonl"), "--out", w("qa.again.ckpt")});
  medreg_tool({"evaluate", "--in", w("qa.examples.jsonl"), "--model-path", w("qa.ckpt"), "--out",
               w("qa.eval.again.json")});
  for (const std::string suffix : {"", ".again"})
    medreg_tool({"extract", "--config", kDesk.string(), "--seed", "5", "--noise", "--in", w("corpus.jsonl"),
                 "--model-path", w("qa.ckpt"), "--out", w("extract" + suffix + ".jsonl")});
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"corpus.jsonl", "corpus.again.jsonl"},
      {"qa.ckpt", "qa.again.ckpt"},
      {"qa.ckpt.report.json", "qa.again.ckpt.report.json"},
      {"qa.eval.json", "qa.eval.again.json"},
      {"qa.eval.json.categories.tsv", "qa.eval.again.json.categories.tsv"},
      {"extract.jsonl", "extract.again.jsonl"}};
  for (const auto& [a, b] : pairs) {
    const std::string x = slurp(w(a)), y = slurp(w(b));
    const bool same = !x.empty() && x == y;
    o.detail << a << (same ? " identical; " : " DIFFERS; ");
    o.require(same, a);
  }
  return o;
}

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  // Criterion 4 also checks the evaluation runs of 5 and 6, so it runs after them.
  const std::vector<Criterion> order = {
      {1, "distribution soundness", distribution_soundness},
      {2, "gradient fidelity", gradient_fidelity},
      {3, "copy mechanism", copy_mechanism},
      {5, "end-to-end learning", end_to_end},
      {6, "pretraining transfer", pretraining_transfer},
      {7, "augmentation count", augmentation_count},
      {8, "segmentation contract", segmentation_contract},
      {9, "ASR robustness ordering", asr_robustness},
      {10, "determinism", determinism},
      {4, "ROUGE oracle equivalence", rouge_oracle},
  };
  std::map<int, std::string> lines;
  int failed = 0;
  for (const auto& c : order) {
    std::cerr << "criterion " << c.number << ": " << c.name << '\n';
    const auto t = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << " criterion " << c.number << " (" << c.name << "): " << o.detail.str();
    lines[c.number] = line.str();
    std::cerr << "  " << line.str() << " (" << seconds_since(t) << " s)\n";
    failed += !o.pass;
  }
  for (const auto& [n, line] : lines) std::cout << line << '\n';
  return failed;
}
