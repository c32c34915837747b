#include "medreg/cli.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "medreg/ablation.hpp"
#include "medreg/config.hpp"
#include "medreg/errors.hpp"
#include "medreg/evaluation.hpp"
#include "medreg/pgnet.hpp"
#include "medreg/pipeline.hpp"
#include "medreg/rng.hpp"
#include "medreg/training.hpp"

namespace medreg::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::optional<long long> seed;
  std::optional<std::string> model;
  std::optional<std::string> embedding;
  std::string pretrained_encoder;
  std::string in;
  std::string out;
  std::string split;
  std::string model_path;
  std::string eval_split = "test";
  std::string baseline = "model";
  std::string lexicon;
  std::string vector_store;
  std::string manifest;
  std::string profile = "default";
  std::optional<long long> transcripts;
  std::optional<std::string> sizes;
  std::optional<std::string> seeds;
  bool noise = false;
  std::vector<std::string> overrides;
};

struct Command {
  const char* name;
  const char* description;
};

const std::vector<Command> kCommands = {
    {"generate", "Write a seeded synthetic corpus of annotated transcripts."},
    {"split", "Partition a corpus into train/validation/test/holdout transcript ids."},
    {"preprocess", "Turn corpus records into QA or MD examples, labelled by split."},
    {"pretrain", "Train the summarization model whose encoder can initialise QA models."},
    {"train", "Train a QA (shared decoder) or MD (multi decoder) model."},
    {"evaluate", "Score a model or a baseline on one split of an example file."},
    {"ablate", "Train and score models over several training-set sizes."},
    {"extract", "Find medications in raw transcripts and extract their regimens."},
};

void add_common(CLI::App& sub, Options& o) {
  sub.add_option("--config", o.config, "key=value config file (default: $MEDREG_CONFIG)");
  sub.add_option("--seed", o.seed, "master seed");
  sub.add_option("--set", o.overrides, "config override key=value (repeatable)");
  sub.add_option("--manifest", o.manifest, "run manifest path (default: <out>.manifest.json)");
  sub.add_option("--out", o.out, "output path")->required();
}

std::unique_ptr<CLI::App> make_app(Options& o) {
  auto app = std::make_unique<CLI::App>("Medication regimen extraction toolkit", "medreg");
  app->require_subcommand(1);
  for (const auto& c : kCommands) {
    CLI::App* sub = app->add_subcommand(c.name, c.description);
    add_common(*sub, o);
    const std::string name = c.name;
    if (name == "generate") {
      sub->add_option("--transcripts", o.transcripts, "number of transcripts");
      sub->add_option("--profile", o.profile, "generation profile: default or trivial")
          ->check(CLI::IsMember({"default", "trivial"}));
    }
    if (name == "split" || name == "preprocess" || name == "pretrain" || name == "ablate" || name == "evaluate" ||
        name == "train" || name == "extract")
      sub->add_option("--in", o.in, "input file")->required();
    if (name == "preprocess" || name == "pretrain" || name == "ablate")
      sub->add_option("--split", o.split, "split file written by `split`")->required();
    if (name == "preprocess" || name == "train" || name == "ablate")
      sub->add_option("--model", o.model, "qa or md")->check(CLI::IsMember({"qa", "md"}));
    if (name == "pretrain" || name == "train" || name == "ablate") {
      sub->add_option("--embedding", o.embedding, "lookup, store or pseudo")
          ->check(CLI::IsMember({"lookup", "store", "pseudo"}));
    }
    if (name == "pretrain" || name == "train" || name == "evaluate")
      sub->add_option("--vector-store", o.vector_store, "vector store for store embeddings");
    if (name == "train") sub->add_option("--pretrained-encoder", o.pretrained_encoder, "summarizer checkpoint to transfer");
    if (name == "evaluate" || name == "extract") sub->add_option("--model-path", o.model_path, "model checkpoint");
    if (name == "evaluate") {
      sub->add_option("--split", o.eval_split, "partition to score (default: test)");
      sub->add_option("--baseline", o.baseline, "model, nearest or random")
          ->check(CLI::IsMember({"model", "nearest", "random"}));
    }
    if (name == "ablate") {
      sub->add_option("--sizes", o.sizes, "comma-separated training transcript counts");
      sub->add_option("--seeds", o.seeds, "comma-separated seeds");
    }
    if (name == "extract") {
      sub->add_option("--lexicon", o.lexicon, "medication lexicon file");
      sub->add_flag("--noise", o.noise, "pass transcripts through the ASR simulator first");
    }
  }
  return app;
}

// --- helpers -----------------------------------------------------------------------------

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string kind_name(ExitCode code) {
  switch (code) {
    case ExitCode::kUsage: return "usage";
    case ExitCode::kData: return "data";
    case ExitCode::kNumeric: return "numeric";
    case ExitCode::kIo: return "io";
    default: return "internal";
  }
}

int fail(std::ostream& err, ExitCode code, const std::string& message) {
  err << "error code=" << static_cast<int>(code) << " kind=" << kind_name(code) << " message=\"" << escape(message)
      << "\"\n";
  return static_cast<int>(code);
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw IoError(what + " " + path + " does not exist");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(what + " '" + s + "' is not a non-negative integer");
}

class Run {
 public:
  Run(std::string command, const Options& o, const Getenv& getenv, std::ostream& out)
      : command_(std::move(command)), opts_(o), out_(out) {
    std::string file = o.config;
    if (file.empty())
      if (auto env = getenv("MEDREG_CONFIG")) file = *env;
    if (!file.empty()) {
      if (!fs::is_regular_file(file)) throw IoError("config file " + file + " does not exist");
      config_.merge_file(file);
      add_input(file);
    }
    config_.merge_environment(getenv);
    if (o.seed) config_.set("seed", std::to_string(*o.seed));
    if (o.model) config_.set("model", *o.model);
    if (o.embedding) config_.set("embedding", *o.embedding);
    if (o.transcripts) config_.set("transcripts", std::to_string(*o.transcripts));
    if (o.sizes) config_.set("ablation_sizes", *o.sizes);
    if (o.seeds) config_.set("ablation_seeds", *o.seeds);
    if (!o.vector_store.empty()) config_.set("vector_store", o.vector_store);
    if (!o.lexicon.empty()) config_.set("medication_lexicon", o.lexicon);
    for (const auto& kv : o.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      config_.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (config_.get_int("seed") < 0) throw DataError("seed must be non-negative");
  }

  const Config& config() const { return config_; }
  std::uint64_t seed() const { return static_cast<std::uint64_t>(config_.get_int("seed")); }
  void add_input(const std::string& path) { inputs_.push_back(path); }
  void add_output(const std::string& path) { outputs_.push_back(path); }
  std::ostream& log() { return log_; }

  std::unique_ptr<VectorStore> vector_store() {
    if (config_.get("embedding") != "store") return nullptr;
    const std::string& path = config_.get("vector_store");
    require_file(path, "vector store");
    add_input(path);
    return std::make_unique<VectorStore>(VectorStore::load(path));
  }

  void finish() {
    const std::string log_path = opts_.out + ".log";
    write_text(log_path, log_.str());
    json files_in = json::array(), files_out = json::array();
    for (const auto& p : inputs_) files_in.push_back({{"path", p}, {"sha1", git_blob_sha1_file(p)}});
    for (const auto& p : outputs_) files_out.push_back({{"path", p}, {"sha1", git_blob_sha1_file(p)}});
    json manifest;
    manifest["command"] = command_;
    manifest["config"] = config_.values();
    manifest["config_sources"] = config_.sources();
    manifest["seeds"] = {{"seed", seed()}};
    manifest["inputs"] = files_in;
    manifest["outputs"] = files_out;
    manifest["log"] = log_path;
    write_text(opts_.manifest.empty() ? opts_.out + ".manifest.json" : opts_.manifest, manifest.dump(2) + "\n");
    out_ << command_ << ": wrote " << opts_.out << '\n';
  }

 private:
  std::string command_;
  const Options& opts_;
  std::ostream& out_;
  Config config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::ostringstream log_;
};

ConditionMode mode_of(const Config& c) { return c.model_config().condition_mode(); }

// --- commands ------------------------------------------------------------------------------

void cmd_generate(Run& run, const Options& o) {
  GenerationProfile profile = o.profile == "trivial" ? GenerationProfile::trivial() : run.config().generation_profile();
  const auto n = run.config().get_int("transcripts");
  if (n < 0) throw DataError("transcripts must be non-negative");
  const Corpus corpus = generate_synthetic_corpus(run.seed(), static_cast<std::size_t>(n), profile);
  save_corpus(corpus, o.out);
  run.add_output(o.out);
  run.log() << "generated " << corpus.size() << " transcripts with seed " << run.seed() << '\n';
}

void cmd_split(Run& run, const Options& o) {
  require_file(o.in, "--in");
  run.add_input(o.in);
  const Corpus corpus = load_corpus(o.in);
  const CorpusSplit split = split_corpus(corpus, run.seed(), run.config().split_fractions());
  write_text(o.out, to_json(split) + "\n");
  run.add_output(o.out);
  run.log() << "split " << corpus.size() << " transcripts: " << split.train.size() << " train, "
            << split.validation.size() << " validation, " << split.test.size() << " test, " << split.holdout.size()
            << " holdout\n";
}

CorpusSplit load_split(Run& run, const std::string& path) {
  require_file(path, "--split");
  run.add_input(path);
  return split_from_json(read_text(path));
}

void cmd_preprocess(Run& run, const Options& o) {
  require_file(o.in, "--in");
  run.add_input(o.in);
  const Corpus corpus = load_corpus(o.in);
  const CorpusSplit split = load_split(run, o.split);
  const PreprocessConfig pc = run.config().preprocess_config();
  const ConditionMode mode = mode_of(run.config());
  std::vector<LabelledExample> out;
  const std::pair<const char*, const std::vector<std::string>*> parts[] = {
      {"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}, {"holdout", &split.holdout}};
  for (const auto& [name, ids] : parts) {
    PreprocessStats stats;
    auto examples = build_examples(select(corpus, *ids), mode, pc, &stats);
    const std::size_t before = examples.size();
    if (std::string(name) == "train" && run.config().get_bool("augment"))
      examples = augment_by_shuffle(examples, derive_seed(run.seed(), 21));
    for (auto& e : examples) out.push_back({name, std::move(e)});
    run.log() << name << ": " << before << " examples, " << examples.size() - before << " shuffled copies; skipped "
              << stats.both_none << " without regimen, " << stats.dropped_long << " long, " << stats.missing_medication
              << " missing medication, " << stats.rejected_dosage << " dosage, " << stats.rejected_frequency
              << " frequency; " << stats.dosage_without_number << " dosages without a number\n";
  }
  save_examples(out, o.out);
  run.add_output(o.out);
}

std::vector<Example> part(const std::vector<LabelledExample>& all, const std::string& name) {
  std::vector<Example> out;
  for (const auto& e : all)
    if (e.split == name) out.push_back(e.example);
  return out;
}

void write_report(Run& run, const std::string& path, const std::string& text) {
  write_text(path, text + "\n");
  run.add_output(path);
}

void cmd_pretrain(Run& run, const Options& o) {
  require_file(o.in, "--in");
  run.add_input(o.in);
  const Corpus corpus = load_corpus(o.in);
  const CorpusSplit split = load_split(run, o.split);
  const PreprocessConfig pc = run.config().preprocess_config();
  ModelConfig mc = run.config().model_config();
  mc.architecture = Architecture::kSummarizer;
  const auto steps = static_cast<std::size_t>(mc.summary_steps);
  const auto train = build_summary_examples(select(corpus, split.train), pc, steps);
  const auto val = build_summary_examples(select(corpus, split.validation), pc, steps);
  if (train.empty()) throw DataError("no summaries in the training split");
  const auto threshold = static_cast<std::size_t>(run.config().get_int("pretrain_vocab_threshold"));
  auto store = run.vector_store();
  PointerGeneratorModel model(mc, build_vocabulary(train, threshold), store.get());
  run.log() << "pretraining on " << train.size() << " summaries, vocabulary " << model.vocabulary().size() << '\n';
  const TrainReport report = pretrain_summarization(model, train, val, run.config().pretrain_config(), &run.log());
  save_checkpoint(model, o.out);
  run.add_output(o.out);
  write_report(run, o.out + ".report.json", report.to_json());
}

void cmd_train(Run& run, const Options& o) {
  require_file(o.in, "--in");
  run.add_input(o.in);
  const auto all = load_examples(o.in);
  const auto train = part(all, "train");
  const auto val = part(all, "validation");
  if (train.empty()) throw DataError("no training examples in " + o.in);
  const ModelConfig mc = run.config().model_config();
  for (const auto& e : train)
    if (e.mode != mc.condition_mode())
      throw DataError("examples were preprocessed for the other model kind (" + std::string(mode_name(e.mode)) + ")");
  auto store = run.vector_store();
  const auto threshold = static_cast<std::size_t>(run.config().get_int("vocab_threshold"));
  PointerGeneratorModel model(mc, build_vocabulary(train, threshold), store.get());
  if (!o.pretrained_encoder.empty()) {
    require_file(o.pretrained_encoder, "--pretrained-encoder");
    run.add_input(o.pretrained_encoder);
    const auto source = load_checkpoint(o.pretrained_encoder, store.get());
    TransferOptions to;
    to.copy_mixer = run.config().get_bool("transfer_mixer");
    const TransferReport tr = transfer_encoder(*source, model, to);
    run.log() << "transferred " << tr.tensors.size() << " tensors and " << tr.embedding_words << " embedding rows\n";
  }
  run.log() << "training " << architecture_name(mc.architecture) << " on " << train.size() << " examples ("
            << val.size() << " validation), vocabulary " << model.vocabulary().size() << ", "
            << model.parameter_count() << " parameters\n";
  const TrainReport report = train_qa(model, train, val, run.config().train_config(), &run.log());
  save_checkpoint(model, o.out);
  run.add_output(o.out);
  write_report(run, o.out + ".report.json", report.to_json());
}

void cmd_evaluate(Run& run, const Options& o) {
  require_file(o.in, "--in");
  run.add_input(o.in);
  const auto examples = part(load_examples(o.in), o.eval_split);
  EvaluationReport report;
  if (o.baseline == "model") {
    require_file(o.model_path, "--model-path");
    run.add_input(o.model_path);
    auto store = run.vector_store();
    const auto model = load_checkpoint(o.model_path, store.get());
    report = evaluate_model(*model, examples);
  } else if (o.baseline == "nearest") {
    report = evaluate_nearest_number(examples);
  } else {
    report = evaluate_random_top3(examples, derive_seed(run.seed(), 31));
  }
  write_text(o.out, report.to_json() + "\n");
  run.add_output(o.out);
  write_report(run, o.out + ".categories.tsv", report.category_table());
  run.log() << o.eval_split << " (" << examples.size() << " examples, " << o.baseline << "): dosage F1 "
            << report.dosage.f1 << ", frequency F1 " << report.frequency.f1 << ", dosage exact match "
            << report.dosage_exact_match << '\n';
}

void cmd_ablate(Run& run, const Options& o) {
  require_file(o.in, "--in");
  run.add_input(o.in);
  const Corpus corpus = load_corpus(o.in);
  const CorpusSplit split = load_split(run, o.split);
  const Config& c = run.config();
  AblationConfig ac;
  ac.sizes.clear();
  for (const auto& s : split_list(c.get("ablation_sizes"))) ac.sizes.push_back(parse_u64(s, "size"));
  ac.seeds.clear();
  for (const auto& s : split_list(c.get("ablation_seeds"))) ac.seeds.push_back(parse_u64(s, "seed"));
  if (ac.sizes.empty() || ac.seeds.empty()) throw DataError("ablation needs at least one size and one seed");
  ac.model = c.model_config();
  if (ac.model.embedding == EmbeddingKind::kStore) throw DataError("ablation supports lookup and pseudo embeddings");
  ac.train = c.train_config();
  ac.pretrain = c.pretrain_config();
  ac.preprocess = c.preprocess_config();
  ac.vocab_threshold = static_cast<std::size_t>(c.get_int("vocab_threshold"));
  ac.pretrain_vocab_threshold = static_cast<std::size_t>(c.get_int("pretrain_vocab_threshold"));
  ac.augment = c.get_bool("augment");
  ac.transfer.copy_mixer = c.get_bool("transfer_mixer");
  const auto rows = ablate_training_size(select(corpus, split.train), select(corpus, split.validation),
                                         select(corpus, split.test), ac, &run.log());
  write_text(o.out, ablation_table(rows));
  run.add_output(o.out);
}

void cmd_extract(Run& run, const Options& o) {
  require_file(o.in, "--in");
  run.add_input(o.in);
  require_file(o.model_path, "--model-path");
  run.add_input(o.model_path);
  const auto model = load_checkpoint(o.model_path);
  const PreprocessConfig pc = run.config().preprocess_config();
  if (!run.config().get("medication_lexicon").empty()) run.add_input(run.config().get("medication_lexicon"));
  const Corpus corpus = load_corpus(o.in);
  const AsrNoise noise = run.config().asr_noise();
  const PipelineRun result =
      run_pipeline(corpus, *model, pc.medications, pc, o.noise ? &noise : nullptr, derive_seed(run.seed(), 41));
  std::ostringstream lines;
  for (const auto& r : result.results) lines << r.to_json_line() << '\n';
  const PipelineScore& score = result.score;
  const std::size_t dropped = result.dropped_tags;
  write_text(o.out, lines.str());
  run.add_output(o.out);
  run.log() << "extracted from " << corpus.size() << " transcripts; " << score.tags << " annotated regimens ("
            << dropped << " dropped in alignment), dosage F1 " << score.dosage.f1 << ", frequency F1 "
            << score.frequency.f1 << '\n';
}

}  // namespace

std::vector<std::string> commands() {
  std::vector<std::string> out;
  for (const auto& c : kCommands) out.emplace_back(c.name);
  return out;
}

std::string command_help(const std::string& command) {
  Options o;
  auto app = make_app(o);
  return app->get_subcommand(command)->help();
}

std::vector<std::string> command_flags(const std::string& command) {
  Options o;
  auto app = make_app(o);
  std::vector<std::string> out;
  for (const CLI::Option* opt : app->get_subcommand(command)->get_options()) {
    for (const auto& name : opt->get_lnames()) out.push_back("--" + name);
  }
  return out;
}

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string git_blob_sha1_file(const std::filesystem::path& path) { return git_blob_sha1(read_text(path)); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Getenv& getenv) {
  Options o;
  auto app = make_app(o);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app->parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app->get_subcommands().empty() ? app->help() : app->get_subcommands().front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(err, ExitCode::kUsage, e.what());
  }
  const std::string command = app->get_subcommands().front()->get_name();
  try {
    Run r(command, o, getenv, out);
    if (command == "generate") cmd_generate(r, o);
    else if (command == "split") cmd_split(r, o);
    else if (command == "preprocess") cmd_preprocess(r, o);
    else if (command == "pretrain") cmd_pretrain(r, o);
    else if (command == "train") cmd_train(r, o);
    else if (command == "evaluate") cmd_evaluate(r, o);
    else if (command == "ablate") cmd_ablate(r, o);
    else if (command == "extract") cmd_extract(r, o);
    r.finish();
  } catch (const Error& e) {
    return fail(err, e.code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(err, ExitCode::kIo, e.what());
  } catch (const std::exception& e) {
    return fail(err, ExitCode::kData, e.what());
  }
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run(args, out, err, [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
}

}  // namespace medreg::cli
