#include "opinion/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "opinion/corpus.hpp"
#include "opinion/dump_ingest.hpp"
#include "opinion/error.hpp"
#include "opinion/eval.hpp"
#include "opinion/http_api.hpp"
#include "opinion/retrieval.hpp"

namespace opinion {

using nlohmann::json;

namespace {

struct Flags {
  std::string config_path;
  bool json_out = false;
  ConfigValues values;  // config keys set on the command line
};

// Registers a string option whose value, when given, overrides `key`.
CLI::Option* config_option(CLI::App* app, Flags& flags, const std::string& name, const std::string& key,
                           const std::string& help) {
  return app->add_option_function<std::string>(
      name, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
}

BackendPtr make_backend(const Config& cfg) {
  if (cfg.backend == BackendKind::remote) {
    if (cfg.remote.endpoint.url.empty()) {
      throw ValidationError("remote backend needs backend.endpoint_url (OPINION_ENDPOINT_URL)",
                            {"backend.endpoint_url"});
    }
    return std::make_shared<RemoteBackend>(cfg.remote);
  }
  if (cfg.corpus_path.empty()) throw ValidationError("retrieval backend needs --corpus", {"corpus_path"});
  auto index = std::make_shared<const RetrievalIndex>(read_corpus(cfg.corpus_path));
  return std::make_shared<RetrievalBackend>(std::move(index));
}

GenerationParams params_for(const Config& cfg) {
  auto p = cfg.params;
  p.stop = completion_stop_sequences(cfg.remote.end_sentinel);
  return p;
}

std::vector<BiasId> parse_bias_list(const std::vector<std::string>& raw) {
  std::vector<BiasId> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part.empty()) continue;
      if (part == "all") {
        for (const auto& b : kBiases) out.push_back(b.id);
      } else {
        out.push_back(parse_bias(part));
      }
    }
  }
  std::vector<BiasId> unique;
  for (auto b : out) {
    if (std::find(unique.begin(), unique.end(), b) == unique.end()) unique.push_back(b);
  }
  return unique;
}

std::vector<BiasSource> select_sources(const std::vector<std::string>& biases) {
  if (biases.empty()) return {registry().begin(), registry().end()};
  std::vector<BiasSource> out;
  for (auto id : parse_bias_list(biases)) {
    auto srcs = lookup(id);
    out.insert(out.end(), srcs.begin(), srcs.end());
  }
  return out;
}

int cmd_biases(const Config& cfg, const Flags& flags, std::ostream& out) {
  for (const auto& rec : registry_json(cfg.scale)) {
    if (flags.json_out) {
      out << rec.dump() << '\n';
    } else {
      out << rec["bias"].get<std::string>() << '\t' << rec["category"].get<std::string>() << '\t'
          << rec["subreddit"].get<std::string>() << '\t' << rec["quota"].get<std::uint32_t>() << '\n';
    }
  }
  return exit_code::ok;
}

int cmd_ingest_stats(const Config& cfg, const Flags& flags, const std::vector<std::string>& subreddits,
                     std::ostream& out, std::ostream& err) {
  if (cfg.dump_dir.empty()) throw ValidationError("--dump is required", {"dump_dir"});
  if (!std::filesystem::is_directory(cfg.dump_dir)) throw IoError("dump directory not found: " + cfg.dump_dir.string());
  std::vector<std::string> names = subreddits;
  if (names.empty()) {
    for (const auto& s : registry()) names.emplace_back(s.subreddit);
  }
  const auto mode = cfg.strict ? ParseMode::strict : ParseMode::lenient;
  bool any = false;
  for (const auto& name : names) {
    for (auto kind : {RecordKind::submissions, RecordKind::comments}) {
      std::filesystem::path path;
      try {
        path = dump_file(cfg.dump_dir, name, kind);
      } catch (const IoError& e) {
        if (!subreddits.empty()) throw;
        err << "skipping: " << e.what() << '\n';
        continue;
      }
      any = true;
      IngestStats stats;
      if (kind == RecordKind::submissions) {
        auto s = stream_submissions(path, mode);
        while (s.next()) {
        }
        stats = s.stats();
      } else {
        auto s = stream_comments(path, mode);
        while (s.next()) {
        }
        stats = s.stats();
      }
      const char* kind_name = kind == RecordKind::submissions ? "submissions" : "comments";
      if (flags.json_out) {
        out << json{{"subreddit", name}, {"kind", kind_name}, {"file", path.filename().string()},
                    {"stats", to_json(stats)}}
                   .dump()
            << '\n';
      } else {
        out << name << ' ' << kind_name << ": lines=" << stats.lines_read << " ok=" << stats.records_ok
            << " skipped=" << stats.records_skipped;
        for (const auto& [reason, n] : stats.skip_reasons) out << ' ' << reason << '=' << n;
        out << '\n';
      }
    }
  }
  if (!any) throw IoError("no dump files found in " + cfg.dump_dir.string());
  return exit_code::ok;
}

int cmd_build_corpus(const Config& cfg, const Flags& flags, const std::vector<std::string>& biases,
                     const std::string& report_path, const std::string& training_path, std::ostream& out) {
  if (cfg.dump_dir.empty()) throw ValidationError("--dump is required", {"dump_dir"});
  if (cfg.corpus_path.empty()) throw ValidationError("--out is required", {"corpus_path"});
  if (!std::filesystem::is_directory(cfg.dump_dir)) throw IoError("dump directory not found: " + cfg.dump_dir.string());

  const auto sources = select_sources(biases);
  CorpusOptions options;
  options.scale = cfg.scale;
  options.mode = cfg.strict ? ParseMode::strict : ParseMode::lenient;
  auto result = build_corpus(sources, cfg.dump_dir, options);

  write_corpus(result.pairs, cfg.corpus_path);
  const auto report_file = report_path.empty() ? cfg.corpus_path.string() + ".report.json" : report_path;
  {
    std::ofstream rep(report_file, std::ios::binary | std::ios::trunc);
    if (!rep) throw IoError("cannot write " + report_file);
    rep << report_json(result.reports).dump(2) << '\n';
  }
  if (!training_path.empty()) write_training_file(result.pairs, training_path);

  for (const auto& r : result.reports) {
    if (flags.json_out) {
      out << json{{"bias", to_string(r.source.bias)}, {"subreddit", r.source.subreddit}, {"quota", r.quota},
                  {"emitted", r.filters.emitted}}
                 .dump()
          << '\n';
    } else {
      out << to_string(r.source.bias) << '\t' << r.source.subreddit << '\t' << r.filters.emitted << '/' << r.quota
          << '\n';
    }
  }
  return exit_code::ok;
}

int cmd_render_prompt(const std::string& bias, const std::string& instruction, const Flags& flags, std::ostream& out) {
  auto prompt = render_inference(parse_bias(bias), instruction);
  if (flags.json_out) {
    out << json{{"bias", bias}, {"subreddit", prompt.subreddit}, {"text", prompt.text}}.dump() << '\n';
  } else {
    out << prompt.text;
  }
  return exit_code::ok;
}

int cmd_ask(const Config& cfg, const Flags& flags, const std::vector<std::string>& biases, const std::string& question,
            std::ostream& out) {
  ConversationStore store;  // one-shot, memory only
  Gateway gateway(make_backend(cfg), store, cfg.gateway);
  AskRequest request{question, parse_bias_list(biases), params_for(cfg)};
  auto result = gateway.ask(std::move(request));

  bool any_ok = false;
  for (const auto& a : result.answers) {
    any_ok = any_ok || a.status == AnswerStatus::ok;
    if (flags.json_out) {
      out << to_json(a).dump() << '\n';
    } else {
      out << "[" << to_string(a.bias) << "] " << info(a.bias).display_name << " (r/" << a.subreddit_used << ")\n";
      out << (a.status == AnswerStatus::ok ? a.text : "error: " + a.error_detail.value_or("")) << "\n\n";
    }
  }
  return any_ok ? exit_code::ok : exit_code::io;
}

int cmd_serve(const Config& cfg, std::ostream& err) {
  auto backend = make_backend(cfg);
  std::filesystem::create_directories(cfg.data_dir);
  ConversationStore store(cfg.data_dir / "conversations.log");
  Gateway gateway(backend, store, cfg.gateway);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ApiServer server(gateway, {cfg.host, cfg.port, cfg.web_root});
  err << "listening on http://" << cfg.host << ':' << server.port() << " (backend " << to_string(cfg.backend)
      << ")" << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  err << "shutting down\n";
  server.stop();
  server.wait();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return exit_code::ok;
}

ClassifierSet make_classifiers(const Config& cfg) {
  if (cfg.classifier == "remote") {
    if (cfg.regard_endpoint.url.empty() || cfg.sentiment_endpoint.url.empty()) {
      throw ValidationError("remote classifiers need eval.regard_url and eval.sentiment_url",
                            {"eval.regard_url", "eval.sentiment_url"});
    }
    return {std::make_shared<RemoteClassifier>(cfg.regard_endpoint),
            std::make_shared<RemoteClassifier>(cfg.sentiment_endpoint)};
  }
  if (cfg.lexicon_path.empty()) throw ValidationError("lexicon classifier needs --lexicon", {"eval.lexicon"});
  auto lex = std::make_shared<LexiconClassifier>(load_lexicon(cfg.lexicon_path));
  return {lex, lex};
}

int cmd_eval_run(const Config& cfg, const Flags& flags, const std::vector<std::string>& biases,
                 const std::string& prompts_path, const std::string& out_path, const std::string& log_path,
                 std::ostream& out, std::ostream& err) {
  if (prompts_path.empty()) throw ValidationError("--prompts is required", {"prompts"});
  if (out_path.empty()) throw ValidationError("--out is required", {"out"});
  auto prompts = read_eval_prompts(prompts_path);
  auto classifiers = make_classifiers(cfg);
  auto backend = make_backend(cfg);

  EvalOptions options;
  options.params = params_for(cfg);
  options.parallelism = cfg.eval_parallelism;
  auto run = run_eval(parse_bias_list(biases.empty() ? std::vector<std::string>{"all"} : biases), prompts, *backend,
                      classifiers, options);

  {
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + out_path);
    f << eval_run_json(run).dump(2) << '\n';
  }
  if (!log_path.empty()) {
    std::ofstream f(log_path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + log_path);
    for (const auto& s : run.log) f << to_json(s).dump() << '\n';
  }
  if (run.degraded) err << "warning: " << run.skipped << " of " << run.log.size() << " samples skipped; run is degraded\n";
  const json summary{{"samples", run.log.size()}, {"skipped", run.skipped}, {"degraded", run.degraded},
                     {"cells", run.cells.size()}, {"out", out_path}};
  if (flags.json_out) {
    out << summary.dump() << '\n';
  } else {
    out << "samples=" << run.log.size() << " skipped=" << run.skipped << " cells=" << run.cells.size()
        << (run.degraded ? " degraded" : "") << '\n';
  }
  return exit_code::ok;
}

int cmd_eval_report(const std::string& in_path, const std::string& format, std::ostream& out) {
  if (in_path.empty()) throw ValidationError("--in is required", {"in"});
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + in_path);
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ValidationError(in_path + " is not valid JSON", {"in"});
  out << render_report(cells_from_json(doc), parse_report_format(format));
  return exit_code::ok;
}

int cmd_import_bold(const std::string& dir, const std::string& out_path, std::ostream& out) {
  auto prompts = import_bold(dir);
  if (out_path.empty()) {
    for (const auto& p : prompts) out << to_json(p).dump() << '\n';
  } else {
    write_eval_prompts(prompts, out_path);
  }
  return exit_code::ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  Flags flags;
  CLI::App app{"Bias-aware instruction corpus, prompting, serving and evaluation toolkit", "opinion"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", flags.config_path, "Config file (key = value, [section] headers)");
  app.add_flag("--json", flags.json_out, "Newline-delimited JSON on standard output");

  // Options shared by several subcommands.
  auto backend_opts = [&](CLI::App* sub) {
    config_option(sub, flags, "--corpus", "corpus_path", "Corpus for the retrieval backend");
    config_option(sub, flags, "--backend", "backend.kind", "retrieval | remote");
    config_option(sub, flags, "--endpoint", "backend.endpoint_url", "Completion endpoint URL (remote backend)");
  };

  auto* biases_cmd = app.add_subcommand("biases", "List the bias registry");
  config_option(biases_cmd, flags, "--scale", "scale", "Quota scale factor in (0, 1]");

  std::vector<std::string> ingest_subreddits;
  auto* ingest = app.add_subcommand("ingest-stats", "Count records and skip reasons in dump files");
  config_option(ingest, flags, "--dump", "dump_dir", "Dump directory");
  ingest->add_option("--subreddit", ingest_subreddits, "Restrict to these subreddits");
  ingest->add_flag_callback("--strict", [&] { flags.values["strict"] = "true"; }, "Fail on the first malformed line");

  std::vector<std::string> build_biases;
  std::string report_path, training_path;
  auto* build = app.add_subcommand("build-corpus", "Derive the instruction corpus from dump files");
  config_option(build, flags, "--dump", "dump_dir", "Dump directory");
  config_option(build, flags, "--out", "corpus_path", "Output corpus (ndjson)");
  config_option(build, flags, "--scale", "scale", "Quota scale factor in (0, 1]");
  build->add_flag_callback("--strict", [&] { flags.values["strict"] = "true"; }, "Fail on the first malformed line");
  build->add_option("--bias", build_biases, "Only these biases (repeatable, comma lists, 'all')");
  build->add_option("--report", report_path, "Filter report path (default <out>.report.json)");
  build->add_option("--training-out", training_path, "Also write rendered training examples (ndjson)");

  std::string prompt_bias, prompt_instruction;
  auto* render = app.add_subcommand("render-prompt", "Print the exact conditioning prompt for a bias");
  render->add_option("--bias", prompt_bias, "Bias id")->required();
  render->add_option("--instruction", prompt_instruction, "Instruction text")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  backend_opts(serve);
  config_option(serve, flags, "--host", "serve.host", "Listen address");
  config_option(serve, flags, "--port", "serve.port", "Listen port");
  config_option(serve, flags, "--data-dir", "serve.data_dir", "Conversation log directory");
  config_option(serve, flags, "--web-root", "serve.web_root", "Static files to serve at /");
  config_option(serve, flags, "--parallelism", "serve.parallelism", "Concurrent generations per ask");
  config_option(serve, flags, "--bias-timeout-ms", "serve.bias_timeout_ms", "Time budget per bias answer");

  std::vector<std::string> ask_biases;
  std::string ask_question;
  auto* ask = app.add_subcommand("ask", "Answer one question for several biases");
  backend_opts(ask);
  ask->add_option("--bias", ask_biases, "Bias id (repeatable)")->required();
  ask->add_option("--question", ask_question, "Question text")->required();
  config_option(ask, flags, "--bias-timeout-ms", "serve.bias_timeout_ms", "Time budget per bias answer");

  auto* eval = app.add_subcommand("eval", "Sentiment/regard evaluation");
  eval->require_subcommand(1);
  std::vector<std::string> eval_biases;
  std::string eval_prompts, eval_out, eval_log;
  auto* eval_run = eval->add_subcommand("run", "Generate and classify completions for BOLD-style prompts");
  backend_opts(eval_run);
  eval_run->add_option("--biases", eval_biases, "Bias ids or 'all' (default all)");
  eval_run->add_option("--prompts", eval_prompts, "Prompt file (ndjson)")->required();
  eval_run->add_option("--out", eval_out, "Cells output (JSON)")->required();
  eval_run->add_option("--log", eval_log, "Raw sample log (ndjson)");
  config_option(eval_run, flags, "--classifier", "eval.classifier", "lexicon | remote");
  config_option(eval_run, flags, "--lexicon", "eval.lexicon", "Lexicon JSON for the lexicon classifier");
  config_option(eval_run, flags, "--regard-url", "eval.regard_url", "Regard classifier endpoint");
  config_option(eval_run, flags, "--sentiment-url", "eval.sentiment_url", "Sentiment classifier endpoint");

  std::string report_in, report_format = "markdown";
  auto* eval_report = eval->add_subcommand("report", "Render a proportion table from cells");
  eval_report->add_option("--in", report_in, "Cells JSON from eval run")->required();
  eval_report->add_option("--format", report_format, "markdown | csv");

  std::string bold_dir, bold_out;
  auto* bold = eval->add_subcommand("import-bold", "Convert a BOLD prompt release into a prompt file");
  bold->add_option("dir", bold_dir, "Directory with *_prompt.json files")->required();
  bold->add_option("--out", bold_out, "Output prompt file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return exit_code::ok;  // --help / --version
    err << app.help();
    return exit_code::validation;
  }

  try {
    ConfigValues file_values;
    if (!flags.config_path.empty()) file_values = read_config_file(flags.config_path);
    const Config cfg = resolve_config(file_values, env, flags.values);

    if (biases_cmd->parsed()) return cmd_biases(cfg, flags, out);
    if (ingest->parsed()) return cmd_ingest_stats(cfg, flags, ingest_subreddits, out, err);
    if (build->parsed()) return cmd_build_corpus(cfg, flags, build_biases, report_path, training_path, out);
    if (render->parsed()) return cmd_render_prompt(prompt_bias, prompt_instruction, flags, out);
    if (serve->parsed()) return cmd_serve(cfg, err);
    if (ask->parsed()) return cmd_ask(cfg, flags, ask_biases, ask_question, out);
    if (eval_run->parsed()) {
      return cmd_eval_run(cfg, flags, eval_biases, eval_prompts, eval_out, eval_log, out, err);
    }
    if (eval_report->parsed()) return cmd_eval_report(report_in, report_format, out);
    if (bold->parsed()) return cmd_import_bold(bold_dir, bold_out, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::validation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::validation;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  }
  err << app.help();
  return exit_code::validation;
}

}  // namespace opinion
