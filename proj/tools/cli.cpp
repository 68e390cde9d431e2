// toxinspect: command-line driver for label-auditing sessions.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "toxinspect/api_server.hpp"
#include "toxinspect/synthetic.hpp"
#include "toxinspect/workspace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace toxinspect;

namespace {

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) fail(ErrorCode::kBadRequest, "cannot write " + path);
}

DatasetFormat format_for(const std::string& flag, const std::string& path) {
  if (!flag.empty()) return parse_dataset_format(flag);
  return fs::path(path).extension() == ".csv" ? DatasetFormat::kCsv : DatasetFormat::kJsonl;
}

// JSON lines of {"id", "label"}; string labels go through the binary mapping.
std::map<std::string, Label> read_reference(const std::string& path) {
  std::map<std::string, Label> ref;
  std::istringstream in(read_all(path));
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("label")) {
      fail(ErrorCode::kBadRequest, path + " row " + std::to_string(row) + ": expected {\"id\", \"label\"}");
    }
    const json& v = j["label"];
    const Label label = v.is_string() ? map_to_binary(v.get<std::string>()) : label_from_int(v.get<long long>());
    ref[j["id"].get<std::string>()] = label;
  }
  return ref;
}

std::string fmt(const char* spec, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_table(const std::vector<MetricsReport>& history, std::ostream& out) {
  const bool with_ref = !history.empty() && history.front().reference_macro_f1.has_value();
  out << "iteration      F1      CE     MSE     gain";
  if (with_ref) out << "   ref F1";
  out << "\n";
  for (const auto& r : history) {
    out << std::string(9 - std::to_string(r.iteration).size(), ' ') << r.iteration << fmt("  %6.4f", r.macro_f1)
        << fmt("  %6.4f", r.cross_entropy) << fmt("  %6.4f", r.mse_correction) << fmt("  %7.4f", r.normalized_gain);
    if (with_ref) out << fmt("  %7.4f", r.reference_macro_f1.value_or(0.0));
    out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit toxicity labels through five review-and-retrain iterations."};
  app.require_subcommand(1);

  const char* env_store = std::getenv("TOXINSPECT_STORE");
  std::string store = env_store ? env_store : "toxinspect-store";
  app.add_option("--store", store, "Session store directory (env TOXINSPECT_STORE)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Create a session from a JSONL or CSV file");
  std::string in_path, in_format, in_mode = "gold", in_id, in_strategy;
  SessionConfig in_cfg;
  std::string in_loss = "logistic";
  ingest->add_option("--input,-i", in_path, "Dataset file")->required();
  ingest->add_option("--format", in_format, "jsonl or csv (default: from extension)");
  ingest->add_option("--mode", in_mode, "gold or blackbox")->check(CLI::IsMember({"gold", "blackbox"}));
  ingest->add_option("--id", in_id, "Session id (default: random)");
  ingest->add_option("--seed", in_cfg.seed, "Seed for splits, batches and training");
  ingest->add_option("--test-fraction", in_cfg.test_fraction, "Test share when rows carry no split");
  ingest->add_option("--strategy", in_strategy, "random_stratified or uncertainty");
  ingest->add_option("--threshold", in_cfg.threshold, "Decision threshold");
  ingest->add_option("--loss", in_loss, "logistic or hinge")->check(CLI::IsMember({"logistic", "hinge"}));
  ingest->add_option("--epochs", in_cfg.train.epochs, "SGD epochs");
  ingest->add_option("--min-df", in_cfg.min_df, "Minimum document frequency");

  // seed
  auto* seed = app.add_subcommand("seed", "Label a blackbox session with a toxicity scorer");
  std::string sd_session, sd_scorer = "stub", sd_endpoint, sd_cache;
  double sd_threshold = 0.5;
  bool sd_overwrite = false;
  int sd_concurrency = 4;
  seed->add_option("--session,-s", sd_session, "Session id")->required();
  seed->add_option("--scorer", sd_scorer, "stub or http")->check(CLI::IsMember({"stub", "http"}));
  seed->add_option("--threshold", sd_threshold, "Score at or above which a comment is toxic");
  seed->add_option("--endpoint", sd_endpoint, "Analyze endpoint URL for --scorer http");
  seed->add_option("--cache", sd_cache, "Score cache file");
  seed->add_option("--max-concurrent", sd_concurrency, "Parallel scorer requests");
  seed->add_flag("--overwrite", sd_overwrite, "Replace existing labels");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Print label statistics");
  std::string dg_session;
  diag->add_option("--session,-s", dg_session, "Session id")->required();

  // run
  auto* run = app.add_subcommand("run", "Play all remaining iterations with an oracle evaluator");
  std::string rn_session, rn_labels, rn_report;
  double rn_effort = 1.0;
  std::uint64_t rn_seed = 42;
  run->add_option("--session,-s", rn_session, "Session id")->required();
  run->add_option("--oracle-labels", rn_labels, "JSON lines of {id, label} reference labels")->required();
  run->add_option("--effort", rn_effort, "Probability of fixing each wrong label")->check(CLI::Range(0.0, 1.0));
  run->add_option("--seed", rn_seed, "Oracle seed");
  run->add_option("--report", rn_report, "Write the metric history as JSON");

  // explain
  auto* expl = app.add_subcommand("explain", "Explain the latest model's score for a comment");
  std::string ex_session, ex_comment;
  std::size_t ex_k = 10;
  expl->add_option("--session,-s", ex_session, "Session id")->required();
  expl->add_option("--comment,-c", ex_comment, "Comment id (omit for global coefficients)");
  expl->add_option("-k", ex_k, "Terms per polarity")->check(CLI::PositiveNumber);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  serve->add_option("--host", sv_host, "Bind address");
  serve->add_option("--port", sv_port, "Port");

  // export / import
  auto* exp = app.add_subcommand("export", "Write a replayable session archive");
  std::string xp_session, xp_out;
  exp->add_option("--session,-s", xp_session, "Session id")->required();
  exp->add_option("--out,-o", xp_out, "Archive file (default: stdout)");

  auto* imp = app.add_subcommand("import", "Restore a session archive");
  std::string im_in, im_id;
  imp->add_option("--input,-i", im_in, "Archive file")->required();
  imp->add_option("--id", im_id, "Store under a new id");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and its clean reference labels");
  std::size_t sy_n = 500;
  std::uint64_t sy_seed = 42;
  double sy_noise = 0.0;
  std::string sy_out, sy_ref;
  bool sy_labels = false, sy_scores = false;
  synth->add_option("--n", sy_n, "Number of comments")->check(CLI::PositiveNumber);
  synth->add_option("--seed", sy_seed, "Generator seed");
  synth->add_option("--noise", sy_noise, "Fraction of labels to flip")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--out,-o", sy_out, "Corpus JSONL")->required();
  synth->add_option("--reference", sy_ref, "Clean labels JSONL");
  synth->add_flag("--labels", sy_labels, "Include (noisy) labels in the corpus");
  synth->add_flag("--scores", sy_scores, "Include black-box scores consistent with the noisy labels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto corpus = synthetic::make_corpus(sy_n, sy_seed);
      const auto noisy = synthetic::inject_noise(corpus.clean_labels, sy_noise, sy_seed + 1);
      const auto scores = synthetic::scores_for(noisy, sy_seed + 2);
      std::string lines, ref;
      for (std::size_t i = 0; i < corpus.comments.size(); ++i) {
        const Comment& c = corpus.comments[i];
        json row = {{"id", c.id}, {"text", c.text}};
        if (c.lang) row["lang"] = *c.lang;
        if (sy_labels || sy_scores) row["label"] = to_int(noisy[i]);
        if (sy_scores) row["score"] = scores[i];
        lines += row.dump() + "\n";
        ref += json{{"id", c.id}, {"label", to_int(corpus.clean_labels[i])}}.dump() + "\n";
      }
      write_all(sy_out, lines);
      if (!sy_ref.empty()) write_all(sy_ref, ref);
      return 0;
    }

    Workspace ws{fs::path(store)};

    if (*ingest) {
      const std::string content = read_all(in_path);
      if (!in_strategy.empty()) in_cfg.strategy = parse_batch_strategy(in_strategy);
      in_cfg.train.loss = parse_loss(in_loss);
      const std::string id = ws.create_session(parse_session_mode(in_mode), in_cfg,
                                               in_id.empty() ? std::nullopt : std::optional(in_id));
      json summary;
      try {
        summary = ws.upload_dataset(id, content, format_for(in_format, in_path));
      } catch (...) {
        fs::remove_all(ws.store().dir(id));
        throw;
      }
      std::cerr << "session " << id << ": " << summary.dump() << "\n";
      std::cout << id << "\n";
    } else if (*seed) {
      ScorerConfig cfg;
      cfg.kind = sd_scorer == "http" ? ScorerKind::kHttp : ScorerKind::kStub;
      cfg.endpoint = sd_endpoint;
      cfg.max_concurrent = sd_concurrency;
      if (const char* key = std::getenv(kApiKeyEnvVar)) cfg.api_key = key;
      if (!sd_cache.empty()) cfg.cache_path = sd_cache;
      std::cout << ws.seed(sd_session, cfg, sd_threshold, sd_overwrite).dump(2) << "\n";
    } else if (*diag) {
      std::cout << ws.diagnose(dg_session).to_json().dump(2) << "\n";
    } else if (*run) {
      OracleConfig oracle{read_reference(rn_labels), rn_effort, rn_seed};
      const auto history = ws.run_oracle(rn_session, oracle);
      print_table(history, std::cout);
      if (!rn_report.empty()) {
        json reports = json::array();
        for (const auto& r : history) reports.push_back(r.to_json());
        const json report = {{"effort", rn_effort}, {"oracle_seed", rn_seed}, {"history", std::move(reports)}};
        write_all(rn_report, report.dump(2) + "\n");
      }
    } else if (*expl) {
      const json j = ex_comment.empty() ? ws.explain_global(ex_session, ex_k).to_json()
                                        : ws.explain(ex_session, ex_comment, ex_k).to_json();
      std::cout << j.dump(2) << "\n";
    } else if (*serve) {
      ApiServer server(ws);
      std::cerr << "listening on " << sv_host << ":" << sv_port << "\n";
      if (!server.listen(sv_host, sv_port)) {
        std::cerr << "error: cannot listen on " << sv_host << ":" << sv_port << "\n";
        return 1;
      }
    } else if (*exp) {
      const std::string archive = ws.export_archive(xp_session).dump() + "\n";
      if (xp_out.empty()) {
        std::cout << archive;
      } else {
        write_all(xp_out, archive);
      }
    } else if (*imp) {
      json archive = json::parse(read_all(im_in), nullptr, false);
      if (archive.is_discarded()) fail(ErrorCode::kBadRequest, im_in + " is not valid JSON");
      std::cout << ws.import_archive(archive, im_id.empty() ? std::nullopt : std::optional(im_id)) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    if (!e.detail().is_null()) std::cerr << e.detail().dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
