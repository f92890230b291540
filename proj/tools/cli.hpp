#pragma once

// Command-line driver shared by the attnconf binary and the test suites.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "attnconf/attnconf.hpp"

namespace attnconf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::string output = "-";
  std::string out_src, out_tgt, out_scores, out_dir, report, decisions;
  std::string external_a, external_b;
  double keep_fraction = 0.5;
  std::string unk_token = "<unk>";
  std::string mode = "strict";
  std::string tie_break = "A";
  std::string join = "strict";
  std::size_t workers = default_workers();
  std::optional<double> beta;
  int cell_size = 18;
  std::string color_ramp = "grayscale";
};

namespace detail {

inline bool is_stdio(const std::string& path) { return path.empty() || path == "-"; }

inline std::unique_ptr<std::istream> open_input(const std::string& path) {
  auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  return in;
}

/// An output file, or the caller's stream when the path is "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path) {
    if (is_stdio(path)) {
      stream_ = &fallback;
    } else {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
      stream_ = &file_;
    }
  }

  std::ostream& stream() { return *stream_; }

  void finish() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorKind::Io, "write failure on '" + (is_stdio(path_) ? "stdout" : path_) + "'");
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

/// Optional output: null stream when the path is empty.
inline std::unique_ptr<Output> maybe_output(const std::string& path, std::ostream& fallback) {
  if (path.empty()) return nullptr;
  return std::make_unique<Output>(path, fallback);
}

inline IngestMode ingest_mode(const RunConfig& c) {
  return c.mode == "lenient" ? IngestMode::Lenient : IngestMode::Strict;
}

inline Side tie_side(const RunConfig& c) { return c.tie_break == "B" ? Side::B : Side::A; }

inline void check_distinct_paths(const RunConfig& c) {
  std::vector<std::string> paths = c.inputs;
  for (const auto* p : {&c.output, &c.out_src, &c.out_tgt, &c.out_scores, &c.report, &c.decisions, &c.external_a,
                        &c.external_b})
    paths.push_back(*p);
  std::set<std::filesystem::path> seen;
  for (const auto& p : paths) {
    if (is_stdio(p)) continue;
    const auto canonical = std::filesystem::weakly_canonical(p);
    if (!seen.insert(canonical).second) throw UsageError("path '" + p + "' is used more than once");
  }
}

inline void write_report(const RunConfig& c, const nlohmann::json& report, std::ostream& err) {
  if (c.report.empty()) {
    err << report.dump() << '\n';
    return;
  }
  Output out(c.report, err);
  out.stream() << report.dump(2) << '\n';
  out.finish();
}

/// Runs `body` with a stream over the first input (stdin for "-").
template <typename Body>
auto with_input(const std::string& path, std::istream& in, Body&& body) {
  if (is_stdio(path)) return body(in);
  auto file = open_input(path);
  return body(*file);
}

inline std::vector<ScoredTranslation> load_scored(const std::string& path, std::istream& in, const RunConfig& c) {
  return with_input(path, in, [&](std::istream& s) {
    return filter::score_corpus(io::read_records(s, ingest_mode(c)), {c.workers, c.beta});
  });
}

template <typename Row>
std::vector<Row> load_table(const std::string& path, std::istream& in, std::vector<Row> (*reader)(std::istream&)) {
  return with_input(path, in, [&](std::istream& s) { return reader(s); });
}

}  // namespace detail

inline int run_score(const RunConfig& c, std::istream& in, std::ostream& out) {
  detail::Output table(c.output, out);
  detail::with_input(c.inputs.at(0), in, [&](std::istream& s) {
    io::RecordReader reader(s, {.mode = detail::ingest_mode(c)});
    return filter::score_stream(reader, {c.workers, c.beta}, [&](ScoredTranslation&& st) {
      io::write_score_row(table.stream(), st.record.id, st.scores);
    });
  });
  table.finish();
  return kExitOk;
}

inline int run_filter(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  const filter::FilterOptions options{c.keep_fraction, c.unk_token, {c.workers, c.beta}};
  detail::Output records(c.output, out);
  auto src = detail::maybe_output(c.out_src, out);
  auto tgt = detail::maybe_output(c.out_tgt, out);
  auto scores = detail::maybe_output(c.out_scores, out);
  const filter::ParallelSink parallel{src ? &src->stream() : nullptr, tgt ? &tgt->stream() : nullptr,
                                      scores ? &scores->stream() : nullptr};
  const auto emit = [&](const ScoredTranslation& s) {
    io::write_record(records.stream(), s.record);
    parallel(s);
  };

  FilterReport report;
  const std::string& input = c.inputs.at(0);
  if (detail::is_stdio(input)) {
    auto result = filter::run_filter(io::read_records(in, detail::ingest_mode(c)), options);
    for (const auto& s : result.kept) emit(s);
    report = result.report;
  } else {
    report = filter::run_filter_two_pass([&] { return detail::open_input(input); }, options,
                                         {.mode = detail::ingest_mode(c)}, emit);
  }
  records.finish();
  for (auto* o : {src.get(), tgt.get(), scores.get()})
    if (o) o->finish();
  detail::write_report(c, report.to_json(), err);
  return kExitOk;
}

inline int run_hybrid(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  if (c.inputs.size() != 2) throw UsageError("hybrid needs exactly two record files");
  if (detail::is_stdio(c.inputs[0]) && detail::is_stdio(c.inputs[1]))
    throw UsageError("at most one hybrid input may be standard input");
  const auto a = detail::load_scored(c.inputs[0], in, c);
  const auto b = detail::load_scored(c.inputs[1], in, c);
  const auto result = hybrid::hybrid_corpus(a, b, detail::tie_side(c),
                                            c.join == "lenient" ? JoinMode::Lenient : JoinMode::Strict);
  detail::Output chosen(c.output, out);
  for (const auto& choice : result.choices) io::write_record(chosen.stream(), choice.chosen.record);
  chosen.finish();
  if (auto log = detail::maybe_output(c.decisions, out)) {
    for (const auto& choice : result.choices) hybrid::write_decision(log->stream(), choice);
    log->finish();
  }
  detail::write_report(c, result.report.to_json(), err);
  return kExitOk;
}

namespace detail {

inline std::string fmt4(double v) { return std::isnan(v) ? "n/a" : render::fixed(v, 4); }

inline void write_tau_table(std::ostream& out, const MetricTaus& taus) {
  const TauResult* cols[] = {&taus.cdp, &taus.ap_in, &taus.ap_out, &taus.total};
  out << "# Kendall tau between human judgments and confidence scores\n";
  out << "metric\tCDP\tAP_in\tAP_out\tOverall\n";
  out << "tau";
  for (const auto* t : cols) out << '\t' << fmt4(t->tau);
  out << "\npos";
  for (const auto* t : cols) out << '\t' << t->pos;
  out << "\nneg";
  for (const auto* t : cols) out << '\t' << t->neg;
  out << "\nhuman_ties";
  for (const auto* t : cols) out << '\t' << t->excluded_human_ties;
  out << "\nmetric_ties";
  for (const auto* t : cols) out << '\t' << t->excluded_metric_ties;
  out << '\n';
}

inline void write_overlap_row(std::ostream& out, const std::string& name, const OverlapResult& r) {
  out << name << '\t' << render::fixed(r.percentage, 2) << "%\t" << r.matched << '\t' << r.compared << '\n';
}

}  // namespace detail

inline int run_eval(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  if (c.inputs.size() != 3) throw UsageError("eval needs a judgment file and two score tables");
  if ((c.external_a.empty()) != (c.external_b.empty()))
    throw UsageError("--external-a and --external-b must be given together");
  const auto judgments = io::average_judgments(detail::load_table(c.inputs[0], in, &io::read_judgments));
  const auto scores_a = detail::load_table(c.inputs[1], in, &io::read_score_table);
  const auto scores_b = detail::load_table(c.inputs[2], in, &io::read_score_table);

  const auto taus = eval::per_metric_tau(judgments, scores_a, scores_b);
  const auto attention = eval::select_by_score(eval::totals_of(scores_a), eval::totals_of(scores_b), detail::tie_side(c));
  const auto attention_overlap = eval::selection_overlap(attention, judgments);

  nlohmann::json report = {{"joined", taus.joined},
                           {"missing", taus.missing},
                           {"tau",
                            {{"cdp", taus.cdp.to_json()},
                             {"ap_in", taus.ap_in.to_json()},
                             {"ap_out", taus.ap_out.to_json()},
                             {"total", taus.total.to_json()}}},
                           {"overlap", {{"attention_vs_human", attention_overlap.to_json()}}}};

  detail::Output text(c.output, out);
  detail::write_tau_table(text.stream(), taus);
  text.stream() << "# Selection overlap\nmethod\toverlap\tmatched\tcompared\n";
  detail::write_overlap_row(text.stream(), "attention_vs_human", attention_overlap);
  if (!c.external_a.empty()) {
    const auto ext_a = detail::load_table(c.external_a, in, &io::read_external_scores);
    const auto ext_b = detail::load_table(c.external_b, in, &io::read_external_scores);
    const auto external = eval::select_by_score(ext_a, ext_b, detail::tie_side(c));
    const auto external_overlap = eval::selection_overlap(external, judgments);
    const auto agreement = eval::selection_agreement(external, attention);
    detail::write_overlap_row(text.stream(), "external_vs_human", external_overlap);
    detail::write_overlap_row(text.stream(), "external_vs_attention", agreement);
    report["overlap"]["external_vs_human"] = external_overlap.to_json();
    report["overlap"]["external_vs_attention"] = agreement.to_json();
  }
  text.finish();
  if (!c.report.empty()) detail::write_report(c, report, err);
  return kExitOk;
}

inline int run_render(const RunConfig& c, std::istream& in) {
  if (c.out_dir.empty()) throw UsageError("render needs --out-dir");
  if (c.cell_size < 4) throw UsageError("--cell-size must be at least 4");
  const ColorRamp ramp = c.color_ramp == "viridis" ? ColorRamp::Viridis : ColorRamp::Grayscale;
  std::filesystem::create_directories(c.out_dir);
  const std::filesystem::path dir(c.out_dir);
  std::vector<render::IndexEntry> index;
  std::set<std::string> used;
  detail::with_input(c.inputs.at(0), in, [&](std::istream& s) {
    io::RecordReader reader(s, {.mode = detail::ingest_mode(c)});
    while (auto rec = reader.next()) {
      const auto spec = render::make_spec(*rec, c.cell_size, ramp);
      std::string file = render::svg_file_name(rec->id);
      for (int n = 2; !used.insert(file).second; ++n)
        file = render::svg_file_name(rec->id + "-" + std::to_string(n));
      std::ostringstream sink;
      detail::Output svg((dir / file).string(), sink);
      svg.stream() << render::render_heatmap(spec);
      svg.finish();
      index.push_back({rec->id, file, render::caption(spec.scores)});
    }
    return 0;
  });
  std::ostringstream sink;
  detail::Output page((dir / "index.html").string(), sink);
  page.stream() << render::render_index(index);
  page.finish();
  return kExitOk;
}

inline int run_normalize(const RunConfig& c, std::istream& in, std::ostream& out) {
  detail::Output records(c.output, out);
  detail::with_input(c.inputs.at(0), in, [&](std::istream& s) {
    io::RecordReader reader(s);
    while (auto raw = reader.next_raw()) {
      AttentionRecord rec;
      try {
        rec.attn = metrics::softmax_normalize(RawAttentionMatrix(std::move(raw->values)));
      } catch (const Error& e) {
        throw e.with_context(raw->id, reader.line_no());
      }
      rec.id = std::move(raw->id);
      rec.source_tokens = std::move(raw->source_tokens);
      rec.target_tokens = std::move(raw->target_tokens);
      rec.system_id = std::move(raw->system_id);
      rec.meta = std::move(raw->meta);
      io::write_record(records.stream(), rec);
    }
    return 0;
  });
  records.finish();
  return kExitOk;
}

inline int dispatch(const RunConfig& c, std::istream& in, std::ostream& out, std::ostream& err) {
  detail::check_distinct_paths(c);
  if (c.subcommand == "score") return run_score(c, in, out);
  if (c.subcommand == "filter") return run_filter(c, in, out, err);
  if (c.subcommand == "hybrid") return run_hybrid(c, in, out, err);
  if (c.subcommand == "eval") return run_eval(c, in, out, err);
  if (c.subcommand == "render") return run_render(c, in);
  if (c.subcommand == "normalize") return run_normalize(c, in, out);
  throw UsageError("unknown subcommand '" + c.subcommand + "'");
}

/// Parses `args` (without the program name) and runs the subcommand.
/// Returns 0 on success, 1 on data errors and 2 on usage errors.
inline int run(const std::vector<std::string>& args, std::istream& in = std::cin, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Attention-based confidence scoring for machine translation output", "attnconf"};
  app.require_subcommand(1);
  RunConfig c;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--mode", c.mode, "Row-sum handling on ingest")
        ->check(CLI::IsMember({"strict", "lenient"}))
        ->capture_default_str();
    sub->add_option("--workers", c.workers, "Scoring threads")->check(CLI::PositiveNumber)->capture_default_str();
  };
  const auto add_beta = [&](CLI::App* sub) {
    sub->add_option_function<double>(
           "--beta", [&](const double& b) { c.beta = b; }, "Add the coverage-penalty column with this weight")
        ->check(CLI::PositiveNumber);
  };

  auto* score = app.add_subcommand("score", "Write a score table for attention records");
  score->add_option("input", c.inputs, "Record file ('-' for stdin)")->expected(0, 1);
  score->add_option("-o,--output", c.output, "Score table");
  add_common(score);
  add_beta(score);

  auto* filt = app.add_subcommand("filter", "Keep the best-scoring fraction of a corpus");
  filt->add_option("input", c.inputs, "Record file ('-' for stdin)")->expected(0, 1);
  filt->add_option("-o,--output", c.output, "Kept records");
  filt->add_option("--keep-fraction", c.keep_fraction, "Fraction of records to keep")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  filt->add_option("--unk-token", c.unk_token, "Target token that disqualifies a translation")->capture_default_str();
  filt->add_option("--out-src", c.out_src, "Source side of kept records, one sentence per line");
  filt->add_option("--out-tgt", c.out_tgt, "Target side of kept records, one sentence per line");
  filt->add_option("--out-scores", c.out_scores, "Score table of kept records");
  filt->add_option("--report", c.report, "Report file (default: stderr)");
  add_common(filt);
  add_beta(filt);

  auto* hyb = app.add_subcommand("hybrid", "Pick the more confident of two systems' translations");
  hyb->add_option("inputs", c.inputs, "Record files of systems A and B")->expected(2)->required();
  hyb->add_option("-o,--output", c.output, "Chosen records");
  hyb->add_option("--decisions", c.decisions, "Decision log (id, winner, total_a, total_b, margin)");
  hyb->add_option("--tie-break", c.tie_break, "Winner on exactly equal totals")
      ->check(CLI::IsMember({"A", "B"}))
      ->capture_default_str();
  hyb->add_option("--join", c.join, "Handling of ids missing from one system")
      ->check(CLI::IsMember({"strict", "lenient"}))
      ->capture_default_str();
  hyb->add_option("--report", c.report, "Report file (default: stderr)");
  add_common(hyb);

  auto* ev = app.add_subcommand("eval", "Correlate scores with human judgments");
  ev->add_option("inputs", c.inputs, "Judgment TSV, score table A, score table B")->expected(3)->required();
  ev->add_option("-o,--output", c.output, "Text report");
  ev->add_option("--external-a", c.external_a, "External scores for system A (id, score; higher is better)");
  ev->add_option("--external-b", c.external_b, "External scores for system B");
  ev->add_option("--tie-break", c.tie_break, "Selection on exactly equal scores")
      ->check(CLI::IsMember({"A", "B"}))
      ->capture_default_str();
  ev->add_option("--report", c.report, "JSON report file");

  auto* ren = app.add_subcommand("render", "Write SVG attention heat maps");
  ren->add_option("input", c.inputs, "Record file ('-' for stdin)")->expected(0, 1);
  ren->add_option("--out-dir", c.out_dir, "Directory for <id>.svg files and index.html")->required();
  ren->add_option("--cell-size", c.cell_size, "Cell edge in pixels")->capture_default_str();
  ren->add_option("--color-ramp", c.color_ramp, "Cell colors")
      ->check(CLI::IsMember({"grayscale", "viridis"}))
      ->capture_default_str();
  ren->add_option("--mode", c.mode, "Row-sum handling on ingest")
      ->check(CLI::IsMember({"strict", "lenient"}))
      ->capture_default_str();

  auto* norm = app.add_subcommand("normalize", "Softmax raw attention energies into records");
  norm->add_option("input", c.inputs, "Raw record file ('-' for stdin)")->expected(0, 1);
  norm->add_option("-o,--output", c.output, "Normalized records");

  std::vector<const char*> argv{"attnconf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  if (c.inputs.empty()) c.inputs.push_back("-");
  if (!(c.keep_fraction > 0.0)) {
    err << "error: --keep-fraction must lie in (0, 1]\n";
    return kExitUsage;
  }
  if (c.unk_token.empty()) {
    err << "error: --unk-token must not be empty\n";
    return kExitUsage;
  }

  try {
    return dispatch(c, in, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace attnconf::cli
