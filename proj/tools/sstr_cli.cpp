// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// sstr: command-line front end. Results go to stdout as JSON; tables and
// diagnostics go to stderr, filtered by SSTR_LOG (off, error, info, debug).
// Exit codes: 0 success, 2 usage, 3 data, 4 degenerate input.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sstr/sstr.hpp"

namespace fs = std::filesystem;
using sstr::ojson;

namespace {

enum class Level { Off, Error, Info, Debug };

Level log_level() {
  const char* env = std::getenv("SSTR_LOG");
  const std::string v = env ? env : "info";
  if (v == "off") return Level::Off;
  if (v == "error") return Level::Error;
  if (v == "debug") return Level::Debug;
  return Level::Info;
}

template <class... Args>
void log(Level level, Args&&... args) {
  if (level > log_level() || level == Level::Off) return;
  (std::cerr << ... << args) << '\n';
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(sstr::ErrorCode code) {
  using sstr::ErrorCode;
  if (sstr::is_degenerate(code)) return 4;
  switch (code) {
    case ErrorCode::InvalidShape:
    case ErrorCode::InvalidProfile:
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownCandidate:
    case ErrorCode::OutOfRange:
      return 2;
    default:
      return 3;
  }
}

void emit(const ojson& j) { std::cout << j.dump(2) << std::endl; }

void emit_error(std::string_view code, const std::string& message) {
  emit(ojson{{"error", std::string(code)}, {"message", message}});
  log(Level::Error, "error: ", message);
}

bool is_mirror_path(const fs::path& p) { return p.extension() == ".json"; }

sstr::TraceData load_any(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path.string());
  if (!is_mirror_path(path)) return sstr::load_trace(path);
  std::ifstream f(path);
  ojson doc;
  try {
    doc = ojson::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw sstr::Error(sstr::ErrorCode::InvalidInput, e.what());
  }
  return sstr::from_json_mirror(doc);
}

void save_any(const fs::path& path, const sstr::TraceData& t) {
  if (!is_mirror_path(path)) {
    sstr::save_trace(path, sstr::write_trace(t));
    return;
  }
  // Round through the writer so mirrors obey the same validation.
  (void)sstr::write_trace(t);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw sstr::Error(sstr::ErrorCode::InvalidInput, "cannot write " + path.string());
  f << sstr::to_json_mirror(t).dump(1) << '\n';
}

double parse_real(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw UsageError(std::string("bad ") + what + ": " + s);
  return v;
}

// Flags shared by every command that segments or runs the controller.
struct RunFlags {
  double alpha = 1.2;
  std::size_t window = 10;
  std::size_t max_prefix_tokens = 512;
  std::string gamma;
  double gamma_auto = 1.0;
  std::string matching = "exact";

  void add_gamma(CLI::App* cmd) {
    auto* fixed = cmd->add_option("--gamma", gamma, "Fixed boundary threshold (accepts inf, -1)");
    cmd->add_option("--gamma-auto", gamma_auto, "Auto threshold: mean + c * std of distances")
        ->excludes(fixed);
    cmd->add_option("--matching", matching, "Patch matching: exact or greedy")
        ->check(CLI::IsMember({"exact", "greedy"}));
  }
  void add_vav(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Visual/text ratio threshold");
    cmd->add_option("--window", window, "Consecutive steps below alpha");
    cmd->add_option("--max-prefix-tokens", max_prefix_tokens, "Freeze cap");
  }

  sstr::RunConfig config(std::size_t n) const {
    sstr::RunConfig c;
    c.alpha = alpha;
    c.window = window;
    c.max_prefix_tokens = max_prefix_tokens;
    c.n_candidates = n;
    c.matching = matching == "greedy" ? sstr::MatchingMethod::Greedy : sstr::MatchingMethod::Exact;
    if (!gamma.empty())
      c.gamma_mode = sstr::GammaFixed{parse_real(gamma, "gamma")};
    else
      c.gamma_mode = sstr::GammaAuto{gamma_auto};
    sstr::validate_config(c).throw_if_failed();
    return c;
  }
};

// Segmentation for inspection commands. A fixed threshold goes straight to
// the segmenter, so values below zero are allowed here (every frame becomes
// its own segment); the controller config still requires gamma >= 0.
sstr::Segmentation segmentation_for(const sstr::VideoContext& video, const RunFlags& rf) {
  if (rf.gamma.empty()) return sstr::segment(video, rf.config(1));
  const double gamma = parse_real(rf.gamma, "gamma");
  if (std::isnan(gamma)) throw UsageError("gamma must not be nan");
  RunFlags auto_flags = rf;
  auto_flags.gamma.clear();
  const auto method = auto_flags.config(1).matching;
  auto seg = sstr::segment_video(sstr::inter_frame_distances(video, method), gamma);
  return seg;
}

const sstr::CandidateTrace& find_candidate(const sstr::TraceData& t, std::size_t id) {
  for (const auto& c : t.candidates)
    if (c.candidate_id == id) return c;
  throw sstr::Error(sstr::ErrorCode::UnknownCandidate, "candidate " + std::to_string(id));
}

// --- simulate --------------------------------------------------------------

struct SimulateFlags {
  std::uint64_t seed = 0;
  sstr::synth::ScenarioOptions opts;
  std::string profiles = "discrimination";
  std::optional<double> prefix_fraction;
  std::string out;
};

int cmd_simulate(const SimulateFlags& f) {
  auto opts = f.opts;
  if (opts.shots > opts.frames)
    throw UsageError("--shots must not exceed --frames");
  opts.prefix_fraction = f.prefix_fraction;
  if (f.profiles == "uniform") opts.profiles = sstr::synth::ProfileMix::Uniform;
  else if (f.profiles == "frame") opts.profiles = sstr::synth::ProfileMix::Frame;
  else if (f.profiles == "segment") opts.profiles = sstr::synth::ProfileMix::Segment;
  else opts.profiles = sstr::synth::ProfileMix::Discrimination;

  auto sc = sstr::synth::generate_scenario(f.seed, opts);
  const sstr::TraceData t{std::move(sc.video), std::move(sc.candidates), {}};
  save_any(f.out, t);
  emit({{"command", "simulate"},
        {"out", f.out},
        {"frames", opts.frames},
        {"patches", opts.patches},
        {"embed_dim", opts.embed_dim},
        {"shots", opts.shots},
        {"segments", sc.segmentation.k()},
        {"candidates", opts.candidates},
        {"length", opts.length},
        {"uniform_candidate", sc.uniform_id ? ojson(*sc.uniform_id) : ojson(nullptr)},
        {"bytes", fs::file_size(f.out)}});
  log(Level::Info, "wrote ", f.out, " (", opts.candidates, " candidates, ", opts.frames,
      " frames)");
  return 0;
}

// --- segment / score / vav -------------------------------------------------

int cmd_segment(const std::string& trace, const RunFlags& rf) {
  const auto t = load_any(trace);
  const auto seg = segmentation_for(t.video, rf);
  emit(sstr::to_json(seg));
  log(Level::Info, "K = ", seg.k(), ", gamma = ", seg.gamma_used);
  return 0;
}

int cmd_score(const std::string& trace, std::size_t id, std::optional<std::size_t> prefix,
              const RunFlags& rf) {
  const auto t = load_any(trace);
  const auto& cand = find_candidate(t, id);
  const auto seg = segmentation_for(t.video, rf);
  const std::size_t len = prefix.value_or(cand.length());
  const auto s = sstr::tac_score(cand, len, t.video, seg);
  ojson j = {{"candidate_id", id}, {"prefix_len", len}, {"segments", seg.k()}};
  const ojson scores = sstr::to_json(s);
  for (const auto& [k, v] : scores.items()) j[k] = v;
  emit(j);
  log(Level::Info, "S_f = ", s.s_f, ", S_c = ", s.s_c, ", total = ", s.total);
  return 0;
}

int cmd_vav(const std::string& trace, std::size_t id, const RunFlags& rf) {
  const auto t = load_any(trace);
  const auto& cand = find_candidate(t, id);
  const auto cfg = rf.config(1);
  const auto j_vav = sstr::vav_offline(cand.steps, cfg);

  // Freeze point as the controller would report it.
  sstr::VavState state;
  std::size_t prefix = cand.length();
  std::string reason = cand.finished ? "eos" : "end_of_data";
  for (std::size_t j = 0; j < cand.steps.size(); ++j) {
    auto [next, v] = sstr::vav_step(state, cand.steps[j], cfg);
    state = next;
    if (v.kind == sstr::VavVerdictKind::Triggered) {
      prefix = v.step;
      reason = "vav";
      break;
    }
    if (cand.finished && j + 1 == cand.steps.size()) break;
    if (v.kind == sstr::VavVerdictKind::Capped) {
      prefix = v.step;
      reason = "cap";
      break;
    }
  }
  emit({{"candidate_id", id},
        {"length", cand.length()},
        {"j_vav", j_vav ? ojson(*j_vav) : ojson(nullptr)},
        {"prefix_len", prefix},
        {"freeze_reason", reason}});
  log(Level::Info, "j_vav = ", j_vav ? std::to_string(*j_vav) : "none", ", freeze at ", prefix,
      " (", reason, ")");
  return 0;
}

// --- run / bench -----------------------------------------------------------

void print_table(const sstr::SelectionReport& r) {
  if (log_level() < Level::Info) return;
  std::fprintf(stderr, "%4s %8s %6s %10s %10s %10s\n", "id", "prefix", "reason", "S_f", "S_c",
               "TAC");
  for (const auto& c : r.candidates) {
    if (c.tac)
      std::fprintf(stderr, "%4zu %8zu %6s %10.6f %10.6f %10.6f%s\n", c.candidate_id, c.prefix_len,
                   std::string(to_string(c.freeze_reason)).c_str(), c.tac->s_f, c.tac->s_c,
                   c.tac->total, c.candidate_id == r.winner ? "  *" : "");
    else
      std::fprintf(stderr, "%4zu %8zu %6s %10s %10s %10s\n", c.candidate_id, c.prefix_len,
                   std::string(to_string(c.freeze_reason)).c_str(), "-", "-", "degenerate");
  }
  std::fprintf(stderr, "winner %zu, K = %zu, tokens %zu / %zu, savings %.4f\n", r.winner,
               r.segments, r.decode_tokens_spent, r.decode_tokens_baseline, r.savings_fraction);
}

int cmd_run(const std::string& trace, const RunFlags& rf) {
  const auto t = load_any(trace);
  const auto rep = sstr::replay(t.video, t.candidates, rf.config(t.candidates.size()));
  emit(sstr::to_json(rep));
  print_table(rep);
  return 0;
}

// Loser prefix length as a fraction of the winner's full length.
std::optional<double> prefix_fraction(const sstr::SelectionReport& r) {
  if (r.candidates.size() < 2) return std::nullopt;
  const double full = static_cast<double>(r.candidates[r.winner].generated);
  double sum = 0.0;
  for (const auto& c : r.candidates)
    if (c.candidate_id != r.winner) sum += static_cast<double>(c.prefix_len);
  return sum / (static_cast<double>(r.candidates.size() - 1) * full);
}

int cmd_bench(const std::string& dir, std::size_t repeats, const RunFlags& rf) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && (e.path().extension() == ".sstr" || name.ends_with(".sstr.json")))
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no .sstr traces in " + dir);
  if (repeats < 1) throw UsageError("--repeats must be >= 1");

  std::vector<sstr::TraceData> traces;
  for (const auto& f : files) traces.push_back(load_any(f));

  ojson runs = ojson::array();
  double p_sum = 0.0, s_sum = 0.0;
  std::size_t p_count = 0;
  bool mixed_n = false;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto& t = traces[i];
      const auto r = sstr::replay(t.video, t.candidates, rf.config(t.candidates.size()));
      if (rep > 0) continue;
      const auto p = prefix_fraction(r);
      if (p) {
        p_sum += *p;
        ++p_count;
      }
      s_sum += r.savings_fraction;
      if (t.candidates.size() != traces.front().candidates.size()) mixed_n = true;
      runs.push_back({{"trace", files[i].filename().string()},
                      {"winner", r.winner},
                      {"prefix_fraction", p ? ojson(*p) : ojson(nullptr)},
                      {"savings_fraction", r.savings_fraction}});
      log(Level::Debug, files[i].filename().string(), ": winner ", r.winner, ", savings ",
          r.savings_fraction);
    }
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto n_traces = static_cast<double>(traces.size());
  ojson out = {{"traces", traces.size()}, {"repeats", repeats}, {"runs", std::move(runs)}};
  const double mean_p = p_count ? p_sum / static_cast<double>(p_count) : 0.0;
  out["mean_prefix_fraction"] = p_count ? ojson(mean_p) : ojson(nullptr);
  out["savings_measured"] = s_sum / n_traces;
  out["savings_model"] = p_count && !mixed_n
                             ? ojson(sstr::decode_savings(mean_p, traces.front().candidates.size()))
                             : ojson(nullptr);
  out["wall_time_s"] = wall;
  emit(out);
  log(Level::Info, traces.size(), " traces x ", repeats, ": mean p = ",
      p_count ? std::to_string(mean_p) : "n/a", ", savings ", s_sum / n_traces, ", ", wall, " s");
  return 0;
}

// --- mirror ----------------------------------------------------------------

int cmd_mirror(const std::string& in, const std::string& out) {
  const auto t = load_any(in);
  save_any(out, t);
  emit({{"command", "mirror"}, {"in", in}, {"out", out}, {"candidates", t.candidates.size()}});
  return 0;
}

// --- serve -----------------------------------------------------------------

// One JSON request per stdin line, one JSON response per stdout line.
//   {"op":"open","run_id":..,"trace":path | "video":<mirror doc>,"config":{..}}
//   {"op":"step","run_id":..,"candidate_id":..,"record":{..},"is_eos":..}
//   {"op":"poll","run_id":..,"candidate_id":..}
//   {"op":"report","run_id":..}
//   {"op":"close","run_id":..}
ojson serve_one(sstr::protocol::Hub& hub, const ojson& req) {
  const std::string op = req.at("op").get<std::string>();
  const std::string run_id = req.at("run_id").get<std::string>();
  if (op == "open") {
    sstr::TraceData t = req.contains("trace") ? load_any(req.at("trace").get<std::string>())
                                              : sstr::from_json_mirror(req.at("video"));
    RunFlags rf;
    sstr::RunConfig cfg;
    const ojson c = req.value("config", ojson::object());
    rf.alpha = c.value("alpha", cfg.alpha);
    rf.window = c.value("window", cfg.window);
    rf.max_prefix_tokens = c.value("max_prefix_tokens", cfg.max_prefix_tokens);
    rf.matching = c.value("matching", std::string("exact"));
    if (c.contains("gamma")) {
      const auto& g = c.at("gamma");
      rf.gamma = g.is_string() ? g.get<std::string>() : std::to_string(g.get<double>());
    }
    rf.gamma_auto = c.value("gamma_auto", 1.0);
    const std::size_t n = c.value("n_candidates", cfg.n_candidates);
    hub.open_run(run_id, std::move(t.video), rf.config(n));
    return {{"ok", true}};
  }
  if (op == "step") return to_json(hub.submit(sstr::protocol::request_from_json(req)));
  if (op == "poll") return to_json(hub.poll(run_id, req.at("candidate_id").get<std::size_t>()));
  if (op == "report") return sstr::to_json(hub.report(run_id));
  if (op == "close") {
    hub.close_run(run_id);
    return {{"ok", true}};
  }
  throw UsageError("unknown op '" + op + "'");
}

int cmd_serve() {
  sstr::protocol::Hub hub;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    ojson resp;
    try {
      resp = serve_one(hub, ojson::parse(line));
    } catch (const sstr::Error& e) {
      resp = {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    } catch (const UsageError& e) {
      resp = {{"error", "Usage"}, {"message", e.what()}};
    } catch (const nlohmann::json::exception& e) {
      resp = {{"error", "InvalidInput"}, {"message", e.what()}};
    }
    std::cout << resp.dump() << std::endl;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-trace controller for best-of-N video-language decoding"};
  app.require_subcommand(1);
  RunFlags rf;

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic trace");
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--frames", sim.opts.frames)->check(CLI::PositiveNumber);
  simulate->add_option("--patches", sim.opts.patches)->check(CLI::PositiveNumber);
  simulate->add_option("--dim", sim.opts.embed_dim)->check(CLI::Range(2, 1 << 20));
  simulate->add_option("--shots", sim.opts.shots)->check(CLI::PositiveNumber);
  simulate->add_option("--candidates", sim.opts.candidates)->check(CLI::PositiveNumber);
  simulate->add_option("--length", sim.opts.length)->check(CLI::PositiveNumber);
  simulate->add_option("--window", sim.opts.window, "Window used to plant vanishing points")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--profiles", sim.profiles)
      ->check(CLI::IsMember({"discrimination", "uniform", "frame", "segment"}));
  simulate->add_option("--prefix-fraction", sim.prefix_fraction,
                       "Plant every vanishing point at this fraction of the length");
  simulate->add_option("--jitter", sim.opts.jitter)->check(CLI::Range(0.0, 0.999));
  simulate->add_option("--out", sim.out, "Output path (.sstr, or .sstr.json for the mirror)")
      ->required();

  std::string trace;
  std::size_t candidate_id = 0;
  std::optional<std::size_t> prefix_len;

  auto* segment = app.add_subcommand("segment", "Segment the video of a trace");
  segment->add_option("--trace", trace)->required();
  rf.add_gamma(segment);

  auto* score = app.add_subcommand("score", "Collapse scores of one candidate prefix");
  score->add_option("--trace", trace)->required();
  score->add_option("--candidate-id", candidate_id)->required();
  score->add_option("--prefix-len", prefix_len);
  rf.add_gamma(score);

  auto* vav = app.add_subcommand("vav", "Vanishing point of one candidate");
  vav->add_option("--trace", trace)->required();
  vav->add_option("--candidate-id", candidate_id)->required();
  rf.add_vav(vav);

  auto* run = app.add_subcommand("run", "Replay a trace through the controller");
  run->add_option("--trace", trace)->required();
  rf.add_vav(run);
  rf.add_gamma(run);

  std::string trace_dir;
  std::size_t repeats = 1;
  auto* bench = app.add_subcommand("bench", "Replay every trace in a directory");
  bench->add_option("--trace-dir", trace_dir)->required();
  bench->add_option("--repeats", repeats);
  rf.add_vav(bench);
  rf.add_gamma(bench);

  std::string in, out;
  auto* mirror = app.add_subcommand("mirror", "Convert between .sstr and .sstr.json");
  mirror->add_option("--in", in)->required();
  mirror->add_option("--out", out)->required();

  auto* serve = app.add_subcommand("serve", "Directive protocol over JSON lines on stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("Usage", e.what());
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*segment) return cmd_segment(trace, rf);
    if (*score) return cmd_score(trace, candidate_id, prefix_len, rf);
    if (*vav) return cmd_vav(trace, candidate_id, rf);
    if (*run) return cmd_run(trace, rf);
    if (*bench) return cmd_bench(trace_dir, repeats, rf);
    if (*mirror) return cmd_mirror(in, out);
    if (*serve) return cmd_serve();
  } catch (const UsageError& e) {
    emit_error("Usage", e.what());
    return 2;
  } catch (const sstr::Error& e) {
    emit_error(to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    emit_error("Internal", e.what());
    return 3;
  }
  return 2;
}
