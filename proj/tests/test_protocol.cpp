// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <thread>
#include <vector>

#include "sstr/protocol.hpp"
#include "sstr/synth.hpp"

using namespace sstr;
using protocol::Hub;
using protocol::Kind;
using protocol::Response;
using protocol::StepRequest;

namespace {

RunConfig small_config(std::size_t n) {
  RunConfig c;
  c.n_candidates = n;
  c.window = 3;
  return c;
}

}  // namespace

TEST_CASE("hub drives a two-candidate run to a winner", "[protocol]") {
  const auto video = synth::generate_video(1, 4, 4, 8, 2);
  Hub hub;
  hub.open_run("r1", video, small_config(2));

  // Candidate 0 vanishes at step 5, candidate 1 at step 4.
  const auto plan0 = synth::trigger_plan(12, 5, 3);
  const auto plan1 = synth::trigger_plan(12, 4, 3);
  const auto c0 = synth::generate_candidate(1, video, synth::Uniform{}, 12, plan0);
  const auto c1 = synth::generate_candidate(2, video, synth::FrameCollapse{1, 0.9}, 12, plan1);

  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(hub.submit({"r1", 0, c0.steps[j], false}).kind == Kind::Continue);
    CHECK(hub.submit({"r1", 1, c1.steps[j], false}).kind == Kind::Continue);
  }
  CHECK(hub.submit({"r1", 1, c1.steps[3], false}) ==
        Response{Kind::Freeze, 4, FreezeReason::Vav});
  CHECK(hub.poll("r1", 1).kind == Kind::Freeze);
  CHECK(hub.submit({"r1", 0, c0.steps[3], false}).kind == Kind::Continue);

  // The last freeze triggers selection; the submitter learns it won.
  const Response win = hub.submit({"r1", 0, c0.steps[4], false});
  CHECK(win == Response{Kind::Winner, 0, FreezeReason::Vav, 0, 5});
  CHECK(hub.poll("r1", 1).kind == Kind::Halt);
  CHECK(hub.submit({"r1", 1, c1.steps[4], false}).kind == Kind::Halt);

  for (std::size_t j = 5; j < 11; ++j)
    CHECK(hub.submit({"r1", 0, c0.steps[j], false}).kind == Kind::Continue);
  CHECK(hub.submit({"r1", 0, c0.steps[11], true}).kind == Kind::Halt);
  CHECK(hub.submit({"r1", 0, c0.steps[11], false}).kind == Kind::Halt);

  const auto rep = hub.report("r1");
  CHECK(rep.winner == 0);
  CHECK(rep.decode_tokens_spent == 12 + 4);
  CHECK(rep.decode_tokens_baseline == 24);
  hub.close_run("r1");
  try {
    hub.poll("r1", 0);
    FAIL("expected UnknownRun");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownRun);
  }
}

TEST_CASE("winner frozen at end of sequence halts immediately", "[protocol]") {
  const auto video = synth::generate_video(1, 3, 4, 8, 1);
  Hub hub;
  hub.open_run("r", video, small_config(1));
  const auto c = synth::generate_candidate(1, video, synth::Uniform{}, 2,
                                           std::vector<double>(2, 2.0));
  CHECK(hub.submit({"r", 0, c.steps[0], false}).kind == Kind::Continue);
  const Response r = hub.submit({"r", 0, c.steps[1], true});
  CHECK(r.kind == Kind::Winner);
  CHECK(r.resume_from == 2);
  CHECK(hub.submit({"r", 0, c.steps[1], false}).kind == Kind::Halt);
}

TEST_CASE("duplicate runs and bad records", "[protocol]") {
  const auto video = synth::generate_video(1, 3, 4, 8, 1);
  Hub hub;
  hub.open_run("r", video, small_config(1));
  CHECK_THROWS_AS(hub.open_run("r", video, small_config(1)), Error);
  StepRequest bad{"r", 0, {0, {0.1f}, 1.0f}, false};
  try {
    hub.submit(bad);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  CHECK(hub.poll("r", 0).kind == Kind::Continue);
}

TEST_CASE("concurrent producers reach the same report", "[protocol]") {
  const auto video = synth::generate_video(4, 6, 9, 8, 2);
  std::vector<CandidateTrace> cands;
  for (std::uint32_t n = 0; n < 4; ++n)
    cands.push_back(synth::generate_candidate(
        n + 10, video, synth::FrameCollapse{n + 1, 0.4 + 0.1 * n}, 40,
        synth::trigger_plan(40, 5 + 3 * n, 3), {}, n));
  const auto expected = replay(video, cands, small_config(4));

  Hub hub;
  hub.open_run("c", video, small_config(4));
  std::vector<std::thread> producers;
  for (std::size_t n = 0; n < 4; ++n) {
    producers.emplace_back([&, n] {
      for (std::size_t j = 0; j < 40; ++j) {
        const Response r = hub.submit({"c", n, cands[n].steps[j], j + 1 == 40});
        if (r.kind == Kind::Halt) return;
        if (r.kind == Kind::Freeze) {
          while (hub.poll("c", n).kind == Kind::Freeze) std::this_thread::yield();
          if (hub.poll("c", n).kind == Kind::Halt) return;
          j = hub.poll("c", n).resume_from - 1;
        }
        if (r.kind == Kind::Winner) j = r.resume_from - 1;
      }
    });
  }
  for (auto& t : producers) t.join();
  const auto got = hub.report("c");
  CHECK(got.winner == expected.winner);
  CHECK(got.decode_tokens_spent == expected.decode_tokens_spent);
  CHECK(got.decode_tokens_baseline == expected.decode_tokens_baseline);
  for (std::size_t n = 0; n < 4; ++n)
    CHECK(got.candidates[n].prefix_len == expected.candidates[n].prefix_len);
}

TEST_CASE("json codec", "[protocol]") {
  const StepRequest req{"run-7", 3, {42, {0.25f, 0.5f}, 0.125f}, true};
  const auto j = protocol::to_json(req);
  CHECK(j.dump() ==
        R"({"run_id":"run-7","candidate_id":3,"record":{"token_id":42,"frame_attention":[0.25,0.5],"text_attention":0.125},"is_eos":true})");
  const auto back = protocol::request_from_json(j);
  CHECK(back.run_id == req.run_id);
  CHECK(back.candidate_id == 3);
  CHECK(back.record == req.record);
  CHECK(back.is_eos);

  CHECK(protocol::to_json(Response{Kind::Continue}).dump() == R"({"directive":"continue"})");
  CHECK(protocol::to_json(Response{Kind::Freeze, 9, FreezeReason::Cap}).dump() ==
        R"({"directive":"freeze","prefix_len":9,"reason":"cap"})");
  CHECK(protocol::to_json(Response{Kind::Winner, 0, FreezeReason::Vav, 2, 9}).dump() ==
        R"({"directive":"winner","winner":2,"resume_from":9})");
  CHECK(protocol::to_json(Response{Kind::Halt}).dump() == R"({"directive":"halt"})");

  try {
    protocol::request_from_json(ojson{{"run_id", "x"}});
    FAIL("expected InvalidInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
}
