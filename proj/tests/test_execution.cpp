#include <doctest.h>

#include "guided/errors.hpp"
#include "guided/execution.hpp"
#include "test_util.hpp"

using namespace guided;

namespace {

constexpr const char* kExecuteNeedle = "Carry out the current step only";
constexpr const char* kRefineNeedle = "Review the reasoning step";
constexpr const char* kFinalizeNeedle = "Integrate the reasoning steps";

ExecutionConfig make_config(int rounds = 1) {
  ExecutionConfig config;
  config.executor_model = "mock-exec";
  config.refiner_model = "mock-refine";
  config.refine_rounds = rounds;
  return config;
}

}  // namespace

TEST_CASE("execute step renders the prefix and the current step") {
  ScriptedProvider provider;
  provider.reply(kExecuteNeedle, "worked it");
  TemplateLibrary templates = TemplateLibrary::builtin();
  Sample s = testutil::sample();
  Guideline g = testutil::sample_guideline(2);

  SUBCASE("no prefix renders (none)") {
    execute_step(s, {}, g.steps[0], make_config(), provider, templates);
    const std::string prompt = provider.call_log().back().messages.back().content;
    CHECK(prompt.find("(none)") != std::string::npos);
    CHECK(prompt.find("Current step 1: Step title 1") != std::string::npos);
    CHECK(provider.call_log().back().model == "mock-exec");
  }

  SUBCASE("prefix carries refined content only") {
    std::vector<StepRecord> prefix = {StepRecord{1, "raw text", "refined text", 1}};
    execute_step(s, prefix, g.steps[1], make_config(), provider, templates);
    const std::string prompt = provider.call_log().back().messages.back().content;
    CHECK(prompt.find("Step 1: refined text") != std::string::npos);
    CHECK(prompt.find("raw text") == std::string::npos);
  }
}

TEST_CASE("execute step truncates long replies") {
  ScriptedProvider provider;
  provider.reply(kExecuteNeedle, std::string(100, 'x'));
  TemplateLibrary templates = TemplateLibrary::builtin();
  ExecutionConfig config = make_config();
  config.max_step_chars = 10;
  std::string out = execute_step(testutil::sample(), {}, testutil::sample_guideline(1).steps[0],
                                 config, provider, templates);
  CHECK(out == std::string(10, 'x'));
}

TEST_CASE("refine step applies rounds and uses the refiner model") {
  ScriptedProvider provider;
  provider.reply(kRefineNeedle, "better text");
  TemplateLibrary templates = TemplateLibrary::builtin();
  GuidelineStep step = testutil::sample_guideline(1).steps[0];

  auto [text, rounds] = refine_step(testutil::sample(), "draft", step, make_config(2),
                                    provider, templates);
  CHECK(text == "better text");
  CHECK(rounds == 2);
  CHECK(provider.call_count() == 2);
  CHECK(provider.call_log().back().model == "mock-refine");
  const std::string prompt = provider.call_log().front().messages.back().content;
  CHECK(prompt.find("- Rushing part 1") != std::string::npos);
  CHECK(prompt.find("- Double-check part 1") != std::string::npos);
}

TEST_CASE("refine step stops on the no-change sentinel") {
  ScriptedProvider provider;
  provider.reply(kRefineNeedle, "  NO_CHANGE \n");
  TemplateLibrary templates = TemplateLibrary::builtin();
  auto [text, rounds] = refine_step(testutil::sample(), "draft",
                                    testutil::sample_guideline(1).steps[0], make_config(3),
                                    provider, templates);
  CHECK(text == "draft");
  CHECK(rounds == 1);
  CHECK(provider.call_count() == 1);
}

TEST_CASE("refine step keeps the previous text on an empty reply") {
  ScriptedProvider provider;
  provider.reply_once(kRefineNeedle, "improved");
  provider.reply_once(kRefineNeedle, "   ");
  TemplateLibrary templates = TemplateLibrary::builtin();
  auto [text, rounds] = refine_step(testutil::sample(), "draft",
                                    testutil::sample_guideline(1).steps[0], make_config(2),
                                    provider, templates);
  CHECK(text == "improved");
  CHECK(rounds == 2);
}

TEST_CASE("refine step with zero rounds makes no calls") {
  ScriptedProvider provider;
  TemplateLibrary templates = TemplateLibrary::builtin();
  auto [text, rounds] = refine_step(testutil::sample(), "draft",
                                    testutil::sample_guideline(1).steps[0], make_config(0),
                                    provider, templates);
  CHECK(text == "draft");
  CHECK(rounds == 0);
  CHECK(provider.call_count() == 0);
}

TEST_CASE("refiner model defaults to the executor") {
  ScriptedProvider provider;
  provider.reply(kRefineNeedle, "NO_CHANGE");
  TemplateLibrary templates = TemplateLibrary::builtin();
  ExecutionConfig config = make_config(1);
  config.refiner_model.clear();
  refine_step(testutil::sample(), "draft", testutil::sample_guideline(1).steps[0], config,
              provider, templates);
  CHECK(provider.call_log().back().model == "mock-exec");
}

TEST_CASE("finalize short-circuits on a tagged last step") {
  ScriptedProvider provider;
  TemplateLibrary templates = TemplateLibrary::builtin();
  Trajectory t;
  t.steps = {StepRecord{1, "x", "earlier <answer>ignored</answer>", 0},
             StepRecord{2, "y", "done <answer> (J) </answer>", 0}};
  CHECK(finalize(testutil::sample(), t, make_config(), provider, templates) == "(J)");
  CHECK(provider.call_count() == 0);
}

TEST_CASE("finalize makes one call when the last step carries no tag") {
  ScriptedProvider provider;
  provider.reply(kFinalizeNeedle, "Therefore <answer>42</answer>");
  TemplateLibrary templates = TemplateLibrary::builtin();
  Trajectory t;
  t.steps = {StepRecord{1, "x", "earlier <answer>stale</answer>", 0},
             StepRecord{2, "y", "no tag here", 0}};
  CHECK(finalize(testutil::sample(), t, make_config(), provider, templates) == "42");
  CHECK(provider.call_count() == 1);
  CHECK(provider.call_log().back().model == "mock-exec");
}

TEST_CASE("guided solve call count follows steps and rounds") {
  TemplateLibrary templates = TemplateLibrary::builtin();
  Guideline g = testutil::sample_guideline(5);
  Sample s = testutil::sample();

  ScriptedProvider provider;
  provider.reply(kExecuteNeedle, "worked the step");
  provider.reply(kRefineNeedle, "polished the step");
  provider.reply(kFinalizeNeedle, "<answer>yes</answer>");

  Trajectory t = guided_solve(s, g, make_config(1), provider, templates);
  CHECK(provider.call_count() == 11);  // 5 executes + 5 refines + finalize
  REQUIRE(t.steps.size() == 5);
  CHECK(t.steps[0].raw_content == "worked the step");
  CHECK(t.steps[0].refined_content == "polished the step");
  CHECK(t.steps[0].rounds_applied == 1);
  CHECK(t.final_answer == "yes");
  CHECK(t.executor_model == "mock-exec");
  CHECK(t.refiner_model == "mock-refine");

  provider.clear_log();
  Trajectory bare = guided_solve(s, g, make_config(0), provider, templates);
  CHECK(provider.call_count() == 6);  // 5 executes + finalize
  CHECK(bare.steps[0].refined_content == bare.steps[0].raw_content);
  CHECK(bare.steps[0].rounds_applied == 0);
}

TEST_CASE("guided solve skips the finalize call when the last step is tagged") {
  TemplateLibrary templates = TemplateLibrary::builtin();
  ScriptedProvider provider;
  provider.reply(kExecuteNeedle, "done <answer>no</answer>");
  provider.reply(kRefineNeedle, "NO_CHANGE");
  Trajectory t = guided_solve(testutil::sample(), testutil::sample_guideline(2),
                              make_config(1), provider, templates);
  CHECK(provider.call_count() == 4);  // 2 executes + 2 refines, no finalize
  CHECK(t.final_answer == "no");
}

TEST_CASE("guided solve single-prompt mode issues one execute call") {
  TemplateLibrary templates = TemplateLibrary::builtin();
  ScriptedProvider provider;
  provider.reply(kExecuteNeedle, "all at once");
  provider.reply(kRefineNeedle, "NO_CHANGE");
  provider.reply(kFinalizeNeedle, "<answer>yes</answer>");

  ExecutionConfig config = make_config(1);
  config.stepwise = false;
  Trajectory t = guided_solve(testutil::sample(), testutil::sample_guideline(3), config,
                              provider, templates);
  REQUIRE(t.steps.size() == 1);
  CHECK(provider.call_count() == 3);  // execute + refine + finalize
  const std::string prompt = provider.call_log().front().messages.back().content;
  CHECK(prompt.find("1. Step title 1") != std::string::npos);
  CHECK(prompt.find("3. Step title 3") != std::string::npos);
  CHECK(prompt.find("Common mistake: Rushing part 2") != std::string::npos);
}

TEST_CASE("guided solve validates its inputs before any call") {
  TemplateLibrary templates = TemplateLibrary::builtin();
  ScriptedProvider provider;
  Guideline g = testutil::sample_guideline(2);

  Sample empty = testutil::sample();
  empty.input_text = "   ";
  CHECK_THROWS_AS(guided_solve(empty, g, make_config(), provider, templates),
                  PreconditionError);

  Guideline invalid = g;
  invalid.steps[0].execution.clear();
  CHECK_THROWS_AS(guided_solve(testutil::sample(), invalid, make_config(), provider, templates),
                  PreconditionError);

  ExecutionConfig bad_rounds = make_config(5);
  CHECK_THROWS_AS(guided_solve(testutil::sample(), g, bad_rounds, provider, templates),
                  ConfigError);

  ExecutionConfig no_model = make_config();
  no_model.executor_model.clear();
  CHECK_THROWS_AS(guided_solve(testutil::sample(), g, no_model, provider, templates),
                  ConfigError);

  CHECK(provider.call_count() == 0);
}

TEST_CASE("mid-trajectory failure carries the partial trajectory") {
  TemplateLibrary templates = TemplateLibrary::builtin();
  ScriptedProvider provider;
  provider.reply_once(kExecuteNeedle, "finished step one");
  provider.reply(kRefineNeedle, "NO_CHANGE");

  try {
    guided_solve(testutil::sample(), testutil::sample_guideline(3), make_config(1), provider,
                 templates);
    FAIL("expected ExecutionAbort");
  } catch (const ExecutionAbort& ex) {
    REQUIRE(ex.partial().steps.size() == 1);
    CHECK(ex.partial().steps[0].refined_content == "finished step one");
    CHECK(std::string(ex.what()).find("aborted") != std::string::npos);
  }
}
