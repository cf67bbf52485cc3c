#include <doctest.h>

#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include "graphit/optimizer.hpp"
#include "support/providers.hpp"

using namespace graphit;

namespace {

const std::vector<std::string> kOptions = {"alpha", "beta"};

ClassifierProgram base_program() {
  ClassifierProgram program;
  program.signature = default_signature("scientific paper");
  return program;
}

std::vector<Example> fixture_valset() {
  return {{"valnode one features", kOptions, "alpha"},
          {"valnode two features", kOptions, "beta"}};
}

// Task chat for the instruction-search fixture: only prompts carrying the
// improved instruction answer both validation nodes correctly.
ScriptedChat copro_task_chat(const std::string& winning_instruction) {
  ScriptedChat chat(false, "Category: alpha");
  chat.add_rule({winning_instruction, "valnode one features"}, "Category: alpha");
  chat.add_rule({winning_instruction, "valnode two features"}, "Category: beta");
  return chat;
}

const std::string kInstructionA = "Classify the text into exactly one of the given categories.";
const std::string kInstructionB =
    "Read the snippet carefully and answer with the single best category.";

ScriptedChat fixture_proposer() {
  ScriptedChat proposer(false, "no proposals here");
  proposer.add_rule({"You are optimizing the instruction"},
                    "1. " + kInstructionA + "\n2. " + kInstructionB);
  return proposer;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("exact match metric scores predictions") {
  const Metric metric = exact_match_metric();
  Prediction good;
  good.labels = {"alpha"};
  Prediction wrong;
  wrong.labels = {"beta"};
  Prediction invalid;
  invalid.status = ParseStatus::NoMatch;
  const Example example{"features", kOptions, "alpha"};
  CHECK(metric.score(good, example) == 1.0);
  CHECK(metric.score(wrong, example) == 0.0);
  CHECK(metric.score(invalid, example) == 0.0);
  CHECK(metric.threshold == 1.0);
}

TEST_CASE("evaluate_program: always-correct, partial, and failing providers") {
  const auto program = base_program();
  std::vector<Example> examples;
  for (int i = 0; i < 4; ++i) {
    examples.push_back({"node " + std::to_string(i), kOptions, "alpha"});
  }

  test::CallbackChat correct([](const ChatRequest&) { return std::string("Category: alpha"); });
  CHECK(evaluate_program(program, correct, examples, exact_match_metric()) == 1.0);

  test::CallbackChat three_of_four([](const ChatRequest& request) {
    return contains(request.user, "node 3") ? std::string("Category: beta")
                                            : std::string("Category: alpha");
  });
  CHECK(evaluate_program(program, three_of_four, examples, exact_match_metric()) == 0.75);

  test::CallbackChat failing(
      [](const ChatRequest&) -> std::string { throw ProviderError("down"); });
  CHECK(evaluate_program(program, failing, examples, exact_match_metric()) == 0.0);

  CHECK_THROWS_AS(evaluate_program(program, correct, {}, exact_match_metric()), UserError);
}

TEST_CASE("evaluate_program is identical under parallelism") {
  const auto program = base_program();
  std::vector<Example> examples;
  for (int i = 0; i < 13; ++i) {
    examples.push_back({"node " + std::to_string(i), kOptions, i % 3 == 0 ? "alpha" : "beta"});
  }
  test::CallbackChat chat([](const ChatRequest& request) {
    return fnv1a64(request.user) % 2 == 0 ? std::string("Category: alpha")
                                          : std::string("Category: beta");
  });
  const double serial = evaluate_program(program, chat, examples, exact_match_metric(), 1);
  const double parallel = evaluate_program(program, chat, examples, exact_match_metric(), 8);
  CHECK(serial == parallel);
}

TEST_CASE("evaluate_program bounds in-flight provider calls") {
  const auto program = base_program();
  std::vector<Example> examples;
  for (int i = 0; i < 24; ++i) {
    examples.push_back({"node " + std::to_string(i), kOptions, "alpha"});
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  test::CallbackChat chat([&](const ChatRequest&) {
    const int now = in_flight.fetch_add(1) + 1;
    int expected = peak.load();
    while (now > expected && !peak.compare_exchange_weak(expected, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    in_flight.fetch_sub(1);
    return std::string("Category: alpha");
  });
  evaluate_program(program, chat, examples, exact_match_metric(), 3);
  CHECK(peak.load() <= 3);
  CHECK(peak.load() >= 1);
}

TEST_CASE("propose_instructions parses, dedups, and errors on prose") {
  ScriptedChat proposer(false, "");
  proposer.add_rule({"You are optimizing the instruction"}, "1. " + kInstructionA +
                                                                "\n2. " + kInstructionB +
                                                                "\n3. " + kInstructionA +
                                                                "\n4. short");
  const auto proposals = propose_instructions(proposer, "base instruction text", {}, 10);
  CHECK(proposals == std::vector<std::string>{kInstructionA, kInstructionB});

  // history entries are filtered out
  const auto filtered = propose_instructions(
      proposer, "base instruction text", {{kInstructionA, 0.4}}, 10);
  CHECK(filtered == std::vector<std::string>{kInstructionB});

  ScriptedChat prose(false, "I think you should try being clearer about the task.");
  CHECK_THROWS_WITH_AS(propose_instructions(prose, "base", {}, 5),
                       doctest::Contains("no numbered list"), ProviderError);
}

TEST_CASE("proposer prompt carries history with scores") {
  const std::string prompt = build_proposer_prompt(
      "base text", {{"first try", 0.5}, {"second try", 0.75}}, 4);
  CHECK(contains(prompt, "base text"));
  CHECK(contains(prompt, "first try"));
  CHECK(contains(prompt, "Score: 0.50"));
  CHECK(contains(prompt, "Score: 0.75"));
  CHECK(contains(prompt, "Propose 4"));
}

TEST_CASE("copro fixture: improved instruction wins with score 1.0") {
  auto task = copro_task_chat(kInstructionB);
  auto proposer = fixture_proposer();
  CoproConfig config;
  config.breadth = 2;
  config.depth = 2;

  const OptimizeResult result = copro_optimize(base_program(), proposer, task,
                                               fixture_valset(), exact_match_metric(), config);
  CHECK(result.program.signature.instruction == kInstructionB);
  CHECK(result.best_score == 1.0);

  // trace: initial 0.5 (fallback answers alpha; only valnode one is alpha)
  REQUIRE(result.trace.entries.size() >= 3);
  CHECK(result.trace.entries[0].score == 0.5);
  bool found_winner = false;
  for (const TraceEntry& entry : result.trace.entries) {
    if (entry.candidate == kInstructionB) {
      CHECK(entry.score == 1.0);
      found_winner = true;
    }
  }
  CHECK(found_winner);
  CHECK(result.trace.best() == 1.0);
}

TEST_CASE("copro keeps the initial instruction when nothing beats it") {
  // every prompt answered correctly regardless of instruction
  test::CallbackChat task([](const ChatRequest& request) {
    return contains(request.user, "valnode one") ? std::string("Category: alpha")
                                                 : std::string("Category: beta");
  });
  auto proposer = fixture_proposer();
  CoproConfig config;
  config.breadth = 2;
  config.depth = 1;
  const auto initial_instruction = base_program().signature.instruction;
  const OptimizeResult result = copro_optimize(base_program(), proposer, task, fixture_valset(),
                                               exact_match_metric(), config);
  CHECK(result.program.signature.instruction == initial_instruction);
  CHECK(result.best_score == 1.0);
}

TEST_CASE("copro works with a single-example valset") {
  auto task = copro_task_chat(kInstructionB);
  auto proposer = fixture_proposer();
  CoproConfig config;
  config.breadth = 2;
  config.depth = 1;
  const std::vector<Example> tiny = {{"valnode two features", kOptions, "beta"}};
  const OptimizeResult result =
      copro_optimize(base_program(), proposer, task, tiny, exact_match_metric(), config);
  for (const TraceEntry& entry : result.trace.entries) {
    CHECK((entry.score == 0.0 || entry.score == 1.0));
  }
}

TEST_CASE("bootstrap records demos only for metric-passing predictions") {
  // correct on nodes a and c only
  ScriptedChat chat(false, "Category: beta");
  chat.add_rule({"node a features"}, "recall a's topic.\nCategory: alpha");
  chat.add_rule({"node b features"}, "Category: alpha");  // gold is beta -> fails
  chat.add_rule({"node c features"}, "recall c's topic.\nCategory: alpha");
  chat.add_rule({"node d features"}, "Category: alpha");  // gold is beta -> fails

  const std::vector<Example> trainset = {{"node a features", kOptions, "alpha"},
                                         {"node b features", kOptions, "beta"},
                                         {"node c features", kOptions, "alpha"},
                                         {"node d features", kOptions, "beta"}};

  const auto demos = bootstrap_demos(base_program(), chat, trainset, exact_match_metric(), 4, 7);
  REQUIRE(demos.size() == 2);
  std::set<std::string> features;
  for (const Demonstration& demo : demos) {
    features.insert(demo.node_features);
    CHECK(demo.output == "alpha");
    CHECK(contains(demo.reasoning, "topic"));
    CHECK(demo.options == kOptions);
  }
  CHECK(features == std::set<std::string>{"node a features", "node c features"});

  CHECK(bootstrap_demos(base_program(), chat, trainset, exact_match_metric(), 0, 7).empty());

  ScriptedChat all_wrong(false, "Category: done");
  CHECK(bootstrap_demos(base_program(), all_wrong, trainset, exact_match_metric(), 4, 7).empty());
}

TEST_CASE("bootstrap respects max_demos and the shuffled visit order") {
  test::CallbackChat correct([](const ChatRequest& request) {
    // answer with the gold implied by the feature text
    return contains(request.user, "gold beta") ? std::string("Category: beta")
                                               : std::string("Category: alpha");
  });
  std::vector<Example> trainset;
  for (int i = 0; i < 10; ++i) {
    const bool beta = i % 2 == 1;
    trainset.push_back({"train node " + std::to_string(i) + (beta ? " gold beta" : " gold alpha"),
                        kOptions, beta ? "beta" : "alpha"});
  }
  const auto demos = bootstrap_demos(base_program(), correct, trainset, exact_match_metric(), 3, 1);
  CHECK(demos.size() == 3);
  const auto again = bootstrap_demos(base_program(), correct, trainset, exact_match_metric(), 3, 1);
  for (size_t i = 0; i < demos.size(); ++i) {
    CHECK(demos[i].node_features == again[i].node_features);
  }
}

TEST_CASE("fewshot fixture: candidate carrying the winning demo scores 1.0") {
  ScriptedChat chat(true);
  chat.add_rule({"golden train example", "validation query one"}, "Category: alpha");
  chat.add_rule({"golden train example", "validation query two"}, "Category: beta");
  chat.add_rule({"validation query one"}, "Category: beta");   // no demo -> wrong
  chat.add_rule({"validation query two"}, "Category: alpha");  // no demo -> wrong
  chat.add_rule({"golden train example"}, "follow the worked pattern.\nCategory: alpha");

  const std::vector<Example> trainset = {{"golden train example", kOptions, "alpha"}};
  const std::vector<Example> valset = {{"validation query one", kOptions, "alpha"},
                                       {"validation query two", kOptions, "beta"}};
  BootstrapConfig config;
  config.max_bootstrapped_demos = 1;
  config.num_candidate_programs = 2;
  config.seed = 11;

  const OptimizeResult result = random_search_fewshot(base_program(), chat, trainset, valset,
                                                      exact_match_metric(), config);
  CHECK(result.best_score == 1.0);
  REQUIRE(result.program.demos.size() == 1);
  CHECK(result.program.demos[0].node_features == "golden train example");
  CHECK(result.program.demos[0].output == "alpha");

  // trace contains the losing baseline and the winning candidate
  CHECK(result.trace.entries.size() == 3);
  CHECK(result.trace.entries[0].score == 0.0);
}

TEST_CASE("fewshot search is deterministic under a fixed seed") {
  ScriptedChat chat(false, "Category: alpha");
  chat.add_rule({"tr one"}, "use the first pattern.\nCategory: alpha");
  const std::vector<Example> trainset = {{"tr one", kOptions, "alpha"},
                                         {"tr two", kOptions, "beta"}};
  const std::vector<Example> valset = {{"val q", kOptions, "alpha"}};
  BootstrapConfig config;
  config.num_candidate_programs = 1;
  config.seed = 5;
  const auto first = random_search_fewshot(base_program(), chat, trainset, valset,
                                           exact_match_metric(), config);
  const auto second = random_search_fewshot(base_program(), chat, trainset, valset,
                                            exact_match_metric(), config);
  CHECK(program_to_json(first.program).dump() == program_to_json(second.program).dump());
  CHECK(first.best_score == second.best_score);
}

TEST_CASE("zero-demo baseline wins when demos poison the prompt") {
  ScriptedChat chat(true);
  // with any demo present the answer flips to the wrong label
  chat.add_rule({"poison train", "val query"}, "Category: beta");
  chat.add_rule({"val query"}, "Category: alpha");
  chat.add_rule({"poison train"}, "repeat the pattern.\nCategory: alpha");

  const std::vector<Example> trainset = {{"poison train", kOptions, "alpha"}};
  const std::vector<Example> valset = {{"val query", kOptions, "alpha"}};
  BootstrapConfig config;
  config.max_bootstrapped_demos = 1;
  config.num_candidate_programs = 2;

  const OptimizeResult result = random_search_fewshot(base_program(), chat, trainset, valset,
                                                      exact_match_metric(), config);
  CHECK(result.program.demos.empty());
  CHECK(result.best_score == 1.0);
}

TEST_CASE("bootstrapped demos always satisfy the metric against gold") {
  // property over the fixture runs: recorded output == gold under lambda=1
  ScriptedChat chat(false, "Category: beta");
  chat.add_rule({"node a features"}, "a.\nCategory: alpha");
  chat.add_rule({"node c features"}, "c.\nCategory: alpha");
  const std::vector<Example> trainset = {{"node a features", kOptions, "alpha"},
                                         {"node b features", kOptions, "beta"},
                                         {"node c features", kOptions, "alpha"}};
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto demos =
        bootstrap_demos(base_program(), chat, trainset, exact_match_metric(), 4, seed);
    for (const Demonstration& demo : demos) {
      const auto it = std::find_if(trainset.begin(), trainset.end(), [&](const Example& e) {
        return e.node_features == demo.node_features;
      });
      REQUIRE(it != trainset.end());
      CHECK(demo.output == it->label);
    }
    CHECK(demos.size() <= 4);
  }
}

TEST_CASE("compile: fewshot_only equals random_search_fewshot") {
  ScriptedChat chat(false, "Category: alpha");
  chat.add_rule({"tr one"}, "pattern.\nCategory: alpha");
  const std::vector<Example> trainset = {{"tr one", kOptions, "alpha"}};
  const std::vector<Example> valset = {{"val q", kOptions, "alpha"}};
  BootstrapConfig bootstrap;
  bootstrap.num_candidate_programs = 2;
  CoproConfig copro;

  ChatProviders chats{&chat, nullptr};
  const auto composed = compile(base_program(), chats, trainset, valset, exact_match_metric(),
                                Strategy::FewshotOnly, copro, bootstrap);
  const auto direct = random_search_fewshot(base_program(), chat, trainset, valset,
                                            exact_match_metric(), bootstrap);
  CHECK(composed.program.signature.instruction == direct.program.signature.instruction);
  CHECK(composed.program.demos.size() == direct.program.demos.size());
  CHECK(composed.best_score == direct.best_score);
}

TEST_CASE("compile: copro_only leaves demos unchanged") {
  auto task = copro_task_chat(kInstructionB);
  auto proposer = fixture_proposer();
  CoproConfig copro;
  copro.breadth = 2;
  copro.depth = 1;
  BootstrapConfig bootstrap;

  ClassifierProgram seeded = base_program();
  seeded.demos.push_back({"demo features", kOptions, "because.", "alpha"});

  ChatProviders chats{&task, &proposer};
  const auto result = compile(seeded, chats, {{"t", kOptions, "alpha"}}, fixture_valset(),
                              exact_match_metric(), Strategy::CoproOnly, copro, bootstrap);
  REQUIRE(result.program.demos.size() == 1);
  CHECK(result.program.demos[0].node_features == "demo features");
  CHECK(result.program.signature.instruction == kInstructionB);
}

TEST_CASE("compile: copro_then_fewshot composes both fixtures") {
  // staged fixture: the improved instruction alone fixes valnode one
  // (copro can find it demo-less at 0.5), and the bootstrapped demo on top
  // fixes valnode two as well (fewshot lifts it to 1.0)
  ScriptedChat chat(true);
  chat.add_rule({kInstructionB, "golden train example", "valnode one features"},
                "Category: alpha");
  chat.add_rule({kInstructionB, "golden train example", "valnode two features"},
                "Category: beta");
  chat.add_rule({kInstructionB, "golden train example"}, "mirror it.\nCategory: alpha");
  chat.add_rule({kInstructionB, "valnode one features"}, "Category: alpha");
  chat.add_rule({kInstructionB, "valnode two features"}, "Category: alpha");
  chat.add_rule({"valnode one features"}, "Category: beta");
  chat.add_rule({"valnode two features"}, "Category: alpha");
  chat.add_rule({"golden train example"}, "Category: beta");

  auto proposer = fixture_proposer();
  CoproConfig copro;
  copro.breadth = 2;
  copro.depth = 1;
  BootstrapConfig bootstrap;
  bootstrap.max_bootstrapped_demos = 1;
  bootstrap.num_candidate_programs = 2;

  const std::vector<Example> trainset = {{"golden train example", kOptions, "alpha"}};

  ChatProviders chats{&chat, &proposer};
  const auto result = compile(base_program(), chats, trainset, fixture_valset(),
                              exact_match_metric(), Strategy::CoproThenFewshot, copro, bootstrap);
  CHECK(result.program.signature.instruction == kInstructionB);
  REQUIRE(result.program.demos.size() == 1);
  CHECK(result.program.demos[0].node_features == "golden train example");
  CHECK(result.best_score == 1.0);
  CHECK(result.program.provenance.size() == 2);
  CHECK(contains(result.program.provenance[0], "copro"));
  CHECK(contains(result.program.provenance[1], "fewshot"));
}

TEST_CASE("monotonicity: compile never scores below the initial program") {
  Rng rng(314);
  const std::vector<Strategy> strategies = {Strategy::CoproThenFewshot, Strategy::FewshotOnly,
                                            Strategy::CoproOnly};
  for (int scenario = 0; scenario < 12; ++scenario) {
    std::vector<std::string> options;
    const size_t option_count = 2 + rng.below(4);
    for (size_t i = 0; i < option_count; ++i) options.push_back("label" + std::to_string(i));

    std::vector<Example> trainset;
    std::vector<Example> valset;
    const size_t train_n = 2 + rng.below(4);
    const size_t val_n = 2 + rng.below(4);
    for (size_t i = 0; i < train_n; ++i) {
      trainset.push_back({"train item " + std::to_string(rng.below(1000)), options,
                          options[rng.below(option_count)]});
    }
    for (size_t i = 0; i < val_n; ++i) {
      valset.push_back({"val item " + std::to_string(rng.below(1000)), options,
                        options[rng.below(option_count)]});
    }

    auto task = test::hash_answer_chat(options);
    ScriptedChat proposer(false, "");
    proposer.add_rule({"You are optimizing the instruction"},
                      "1. Try instruction variant " + std::to_string(rng.below(10000)) +
                          " for the task.\n2. Try instruction variant " +
                          std::to_string(rng.below(10000)) + " instead of that one.");

    CoproConfig copro;
    copro.breadth = 2;
    copro.depth = 1;
    BootstrapConfig bootstrap;
    bootstrap.num_candidate_programs = 2;
    bootstrap.max_bootstrapped_demos = 2;
    bootstrap.seed = rng.next();

    const Strategy strategy = strategies[scenario % strategies.size()];
    const double initial =
        evaluate_program(base_program(), task, valset, exact_match_metric());
    ChatProviders chats{&task, &proposer};
    const auto result = compile(base_program(), chats, trainset, valset, exact_match_metric(),
                                strategy, copro, bootstrap);
    const double final_score =
        evaluate_program(result.program, task, valset, exact_match_metric());
    CHECK(final_score >= initial);
    CHECK(result.best_score == final_score);
  }
}

TEST_CASE("trace is append-only with monotone best prefix") {
  auto task = copro_task_chat(kInstructionB);
  auto proposer = fixture_proposer();
  CoproConfig config;
  config.breadth = 2;
  config.depth = 2;
  const auto result = copro_optimize(base_program(), proposer, task, fixture_valset(),
                                     exact_match_metric(), config);
  double best = 0.0;
  for (const TraceEntry& entry : result.trace.entries) {
    best = std::max(best, entry.score);
  }
  CHECK(best == result.best_score);
  CHECK(result.trace.best() == best);
}

}  // TEST_SUITE
