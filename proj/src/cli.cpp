#include "simfid/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "simfid/agent.hpp"
#include "simfid/corpus.hpp"
#include "simfid/discriminator.hpp"
#include "simfid/judge.hpp"
#include "simfid/metrics.hpp"
#include "simfid/pipeline.hpp"
#include "simfid/provider.hpp"
#include "simfid/simulator.hpp"

namespace simfid {

using nlohmann::json;

namespace {

// Owns whatever layering a --provider selection requires.
struct ProviderStack {
    std::vector<std::unique_ptr<TextProvider>> layers;
    std::unique_ptr<DiskCache> cache;
    TextProvider* top = nullptr;
};

ProviderConfig profile_from_json(const json& p) {
    ProviderConfig config;
    config.endpoint = p.value("endpoint", "");
    config.api_key_env = p.value("api_key_env", "");
    config.model_name = p.value("model_name", "");
    config.timeout = std::chrono::milliseconds(p.value("timeout_ms", 30000));
    config.retry_limit = p.value("retry_limit", 2);
    if (p.contains("wire")) {
        const json& w = p["wire"];
        config.wire.chat_path = w.value("chat_path", config.wire.chat_path);
        config.wire.model_field = w.value("model_field", config.wire.model_field);
        config.wire.temperature_field =
            w.value("temperature_field", config.wire.temperature_field);
        config.wire.max_tokens_field = w.value("max_tokens_field", config.wire.max_tokens_field);
        config.wire.messages_field = w.value("messages_field", config.wire.messages_field);
        config.wire.role_value = w.value("role_value", config.wire.role_value);
        config.wire.response_text_pointer =
            w.value("response_text_pointer", config.wire.response_text_pointer);
    }
    return config;
}

ProviderStack make_provider(const std::string& name, const std::string& config_path,
                            const std::string& cache_dir) {
    ProviderStack stack;
    if (name == "stub" || name.empty()) {
        stack.layers.push_back(std::make_unique<OfflineStubProvider>());
    } else {
        if (config_path.empty())
            throw Error("--provider " + name + " needs --config with provider profiles");
        std::ifstream in(config_path);
        if (!in) throw Error("cannot open provider config: " + config_path);
        json doc = json::parse(in);
        if (!doc.contains("profiles") || !doc["profiles"].contains(name))
            throw Error("provider profile not found: " + name);
        ProviderConfig config = profile_from_json(doc["profiles"][name]);
        auto http = std::make_unique<HttpProvider>(config);
        auto retrying = std::make_unique<RetryingProvider>(*http, config.retry_limit);
        stack.layers.push_back(std::move(http));
        stack.layers.push_back(std::move(retrying));
    }
    stack.top = stack.layers.back().get();
    if (!cache_dir.empty()) {
        stack.cache = std::make_unique<DiskCache>(cache_dir);
        stack.layers.push_back(std::make_unique<CachingProvider>(*stack.top, *stack.cache));
        stack.top = stack.layers.back().get();
    }
    return stack;
}

Corpus load_corpus_or_die(const std::string& path, std::vector<Diagnostic>& diagnostics) {
    LoadResult result = load_corpus(path);
    for (auto& d : result.diagnostics) diagnostics.push_back(std::move(d));
    return std::move(result.corpus);
}

std::vector<LabeledConversation> load_labeled(const std::string& path, ConvLabel label,
                                              std::vector<Diagnostic>& diagnostics) {
    if (std::filesystem::path(path).extension() == ".txt") return read_labeled_transcripts(path);
    Corpus corpus = load_corpus_or_die(path, diagnostics);
    std::vector<LabeledConversation> out;
    out.reserve(corpus.size());
    for (auto& c : corpus.conversations) out.push_back({std::move(c), label});
    return out;
}

void print_diagnostics(const std::vector<Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics) std::cerr << d.where << ": " << d.message << '\n';
}

void write_diagnostics(const std::vector<Diagnostic>& diagnostics,
                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json arr = json::array();
    for (const auto& d : diagnostics) arr.push_back({{"where", d.where}, {"message", d.message}});
    std::ofstream out(dir / "diagnostics.json");
    out << arr.dump(2) << '\n';
}

void write_spec_file(const json& spec, const std::filesystem::path& run_dir) {
    std::filesystem::create_directories(run_dir);
    std::ofstream out(run_dir / "spec.json");
    out << spec.dump(2) << '\n';
}

AgentCondition condition_from_string(const std::string& s) {
    if (s == "good") return AgentCondition::good;
    if (s == "bad") return AgentCondition::bad;
    throw Error("condition must be good or bad, got: " + s);
}

std::map<std::string, ThirdPersonLabels> load_third_person(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open third-person label file: " + path);
    json doc = json::parse(in);
    std::map<std::string, ThirdPersonLabels> out;
    for (const auto& entry : doc) {
        ThirdPersonLabels labels;
        labels.satisfaction = entry.value("satisfaction", 3);
        labels.frustration = entry.value("frustration", 3);
        if (entry.contains("acceptance") && entry["acceptance"].is_boolean())
            labels.acceptance = entry["acceptance"].get<bool>();
        out[entry.at("conversation_id").get<std::string>()] = labels;
    }
    return out;
}

void print_discriminator_metrics(const DiscriminatorMetrics& m, std::ostream& out) {
    out << "accuracy " << m.accuracy << '\n'
        << "precision " << m.precision << '\n'
        << "recall " << m.recall << '\n'
        << "f1 " << m.f1 << '\n'
        << "specificity " << m.specificity << '\n'
        << "avg_hls " << m.avg_hls << '\n';
}

struct CommonOptions {
    std::string provider = "stub";
    std::string config;
    std::string cache_dir;
    std::string judge = "rule";
    std::size_t jobs = 1;
};

void add_provider_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--provider", opts.provider, "Provider profile name or 'stub'");
    cmd->add_option("--config", opts.config, "Provider profile JSON file");
    cmd->add_option("--cache-dir", opts.cache_dir, "Response cache directory");
}

JudgeRunner make_judge_runner(const CommonOptions& opts, ProviderStack& stack,
                              const AnnotationStore* store) {
    JudgeRunner runner;
    runner.mode = opts.judge == "llm" ? JudgeMode::llm : JudgeMode::rule;
    runner.provider = stack.top;
    runner.store = store;
    runner.jobs = opts.jobs;
    return runner;
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"User-simulator fidelity toolkit"};
    app.require_subcommand(1);

    // summarize
    auto* summarize = app.add_subcommand("summarize", "Corpus counts and rating incidence");
    std::string summarize_corpus;
    bool summarize_json = false;
    summarize->add_option("--corpus", summarize_corpus, "Corpus file")->required();
    summarize->add_flag("--json", summarize_json, "Emit the full summary as JSON");

    // annotate
    auto* annotate_cmd = app.add_subcommand("annotate", "Run the judge over a corpus");
    std::string annotate_corpus_path, annotate_out;
    CommonOptions annotate_opts;
    annotate_cmd->add_option("--corpus", annotate_corpus_path, "Corpus file")->required();
    annotate_cmd->add_option("--out", annotate_out, "Run directory")->required();
    annotate_cmd->add_option("--judge", annotate_opts.judge, "rule or llm")
        ->check(CLI::IsMember({"rule", "llm"}));
    annotate_cmd->add_option("--jobs", annotate_opts.jobs, "Parallel annotation workers");
    add_provider_options(annotate_cmd, annotate_opts);

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "Export a per-conversation sample set");
    std::string metrics_corpus, metrics_annotations, metrics_out, metrics_name;
    metrics_cmd->add_option("--corpus", metrics_corpus, "Corpus file")->required();
    metrics_cmd->add_option("--annotations", metrics_annotations, "Annotation directory")
        ->required();
    metrics_cmd->add_option("--out", metrics_out, "Output CSV")->required();
    metrics_cmd->add_option("--name", metrics_name, "Sample set name");

    // align
    auto* align_cmd = app.add_subcommand("align", "Alignment table between two sample sets");
    std::string align_a, align_b, align_out;
    align_cmd->add_option("--a", align_a, "First sample set CSV")->required();
    align_cmd->add_option("--b", align_b, "Second sample set CSV")->required();
    align_cmd->add_option("--out", align_out, "Output CSV")->required();

    // discriminate
    auto* disc = app.add_subcommand("discriminate", "Human-likeness discriminator");
    disc->require_subcommand(1);
    std::string disc_human, disc_model, disc_out, disc_corpus, disc_test_sim;
    std::vector<std::string> disc_sims;
    double disc_alpha = 1.0;
    double disc_threshold = 0.5;
    std::uint64_t disc_seed = 0;
    std::vector<std::size_t> disc_sizes;
    CommonOptions disc_opts;

    auto* disc_train = disc->add_subcommand("train", "Train on human vs simulated corpora");
    disc_train->add_option("--human", disc_human, "Human corpus")->required();
    disc_train->add_option("--sim", disc_sims, "Simulated corpus (repeatable)")->required();
    disc_train->add_option("--alpha", disc_alpha, "Additive smoothing");
    disc_train->add_option("--out", disc_model, "Model output path")->required();

    auto* disc_eval = disc->add_subcommand("eval", "Evaluate a model on labeled corpora");
    disc_eval->add_option("--model", disc_model, "Model path")->required();
    disc_eval->add_option("--human", disc_human, "Human corpus")->required();
    disc_eval->add_option("--sim", disc_sims, "Simulated corpus (repeatable)")->required();
    disc_eval->add_option("--threshold", disc_threshold, "Human-decision threshold");

    auto* disc_score = disc->add_subcommand("score", "HLS per conversation");
    disc_score->add_option("--model", disc_model, "Model path")->required();
    disc_score->add_option("--corpus", disc_corpus, "Corpus file")->required();
    disc_score->add_option("--out", disc_out, "Output CSV")->required();

    auto* disc_curve = disc->add_subcommand("curve", "Accuracy vs training-set size");
    disc_curve->add_option("--human", disc_human, "Human corpus")->required();
    disc_curve->add_option("--sim", disc_sims, "Simulated corpus (repeatable)")->required();
    disc_curve->add_option("--sizes", disc_sizes, "Training sizes")->required();
    disc_curve->add_option("--seed", disc_seed, "Seed")->required();
    disc_curve->add_option("--alpha", disc_alpha, "Additive smoothing");
    disc_curve->add_option("--out", disc_out, "Output CSV");

    auto* disc_cross = disc->add_subcommand("cross", "Train on one simulator, test on another");
    disc_cross->add_option("--train-sim", disc_corpus, "Training simulator corpus")->required();
    disc_cross->add_option("--test-sim", disc_test_sim, "Test simulator corpus")->required();
    disc_cross->add_option("--human", disc_human, "Human corpus")->required();
    disc_cross->add_option("--seed", disc_seed, "Seed")->required();
    disc_cross->add_option("--alpha", disc_alpha, "Additive smoothing");

    auto* disc_prompt = disc->add_subcommand("prompt", "Zero-shot provider classification");
    disc_prompt->add_option("--corpus", disc_corpus, "Corpus file")->required();
    add_provider_options(disc_prompt, disc_opts);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate conversations");
    std::string sim_mode = "prompted", sim_condition = "good", sim_corpus, sim_catalog, sim_out;
    std::size_t sim_count = 10, sim_k = 3, sim_max_turns = 10;
    std::uint64_t sim_seed = 0;
    CommonOptions sim_opts;
    simulate->add_option("--mode", sim_mode, "prompted or icl")
        ->check(CLI::IsMember({"prompted", "icl"}));
    simulate->add_option("--condition", sim_condition, "Agent condition")
        ->check(CLI::IsMember({"good", "bad"}));
    simulate->add_option("--corpus", sim_corpus, "Conditioning corpus (icl mode)");
    simulate->add_option("--catalog", sim_catalog, "Catalog file")->required();
    simulate->add_option("--count", sim_count, "Conversations to generate")->required();
    simulate->add_option("--seed", sim_seed, "Seed")->required();
    simulate->add_option("--k", sim_k, "ICL retrieval depth");
    simulate->add_option("--max-turns", sim_max_turns, "Dialog turn cap");
    simulate->add_option("--out", sim_out, "Run directory")->required();
    add_provider_options(simulate, sim_opts);

    // counterfactual
    auto* counter = app.add_subcommand("counterfactual", "Train-on-one, test-on-other run");
    std::string cf_train = "good", cf_test = "bad", cf_mode = "icl";
    std::string cf_corpus, cf_catalog, cf_out;
    std::size_t cf_count = 10, cf_max_turns = 10;
    std::uint64_t cf_seed = 0;
    CommonOptions cf_opts;
    counter->add_option("--train-condition", cf_train, "Conditioning pool condition")
        ->check(CLI::IsMember({"good", "bad"}));
    counter->add_option("--test-condition", cf_test, "Unseen agent condition")
        ->check(CLI::IsMember({"good", "bad"}));
    counter->add_option("--mode", cf_mode, "prompted or icl")
        ->check(CLI::IsMember({"prompted", "icl"}));
    counter->add_option("--corpus", cf_corpus, "Human corpus")->required();
    counter->add_option("--catalog", cf_catalog, "Catalog file")->required();
    counter->add_option("--count", cf_count, "Conversations to generate")->required();
    counter->add_option("--seed", cf_seed, "Seed")->required();
    counter->add_option("--max-turns", cf_max_turns, "Dialog turn cap");
    counter->add_option("--out", cf_out, "Run directory")->required();
    counter->add_option("--judge", cf_opts.judge, "rule or llm")
        ->check(CLI::IsMember({"rule", "llm"}));
    counter->add_option("--jobs", cf_opts.jobs, "Parallel annotation workers");
    add_provider_options(counter, cf_opts);

    // human-vs-human
    auto* hvh = app.add_subcommand("human-vs-human", "Disjoint-sample baseline");
    std::string hvh_corpus, hvh_condition = "good", hvh_out, hvh_annotations;
    std::size_t hvh_n = 300;
    std::vector<std::uint64_t> hvh_seeds;
    hvh->add_option("--corpus", hvh_corpus, "Corpus file")->required();
    hvh->add_option("--n", hvh_n, "Sample size per side")->required();
    hvh->add_option("--seeds", hvh_seeds, "Seed list")->required();
    hvh->add_option("--condition", hvh_condition, "Condition split to sample")
        ->check(CLI::IsMember({"good", "bad", "all"}));
    hvh->add_option("--annotations", hvh_annotations, "Annotation directory (optional)");
    hvh->add_option("--out", hvh_out, "Run directory")->required();

    // judge-validate
    auto* jv = app.add_subcommand("judge-validate", "Judge vs first-person agreement");
    std::string jv_corpus, jv_annotations, jv_third, jv_out;
    jv->add_option("--corpus", jv_corpus, "Corpus with first-person ratings")->required();
    jv->add_option("--annotations", jv_annotations, "Annotation directory")->required();
    jv->add_option("--third-person", jv_third, "Third-person label JSON");
    jv->add_option("--out", jv_out, "Run directory")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "Re-emit a stored report");
    std::string report_in, report_out;
    std::vector<std::string> report_formats = {"json", "csv", "markdown"};
    report_cmd->add_option("--in", report_in, "report.json path")->required();
    report_cmd->add_option("--out", report_out, "Output directory")->required();
    report_cmd->add_option("--formats", report_formats, "Subset of json,csv,markdown");

    std::vector<const char*> argv;
    argv.push_back("simfid");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        std::vector<Diagnostic> diagnostics;

        if (*summarize) {
            Corpus corpus = load_corpus_or_die(summarize_corpus, diagnostics);
            print_diagnostics(diagnostics);
            const CorpusSummary summary = corpus_summary(corpus);
            if (summarize_json) {
                std::cout << to_json(summary).dump(2) << '\n';
            } else {
                std::cout << "conversations " << summary.conversations << '\n';
                std::cout << "turns " << summary.turns << '\n';
                for (const auto& [cond, count] : summary.by_condition)
                    std::cout << "condition " << to_string(cond) << ' ' << count << '\n';
                std::cout << "median_turns " << summary.median_turns() << '\n';
            }
            return 0;
        }

        if (*annotate_cmd) {
            Corpus corpus = load_corpus_or_die(annotate_corpus_path, diagnostics);
            const std::filesystem::path run_dir(annotate_out);
            write_spec_file(json{{"command", "annotate"},
                                 {"corpus", annotate_corpus_path},
                                 {"judge", annotate_opts.judge}},
                            run_dir);
            AnnotationStore store(run_dir / "annotations");
            ProviderStack stack = make_provider(annotate_opts.provider, annotate_opts.config,
                                                annotate_opts.cache_dir);
            JudgeRunner runner = make_judge_runner(annotate_opts, stack, &store);
            AnnotationOutcome outcome = annotate_corpus(corpus, runner);
            if (runner.mode == JudgeMode::rule) {
                // the rule judge bypasses the provider path; persist explicitly
                for (const auto& c : corpus.conversations) {
                    auto it = outcome.annotations.find(c.id);
                    if (it == outcome.annotations.end()) continue;
                    store.save(c.id, it->second, conversation_content_hash(c), "rule", "", {});
                }
            }
            for (auto& d : outcome.diagnostics) diagnostics.push_back(std::move(d));
            write_diagnostics(diagnostics, run_dir / "diagnostics");
            print_diagnostics(diagnostics);
            std::cout << "annotated " << outcome.annotations.size() << " of " << corpus.size()
                      << '\n';
            return 0;
        }

        if (*metrics_cmd) {
            Corpus corpus = load_corpus_or_die(metrics_corpus, diagnostics);
            auto annotations = load_annotations(metrics_annotations);
            const std::string name = metrics_name.empty()
                                         ? std::filesystem::path(metrics_corpus).stem().string()
                                         : metrics_name;
            SampleSetResult result = build_sample_set(corpus, annotations, name);
            for (auto& d : result.skipped) diagnostics.push_back(std::move(d));
            write_sample_set_csv(result.set, metrics_out);
            print_diagnostics(diagnostics);
            std::cout << "wrote " << result.set.samples.size() << " samples to " << metrics_out
                      << '\n';
            return 0;
        }

        if (*align_cmd) {
            SampleSet a = read_sample_set_csv(align_a, "a");
            SampleSet b = read_sample_set_csv(align_b, "b");
            std::vector<std::string> names(kAlignmentMetricNames.begin(),
                                           kAlignmentMetricNames.end());
            auto rows = stats::align(metric_table(a, names), metric_table(b, names), names);
            std::ofstream out(align_out);
            if (!out) throw Error("cannot write " + align_out);
            out << "metric,mwu_p,ks_stat\n";
            for (const auto& row : rows) {
                char buf[128];
                std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", row.metric_name.c_str(),
                              row.mwu.p_value, row.ks.statistic);
                out << buf;
            }
            std::cout << "wrote " << align_out << '\n';
            return 0;
        }

        if (*disc) {
            if (*disc_train) {
                auto corpus = load_labeled(disc_human, ConvLabel::human, diagnostics);
                for (const auto& sim_path : disc_sims) {
                    auto sims = load_labeled(sim_path, ConvLabel::simulation, diagnostics);
                    corpus.insert(corpus.end(), sims.begin(), sims.end());
                }
                DiscriminatorModel model = train(corpus, disc_alpha);
                save_model(model, disc_model);
                print_diagnostics(diagnostics);
                std::cout << "trained on " << corpus.size() << " conversations, vocabulary "
                          << model.vocabulary_size() << '\n';
                return 0;
            }
            if (*disc_eval) {
                DiscriminatorModel model = load_model(disc_model);
                auto corpus = load_labeled(disc_human, ConvLabel::human, diagnostics);
                for (const auto& sim_path : disc_sims) {
                    auto sims = load_labeled(sim_path, ConvLabel::simulation, diagnostics);
                    corpus.insert(corpus.end(), sims.begin(), sims.end());
                }
                print_discriminator_metrics(evaluate(model, corpus, disc_threshold), std::cout);
                return 0;
            }
            if (*disc_score) {
                DiscriminatorModel model = load_model(disc_model);
                Corpus corpus = load_corpus_or_die(disc_corpus, diagnostics);
                std::ofstream out(disc_out);
                if (!out) throw Error("cannot write " + disc_out);
                out << "conversation_id,hls\n";
                for (const auto& c : corpus.conversations) {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.9f", hls(model, c));
                    out << c.id << ',' << buf << '\n';
                }
                print_diagnostics(diagnostics);
                std::cout << "wrote " << disc_out << '\n';
                return 0;
            }
            if (*disc_curve) {
                auto corpus = load_labeled(disc_human, ConvLabel::human, diagnostics);
                for (const auto& sim_path : disc_sims) {
                    auto sims = load_labeled(sim_path, ConvLabel::simulation, diagnostics);
                    corpus.insert(corpus.end(), sims.begin(), sims.end());
                }
                auto curve = learning_curve(corpus, disc_sizes, disc_seed, disc_alpha);
                std::ostream* out = &std::cout;
                std::ofstream file;
                if (!disc_out.empty()) {
                    file.open(disc_out);
                    if (!file) throw Error("cannot write " + disc_out);
                    out = &file;
                }
                *out << "size,accuracy\n";
                for (const auto& [size, accuracy] : curve)
                    *out << size << ',' << accuracy << '\n';
                return 0;
            }
            if (*disc_cross) {
                Corpus train_sim = load_corpus_or_die(disc_corpus, diagnostics);
                Corpus test_sim = load_corpus_or_die(disc_test_sim, diagnostics);
                Corpus humans = load_corpus_or_die(disc_human, diagnostics);
                print_discriminator_metrics(
                    cross_generalization(train_sim, test_sim, humans, disc_seed, disc_alpha),
                    std::cout);
                return 0;
            }
            if (*disc_prompt) {
                Corpus corpus = load_corpus_or_die(disc_corpus, diagnostics);
                ProviderStack stack =
                    make_provider(disc_opts.provider, disc_opts.config, disc_opts.cache_dir);
                for (const auto& c : corpus.conversations)
                    std::cout << c.id << ' ' << to_string(prompted_discriminate(c, *stack.top))
                              << '\n';
                return 0;
            }
        }

        if (*simulate) {
            const std::filesystem::path run_dir(sim_out);
            write_spec_file(json{{"command", "simulate"},
                                 {"mode", sim_mode},
                                 {"condition", sim_condition},
                                 {"count", sim_count},
                                 {"seed", sim_seed},
                                 {"k", sim_k}},
                            run_dir);
            CatalogLoadResult catalog = load_catalog(sim_catalog);
            for (auto& d : catalog.diagnostics) diagnostics.push_back(std::move(d));

            std::unique_ptr<CorpusRetrievalIndex> pool;
            if (sim_mode == "icl") {
                if (sim_corpus.empty()) throw Error("icl mode requires --corpus");
                Corpus conditioning = load_corpus_or_die(sim_corpus, diagnostics);
                pool = std::make_unique<CorpusRetrievalIndex>(
                    CorpusRetrievalIndex::build(conditioning));
            }
            ProviderStack stack =
                make_provider(sim_opts.provider, sim_opts.config, sim_opts.cache_dir);

            GenerationSpec spec;
            spec.mode = sim_mode == "icl" ? SimMode::icl : SimMode::prompted;
            spec.condition = condition_from_string(sim_condition);
            spec.count = sim_count;
            spec.max_turns = sim_max_turns;
            spec.seed = sim_seed;
            spec.simulator_name = sim_mode;
            spec.k = sim_k;
            GenerationOutcome outcome =
                generate_conversations(catalog.catalog, pool.get(), *stack.top, *stack.top, spec);
            for (auto& d : outcome.diagnostics) diagnostics.push_back(std::move(d));

            std::filesystem::create_directories(run_dir / "generated");
            const auto out_path =
                run_dir / "generated" / (sim_mode + "_" + sim_condition + ".jsonl");
            save_corpus(outcome.corpus, out_path);
            write_diagnostics(diagnostics, run_dir / "diagnostics");
            print_diagnostics(diagnostics);
            std::cout << "wrote " << outcome.corpus.size() << " conversations to "
                      << out_path.string() << '\n';
            return 0;
        }

        if (*counter) {
            const std::filesystem::path run_dir(cf_out);
            write_spec_file(json{{"command", "counterfactual"},
                                 {"train_condition", cf_train},
                                 {"test_condition", cf_test},
                                 {"mode", cf_mode},
                                 {"count", cf_count},
                                 {"seed", cf_seed},
                                 {"judge", cf_opts.judge}},
                            run_dir);
            Corpus humans = load_corpus_or_die(cf_corpus, diagnostics);
            CatalogLoadResult catalog = load_catalog(cf_catalog);
            for (auto& d : catalog.diagnostics) diagnostics.push_back(std::move(d));

            ProviderStack stack =
                make_provider(cf_opts.provider, cf_opts.config, cf_opts.cache_dir);
            AnnotationStore store(run_dir / "annotations");
            JudgeRunner judge = make_judge_runner(cf_opts, stack, &store);

            CounterfactualSpec spec;
            spec.train_condition = condition_from_string(cf_train);
            spec.test_condition = condition_from_string(cf_test);
            spec.mode = cf_mode == "icl" ? SimMode::icl : SimMode::prompted;
            spec.count = cf_count;
            spec.max_turns = cf_max_turns;
            spec.seed = cf_seed;

            Corpus generated;
            Report report = run_counterfactual(humans, catalog.catalog, spec, *stack.top,
                                               *stack.top, judge, &generated);
            if (stack.cache) report.provenance.cache_hits = stack.cache->hits();

            std::filesystem::create_directories(run_dir / "generated");
            save_corpus(generated, run_dir / "generated" /
                                       (std::string(to_string(spec.mode)) + "_" + cf_test +
                                        ".jsonl"));
            emit_report(report, {"json", "csv", "markdown"}, run_dir / "reports");
            for (auto& d : report.diagnostics) diagnostics.push_back(std::move(d));
            write_diagnostics(diagnostics, run_dir / "diagnostics");
            print_diagnostics(diagnostics);
            std::cout << "counterfactual run complete: " << run_dir.string() << '\n';
            return 0;
        }

        if (*hvh) {
            const std::filesystem::path run_dir(hvh_out);
            write_spec_file(json{{"command", "human-vs-human"},
                                 {"n", hvh_n},
                                 {"seeds", hvh_seeds},
                                 {"condition", hvh_condition}},
                            run_dir);
            Corpus corpus = load_corpus_or_die(hvh_corpus, diagnostics);
            Corpus subset;
            if (hvh_condition == "all") {
                subset = std::move(corpus);
            } else {
                ConditionSplit split = split_by_condition(corpus);
                subset = hvh_condition == "good" ? std::move(split.good) : std::move(split.bad);
            }
            std::map<std::string, JudgeAnnotation> annotations;
            const std::map<std::string, JudgeAnnotation>* annotations_ptr = nullptr;
            if (!hvh_annotations.empty()) {
                annotations = load_annotations(hvh_annotations);
                annotations_ptr = &annotations;
            }
            Report report = run_human_vs_human(subset, hvh_n, hvh_seeds, annotations_ptr);
            emit_report(report, {"json", "csv", "markdown"}, run_dir / "reports");
            for (auto& d : report.diagnostics) diagnostics.push_back(std::move(d));
            write_diagnostics(diagnostics, run_dir / "diagnostics");
            print_diagnostics(diagnostics);
            for (const auto& [metric, passes] : report.human_vs_human->passes_by_metric)
                std::cout << metric << " passed " << passes << "/" << hvh_seeds.size() << '\n';
            return 0;
        }

        if (*jv) {
            const std::filesystem::path run_dir(jv_out);
            write_spec_file(json{{"command", "judge-validate"}}, run_dir);
            Corpus corpus = load_corpus_or_die(jv_corpus, diagnostics);
            auto annotations = load_annotations(jv_annotations);
            std::map<std::string, ThirdPersonLabels> third;
            const std::map<std::string, ThirdPersonLabels>* third_ptr = nullptr;
            if (!jv_third.empty()) {
                third = load_third_person(jv_third);
                third_ptr = &third;
            }
            Report report = run_judge_validation(corpus, annotations, third_ptr);
            emit_report(report, {"json", "csv", "markdown"}, run_dir / "reports");
            for (auto& d : report.diagnostics) diagnostics.push_back(std::move(d));
            write_diagnostics(diagnostics, run_dir / "diagnostics");
            print_diagnostics(diagnostics);
            std::cout << "judge validation over " << report.judge_validation->conversations_used
                      << " conversations\n";
            return 0;
        }

        if (*report_cmd) {
            std::ifstream in(report_in);
            if (!in) throw Error("cannot open report: " + report_in);
            Report report = report_from_json(json::parse(in));
            std::set<std::string> formats(report_formats.begin(), report_formats.end());
            auto written = emit_report(report, formats, report_out);
            for (const auto& p : written) std::cout << p.string() << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args);
}

} // namespace simfid
