#include "simfid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "simfid/prompts.hpp"
#include "simfid/text.hpp"

namespace simfid {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::size_t count_turns_after(const std::string& prompt, std::string_view marker) {
    std::size_t start = 0;
    if (!marker.empty()) {
        const auto pos = prompt.find(marker);
        if (pos == std::string::npos) return 0;
        start = pos;
    }
    std::size_t count = 0;
    std::size_t pos = start;
    while ((pos = prompt.find("\nTurn ", pos)) != std::string::npos) {
        ++count;
        pos += 6;
    }
    return count;
}

const std::vector<std::string>& stub_openers() {
    static const std::vector<std::string> pool = {
        "I'm looking for comfortable running shoes for everyday use.",
        "I need a warm winter jacket, preferably in black.",
        "hoodie",
        "Can you show me some waterproof hiking boots?",
        "Looking for a casual belt to go with jeans",
        "I want sneakers in size 9, nothing too flashy.",
        "Do you have any lightweight rain jackets?",
        "I'm after a pair of leather boots for work.",
    };
    return pool;
}

const std::vector<std::string>& stub_followups() {
    static const std::vector<std::string> pool = {
        "Do any of these come in black?",
        "Too expensive, can you show me cheaper options?",
        "I like the second one. Does it come in size 9?",
        "Not quite what I want, something more casual please.",
        "The first one looks decent. Is it waterproof?",
        "Hmm, these all look the same to me.",
        "Can you narrow it down to slip-on styles?",
        "What about something in grey instead?",
    };
    return pool;
}

const std::vector<std::string>& stub_closers() {
    static const std::vector<std::string> pool = {
        "I'll take the first one. Thanks!",
        "Thanks, that's all I needed.",
        "I'll go with the second option. Thank you!",
        "Never mind, I'm good.",
    };
    return pool;
}

const std::vector<std::string>& stub_agent_lines() {
    static const std::vector<std::string> pool = {
        "Here are some options you might like. Do any of these catch your eye?",
        "Take a look at these picks! Let me know if you want to narrow things down.",
        "I found a few matches. Would you like a different color or style?",
        "These are our most popular choices for that. Anything stand out?",
    };
    return pool;
}

const std::vector<std::string>& stub_unhelpful_agent_lines() {
    static const std::vector<std::string> pool = {
        "Interesting choice! Did you know the first shopping carts appeared in 1937? "
        "Also, were you thinking more indoor or outdoor use?",
        "Before we get to that, what's your stance on shoelaces versus velcro? "
        "Fun fact: velcro was inspired by burrs.",
        "Let me circle back: what exactly did you mean earlier? "
        "Meanwhile, here are some loosely related items.",
        "Hmm, have you considered the humidity where you live? It matters more than you'd think.",
    };
    return pool;
}

std::string sim_block(const std::string& response, bool terminate) {
    std::string out = "Response:\n";
    out += response;
    out += "\n--------------------------------------------------\nTerminate: ";
    out += terminate ? "True" : "False";
    out += '\n';
    return out;
}

std::string stub_judge_json(std::uint64_t h, std::size_t turns) {
    const int satisfaction = 2 + static_cast<int>(h % 3);
    const int frustration = 1 + static_cast<int>((h >> 3) % 3);
    const int sentiment = 2 + static_cast<int>((h >> 6) % 3);
    const int confusion = 1 + static_cast<int>((h >> 9) % 2);
    const bool accepted = (h >> 12) % 2 == 0;
    const std::size_t questions = std::min<std::size_t>(turns, (h >> 15) % 2);
    json j;
    j["user_sentiment"] = sentiment;
    j["user_satisfaction"] = satisfaction;
    j["user_frustration_annoyance"] = frustration;
    j["user_confusion"] = confusion;
    j["recommendation_accepted"] = accepted;
    j["turns_until_acceptance"] = accepted ? 1 : 0;
    j["assistant_turns_with_question"] = turns > 0 ? 1 : 0;
    j["user_turns_with_question"] = questions;
    j["user_dialog_acts"] = {{"inform_preference", 1},
                             {"accept_recommendation", accepted ? 1 : 0},
                             {"other", turns > 1 ? 1 : 0}};
    j["assistant_dialog_acts"] = {{"recommend", static_cast<int>(turns)}};
    j["evaluation_details"] = {
        {"relevance_of_recommendations", {{"rating", 3.5}, {"explanation", "stub"}}},
        {"dialogue_quality", {{"rating", 3.0}, {"explanation", "stub"}}},
        {"task_completion", {{"rating", accepted ? 4.0 : 2.5}, {"explanation", "stub"}}},
        {"ease_of_use", {{"rating", 3.5}, {"explanation", "stub"}}}};
    j["overall_summary_explanation"] = "stub evaluation";
    j["overall_agent_rating"] = 3.0 + static_cast<double>(h % 5) / 4.0;
    return j.dump(2);
}

} // namespace

std::string OfflineStubProvider::generate(const GenerationRequest& request) {
    if (request.prompt.empty()) throw Error("generate: empty prompt");
    calls_.fetch_add(1);
    const std::string& prompt = request.prompt;
    const std::uint64_t h = fnv1a(prompt);

    if (prompt.find("You are a shopping user talking") != std::string::npos) {
        const std::size_t turns =
            count_turns_after(prompt, "Below is the current state of the conversation history:");
        if (turns == 0) return sim_block(stub_openers()[h % stub_openers().size()], false);
        if (turns == 1) return sim_block(stub_followups()[h % stub_followups().size()], false);
        if (turns == 2 && h % 4 == 0)
            return sim_block(stub_followups()[(h >> 2) % stub_followups().size()], false);
        return sim_block(stub_closers()[h % stub_closers().size()], true);
    }
    if (prompt.find("You are an expert rater meticulously evaluating") != std::string::npos) {
        return stub_judge_json(h, count_turns_after(prompt, ""));
    }
    if (prompt.find("your role is that of a forensic analyst") != std::string::npos) {
        return h % 2 == 0 ? "human" : "simulation";
    }
    if (prompt.find("You are an unhelpful and confusing shopping assistant") != std::string::npos) {
        return stub_unhelpful_agent_lines()[h % stub_unhelpful_agent_lines().size()];
    }
    if (prompt.find("You are a helpful shopping assistant") != std::string::npos) {
        return stub_agent_lines()[h % stub_agent_lines().size()];
    }
    return "OK";
}

AnnotationOutcome annotate_corpus(const Corpus& corpus, const JudgeRunner& judge) {
    AnnotationOutcome outcome;
    if (judge.mode == JudgeMode::rule) {
        for (const auto& c : corpus.conversations)
            outcome.annotations[c.id] = rule_judge(c);
        return outcome;
    }
    if (judge.provider == nullptr) throw Error("annotate_corpus: llm mode needs a provider");

    const std::size_t jobs = std::max<std::size_t>(1, judge.jobs);
    struct WorkerResult {
        std::map<std::string, JudgeAnnotation> annotations;
        std::vector<Diagnostic> diagnostics;
    };
    auto work = [&](std::size_t begin, std::size_t end) {
        WorkerResult r;
        for (std::size_t i = begin; i < end; ++i) {
            const Conversation& c = corpus.conversations[i];
            try {
                r.annotations[c.id] =
                    annotate(c, *judge.provider, judge.options, judge.store).annotation;
            } catch (const std::exception& e) {
                r.diagnostics.push_back({c.id, e.what()});
            }
        }
        return r;
    };

    if (jobs == 1 || corpus.size() < 2) {
        WorkerResult r = work(0, corpus.size());
        outcome.annotations = std::move(r.annotations);
        outcome.diagnostics = std::move(r.diagnostics);
        return outcome;
    }
    std::vector<std::future<WorkerResult>> futures;
    const std::size_t chunk = (corpus.size() + jobs - 1) / jobs;
    for (std::size_t begin = 0; begin < corpus.size(); begin += chunk) {
        const std::size_t end = std::min(corpus.size(), begin + chunk);
        futures.push_back(std::async(std::launch::async, work, begin, end));
    }
    for (auto& f : futures) {
        WorkerResult r = f.get();
        outcome.annotations.merge(r.annotations);
        for (auto& d : r.diagnostics) outcome.diagnostics.push_back(std::move(d));
    }
    return outcome;
}

ChiSquareRatingsResult chi_square_ratings_preset(const Corpus& corpus) {
    ChiSquareRatingsResult result;
    // row 0 = good, row 1 = bad
    std::array<std::array<double, 2>, 2> frustration{};
    std::array<std::array<double, 2>, 2> satisfaction{};
    std::array<std::array<double, 2>, 2> found{};
    for (const auto& c : corpus.conversations) {
        std::size_t row;
        if (c.condition == AgentCondition::good) row = 0;
        else if (c.condition == AgentCondition::bad) row = 1;
        else continue;
        for (const auto& t : c.turns) {
            if (!t.turn_ratings) continue;
            const auto& e = t.turn_ratings->emotions;
            frustration[row][e.contains("Frustrated") ? 0 : 1] += 1;
            satisfaction[row][e.contains("Satisfied") ? 0 : 1] += 1;
        }
        if (c.task_ratings && c.task_ratings->found_product)
            found[row][*c.task_ratings->found_product ? 0 : 1] += 1;
    }
    auto to_table = [](const std::array<std::array<double, 2>, 2>& t) {
        return std::vector<std::vector<double>>{{t[0][0], t[0][1]}, {t[1][0], t[1][1]}};
    };
    result.frustration_table = frustration;
    result.satisfaction_table = satisfaction;
    result.found_table = found;
    result.frustration = stats::chi_square(to_table(frustration));
    result.satisfaction = stats::chi_square(to_table(satisfaction));
    result.found_product = stats::chi_square(to_table(found));
    const double good_answered = found[0][0] + found[0][1];
    const double bad_answered = found[1][0] + found[1][1];
    result.acceptance_rate_good = found[0][0] / good_answered;
    result.acceptance_rate_bad = found[1][0] / bad_answered;
    result.acceptance_drop = result.acceptance_rate_good - result.acceptance_rate_bad;
    return result;
}

namespace {

bool is_integer_metric(std::string_view name) { return name != "Num user words"; }

HistogramData make_histogram(const std::string& set_name, const std::string& metric,
                             const std::vector<double>& values) {
    HistogramData h;
    h.set_name = set_name;
    h.metric = metric;
    if (values.empty()) return h;
    if (is_integer_metric(metric)) {
        std::map<long long, std::size_t> bins;
        for (double v : values) bins[static_cast<long long>(std::llround(v))] += 1;
        for (const auto& [edge, count] : bins)
            h.bins.emplace_back(static_cast<double>(edge), count);
        return h;
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (lo == hi) {
        h.bins.emplace_back(lo, values.size());
        return h;
    }
    constexpr int kBins = 10;
    const double width = (hi - lo) / kBins;
    std::array<std::size_t, kBins> counts{};
    for (double v : values) {
        int idx = static_cast<int>((v - lo) / width);
        if (idx >= kBins) idx = kBins - 1;
        counts[idx] += 1;
    }
    for (int i = 0; i < kBins; ++i) h.bins.emplace_back(lo + i * width, counts[i]);
    return h;
}

} // namespace

std::vector<HistogramData> sample_set_histograms(const SampleSet& set) {
    std::vector<HistogramData> out;
    std::vector<std::string> names(kAlignmentMetricNames.begin(), kAlignmentMetricNames.end());
    names.insert(names.end(), kExperienceMetricNames.begin(), kExperienceMetricNames.end());
    for (const auto& name : names) {
        std::vector<double> values;
        values.reserve(set.samples.size());
        for (const auto& s : set.samples) values.push_back(metric_value(s, name));
        out.push_back(make_histogram(set.name, name, values));
    }
    return out;
}

Report run_plsa(const Corpus& human_set, const Corpus& sim_set,
                const std::map<std::string, JudgeAnnotation>& annotations, std::string name) {
    Report report;
    report.experiment_name = std::move(name);

    SampleSetResult humans = build_sample_set(human_set, annotations, "human");
    SampleSetResult sims = build_sample_set(sim_set, annotations, "simulated");
    for (auto& d : humans.skipped) report.diagnostics.push_back(std::move(d));
    for (auto& d : sims.skipped) report.diagnostics.push_back(std::move(d));
    if (humans.set.samples.empty() || sims.set.samples.empty())
        throw Error("run_plsa: a sample set is empty after annotation filtering");

    std::vector<std::string> names(kAlignmentMetricNames.begin(), kAlignmentMetricNames.end());
    AlignmentTable table;
    table.title = report.experiment_name;
    table.rows = stats::align(metric_table(humans.set, names), metric_table(sims.set, names), names);
    report.alignment_tables.push_back(std::move(table));

    for (auto& h : sample_set_histograms(humans.set)) report.histograms.push_back(std::move(h));
    for (auto& h : sample_set_histograms(sims.set)) report.histograms.push_back(std::move(h));

    report.provenance.notes.push_back("human sample size " +
                                      std::to_string(humans.set.samples.size()));
    report.provenance.notes.push_back("simulated sample size " +
                                      std::to_string(sims.set.samples.size()));
    return report;
}

GenerationOutcome generate_conversations(const Catalog& catalog, const CorpusRetrievalIndex* pool,
                                         TextProvider& sim_provider, TextProvider& agent_provider,
                                         const GenerationSpec& spec) {
    if (spec.count < 1) throw Error("generate_conversations: count must be >= 1");
    if (spec.mode == SimMode::icl && pool == nullptr)
        throw Error("generate_conversations: icl mode requires a conditioning pool");
    if (catalog.empty()) throw Error("generate_conversations: empty catalog");

    const AgentProfile profile =
        spec.condition == AgentCondition::bad ? AgentProfile::bad() : AgentProfile::good();
    const CatalogIndex index(catalog, profile.retrieval_mode);
    const std::vector<SimTask> tasks = default_tasks();
    std::mt19937_64 rng(spec.seed);

    GenerationOutcome outcome;
    for (std::size_t i = 0; i < spec.count; ++i) {
        const SimTask& task = tasks[bounded_uint(rng, tasks.size())];
        DialogOptions options;
        options.max_turns = spec.max_turns;
        options.sim.mode = spec.mode;
        options.sim.k = spec.k;
        options.simulator_name = spec.simulator_name;
        options.category_id = task_category_short(task);
        options.conversation_id = spec.simulator_name + ":" + std::to_string(i);

        DialogResult result =
            run_dialog(sim_provider, agent_provider, pool, profile, task, index, options);
        for (auto& d : result.diagnostics)
            outcome.diagnostics.push_back({options.conversation_id, std::move(d)});
        if (result.conversation.turns.empty()) {
            outcome.diagnostics.push_back({options.conversation_id, "empty conversation skipped"});
            continue;
        }
        outcome.corpus.conversations.push_back(std::move(result.conversation));
    }
    return outcome;
}

Report run_counterfactual(const Corpus& humans, const Catalog& catalog,
                          const CounterfactualSpec& spec, TextProvider& sim_provider,
                          TextProvider& agent_provider, const JudgeRunner& judge,
                          Corpus* generated_out) {
    if (spec.count < 1) throw Error("run_counterfactual: count must be >= 1");
    if (spec.train_condition == spec.test_condition)
        throw Error("run_counterfactual: train and test conditions must differ");

    const ConditionSplit split = split_by_condition(humans);
    const Corpus& train_pool =
        spec.train_condition == AgentCondition::good ? split.good : split.bad;
    const Corpus& test_humans =
        spec.test_condition == AgentCondition::good ? split.good : split.bad;
    if (train_pool.empty()) throw Error("run_counterfactual: empty conditioning pool");
    if (test_humans.empty()) throw Error("run_counterfactual: no test-condition human data");

    std::unique_ptr<CorpusRetrievalIndex> pool;
    if (spec.mode == SimMode::icl)
        pool = std::make_unique<CorpusRetrievalIndex>(CorpusRetrievalIndex::build(train_pool));

    std::string sim_name = spec.simulator_name;
    if (sim_name.empty())
        sim_name = std::string(to_string(spec.mode)) + "_" + to_string(spec.train_condition);

    GenerationSpec gen;
    gen.mode = spec.mode;
    gen.condition = spec.test_condition;
    gen.count = spec.count;
    gen.max_turns = spec.max_turns;
    gen.seed = spec.seed;
    gen.simulator_name = sim_name;
    GenerationOutcome generated =
        generate_conversations(catalog, pool.get(), sim_provider, agent_provider, gen);
    if (generated.corpus.empty()) throw Error("run_counterfactual: no conversations generated");

    AnnotationOutcome human_notes = annotate_corpus(test_humans, judge);
    AnnotationOutcome sim_notes = annotate_corpus(generated.corpus, judge);
    std::map<std::string, JudgeAnnotation> annotations = std::move(human_notes.annotations);
    annotations.merge(sim_notes.annotations);

    Report report = run_plsa(test_humans, generated.corpus, annotations,
                             "counterfactual_" + std::string(to_string(spec.train_condition)) +
                                 "_to_" + to_string(spec.test_condition));
    for (auto& d : generated.diagnostics) report.diagnostics.push_back(std::move(d));
    for (auto& d : human_notes.diagnostics) report.diagnostics.push_back(std::move(d));
    for (auto& d : sim_notes.diagnostics) report.diagnostics.push_back(std::move(d));

    ConditioningAudit audit;
    audit.train_condition = to_string(spec.train_condition);
    audit.test_condition = to_string(spec.test_condition);
    audit.pool_size = train_pool.size();
    audit.pool_clean = true;
    for (const auto& c : train_pool.conversations) {
        audit.pool_ids.push_back(c.id);
        if (c.condition != spec.train_condition) audit.pool_clean = false;
    }
    report.conditioning_audit = std::move(audit);

    report.provenance.seed = spec.seed;
    report.provenance.model_names["simulator"] = sim_name;
    report.provenance.prompt_hashes["user_sim"] = sha256_hex(prompts::kUserSimTemplate);
    report.provenance.prompt_hashes["judge"] = sha256_hex(prompts::kJudgeTemplate);
    report.provenance.notes.push_back("generated " +
                                      std::to_string(generated.corpus.size()) + " conversations");
    if (generated_out != nullptr) *generated_out = std::move(generated.corpus);
    return report;
}

namespace {

stats::MetricTable direct_metric_table(const Corpus& corpus) {
    stats::MetricTable table;
    auto& turns = table["Num turns"];
    auto& words = table["Num user words"];
    auto& questions = table["Turns with question"];
    for (const auto& c : corpus.conversations) {
        const DirectMetrics m = direct_metrics(c);
        turns.push_back(static_cast<double>(m.num_turns));
        words.push_back(m.mean_user_words);
        questions.push_back(static_cast<double>(m.user_turns_with_question));
    }
    return table;
}

} // namespace

Report run_human_vs_human(const Corpus& corpus, std::size_t n,
                          std::span<const std::uint64_t> seeds,
                          const std::map<std::string, JudgeAnnotation>* annotations,
                          SimilarityThresholds thresholds) {
    if (seeds.empty()) throw Error("run_human_vs_human: no seeds");
    Report report;
    report.experiment_name = "human_vs_human_n" + std::to_string(n);
    HumanVsHumanResult result;
    result.thresholds = thresholds;

    std::vector<std::string> direct_names(kDirectMetricNames.begin(), kDirectMetricNames.end());
    std::vector<std::string> full_names(kAlignmentMetricNames.begin(),
                                        kAlignmentMetricNames.end());
    for (const std::uint64_t seed : seeds) {
        auto [a, b] = sample_disjoint(corpus, n, seed);
        HumanVsHumanSeedResult seed_result;
        seed_result.seed = seed;
        seed_result.rows =
            stats::align(direct_metric_table(a), direct_metric_table(b), direct_names);
        seed_result.all_pass = true;
        for (const auto& row : seed_result.rows) {
            const bool pass =
                row.mwu.p_value > thresholds.mwu_p_min && row.ks.statistic < thresholds.ks_max;
            if (pass) result.passes_by_metric[row.metric_name] += 1;
            else seed_result.all_pass = false;
        }
        if (annotations != nullptr) {
            try {
                SampleSetResult sa = build_sample_set(a, *annotations, "humans_1");
                SampleSetResult sb = build_sample_set(b, *annotations, "humans_2");
                if (sa.skipped.empty() && sb.skipped.empty()) {
                    auto rows = stats::align(metric_table(sa.set, full_names),
                                             metric_table(sb.set, full_names), full_names);
                    for (auto& row : rows) seed_result.rows.push_back(std::move(row));
                } else {
                    report.diagnostics.push_back(
                        {"seed " + std::to_string(seed), "annotations incomplete; full table skipped"});
                }
            } catch (const std::exception& e) {
                report.diagnostics.push_back({"seed " + std::to_string(seed), e.what()});
            }
        }
        result.per_seed.push_back(std::move(seed_result));
    }
    report.human_vs_human = std::move(result);
    return report;
}

Report run_judge_validation(const Corpus& corpus,
                            const std::map<std::string, JudgeAnnotation>& annotations,
                            const std::map<std::string, ThirdPersonLabels>* third_person) {
    Report report;
    report.experiment_name = "judge_validation";
    JudgeValidationResult result;

    std::vector<int> judge_sat, judge_fru, fp_sat, fp_fru;
    std::vector<std::string> judge_acc, fp_acc;
    std::vector<int> judge_sat_3p, judge_fru_3p, tp_sat, tp_fru;
    for (const auto& c : corpus.conversations) {
        auto it = annotations.find(c.id);
        if (it == annotations.end()) {
            report.diagnostics.push_back({c.id, "no annotation"});
            continue;
        }
        const FirstPersonRatings fp = first_person_ratings(c);
        if (fp.has_rated_turns) {
            judge_sat.push_back(it->second.user_satisfaction);
            judge_fru.push_back(it->second.user_frustration_annoyance);
            fp_sat.push_back(fp.satisfaction);
            fp_fru.push_back(fp.frustration);
            if (fp.acceptance) {
                judge_acc.push_back(it->second.recommendation_accepted ? "yes" : "no");
                fp_acc.push_back(*fp.acceptance ? "yes" : "no");
            }
        }
        if (third_person != nullptr) {
            auto tp = third_person->find(c.id);
            if (tp != third_person->end()) {
                judge_sat_3p.push_back(it->second.user_satisfaction);
                judge_fru_3p.push_back(it->second.user_frustration_annoyance);
                tp_sat.push_back(tp->second.satisfaction);
                tp_fru.push_back(tp->second.frustration);
            }
        }
    }
    if (fp_sat.size() < 2)
        throw Error("run_judge_validation: fewer than two first-person-rated conversations");

    result.conversations_used = fp_sat.size();
    result.tau_satisfaction_first_person = kendall_agreement(judge_sat, fp_sat);
    result.tau_frustration_first_person = kendall_agreement(judge_fru, fp_fru);
    if (tp_sat.size() >= 2) {
        result.tau_satisfaction_third_person = kendall_agreement(judge_sat_3p, tp_sat);
        result.tau_frustration_third_person = kendall_agreement(judge_fru_3p, tp_fru);
    }

    const std::vector<std::string> ordinal_labels = {"1", "2", "3", "4", "5"};
    auto to_labels = [](const std::vector<int>& v) {
        std::vector<std::string> out;
        out.reserve(v.size());
        for (int x : v) out.push_back(std::to_string(x));
        return out;
    };
    result.satisfaction_confusion =
        confusion_matrix(to_labels(judge_sat), to_labels(fp_sat), ordinal_labels);
    result.frustration_confusion =
        confusion_matrix(to_labels(judge_fru), to_labels(fp_fru), ordinal_labels);
    if (!fp_acc.empty()) {
        const std::vector<std::string> acceptance_labels = {"no", "yes"};
        result.acceptance_confusion = confusion_matrix(judge_acc, fp_acc, acceptance_labels);
        std::size_t agree = 0;
        for (std::size_t i = 0; i < fp_acc.size(); ++i)
            if (fp_acc[i] == judge_acc[i]) ++agree;
        result.acceptance_accuracy = static_cast<double>(agree) / fp_acc.size();
    }
    report.judge_validation = std::move(result);
    return report;
}

namespace {

json to_json(const stats::TestResult& r) {
    return json{{"statistic", r.statistic},
                {"p_value", r.p_value},
                {"method", r.method == stats::Method::exact ? "exact" : "asymptotic"}};
}

json to_json(const std::vector<stats::AlignmentRow>& rows) {
    json arr = json::array();
    for (const auto& row : rows) {
        arr.push_back(json{{"metric", row.metric_name},
                           {"mwu", to_json(row.mwu)},
                           {"ks", to_json(row.ks)}});
    }
    return arr;
}

json table_to_json(const std::array<std::array<double, 2>, 2>& t) {
    return json::array({json::array({t[0][0], t[0][1]}), json::array({t[1][0], t[1][1]})});
}

json matrix_to_json(const std::vector<std::vector<std::size_t>>& m) {
    json arr = json::array();
    for (const auto& row : m) arr.push_back(row);
    return arr;
}

} // namespace

json to_json(const Report& report) {
    json j;
    j["experiment_name"] = report.experiment_name;
    json tables = json::array();
    for (const auto& t : report.alignment_tables)
        tables.push_back(json{{"title", t.title}, {"rows", to_json(t.rows)}});
    j["alignment_tables"] = tables;

    json histograms = json::array();
    for (const auto& h : report.histograms) {
        json bins = json::array();
        for (const auto& [edge, count] : h.bins)
            bins.push_back(json{{"lower", edge}, {"count", count}});
        histograms.push_back(json{{"set", h.set_name}, {"metric", h.metric}, {"bins", bins}});
    }
    j["histograms"] = histograms;

    if (report.chi_square_ratings) {
        const auto& c = *report.chi_square_ratings;
        j["chi_square_ratings"] = {
            {"frustration", to_json(c.frustration)},
            {"satisfaction", to_json(c.satisfaction)},
            {"found_product", to_json(c.found_product)},
            {"frustration_table", table_to_json(c.frustration_table)},
            {"satisfaction_table", table_to_json(c.satisfaction_table)},
            {"found_table", table_to_json(c.found_table)},
            {"acceptance_rate_good", c.acceptance_rate_good},
            {"acceptance_rate_bad", c.acceptance_rate_bad},
            {"acceptance_drop", c.acceptance_drop},
        };
    }
    if (report.judge_validation) {
        const auto& v = *report.judge_validation;
        json jv;
        auto put_tau = [&jv](const char* key, const std::optional<double>& tau) {
            if (tau) jv[key] = *tau;
            else jv[key] = nullptr;
        };
        put_tau("tau_satisfaction_first_person", v.tau_satisfaction_first_person);
        put_tau("tau_frustration_first_person", v.tau_frustration_first_person);
        put_tau("tau_satisfaction_third_person", v.tau_satisfaction_third_person);
        put_tau("tau_frustration_third_person", v.tau_frustration_third_person);
        jv["satisfaction_confusion"] = matrix_to_json(v.satisfaction_confusion);
        jv["frustration_confusion"] = matrix_to_json(v.frustration_confusion);
        jv["acceptance_confusion"] = matrix_to_json(v.acceptance_confusion);
        jv["acceptance_accuracy"] = v.acceptance_accuracy;
        jv["conversations_used"] = v.conversations_used;
        j["judge_validation"] = jv;
    }
    if (report.human_vs_human) {
        const auto& h = *report.human_vs_human;
        json seeds = json::array();
        for (const auto& s : h.per_seed) {
            seeds.push_back(json{{"seed", s.seed}, {"all_pass", s.all_pass},
                                 {"rows", to_json(s.rows)}});
        }
        j["human_vs_human"] = {{"per_seed", seeds},
                               {"passes_by_metric", h.passes_by_metric},
                               {"thresholds",
                                {{"mwu_p_min", h.thresholds.mwu_p_min},
                                 {"ks_max", h.thresholds.ks_max}}}};
    }
    if (report.conditioning_audit) {
        const auto& a = *report.conditioning_audit;
        j["conditioning_audit"] = {{"train_condition", a.train_condition},
                                   {"test_condition", a.test_condition},
                                   {"pool_size", a.pool_size},
                                   {"pool_clean", a.pool_clean},
                                   {"pool_ids", a.pool_ids}};
    }
    json diags = json::array();
    for (const auto& d : report.diagnostics)
        diags.push_back(json{{"where", d.where}, {"message", d.message}});
    j["diagnostics"] = diags;
    j["provenance"] = {{"seed", report.provenance.seed},
                       {"model_names", report.provenance.model_names},
                       {"prompt_hashes", report.provenance.prompt_hashes},
                       {"cache_hits", report.provenance.cache_hits},
                       {"notes", report.provenance.notes}};
    return j;
}

namespace {

stats::TestResult test_result_from_json(const json& j) {
    stats::TestResult r;
    r.statistic = j.at("statistic").get<double>();
    r.p_value = j.at("p_value").get<double>();
    r.method = j.value("method", "asymptotic") == "exact" ? stats::Method::exact
                                                          : stats::Method::asymptotic;
    return r;
}

std::vector<stats::AlignmentRow> rows_from_json(const json& arr) {
    std::vector<stats::AlignmentRow> rows;
    for (const auto& r : arr) {
        stats::AlignmentRow row;
        row.metric_name = r.at("metric").get<std::string>();
        row.mwu = test_result_from_json(r.at("mwu"));
        row.ks = test_result_from_json(r.at("ks"));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::array<std::array<double, 2>, 2> table_from_json(const json& arr) {
    std::array<std::array<double, 2>, 2> t{};
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) t[r][c] = arr.at(r).at(c).get<double>();
    return t;
}

std::vector<std::vector<std::size_t>> matrix_from_json(const json& arr) {
    std::vector<std::vector<std::size_t>> m;
    for (const auto& row : arr) m.push_back(row.get<std::vector<std::size_t>>());
    return m;
}

} // namespace

Report report_from_json(const json& doc) {
    Report report;
    report.experiment_name = doc.value("experiment_name", "");
    for (const auto& t : doc.value("alignment_tables", json::array())) {
        AlignmentTable table;
        table.title = t.value("title", "");
        table.rows = rows_from_json(t.at("rows"));
        report.alignment_tables.push_back(std::move(table));
    }
    for (const auto& h : doc.value("histograms", json::array())) {
        HistogramData hist;
        hist.set_name = h.value("set", "");
        hist.metric = h.value("metric", "");
        for (const auto& b : h.at("bins"))
            hist.bins.emplace_back(b.at("lower").get<double>(), b.at("count").get<std::size_t>());
        report.histograms.push_back(std::move(hist));
    }
    if (doc.contains("chi_square_ratings")) {
        const json& c = doc["chi_square_ratings"];
        ChiSquareRatingsResult r;
        r.frustration = test_result_from_json(c.at("frustration"));
        r.satisfaction = test_result_from_json(c.at("satisfaction"));
        r.found_product = test_result_from_json(c.at("found_product"));
        r.frustration_table = table_from_json(c.at("frustration_table"));
        r.satisfaction_table = table_from_json(c.at("satisfaction_table"));
        r.found_table = table_from_json(c.at("found_table"));
        r.acceptance_rate_good = c.at("acceptance_rate_good").get<double>();
        r.acceptance_rate_bad = c.at("acceptance_rate_bad").get<double>();
        r.acceptance_drop = c.at("acceptance_drop").get<double>();
        report.chi_square_ratings = std::move(r);
    }
    if (doc.contains("judge_validation")) {
        const json& v = doc["judge_validation"];
        JudgeValidationResult r;
        auto get_tau = [&v](const char* key) -> std::optional<double> {
            if (!v.contains(key) || v[key].is_null()) return std::nullopt;
            return v[key].get<double>();
        };
        r.tau_satisfaction_first_person = get_tau("tau_satisfaction_first_person");
        r.tau_frustration_first_person = get_tau("tau_frustration_first_person");
        r.tau_satisfaction_third_person = get_tau("tau_satisfaction_third_person");
        r.tau_frustration_third_person = get_tau("tau_frustration_third_person");
        r.satisfaction_confusion = matrix_from_json(v.at("satisfaction_confusion"));
        r.frustration_confusion = matrix_from_json(v.at("frustration_confusion"));
        r.acceptance_confusion = matrix_from_json(v.at("acceptance_confusion"));
        r.acceptance_accuracy = v.at("acceptance_accuracy").get<double>();
        r.conversations_used = v.at("conversations_used").get<std::size_t>();
        report.judge_validation = std::move(r);
    }
    if (doc.contains("human_vs_human")) {
        const json& h = doc["human_vs_human"];
        HumanVsHumanResult r;
        for (const auto& s : h.at("per_seed")) {
            HumanVsHumanSeedResult seed;
            seed.seed = s.at("seed").get<std::uint64_t>();
            seed.all_pass = s.at("all_pass").get<bool>();
            seed.rows = rows_from_json(s.at("rows"));
            r.per_seed.push_back(std::move(seed));
        }
        r.passes_by_metric =
            h.at("passes_by_metric").get<std::map<std::string, std::size_t>>();
        r.thresholds.mwu_p_min = h.at("thresholds").at("mwu_p_min").get<double>();
        r.thresholds.ks_max = h.at("thresholds").at("ks_max").get<double>();
        report.human_vs_human = std::move(r);
    }
    if (doc.contains("conditioning_audit")) {
        const json& a = doc["conditioning_audit"];
        ConditioningAudit audit;
        audit.train_condition = a.value("train_condition", "");
        audit.test_condition = a.value("test_condition", "");
        audit.pool_size = a.value("pool_size", std::size_t{0});
        audit.pool_clean = a.value("pool_clean", false);
        audit.pool_ids = a.value("pool_ids", std::vector<std::string>{});
        report.conditioning_audit = std::move(audit);
    }
    for (const auto& d : doc.value("diagnostics", json::array()))
        report.diagnostics.push_back({d.value("where", ""), d.value("message", "")});
    if (doc.contains("provenance")) {
        const json& p = doc["provenance"];
        report.provenance.seed = p.value("seed", std::uint64_t{0});
        report.provenance.model_names =
            p.value("model_names", std::map<std::string, std::string>{});
        report.provenance.prompt_hashes =
            p.value("prompt_hashes", std::map<std::string, std::string>{});
        report.provenance.cache_hits = p.value("cache_hits", std::size_t{0});
        report.provenance.notes = p.value("notes", std::vector<std::string>{});
    }
    return report;
}

std::map<std::string, JudgeAnnotation> load_annotations(const std::filesystem::path& dir) {
    std::map<std::string, JudgeAnnotation> out;
    if (!std::filesystem::is_directory(dir))
        throw Error("annotation directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.contains("conversation_id") || !doc.contains("annotation"))
            continue;
        try {
            out[doc["conversation_id"].get<std::string>()] =
                parse_judge_output(doc["annotation"].dump()).annotation;
        } catch (const std::exception&) {
            // unreadable documents are skipped; callers see them as missing
        }
    }
    return out;
}

namespace {

std::string slug(std::string_view s) {
    std::string out;
    for (char c : s) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) out.push_back(static_cast<char>(std::tolower(uc)));
        else if (!out.empty() && out.back() != '-') out.push_back('-');
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::filesystem::path>& written) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report file: " + path.string());
    out << content;
    written.push_back(path);
}

std::string alignment_csv(const std::vector<stats::AlignmentRow>& rows) {
    std::string out = "metric,mwu_p,ks_stat,mwu_statistic,mwu_method\n";
    for (const auto& row : rows) {
        out += row.metric_name + ',' + fmt(row.mwu.p_value) + ',' + fmt(row.ks.statistic) + ',' +
               fmt(row.mwu.statistic) + ',' +
               (row.mwu.method == stats::Method::exact ? "exact" : "asymptotic") + '\n';
    }
    return out;
}

std::string alignment_markdown(const AlignmentTable& table) {
    std::string out = "### " + table.title + "\n\n";
    out += "| Metric | MWU p | KS stat |\n|---|---|---|\n";
    for (const auto& row : table.rows)
        out += "| " + row.metric_name + " | " + fmt(row.mwu.p_value, "%.3f") + " | " +
               fmt(row.ks.statistic, "%.3f") + " |\n";
    out += '\n';
    return out;
}

} // namespace

std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::set<std::string>& formats,
                                               const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    if (formats.contains("json"))
        write_file(dir / "report.json", to_json(report).dump(2) + "\n", written);

    if (formats.contains("csv")) {
        for (const auto& table : report.alignment_tables)
            write_file(dir / ("align_" + slug(table.title) + ".csv"), alignment_csv(table.rows),
                       written);
        for (const auto& h : report.histograms) {
            std::string out = "bin_lower,count\n";
            for (const auto& [edge, count] : h.bins)
                out += fmt(edge) + ',' + std::to_string(count) + '\n';
            write_file(dir / ("hist_" + slug(h.set_name) + "_" + slug(h.metric) + ".csv"), out,
                       written);
        }
        if (report.chi_square_ratings) {
            const auto& c = *report.chi_square_ratings;
            std::string out = "analysis,statistic,p_value\n";
            out += "frustration," + fmt(c.frustration.statistic) + ',' +
                   fmt(c.frustration.p_value) + '\n';
            out += "satisfaction," + fmt(c.satisfaction.statistic) + ',' +
                   fmt(c.satisfaction.p_value) + '\n';
            out += "found_product," + fmt(c.found_product.statistic) + ',' +
                   fmt(c.found_product.p_value) + '\n';
            out += "acceptance_rate_good," + fmt(c.acceptance_rate_good) + ",\n";
            out += "acceptance_rate_bad," + fmt(c.acceptance_rate_bad) + ",\n";
            out += "acceptance_drop," + fmt(c.acceptance_drop) + ",\n";
            write_file(dir / "chi_square_ratings.csv", out, written);
        }
        if (report.human_vs_human) {
            std::string out = "seed,metric,mwu_p,ks_stat,pass\n";
            const auto& t = report.human_vs_human->thresholds;
            for (const auto& s : report.human_vs_human->per_seed) {
                for (const auto& row : s.rows) {
                    const bool pass =
                        row.mwu.p_value > t.mwu_p_min && row.ks.statistic < t.ks_max;
                    out += std::to_string(s.seed) + ',' + row.metric_name + ',' +
                           fmt(row.mwu.p_value) + ',' + fmt(row.ks.statistic) + ',' +
                           (pass ? "1" : "0") + '\n';
                }
            }
            write_file(dir / "human_vs_human.csv", out, written);
        }
        if (report.judge_validation) {
            const auto& v = *report.judge_validation;
            std::string out = "measure,value\n";
            auto put = [&out](const char* name, const std::optional<double>& tau) {
                out += std::string(name) + ',' + (tau ? fmt(*tau) : "undefined") + '\n';
            };
            put("tau_satisfaction_first_person", v.tau_satisfaction_first_person);
            put("tau_frustration_first_person", v.tau_frustration_first_person);
            put("tau_satisfaction_third_person", v.tau_satisfaction_third_person);
            put("tau_frustration_third_person", v.tau_frustration_third_person);
            out += "acceptance_accuracy," + fmt(v.acceptance_accuracy) + '\n';
            out += "conversations_used," + std::to_string(v.conversations_used) + '\n';
            write_file(dir / "judge_validation.csv", out, written);
        }
    }

    if (formats.contains("markdown")) {
        std::string out = "# " + report.experiment_name + "\n\n";
        for (const auto& table : report.alignment_tables) out += alignment_markdown(table);
        if (report.chi_square_ratings) {
            const auto& c = *report.chi_square_ratings;
            out += "### Rating analysis\n\n| Analysis | Statistic | p |\n|---|---|---|\n";
            out += "| Frustration | " + fmt(c.frustration.statistic, "%.3f") + " | " +
                   fmt(c.frustration.p_value, "%.4f") + " |\n";
            out += "| Satisfaction | " + fmt(c.satisfaction.statistic, "%.3f") + " | " +
                   fmt(c.satisfaction.p_value, "%.4f") + " |\n";
            out += "| Found product | " + fmt(c.found_product.statistic, "%.3f") + " | " +
                   fmt(c.found_product.p_value, "%.4f") + " |\n\n";
            out += "Acceptance rate good " + fmt(c.acceptance_rate_good, "%.3f") + ", bad " +
                   fmt(c.acceptance_rate_bad, "%.3f") + ", drop " +
                   fmt(c.acceptance_drop, "%.3f") + ".\n\n";
        }
        if (report.human_vs_human) {
            out += "### Human vs human\n\n| Seed | All direct metrics pass |\n|---|---|\n";
            for (const auto& s : report.human_vs_human->per_seed)
                out += "| " + std::to_string(s.seed) + " | " + (s.all_pass ? "yes" : "no") + " |\n";
            out += '\n';
        }
        if (report.judge_validation) {
            const auto& v = *report.judge_validation;
            out += "### Judge validation\n\n";
            if (v.tau_satisfaction_first_person)
                out += "Kendall tau (satisfaction, vs first person): " +
                       fmt(*v.tau_satisfaction_first_person, "%.3f") + "\n\n";
            if (v.tau_frustration_first_person)
                out += "Kendall tau (frustration, vs first person): " +
                       fmt(*v.tau_frustration_first_person, "%.3f") + "\n\n";
            out += "Acceptance accuracy: " + fmt(v.acceptance_accuracy, "%.3f") + "\n\n";
        }
        if (report.conditioning_audit) {
            const auto& a = *report.conditioning_audit;
            out += "### Conditioning provenance\n\nTrain condition: " + a.train_condition +
                   "; test condition: " + a.test_condition + "; pool size " +
                   std::to_string(a.pool_size) + "; pool clean: " +
                   (a.pool_clean ? "yes" : "no") + ".\n\n";
        }
        out += "Diagnostics: " + std::to_string(report.diagnostics.size()) + "\n";
        write_file(dir / "report.md", out, written);
    }
    return written;
}

} // namespace simfid
