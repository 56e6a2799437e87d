#include "simfid/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "simfid/prompts.hpp"
#include "simfid/text.hpp"

namespace simfid {

using nlohmann::json;

const char* to_string(ConvLabel label) {
    return label == ConvLabel::human ? "human" : "simulation";
}

std::vector<std::string> tokenize(const Conversation& conversation) {
    std::string joined;
    for (const Turn& t : conversation.turns) {
        joined += t.user_utterance;
        joined += ' ';
    }
    return text::alnum_tokens(joined);
}

std::vector<std::string> ngram_features(const std::vector<std::string>& tokens) {
    std::vector<std::string> features = tokens;
    features.reserve(tokens.size() * 2);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
        features.push_back(tokens[i] + " " + tokens[i + 1]);
    return features;
}

double DiscriminatorModel::log_prior(std::size_t cls) const {
    const double total = class_documents[kHuman] + class_documents[kSimulation];
    return std::log(class_documents[cls] / total);
}

double DiscriminatorModel::log_prob(const std::string& feature, std::size_t cls) const {
    auto it = feature_counts.find(feature);
    const double count = it == feature_counts.end() ? 0.0 : static_cast<double>(it->second[cls]);
    const double denom = static_cast<double>(total_counts[cls]) +
                         alpha * (static_cast<double>(vocabulary_size()) + 1.0);
    return std::log((count + alpha) / denom);
}

double DiscriminatorModel::log_unseen(std::size_t cls) const {
    const double denom = static_cast<double>(total_counts[cls]) +
                         alpha * (static_cast<double>(vocabulary_size()) + 1.0);
    return std::log(alpha / denom);
}

DiscriminatorModel train(std::span<const LabeledConversation> corpus, double alpha) {
    if (alpha <= 0.0) throw Error("train: alpha must be > 0");
    DiscriminatorModel model;
    model.alpha = alpha;
    for (const auto& example : corpus) {
        const std::size_t cls = example.label == ConvLabel::human
                                    ? DiscriminatorModel::kHuman
                                    : DiscriminatorModel::kSimulation;
        model.class_documents[cls] += 1.0;
        for (const auto& f : ngram_features(tokenize(example.conversation))) {
            model.feature_counts[f][cls] += 1;
            model.total_counts[cls] += 1;
        }
    }
    if (model.class_documents[0] == 0.0 || model.class_documents[1] == 0.0)
        throw Error("train: need at least one example of each class");
    return model;
}

double hls(const DiscriminatorModel& model, const Conversation& conversation) {
    const auto features = ngram_features(tokenize(conversation));
    double lp_human = model.log_prior(DiscriminatorModel::kHuman);
    double lp_sim = model.log_prior(DiscriminatorModel::kSimulation);
    for (const auto& f : features) {
        lp_human += model.log_prob(f, DiscriminatorModel::kHuman);
        lp_sim += model.log_prob(f, DiscriminatorModel::kSimulation);
    }
    const double m = std::max(lp_human, lp_sim);
    const double denom = std::exp(lp_human - m) + std::exp(lp_sim - m);
    return std::exp(lp_human - m) / denom;
}

DiscriminatorMetrics metrics_from_predictions(std::span<const ConvLabel> predicted,
                                              std::span<const ConvLabel> reference,
                                              std::span<const double> hls_scores) {
    if (predicted.size() != reference.size())
        throw Error("metrics_from_predictions: length mismatch");
    DiscriminatorMetrics m;
    double hls_sum = 0.0;
    std::size_t sim_count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool ref_sim = reference[i] == ConvLabel::simulation;
        const bool pred_sim = predicted[i] == ConvLabel::simulation;
        if (ref_sim && pred_sim) m.tp += 1;
        else if (ref_sim && !pred_sim) m.fn += 1;
        else if (!ref_sim && pred_sim) m.fp += 1;
        else m.tn += 1;
        if (ref_sim) {
            ++sim_count;
            if (i < hls_scores.size()) hls_sum += hls_scores[i];
        }
    }
    const double total = static_cast<double>(predicted.size());
    if (total > 0) m.accuracy = static_cast<double>(m.tp + m.tn) / total;
    if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / (m.tp + m.fp);
    if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / (m.tp + m.fn);
    if (m.precision + m.recall > 0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    if (m.tn + m.fp > 0) m.specificity = static_cast<double>(m.tn) / (m.tn + m.fp);
    if (sim_count > 0 && !hls_scores.empty()) m.avg_hls = hls_sum / static_cast<double>(sim_count);
    return m;
}

DiscriminatorMetrics evaluate(const DiscriminatorModel& model,
                              std::span<const LabeledConversation> testset, double threshold) {
    if (testset.empty()) throw Error("evaluate: empty test set");
    std::vector<ConvLabel> predicted;
    std::vector<ConvLabel> reference;
    std::vector<double> scores;
    predicted.reserve(testset.size());
    for (const auto& example : testset) {
        const double score = hls(model, example.conversation);
        predicted.push_back(score >= threshold ? ConvLabel::human : ConvLabel::simulation);
        reference.push_back(example.label);
        scores.push_back(score);
    }
    return metrics_from_predictions(predicted, reference, scores);
}

namespace {

struct StratifiedSplit {
    std::vector<LabeledConversation> train;
    std::vector<LabeledConversation> test;
};

// Shuffles each class separately and holds out 20% (at least one example
// when the class has two or more).
StratifiedSplit split_80_20(std::span<const LabeledConversation> corpus, std::uint64_t seed) {
    std::vector<std::size_t> humans;
    std::vector<std::size_t> sims;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (corpus[i].label == ConvLabel::human ? humans : sims).push_back(i);
    }
    std::mt19937_64 rng(seed);
    deterministic_shuffle(humans, rng);
    deterministic_shuffle(sims, rng);
    StratifiedSplit split;
    auto divide = [&](const std::vector<std::size_t>& idx) {
        std::size_t held = idx.size() / 5;
        if (held == 0 && idx.size() >= 2) held = 1;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < held ? split.test : split.train).push_back(corpus[idx[i]]);
        }
    };
    divide(humans);
    divide(sims);
    return split;
}

std::vector<LabeledConversation> balanced_subset(const std::vector<LabeledConversation>& pool,
                                                 std::size_t size, std::uint64_t seed) {
    std::vector<std::size_t> humans;
    std::vector<std::size_t> sims;
    for (std::size_t i = 0; i < pool.size(); ++i)
        (pool[i].label == ConvLabel::human ? humans : sims).push_back(i);
    const std::size_t per_human = (size + 1) / 2;
    const std::size_t per_sim = size / 2;
    if (per_human > humans.size() || per_sim > sims.size())
        throw Error("learning_curve: size " + std::to_string(size) +
                    " exceeds the class-balanced training pool");
    std::mt19937_64 rng(seed);
    deterministic_shuffle(humans, rng);
    deterministic_shuffle(sims, rng);
    std::vector<LabeledConversation> subset;
    for (std::size_t i = 0; i < per_human; ++i) subset.push_back(pool[humans[i]]);
    for (std::size_t i = 0; i < per_sim; ++i) subset.push_back(pool[sims[i]]);
    return subset;
}

} // namespace

std::vector<std::pair<std::size_t, double>> learning_curve(
    std::span<const LabeledConversation> corpus, std::span<const std::size_t> sizes,
    std::uint64_t seed, double alpha) {
    const StratifiedSplit split = split_80_20(corpus, seed);
    if (split.test.empty()) throw Error("learning_curve: corpus too small for a held-out split");
    std::vector<std::pair<std::size_t, double>> curve;
    for (std::size_t size : sizes) {
        const auto subset = balanced_subset(split.train, size, seed ^ (size * 0x9e3779b97f4a7c15ULL));
        const DiscriminatorModel model = train(subset, alpha);
        curve.emplace_back(size, evaluate(model, split.test).accuracy);
    }
    return curve;
}

namespace {

std::vector<LabeledConversation> labeled(const Corpus& corpus, ConvLabel label) {
    std::vector<LabeledConversation> out;
    out.reserve(corpus.size());
    for (const auto& c : corpus.conversations) out.push_back({c, label});
    return out;
}

} // namespace

DiscriminatorMetrics cross_generalization(const Corpus& train_sim, const Corpus& test_sim,
                                          const Corpus& humans, std::uint64_t seed, double alpha) {
    if (train_sim.empty() || test_sim.empty())
        throw Error("cross_generalization: empty simulated corpus");
    if (humans.empty()) throw Error("cross_generalization: empty human corpus");

    const auto human_split = split_80_20(labeled(humans, ConvLabel::human), seed);
    const auto train_split = split_80_20(labeled(train_sim, ConvLabel::simulation), seed + 1);
    const auto test_split = split_80_20(labeled(test_sim, ConvLabel::simulation), seed + 2);

    std::vector<LabeledConversation> training = human_split.train;
    training.insert(training.end(), train_split.train.begin(), train_split.train.end());
    const DiscriminatorModel model = train(training, alpha);

    std::vector<LabeledConversation> evaluation = human_split.test;
    evaluation.insert(evaluation.end(), test_split.test.begin(), test_split.test.end());
    return evaluate(model, evaluation);
}

ConvLabel prompted_discriminate(const Conversation& conversation, TextProvider& provider,
                                const PromptedDiscriminatorOptions& options) {
    const std::string prompt =
        prompts::replace_all(std::string(prompts::kForensicTemplate), "{conversation}",
                             prompts::render_transcript(conversation.turns));
    GenerationRequest request{prompt, options.model_name, options.temperature,
                              options.max_output_tokens};
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        const std::string reply = provider.generate(request);
        const auto words = text::alnum_tokens(reply);
        if (!words.empty()) {
            const std::string& last = words.back();
            if (last == "human") return ConvLabel::human;
            if (last == "simulation" || last == "simulated") return ConvLabel::simulation;
        }
    }
    throw Error("prompted_discriminate: no parseable label after " +
                std::to_string(options.max_retries + 1) + " attempts");
}

void save_model(const DiscriminatorModel& model, const std::filesystem::path& path) {
    json doc;
    doc["format"] = "simfid-discriminator";
    doc["version"] = 1;
    doc["alpha"] = model.alpha;
    doc["class_documents"] = model.class_documents;
    doc["total_counts"] = model.total_counts;
    json features = json::object();
    for (const auto& [f, counts] : model.feature_counts) features[f] = counts;
    doc["features"] = features;
    std::ofstream out(path);
    if (!out) throw Error("cannot write model: " + path.string());
    out << doc.dump() << '\n';
}

DiscriminatorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || doc.value("format", "") != "simfid-discriminator")
        throw Error("not a discriminator model file: " + path.string());
    if (doc.value("version", 0) != 1)
        throw Error("unsupported model version in " + path.string());
    DiscriminatorModel model;
    model.alpha = doc.at("alpha").get<double>();
    model.class_documents = doc.at("class_documents").get<std::array<double, 2>>();
    model.total_counts = doc.at("total_counts").get<std::array<std::int64_t, 2>>();
    for (const auto& [f, counts] : doc.at("features").items())
        model.feature_counts[f] = counts.get<std::array<std::int64_t, 2>>();
    return model;
}

namespace {

constexpr std::string_view kBlockSeparator =
    "= - = - = - = - = - = - = - = - = - = - = - = - = - = - = - = - = - = -";

} // namespace

std::vector<LabeledConversation> read_labeled_transcripts(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open transcript file: " + path.string());

    std::vector<LabeledConversation> out;
    Conversation current;
    Turn turn;
    bool in_conversation = false;
    bool have_turn = false;
    std::string* continuation = nullptr;
    std::size_t item_counter = 0;

    auto flush_turn = [&]() {
        if (have_turn) {
            current.turns.push_back(turn);
            turn = Turn{};
            have_turn = false;
        }
        continuation = nullptr;
    };

    std::string line;
    std::size_t block = 0;
    while (std::getline(in, line)) {
        if (line == kBlockSeparator || line == "======") {
            continuation = nullptr;
            continue;
        }
        if (line.starts_with("Conversation:")) {
            flush_turn();
            current = Conversation{};
            current.id = path.stem().string() + ":" + std::to_string(block++);
            in_conversation = true;
            continue;
        }
        if (!in_conversation) continue;
        if (line.starts_with("Turn ")) {
            flush_turn();
            have_turn = true;
            continue;
        }
        if (line.starts_with("User Utterance: ")) {
            turn.user_utterance = line.substr(16);
            continuation = &turn.user_utterance;
            have_turn = true;
            continue;
        }
        if (line.starts_with("Assistant Utterance: ")) {
            turn.assistant_utterance = line.substr(21);
            continuation = &turn.assistant_utterance;
            continue;
        }
        if (line.starts_with("Recommendations:")) {
            continuation = nullptr;
            continue;
        }
        if (line.starts_with("Item ")) {
            const auto title_pos = line.find("Title: ");
            if (title_pos != std::string::npos && turn.recommendations.size() < kMaxCarouselSize) {
                CatalogItemRef item;
                item.item_id = "imported:" + std::to_string(item_counter++);
                item.title = line.substr(title_pos + 7);
                turn.recommendations.push_back(std::move(item));
            }
            continuation = nullptr;
            continue;
        }
        if (line.starts_with("Label: ")) {
            flush_turn();
            const std::string value = text::lowercase(text::trim(line.substr(7)));
            if (current.turns.empty())
                throw Error("labeled transcript block without turns in " + path.string());
            ConvLabel label;
            if (value == "human") label = ConvLabel::human;
            else if (value == "simulation" || value == "simulated") label = ConvLabel::simulation;
            else throw Error("unknown transcript label: " + value);
            current.source = label == ConvLabel::human ? "" : "transcript-import";
            out.push_back({current, label});
            in_conversation = false;
            continue;
        }
        if (continuation != nullptr && !line.empty()) {
            continuation->push_back('\n');
            continuation->append(line);
        }
    }
    return out;
}

void write_labeled_transcripts(std::span<const LabeledConversation> corpus,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write transcript file: " + path.string());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (i > 0) out << '\n' << kBlockSeparator << "\n\n";
        out << prompts::render_labeled_transcript(corpus[i].conversation,
                                                  to_string(corpus[i].label));
    }
}

} // namespace simfid
