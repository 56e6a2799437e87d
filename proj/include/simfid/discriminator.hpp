#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "simfid/corpus.hpp"
#include "simfid/provider.hpp"

namespace simfid {

enum class ConvLabel { human, simulation };

const char* to_string(ConvLabel label);

struct LabeledConversation {
    Conversation conversation;
    ConvLabel label;
};

// User-side tokens only, lowercased, split on non-alphanumeric characters,
// concatenated in turn order.
std::vector<std::string> tokenize(const Conversation& conversation);

// Unigram+bigram features of a token stream (bigrams joined with a space).
std::vector<std::string> ngram_features(const std::vector<std::string>& tokens);

// Two-class multinomial model over unigram+bigram counts with additive-alpha
// smoothing. Per class, the smoothed probabilities over the vocabulary plus
// one unseen bucket sum to 1.
class DiscriminatorModel {
public:
    static constexpr std::size_t kHuman = 0;
    static constexpr std::size_t kSimulation = 1;

    double alpha = 1.0;
    std::array<double, 2> class_documents{0.0, 0.0};
    std::array<std::int64_t, 2> total_counts{0, 0};
    std::map<std::string, std::array<std::int64_t, 2>> feature_counts;

    std::size_t vocabulary_size() const { return feature_counts.size(); }
    double log_prior(std::size_t cls) const;
    // log P(feature | class); unseen features share one smoothed bucket
    double log_prob(const std::string& feature, std::size_t cls) const;
    double log_unseen(std::size_t cls) const;
};

// Throws when either class is absent.
DiscriminatorModel train(std::span<const LabeledConversation> corpus, double alpha = 1.0);

// Posterior probability that the conversation's user side is human,
// computed in log space. An empty token stream returns the class prior.
double hls(const DiscriminatorModel& model, const Conversation& conversation);

struct DiscriminatorMetrics {
    double accuracy = 0.0;
    double precision = 0.0;   // positive class = simulation
    double recall = 0.0;
    double f1 = 0.0;
    double specificity = 0.0; // human-class recall
    double avg_hls = 0.0;     // mean HLS over simulated-class members
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Predicts human iff HLS >= threshold.
DiscriminatorMetrics evaluate(const DiscriminatorModel& model,
                              std::span<const LabeledConversation> testset,
                              double threshold = 0.5);

// Confusion metrics from an explicit prediction list; hls_scores (one per
// element) feed avg_hls and may be empty when unavailable.
DiscriminatorMetrics metrics_from_predictions(std::span<const ConvLabel> predicted,
                                              std::span<const ConvLabel> reference,
                                              std::span<const double> hls_scores);

// Accuracy on a fixed held-out 20% split as the class-balanced training
// subset grows. Deterministic per seed; duplicate sizes reuse the same
// subset.
std::vector<std::pair<std::size_t, double>> learning_curve(
    std::span<const LabeledConversation> corpus, std::span<const std::size_t> sizes,
    std::uint64_t seed, double alpha = 1.0);

// Trains human-vs-A and evaluates on human-vs-B: both sides are split 80/20
// with the given seed; training uses the 80% halves of humans and A,
// evaluation the held-out 20% halves of humans and B.
DiscriminatorMetrics cross_generalization(const Corpus& train_sim, const Corpus& test_sim,
                                          const Corpus& humans, std::uint64_t seed,
                                          double alpha = 1.0);

struct PromptedDiscriminatorOptions {
    std::string model_name = "discriminator";
    double temperature = 0.0;
    int max_output_tokens = 16;
    int max_retries = 3;
};

// Zero-shot forensic classification through a text provider; parses the
// final word of the reply (human/simulation, case-insensitive).
ConvLabel prompted_discriminate(const Conversation& conversation, TextProvider& provider,
                                const PromptedDiscriminatorOptions& options = {});

// Versioned JSON persistence; a loaded model reproduces identical HLS values.
void save_model(const DiscriminatorModel& model, const std::filesystem::path& path);
DiscriminatorModel load_model(const std::filesystem::path& path);

// Plain-text labeled transcript blocks ("Conversation:" ... "Label: x").
std::vector<LabeledConversation> read_labeled_transcripts(const std::filesystem::path& path);
void write_labeled_transcripts(std::span<const LabeledConversation> corpus,
                               const std::filesystem::path& path);

} // namespace simfid
