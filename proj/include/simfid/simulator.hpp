#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simfid/corpus.hpp"
#include "simfid/provider.hpp"
#include "simfid/retrieval.hpp"

namespace simfid {

struct SimTask {
    // e.g. "footwear (sneakers, shoes, boots, sandals, flats, heels, etc)"
    std::string category_text;
    std::optional<std::string> persona_hint;
};

// Short category form: the text up to the first " (".
std::string task_category_short(const SimTask& task);

// Built-in shopping task list; categories are configurable per experiment.
std::vector<SimTask> default_tasks();

struct UserTurnOutput {
    std::string response;
    bool terminate = false;
};

struct RetrievedExample {
    std::string conversation_id;
    double similarity = 0.0; // in [0,1]
    std::string rendered;    // transcript used as the few-shot block
};

// Retrieval over stored conversations, keyed on concatenated user text by
// default (full transcripts optional). Immutable after build.
class CorpusRetrievalIndex {
public:
    static CorpusRetrievalIndex build(const Corpus& corpus, bool key_on_full_transcript = false);

    std::vector<RetrievedExample> retrieve(std::span<const Turn> history, std::size_t k) const;

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& conversation_ids() const { return ids_; }

private:
    TfidfIndex index_;
    std::vector<std::string> ids_;
    std::vector<std::string> rendered_;
    bool full_transcript_ = false;
};

// The shopping-user template with the task category, optional few-shot
// examples (in descending similarity order) and the rendered history filled
// in. Empty history renders an empty transcript block (opening turn).
std::string render_sim_prompt(std::span<const Turn> history, const SimTask& task,
                              std::span<const RetrievedExample> examples);

// Extracts the Response block (text between "Response:" and the delimiter
// line) and the Terminate flag. Throws on a missing block or flag.
UserTurnOutput parse_sim_output(const std::string& raw);

enum class SimMode { prompted, icl };
const char* to_string(SimMode mode);

struct SimulatorOptions {
    SimMode mode = SimMode::prompted;
    std::size_t k = 3; // ICL retrieval depth
    std::string model_name = "simulator";
    double temperature = 0.7;
    int max_output_tokens = 512;
    int max_format_retries = 3;
};

struct NextTurnResult {
    UserTurnOutput output;
    std::vector<std::string> diagnostics;
};

// Render (with retrieval in ICL mode), generate, parse. Format errors re-ask
// up to max_format_retries times; exhaustion yields terminate=true with a
// diagnostic so batch generation completes. Provider failures propagate.
NextTurnResult next_user_turn(std::span<const Turn> history, const SimTask& task,
                              TextProvider& provider, const SimulatorOptions& options,
                              const CorpusRetrievalIndex* pool = nullptr);

// Convenience form that builds a throwaway index.
std::vector<RetrievedExample> retrieve_similar(std::span<const Turn> history, const Corpus& corpus,
                                               std::size_t k);

} // namespace simfid
