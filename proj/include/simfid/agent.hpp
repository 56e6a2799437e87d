#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simfid/corpus.hpp"
#include "simfid/provider.hpp"
#include "simfid/retrieval.hpp"
#include "simfid/simulator.hpp"

namespace simfid {

struct CatalogItem {
    std::string item_id; // unique within a catalog
    std::string title;
    std::optional<std::string> description;
    std::optional<std::string> features;
    std::optional<std::string> image_url;
};

struct Catalog {
    std::vector<CatalogItem> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

struct CatalogLoadResult {
    Catalog catalog;
    std::vector<Diagnostic> diagnostics; // duplicate ids, malformed entries
};

// JSON array or one record per line; duplicate item ids keep the first
// occurrence and emit a diagnostic.
CatalogLoadResult load_catalog(const std::filesystem::path& path);

enum class ItemRetrievalMode { full, degraded };

// full indexes title+description+features; degraded indexes the title only.
class CatalogIndex {
public:
    CatalogIndex(const Catalog& catalog, ItemRetrievalMode mode);

    // Top-n by similarity to the context; fewer than n items returns the
    // whole catalog, sorted. Ties break on item_id.
    std::vector<CatalogItem> retrieve(const std::string& context, std::size_t n) const;

    ItemRetrievalMode mode() const { return mode_; }

private:
    TfidfIndex index_;
    std::vector<CatalogItem> items_;
    ItemRetrievalMode mode_;
};

std::vector<CatalogItem> retrieve_items(const Catalog& catalog, const std::string& context,
                                        ItemRetrievalMode mode, std::size_t n);

struct AgentProfile {
    AgentCondition persona = AgentCondition::good;
    std::string prompt_template; // carries the {conversation} placeholder
    ItemRetrievalMode retrieval_mode = ItemRetrievalMode::full;
    std::size_t carousel_size = kMaxCarouselSize;

    static AgentProfile good();
    static AgentProfile bad();
};

struct AgentOptions {
    std::string model_name = "agent";
    double temperature = 0.7;
    int max_output_tokens = 512;
};

// Profile template with the rendered history, the pending user utterance and
// the current ranked item list in the conversation slot.
std::string render_agent_prompt(std::span<const Turn> history,
                                const std::string& current_user_utterance,
                                std::span<const CatalogItem> items, const AgentProfile& profile);

std::string agent_respond(std::span<const Turn> history, const std::string& current_user_utterance,
                          std::span<const CatalogItem> items, const AgentProfile& profile,
                          TextProvider& provider, const AgentOptions& options = {});

struct DialogOptions {
    std::size_t max_turns = 10;
    SimulatorOptions sim;
    AgentOptions agent;
    std::string simulator_name = "prompted";
    std::string category_id = "footwear"; // task_id becomes <category>_<condition>
    std::string conversation_id;
};

struct DialogResult {
    Conversation conversation;
    std::vector<std::string> diagnostics;
    bool aborted = false; // provider failure mid-dialog; transcript is partial
};

// Alternating user-simulator / recommender loop until the simulator
// terminates or max_turns is reached. Each turn records the carousel shown.
DialogResult run_dialog(TextProvider& sim_provider, TextProvider& agent_provider,
                        const CorpusRetrievalIndex* pool, const AgentProfile& profile,
                        const SimTask& task, const CatalogIndex& catalog,
                        const DialogOptions& options);

} // namespace simfid
