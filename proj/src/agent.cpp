#include "simfid/agent.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "simfid/prompts.hpp"
#include "simfid/text.hpp"

namespace simfid {

using nlohmann::json;

namespace {

std::optional<std::string> opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

} // namespace

CatalogLoadResult load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open catalog file: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<json> records;
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos) {
        if (content[first] == '[') {
            json doc = json::parse(content);
            for (auto& r : doc) records.push_back(std::move(r));
        } else {
            std::istringstream lines(content);
            std::string line;
            while (std::getline(lines, line)) {
                if (text::trim(line).empty()) continue;
                records.push_back(json::parse(line, nullptr, false));
            }
        }
    }

    CatalogLoadResult result;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string where = path.stem().string() + ":" + std::to_string(i);
        const json& r = records[i];
        if (r.is_discarded() || !r.is_object()) {
            result.diagnostics.push_back({where, "invalid JSON record"});
            continue;
        }
        CatalogItem item;
        if (auto id = opt_string(r, "item_id")) item.item_id = *id;
        if (item.item_id.empty()) {
            result.diagnostics.push_back({where, "missing item_id"});
            continue;
        }
        if (!seen.insert(item.item_id).second) {
            result.diagnostics.push_back({where, "duplicate item_id " + item.item_id});
            continue;
        }
        if (auto title = opt_string(r, "title")) item.title = *title;
        item.description = opt_string(r, "description");
        item.features = opt_string(r, "features");
        item.image_url = opt_string(r, "image_url");
        result.catalog.items.push_back(std::move(item));
    }
    return result;
}

namespace {

std::string item_document(const CatalogItem& item, ItemRetrievalMode mode) {
    std::string doc = item.title;
    if (mode == ItemRetrievalMode::full) {
        if (item.description) {
            doc += ' ';
            doc += *item.description;
        }
        if (item.features) {
            doc += ' ';
            doc += *item.features;
        }
    }
    return doc;
}

} // namespace

CatalogIndex::CatalogIndex(const Catalog& catalog, ItemRetrievalMode mode)
    : items_(catalog.items), mode_(mode) {
    std::vector<TfidfIndex::Doc> docs;
    docs.reserve(items_.size());
    for (const auto& item : items_) docs.push_back({item.item_id, item_document(item, mode)});
    index_ = TfidfIndex::build(std::move(docs));
}

std::vector<CatalogItem> CatalogIndex::retrieve(const std::string& context, std::size_t n) const {
    std::vector<CatalogItem> out;
    for (const auto& hit : index_.query(context, n)) out.push_back(items_[hit.index]);
    return out;
}

std::vector<CatalogItem> retrieve_items(const Catalog& catalog, const std::string& context,
                                        ItemRetrievalMode mode, std::size_t n) {
    if (catalog.empty()) throw Error("retrieve_items: empty catalog");
    return CatalogIndex(catalog, mode).retrieve(context, n);
}

AgentProfile AgentProfile::good() {
    return {AgentCondition::good, std::string(prompts::kHelpfulAgentTemplate),
            ItemRetrievalMode::full, kMaxCarouselSize};
}

AgentProfile AgentProfile::bad() {
    return {AgentCondition::bad, std::string(prompts::kUnhelpfulAgentTemplate),
            ItemRetrievalMode::degraded, kMaxCarouselSize};
}

std::string render_agent_prompt(std::span<const Turn> history,
                                const std::string& current_user_utterance,
                                std::span<const CatalogItem> items, const AgentProfile& profile) {
    std::ostringstream conversation;
    conversation << prompts::render_transcript(history);
    conversation << "Turn " << history.size() << ":\n";
    conversation << "User Utterance: " << current_user_utterance << '\n';
    conversation << "======\n";
    conversation << "Ranked Product List:\n";
    for (std::size_t i = 0; i < items.size(); ++i)
        conversation << "Item " << i << ": Title: " << items[i].title << '\n';
    return prompts::replace_all(profile.prompt_template, "{conversation}", conversation.str());
}

std::string agent_respond(std::span<const Turn> history, const std::string& current_user_utterance,
                          std::span<const CatalogItem> items, const AgentProfile& profile,
                          TextProvider& provider, const AgentOptions& options) {
    const std::string prompt =
        render_agent_prompt(history, current_user_utterance, items, profile);
    GenerationRequest request{prompt, options.model_name, options.temperature,
                              options.max_output_tokens};
    return provider.generate(request);
}

namespace {

CatalogItemRef to_ref(const CatalogItem& item) {
    CatalogItemRef ref;
    ref.item_id = item.item_id;
    ref.title = item.title;
    ref.description = item.description;
    ref.features = item.features;
    ref.image_url = item.image_url;
    return ref;
}

} // namespace

DialogResult run_dialog(TextProvider& sim_provider, TextProvider& agent_provider,
                        const CorpusRetrievalIndex* pool, const AgentProfile& profile,
                        const SimTask& task, const CatalogIndex& catalog,
                        const DialogOptions& options) {
    if (options.max_turns < 1) throw Error("run_dialog: max_turns must be >= 1");
    DialogResult result;
    Conversation& conv = result.conversation;
    conv.id = options.conversation_id;
    conv.task_id = options.category_id + "_" + to_string(profile.persona);
    conv.condition = profile.persona;
    conv.source = options.simulator_name;

    std::string user_context; // concatenated user utterances for retrieval
    while (conv.turns.size() < options.max_turns) {
        NextTurnResult next;
        try {
            next = next_user_turn(conv.turns, task, sim_provider, options.sim, pool);
        } catch (const std::exception& e) {
            result.diagnostics.push_back(std::string("simulator provider failure: ") + e.what());
            result.aborted = true;
            return result;
        }
        for (auto& d : next.diagnostics) result.diagnostics.push_back(std::move(d));

        const std::string response = text::trim(next.output.response);
        if (next.output.terminate) {
            if (!response.empty())
                conv.turns.push_back({response, "", {}, std::nullopt});
            break;
        }

        user_context += response;
        user_context += ' ';
        const auto items = catalog.retrieve(user_context, profile.carousel_size);

        std::string reply;
        try {
            reply = agent_respond(conv.turns, response, items, profile, agent_provider,
                                  options.agent);
        } catch (const std::exception& e) {
            result.diagnostics.push_back(std::string("agent provider failure: ") + e.what());
            result.aborted = true;
            // keep the partial transcript including the pending user turn
            conv.turns.push_back({response, "", {}, std::nullopt});
            return result;
        }

        Turn turn;
        turn.user_utterance = response;
        turn.assistant_utterance = reply;
        for (const auto& item : items) turn.recommendations.push_back(to_ref(item));
        conv.turns.push_back(std::move(turn));
    }
    if (conv.turns.empty())
        result.diagnostics.push_back("simulator terminated before producing any turn");
    return result;
}

} // namespace simfid
