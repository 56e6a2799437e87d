#include "simfid/simulator.hpp"

#include <sstream>

#include "simfid/prompts.hpp"
#include "simfid/text.hpp"

namespace simfid {

std::string task_category_short(const SimTask& task) {
    const auto pos = task.category_text.find(" (");
    if (pos == std::string::npos) return task.category_text;
    return task.category_text.substr(0, pos);
}

std::vector<SimTask> default_tasks() {
    return {
        {"footwear (sneakers, shoes, boots, sandals, flats, heels, etc)", std::nullopt},
        {"outerwear (jackets, coats, parkas, vests, etc)", std::nullopt},
        {"activewear (leggings, sports tops, shorts, hoodies, etc)", std::nullopt},
        {"accessories (hats, belts, scarves, bags, etc)", std::nullopt},
    };
}

const char* to_string(SimMode mode) { return mode == SimMode::prompted ? "prompted" : "icl"; }

namespace {

std::string history_user_text(std::span<const Turn> history) {
    std::string joined;
    for (const Turn& t : history) {
        joined += t.user_utterance;
        joined += ' ';
    }
    return joined;
}

} // namespace

CorpusRetrievalIndex CorpusRetrievalIndex::build(const Corpus& corpus,
                                                 bool key_on_full_transcript) {
    if (corpus.empty()) throw Error("retrieval index: empty corpus");
    CorpusRetrievalIndex out;
    out.full_transcript_ = key_on_full_transcript;
    std::vector<TfidfIndex::Doc> docs;
    docs.reserve(corpus.size());
    for (const auto& c : corpus.conversations) {
        out.ids_.push_back(c.id);
        out.rendered_.push_back(prompts::render_transcript(c.turns));
        docs.push_back({c.id, key_on_full_transcript ? out.rendered_.back()
                                                     : history_user_text(c.turns)});
    }
    out.index_ = TfidfIndex::build(std::move(docs));
    return out;
}

std::vector<RetrievedExample> CorpusRetrievalIndex::retrieve(std::span<const Turn> history,
                                                             std::size_t k) const {
    const std::string query = full_transcript_ ? prompts::render_transcript(history)
                                               : history_user_text(history);
    std::vector<RetrievedExample> out;
    for (const auto& hit : index_.query(query, k))
        out.push_back({hit.id, hit.similarity, rendered_[hit.index]});
    return out;
}

std::vector<RetrievedExample> retrieve_similar(std::span<const Turn> history, const Corpus& corpus,
                                               std::size_t k) {
    return CorpusRetrievalIndex::build(corpus).retrieve(history, k);
}

std::string render_sim_prompt(std::span<const Turn> history, const SimTask& task,
                              std::span<const RetrievedExample> examples) {
    std::string block;
    if (task.persona_hint)
        block += "Persona: " + *task.persona_hint + "\n\n";
    if (!examples.empty()) {
        block += "Below are example conversations from real users in similar situations:\n";
        block += "--------------------------------------------------\n";
        for (const auto& example : examples) {
            block += example.rendered;
            block += "--------------------------------------------------\n";
        }
        block += '\n';
    }
    std::string prompt = std::string(prompts::kUserSimTemplate);
    prompt = prompts::replace_all(std::move(prompt), "{category}", task.category_text);
    prompt = prompts::replace_all(std::move(prompt), "{category_short}", task_category_short(task));
    prompt = prompts::replace_all(std::move(prompt), "{examples}", block);
    prompt = prompts::replace_all(std::move(prompt), "{conversation}",
                                  prompts::render_transcript(history));
    return prompt;
}

namespace {

bool is_dash_line(std::string_view line) {
    const std::string t = text::trim(line);
    if (t.size() < 4) return false;
    for (char c : t)
        if (c != '-') return false;
    return true;
}

} // namespace

UserTurnOutput parse_sim_output(const std::string& raw) {
    std::istringstream in(raw);
    std::string line;
    bool seen_response = false;
    bool in_response = false;
    std::vector<std::string> response_lines;
    std::optional<bool> terminate;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string trimmed = text::trim(line);
        if (!seen_response) {
            if (trimmed == "Response:" || trimmed.starts_with("Response:")) {
                seen_response = true;
                in_response = true;
                const auto rest = text::trim(trimmed.substr(9));
                if (!rest.empty()) response_lines.push_back(rest);
            }
            continue;
        }
        if (text::lowercase(trimmed).starts_with("terminate:")) {
            in_response = false;
            const std::string value = text::lowercase(text::trim(trimmed.substr(10)));
            if (value.find("true") != std::string::npos) terminate = true;
            else if (value.find("false") != std::string::npos) terminate = false;
            else throw Error("sim output: unparseable Terminate value: " + trimmed);
            break;
        }
        if (in_response) {
            if (is_dash_line(trimmed)) {
                in_response = false;
                continue;
            }
            response_lines.push_back(line);
        }
    }
    if (!seen_response) throw Error("sim output: missing Response block");
    if (!terminate) throw Error("sim output: missing Terminate flag");

    std::string response;
    for (std::size_t i = 0; i < response_lines.size(); ++i) {
        if (i > 0) response += '\n';
        response += response_lines[i];
    }
    return {text::trim(response), *terminate};
}

NextTurnResult next_user_turn(std::span<const Turn> history, const SimTask& task,
                              TextProvider& provider, const SimulatorOptions& options,
                              const CorpusRetrievalIndex* pool) {
    std::vector<RetrievedExample> examples;
    if (options.mode == SimMode::icl) {
        if (pool == nullptr) throw Error("next_user_turn: icl mode requires a retrieval corpus");
        examples = pool->retrieve(history, options.k);
    }
    const std::string prompt = render_sim_prompt(history, task, examples);
    GenerationRequest request{prompt, options.model_name, options.temperature,
                              options.max_output_tokens};

    NextTurnResult result;
    for (int attempt = 0; attempt <= options.max_format_retries; ++attempt) {
        std::string reply;
        try {
            reply = provider.generate(request);
        } catch (const TransportError&) {
            throw;
        } catch (const BackendError&) {
            throw;
        }
        try {
            UserTurnOutput output = parse_sim_output(reply);
            if (!output.terminate && text::trim(output.response).empty())
                throw Error("sim output: empty response without termination");
            result.output = output;
            return result;
        } catch (const Error& e) {
            result.diagnostics.push_back("format error (attempt " + std::to_string(attempt + 1) +
                                         "): " + e.what());
        }
    }
    result.diagnostics.push_back("terminating conversation after repeated format errors");
    result.output = {"", true};
    return result;
}

} // namespace simfid
