#include "simfid/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "simfid/text.hpp"

namespace simfid {

DirectMetrics direct_metrics(const Conversation& conversation) {
    DirectMetrics m;
    m.num_turns = conversation.turns.size();
    std::size_t total_words = 0;
    for (const Turn& t : conversation.turns) {
        total_words += text::word_count(t.user_utterance);
        if (text::contains_question(t.user_utterance)) m.user_turns_with_question += 1;
        if (text::contains_question(t.assistant_utterance)) m.assistant_turns_with_question += 1;
    }
    if (m.num_turns > 0)
        m.mean_user_words = static_cast<double>(total_words) / static_cast<double>(m.num_turns);
    return m;
}

MetricSample build_sample(const Conversation& conversation, const JudgeAnnotation& annotation) {
    const DirectMetrics direct = direct_metrics(conversation);
    MetricSample s;
    s.conversation_id = conversation.id;
    s.num_turns = direct.num_turns;
    s.mean_user_words = direct.mean_user_words;
    s.user_turns_with_question = direct.user_turns_with_question;
    s.assistant_turns_with_question = direct.assistant_turns_with_question;
    for (auto act : kUserDialogActs) {
        auto it = annotation.user_dialog_acts.find(std::string(act));
        s.act_counts[std::string(act)] = it == annotation.user_dialog_acts.end() ? 0 : it->second;
    }
    s.satisfaction = annotation.user_satisfaction;
    s.frustration = annotation.user_frustration_annoyance;
    s.confusion = annotation.user_confusion;
    s.sentiment = annotation.user_sentiment;
    s.recommendation_accepted = annotation.recommendation_accepted;
    return s;
}

SampleSetResult build_sample_set(const Corpus& corpus,
                                 const std::map<std::string, JudgeAnnotation>& annotations,
                                 std::string name) {
    SampleSetResult result;
    result.set.name = std::move(name);
    for (const auto& c : corpus.conversations) {
        auto it = annotations.find(c.id);
        if (it == annotations.end()) {
            result.skipped.push_back({c.id, "no annotation"});
            continue;
        }
        result.set.samples.push_back(build_sample(c, it->second));
    }
    std::sort(result.set.samples.begin(), result.set.samples.end(),
              [](const MetricSample& a, const MetricSample& b) {
                  return a.conversation_id < b.conversation_id;
              });
    for (std::size_t i = 1; i < result.set.samples.size(); ++i) {
        if (result.set.samples[i].conversation_id == result.set.samples[i - 1].conversation_id)
            throw Error("build_sample_set: duplicate conversation id " +
                        result.set.samples[i].conversation_id);
    }
    return result;
}

namespace {

int act_count(const MetricSample& s, const char* act) {
    auto it = s.act_counts.find(act);
    return it == s.act_counts.end() ? 0 : it->second;
}

} // namespace

double metric_value(const MetricSample& s, std::string_view name) {
    if (name == "Num turns") return static_cast<double>(s.num_turns);
    if (name == "Num user words") return s.mean_user_words;
    if (name == "Turns with question") return static_cast<double>(s.user_turns_with_question);
    if (name == "Critique") return act_count(s, "critique");
    if (name == "Greet/Thank") return act_count(s, "greet_thank");
    if (name == "Inform preference") return act_count(s, "inform_preference");
    if (name == "Negative feedback") return act_count(s, "provide_feedback_negative");
    if (name == "Positive feedback") return act_count(s, "provide_feedback_positive");
    if (name == "Accept rec.") return act_count(s, "accept_recommendation");
    if (name == "Reject rec.") return act_count(s, "reject_recommendation");
    if (name == "Other") return act_count(s, "other");
    if (name == "Satisfaction") return s.satisfaction;
    if (name == "Frustration") return s.frustration;
    if (name == "Confusion") return s.confusion;
    if (name == "Sentiment") return s.sentiment;
    if (name == "Assistant turns with question")
        return static_cast<double>(s.assistant_turns_with_question);
    throw Error("unknown metric name: " + std::string(name));
}

stats::MetricTable metric_table(const SampleSet& set, std::span<const std::string> metric_names) {
    stats::MetricTable table;
    for (const auto& name : metric_names) {
        auto& column = table[name];
        column.reserve(set.samples.size());
        for (const auto& s : set.samples) column.push_back(metric_value(s, name));
    }
    return table;
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

void write_sample_set_csv(const SampleSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write sample set: " + path.string());
    out << "conversation_id";
    for (const auto& name : kAlignmentMetricNames) out << ',' << csv_escape(name);
    for (const auto& name : kExperienceMetricNames) out << ',' << csv_escape(name);
    out << ",Recommendation accepted,Assistant turns with question\n";
    for (const auto& s : set.samples) {
        out << csv_escape(s.conversation_id);
        for (const auto& name : kAlignmentMetricNames)
            out << ',' << format_double(metric_value(s, name));
        for (const auto& name : kExperienceMetricNames)
            out << ',' << format_double(metric_value(s, name));
        out << ',' << (s.recommendation_accepted ? 1 : 0) << ','
            << s.assistant_turns_with_question << '\n';
    }
}

SampleSet read_sample_set_csv(const std::filesystem::path& path, std::string name) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open sample set: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw Error("empty sample set file: " + path.string());
    const std::vector<std::string> columns = csv_split(header);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < columns.size(); ++i) index[columns[i]] = i;
    if (!index.contains("conversation_id"))
        throw Error("sample set missing conversation_id column: " + path.string());

    auto lookup = [&](const std::vector<std::string>& fields, const std::string& col,
                      double fallback) {
        auto it = index.find(col);
        if (it == index.end() || it->second >= fields.size() || fields[it->second].empty())
            return fallback;
        return std::stod(fields[it->second]);
    };

    SampleSet set;
    set.name = std::move(name);
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        const auto fields = csv_split(line);
        MetricSample s;
        s.conversation_id = fields[index["conversation_id"]];
        s.num_turns = static_cast<std::size_t>(lookup(fields, "Num turns", 1));
        s.mean_user_words = lookup(fields, "Num user words", 0);
        s.user_turns_with_question =
            static_cast<std::size_t>(lookup(fields, "Turns with question", 0));
        s.assistant_turns_with_question =
            static_cast<std::size_t>(lookup(fields, "Assistant turns with question", 0));
        s.act_counts["critique"] = static_cast<int>(lookup(fields, "Critique", 0));
        s.act_counts["greet_thank"] = static_cast<int>(lookup(fields, "Greet/Thank", 0));
        s.act_counts["inform_preference"] =
            static_cast<int>(lookup(fields, "Inform preference", 0));
        s.act_counts["provide_feedback_negative"] =
            static_cast<int>(lookup(fields, "Negative feedback", 0));
        s.act_counts["provide_feedback_positive"] =
            static_cast<int>(lookup(fields, "Positive feedback", 0));
        s.act_counts["accept_recommendation"] = static_cast<int>(lookup(fields, "Accept rec.", 0));
        s.act_counts["reject_recommendation"] = static_cast<int>(lookup(fields, "Reject rec.", 0));
        s.act_counts["other"] = static_cast<int>(lookup(fields, "Other", 0));
        s.satisfaction = static_cast<int>(lookup(fields, "Satisfaction", 3));
        s.frustration = static_cast<int>(lookup(fields, "Frustration", 3));
        s.confusion = static_cast<int>(lookup(fields, "Confusion", 3));
        s.sentiment = static_cast<int>(lookup(fields, "Sentiment", 3));
        s.recommendation_accepted = lookup(fields, "Recommendation accepted", 0) != 0;
        set.samples.push_back(std::move(s));
    }
    return set;
}

} // namespace simfid
