#include "simfid/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "simfid/text.hpp"

namespace simfid {

namespace {

std::map<std::string, double> term_counts(const std::string& content) {
    std::map<std::string, double> counts;
    for (auto& token : text::alnum_tokens(content)) counts[token] += 1.0;
    return counts;
}

void normalize(std::map<std::string, double>& v) {
    double norm = 0.0;
    for (const auto& [term, w] : v) norm += w * w;
    if (norm <= 0.0) return;
    norm = std::sqrt(norm);
    for (auto& [term, w] : v) w /= norm;
}

} // namespace

TfidfIndex TfidfIndex::build(std::vector<Doc> docs) {
    TfidfIndex index;
    index.docs_ = std::move(docs);
    const double n = static_cast<double>(index.docs_.size());

    std::map<std::string, double> df;
    std::vector<std::map<std::string, double>> counts;
    counts.reserve(index.docs_.size());
    for (const auto& doc : index.docs_) {
        counts.push_back(term_counts(doc.content));
        for (const auto& [term, c] : counts.back()) df[term] += 1.0;
    }
    for (const auto& [term, d] : df)
        index.idf_[term] = std::log((n + 1.0) / (d + 1.0)) + 1.0;

    index.vectors_.reserve(counts.size());
    for (auto& c : counts) {
        std::map<std::string, double> v;
        for (const auto& [term, tf] : c) v[term] = tf * index.idf_.at(term);
        normalize(v);
        index.vectors_.push_back(std::move(v));
    }
    return index;
}

std::vector<TfidfIndex::Hit> TfidfIndex::query(const std::string& text, std::size_t k) const {
    // query vector restricted to the corpus vocabulary
    std::map<std::string, double> q;
    for (const auto& [term, tf] : term_counts(text)) {
        auto it = idf_.find(term);
        if (it != idf_.end()) q[term] = tf * it->second;
    }
    normalize(q);

    std::vector<Hit> hits;
    hits.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        double dot = 0.0;
        const auto& v = vectors_[i];
        for (const auto& [term, w] : q) {
            auto it = v.find(term);
            if (it != v.end()) dot += w * it->second;
        }
        hits.push_back({docs_[i].id, std::min(1.0, std::max(0.0, dot)), i});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

} // namespace simfid
