#pragma once

#include <map>
#include <string>
#include <vector>

#include "simfid/common.hpp"

namespace simfid {

// TF-IDF cosine index over a fixed document collection. Immutable after
// build; safe to share across threads. Similarities are in [0, 1] for the
// nonnegative term vectors used here; ties rank by document id.
class TfidfIndex {
public:
    struct Doc {
        std::string id;
        std::string content;
    };

    struct Hit {
        std::string id;
        double similarity;
        std::size_t index; // position in the build input
    };

    static TfidfIndex build(std::vector<Doc> docs);

    // Top-min(k, size) documents by cosine similarity against the query
    // text. A query with no in-vocabulary terms scores 0 everywhere.
    std::vector<Hit> query(const std::string& text, std::size_t k) const;

    std::size_t size() const { return docs_.size(); }
    const Doc& doc(std::size_t i) const { return docs_[i]; }

private:
    std::vector<Doc> docs_;
    std::map<std::string, double> idf_;
    // per-document normalized sparse vectors, term -> weight
    std::vector<std::map<std::string, double>> vectors_;
};

} // namespace simfid
