#include "simfid/text.hpp"

#include <cctype>

namespace simfid::text {

std::string strip_markdown(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s.compare(i, 2, "**") == 0) {
            i += 2;
        } else if (s.compare(i, 4, "<br>") == 0) {
            out.push_back(' ');
            i += 4;
        } else if (s[i] == '`') {
            ++i;
        } else {
            out.push_back(s[i]);
            ++i;
        }
    }
    // collapse whitespace
    std::string collapsed;
    collapsed.reserve(out.size());
    bool in_space = true; // eats leading whitespace
    for (char c : out) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) collapsed.push_back(' ');
            in_space = true;
        } else {
            collapsed.push_back(c);
            in_space = false;
        }
    }
    while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return collapsed;
}

std::size_t word_count(std::string_view s) {
    const std::string stripped = strip_markdown(s);
    std::size_t n = 0;
    bool in_word = false;
    for (char c : stripped) {
        if (c == ' ') {
            in_word = false;
        } else if (!in_word) {
            ++n;
            in_word = true;
        }
    }
    return n;
}

std::vector<std::string> alnum_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

bool contains_question(std::string_view s) {
    return s.find('?') != std::string_view::npos;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace simfid::text
