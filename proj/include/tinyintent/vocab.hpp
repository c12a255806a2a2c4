#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tinyintent/errors.hpp"

namespace tinyintent {

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

// Token <-> dense id map. Word and char vocabularies reserve PAD=0 and UNK=1;
// label maps have no reserved ids. Immutable after construction, shareable
// across threads.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    static Vocabulary with_specials() {
        Vocabulary v;
        v.has_specials_ = true;
        v.add("<pad>");
        v.add("<unk>");
        return v;
    }

    static Vocabulary plain() { return Vocabulary{}; }

    // Inserts the token if new; returns its id either way.
    int add(std::string_view token) {
        auto it = token_to_id_.find(token);
        if (it != token_to_id_.end()) return it->second;
        int id = static_cast<int>(id_to_token_.size());
        id_to_token_.emplace_back(token);
        token_to_id_.emplace(id_to_token_.back(), id);
        return id;
    }

    // UNK for unknown tokens when specials are present, -1 otherwise.
    int lookup(std::string_view token) const {
        auto it = token_to_id_.find(token);
        if (it != token_to_id_.end()) return it->second;
        return has_specials_ ? kUnk : -1;
    }

    bool contains(std::string_view token) const { return token_to_id_.find(token) != token_to_id_.end(); }

    const std::string& token(int id) const {
        if (id < 0 || id >= size()) throw IndexError("vocabulary: id out of range");
        return id_to_token_[static_cast<std::size_t>(id)];
    }

    int size() const { return static_cast<int>(id_to_token_.size()); }
    bool has_specials() const { return has_specials_; }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int, StringHash, std::equal_to<>> token_to_id_;
    bool has_specials_ = false;
};

}  // namespace tinyintent
