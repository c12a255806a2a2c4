#include "tinyintent/data_io.hpp"

#include <charconv>
#include <fstream>
#include <unordered_set>

#include "tinyintent/errors.hpp"
#include "tinyintent/pipeline.hpp"

namespace tinyintent {

namespace {

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        strip_cr(line);
        lines.push_back(line);
    }
    return lines;
}

bool parse_float(std::string_view s, float& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace

DatasetSplit load_split(const std::filesystem::path& dir) {
    std::vector<std::string> texts = read_lines(dir / "seq.in");
    std::vector<std::string> labels = read_lines(dir / "label");
    // Tolerate a single trailing blank line.
    while (!texts.empty() && texts.back().empty()) texts.pop_back();
    while (!labels.empty() && labels.back().empty()) labels.pop_back();
    if (texts.size() != labels.size())
        throw DataError("line count mismatch in " + dir.string() + ": seq.in has " + std::to_string(texts.size()) +
                        " lines, label has " + std::to_string(labels.size()));
    DatasetSplit split;
    split.items.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty())
            throw DataError("empty utterance at " + (dir / "seq.in").string() + ":" + std::to_string(i + 1));
        split.items.push_back({std::move(texts[i]), std::move(labels[i])});
    }
    return split;
}

Dataset load_dataset(const std::filesystem::path& root) {
    Dataset ds;
    ds.train = load_split(root / "train");
    ds.valid = load_split(root / "valid");
    ds.test = load_split(root / "test");
    return ds;
}

std::vector<std::string> unseen_labels(const DatasetSplit& train, const DatasetSplit& other) {
    std::unordered_set<std::string> seen;
    for (const Utterance& u : train.items) seen.insert(u.intent);
    std::unordered_set<std::string> reported;
    std::vector<std::string> out;
    for (const Utterance& u : other.items)
        if (!seen.count(u.intent) && reported.insert(u.intent).second) out.push_back(u.intent);
    return out;
}

PretrainedEmbeddings load_embeddings(const std::filesystem::path& path, int dim, const Vocabulary* keep) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file " + path.string());
    PretrainedEmbeddings emb;
    emb.dim = dim;
    std::string line;
    std::vector<float> row(static_cast<std::size_t>(dim));
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        ++emb.lines_read;
        std::vector<std::string_view> parts = tokenize(line);
        bool ok = static_cast<int>(parts.size()) == dim + 1;
        if (ok) {
            for (int i = 0; i < dim; ++i)
                if (!parse_float(parts[static_cast<std::size_t>(i + 1)], row[static_cast<std::size_t>(i)])) {
                    ok = false;
                    break;
                }
        }
        if (!ok) {
            ++emb.malformed_lines;
            continue;
        }
        if (keep && !keep->contains(parts[0])) continue;
        emb.vectors.emplace(std::string(parts[0]), row);
    }
    if (emb.lines_read > 0 && emb.malformed_lines * 100 > emb.lines_read)
        throw FormatError("embedding file " + path.string() + ": " + std::to_string(emb.malformed_lines) + " of " +
                          std::to_string(emb.lines_read) + " lines malformed (over 1%)");
    return emb;
}

double embedding_coverage(const PretrainedEmbeddings& emb, const Vocabulary& vocab) {
    int start = vocab.has_specials() ? 2 : 0;
    int total = vocab.size() - start;
    if (total <= 0) return 0.0;
    int covered = 0;
    for (int id = start; id < vocab.size(); ++id)
        if (emb.vectors.count(vocab.token(id))) ++covered;
    return static_cast<double>(covered) / total;
}

}  // namespace tinyintent
