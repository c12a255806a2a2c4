#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinyintent/vocab.hpp"

namespace tinyintent {

struct Utterance {
    std::string text;
    std::string intent;
};

// One split of a dataset: parallel (text, intent) pairs.
struct DatasetSplit {
    std::vector<Utterance> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

struct Dataset {
    DatasetSplit train;
    DatasetSplit valid;
    DatasetSplit test;
};

// Loads one split directory containing parallel line-aligned files `seq.in`
// (space-separated tokens) and `label` (one intent per line). A `seq.out`
// slot file may be present and is ignored. Line counts must match.
DatasetSplit load_split(const std::filesystem::path& dir);

// Loads <root>/{train,valid,test}.
Dataset load_dataset(const std::filesystem::path& root);

// Intent strings present in `other` but not in `train`. ATIS is known to
// contain rare composite intents in the test set; they are kept and scored.
std::vector<std::string> unseen_labels(const DatasetSplit& train, const DatasetSplit& other);

struct PretrainedEmbeddings {
    int dim = 0;
    std::unordered_map<std::string, std::vector<float>, StringHash, std::equal_to<>> vectors;
    long lines_read = 0;
    long malformed_lines = 0;
};

// Streams a GloVe-style text file: one entry per line, token then `dim`
// decimal floats. Malformed lines are counted and skipped; more than 1%
// malformed is a format error. When `keep` is given, only rows whose token is
// in it are retained (the full 50-d GloVe file is hundreds of MB).
PretrainedEmbeddings load_embeddings(const std::filesystem::path& path, int dim = 50,
                                     const Vocabulary* keep = nullptr);

// Fraction of vocabulary tokens covered by the embedding table.
// Reserved PAD/UNK entries are not counted.
double embedding_coverage(const PretrainedEmbeddings& emb, const Vocabulary& vocab);

}  // namespace tinyintent
