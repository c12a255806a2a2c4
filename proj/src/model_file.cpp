#include "tinyintent/model_file.hpp"

#include <cstring>
#include <fstream>

namespace tinyintent {

namespace {

constexpr char kMagic[4] = {'O', 'D', 'I', 'C'};

class Writer {
public:
    std::vector<std::uint8_t> take() { return std::move(buf_); }

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v));
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::size_t size() const { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : data_(bytes) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        auto b = take(4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::span<const std::uint8_t> raw(std::size_t n) { return take(n); }
    std::string str(std::size_t n) {
        auto b = take(n);
        return std::string(reinterpret_cast<const char*>(b.data()), b.size());
    }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > data_.size()) throw FormatError("model file: record overruns payload");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void write_vocab(Writer& w, const Vocabulary& v) {
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (const std::string& tok : v.tokens()) {
        if (tok.size() > 0xffff) throw FormatError("model file: vocabulary token longer than 65535 bytes");
        w.u16(static_cast<std::uint16_t>(tok.size()));
        w.bytes(tok.data(), tok.size());
    }
}

Vocabulary read_vocab(Reader& r, bool with_specials) {
    const std::uint32_t count = r.u32();
    Vocabulary v = with_specials ? Vocabulary::with_specials() : Vocabulary::plain();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t len = r.u16();
        std::string tok = r.str(len);
        if (with_specials && i < 2) {
            if (tok != v.token(static_cast<int>(i)))
                throw FormatError("model file: reserved vocabulary slot " + std::to_string(i) + " holds '" + tok + "'");
            continue;
        }
        if (v.add(tok) != static_cast<int>(i))
            throw FormatError("model file: duplicate vocabulary token '" + tok + "'");
    }
    if (v.size() != static_cast<int>(count)) throw FormatError("model file: vocabulary count mismatch");
    return v;
}

void write_config(Writer& w, const ModelConfig& cfg) {
    Writer block;
    block.u32(static_cast<std::uint32_t>(cfg.word_emb_dim));
    block.u32(static_cast<std::uint32_t>(cfg.char_emb_dim));
    block.u32(static_cast<std::uint32_t>(cfg.lstm_hidden));
    block.u32(static_cast<std::uint32_t>(cfg.max_seq_len));
    block.u32(static_cast<std::uint32_t>(cfg.max_word_len));
    block.u32(static_cast<std::uint32_t>(cfg.num_labels));
    block.u32(static_cast<std::uint32_t>(cfg.word_vocab_size));
    block.u32(static_cast<std::uint32_t>(cfg.char_vocab_size));
    block.u32(static_cast<std::uint32_t>(cfg.conv_activation));
    block.u32(cfg.lowercase ? 1 : 0);
    block.u32(static_cast<std::uint32_t>(cfg.conv_kernel_sizes.size()));
    for (int k : cfg.conv_kernel_sizes) block.u32(static_cast<std::uint32_t>(k));
    for (int f : cfg.conv_filter_counts) block.u32(static_cast<std::uint32_t>(f));
    std::vector<std::uint8_t> bytes = block.take();
    w.u32(static_cast<std::uint32_t>(bytes.size()));
    w.bytes(bytes.data(), bytes.size());
}

ModelConfig read_config(Reader& r) {
    const std::uint32_t nbytes = r.u32();
    Reader block(r.raw(nbytes));
    ModelConfig cfg;
    cfg.word_emb_dim = static_cast<int>(block.u32());
    cfg.char_emb_dim = static_cast<int>(block.u32());
    cfg.lstm_hidden = static_cast<int>(block.u32());
    cfg.max_seq_len = static_cast<int>(block.u32());
    cfg.max_word_len = static_cast<int>(block.u32());
    cfg.num_labels = static_cast<int>(block.u32());
    cfg.word_vocab_size = static_cast<int>(block.u32());
    cfg.char_vocab_size = static_cast<int>(block.u32());
    const std::uint32_t act = block.u32();
    if (act > 1) throw FormatError("model file: unknown conv activation tag");
    cfg.conv_activation = static_cast<ConvActivation>(act);
    cfg.lowercase = block.u32() != 0;
    const std::uint32_t n_conv = block.u32();
    if (n_conv == 0 || n_conv > 64) throw FormatError("model file: implausible conv branch count");
    cfg.conv_kernel_sizes.resize(n_conv);
    cfg.conv_filter_counts.resize(n_conv);
    for (std::uint32_t i = 0; i < n_conv; ++i) cfg.conv_kernel_sizes[i] = static_cast<int>(block.u32());
    for (std::uint32_t i = 0; i < n_conv; ++i) cfg.conv_filter_counts[i] = static_cast<int>(block.u32());
    return cfg;
}

template <class WriteRecord>
std::vector<std::uint8_t> serialize_common(const ModelConfig& cfg, const Vocabulary& label_map,
                                           const Vocabulary& word_vocab, const Vocabulary& char_vocab,
                                           std::size_t tensor_count, WriteRecord&& write_record) {
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kModelFormatVersion);
    write_config(w, cfg);
    write_vocab(w, label_map);
    write_vocab(w, word_vocab);
    write_vocab(w, char_vocab);
    w.u32(static_cast<std::uint32_t>(tensor_count));
    write_record(w);
    std::vector<std::uint8_t> payload = w.take();
    Writer footer;
    footer.u64(fnv1a64(payload.data(), payload.size()));
    std::vector<std::uint8_t> tail = footer.take();
    payload.insert(payload.end(), tail.begin(), tail.end());
    return payload;
}

void write_record_header(Writer& w, const std::string& name, TensorDType dtype, const std::vector<int>& shape) {
    if (name.size() > 0xffff) throw FormatError("model file: tensor name too long");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(dtype));
    w.u32(static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) w.u32(static_cast<std::uint32_t>(d));
}

void save_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to model file " + path.string());
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::size_t i = 0; i < n; ++i) {
        hash ^= data[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::vector<std::uint8_t> serialize_model(const TrainedModel& model) {
    const auto tensors = model.params.all_tensors();
    return serialize_common(model.config, model.label_map, model.word_vocab, model.char_vocab, tensors.size(),
                            [&](Writer& w) {
                                for (const Tensor<float>* t : tensors) {
                                    write_record_header(w, t->name, TensorDType::F32, t->shape);
                                    for (float v : t->values) w.f32(v);
                                }
                            });
}

std::vector<std::uint8_t> serialize_model(const QuantizedModel& model) {
    return serialize_common(model.config, model.label_map, model.word_vocab, model.char_vocab,
                            model.tensors.size(), [&](Writer& w) {
                                for (const QuantizedTensor& t : model.tensors) {
                                    write_record_header(w, t.name, TensorDType::I8Affine, t.shape);
                                    w.f32(t.scale);
                                    w.i32(t.zero_point);
                                    w.bytes(t.values.data(), t.values.size());
                                }
                            });
}

LoadedModel parse_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw TruncatedError("model file: too short for magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw BadMagicError("model file: bad magic");
    if (bytes.size() < 8) throw TruncatedError("model file: too short for version");
    std::uint32_t version = static_cast<std::uint32_t>(bytes[4]) | (static_cast<std::uint32_t>(bytes[5]) << 8) |
                            (static_cast<std::uint32_t>(bytes[6]) << 16) |
                            (static_cast<std::uint32_t>(bytes[7]) << 24);
    if (version != kModelFormatVersion)
        throw BadVersionError("model file: unsupported format version " + std::to_string(version));
    if (bytes.size() < 16) throw TruncatedError("model file: too short for checksum footer");

    const std::size_t payload_len = bytes.size() - 8;
    std::uint64_t stored = 0;
    for (int i = 7; i >= 0; --i) stored = (stored << 8) | bytes[payload_len + static_cast<std::size_t>(i)];
    if (fnv1a64(bytes.data(), payload_len) != stored)
        throw ChecksumError("model file: checksum mismatch (corrupted or truncated)");

    Reader r(bytes.subspan(8, payload_len - 8));
    LoadedModel m;
    m.config = read_config(r);
    m.label_map = read_vocab(r, false);
    m.word_vocab = read_vocab(r, true);
    m.char_vocab = read_vocab(r, true);
    const std::uint32_t tensor_count = r.u32();
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        TensorRecord rec;
        const std::uint16_t name_len = r.u16();
        rec.name = r.str(name_len);
        const std::uint8_t dtype = r.u8();
        if (dtype > 1) throw FormatError("model file: unknown dtype tag in tensor '" + rec.name + "'");
        rec.dtype = static_cast<TensorDType>(dtype);
        const std::uint32_t rank = r.u32();
        if (rank > 8) throw FormatError("model file: implausible tensor rank");
        rec.shape.resize(rank);
        for (std::uint32_t d = 0; d < rank; ++d) {
            rec.shape[d] = static_cast<int>(r.u32());
            if (rec.shape[d] <= 0) throw FormatError("model file: non-positive dimension");
        }
        const std::size_t count = rec.element_count();
        // Bounds before allocation: a corrupt length field must not turn
        // into a giant resize.
        if (rec.dtype == TensorDType::I8Affine) {
            rec.scale = r.f32();
            rec.zero_point = r.i32();
            auto raw = r.raw(count);
            rec.i8.resize(count);
            std::memcpy(rec.i8.data(), raw.data(), count);
        } else {
            if (count > r.remaining() / 4) throw FormatError("model file: tensor payload overruns file");
            rec.f32.resize(count);
            for (std::size_t j = 0; j < count; ++j) rec.f32[j] = r.f32();
        }
        m.tensors.push_back(std::move(rec));
    }
    if (r.remaining() != 0) throw FormatError("model file: trailing bytes after tensors");
    return m;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    save_bytes(serialize_model(model), path);
}

void save_model(const QuantizedModel& model, const std::filesystem::path& path) {
    save_bytes(serialize_model(model), path);
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_model(bytes);
}

namespace {

// consume=true releases each record's payload once copied, so the load path
// never holds two full copies of the big embedding tables.
TrainedModel rebuild_model(LoadedModel& loaded, bool consume) {
    loaded.config.validate();
    if (loaded.label_map.size() != loaded.config.num_labels ||
        loaded.word_vocab.size() != loaded.config.word_vocab_size ||
        loaded.char_vocab.size() != loaded.config.char_vocab_size)
        throw ValidationError("model file: vocabulary sizes disagree with config");

    TrainedModel model;
    model.config = loaded.config;
    if (consume) {
        model.word_vocab = std::move(loaded.word_vocab);
        model.char_vocab = std::move(loaded.char_vocab);
        model.label_map = std::move(loaded.label_map);
    } else {
        model.word_vocab = loaded.word_vocab;
        model.char_vocab = loaded.char_vocab;
        model.label_map = loaded.label_map;
    }
    model.params = make_parameter_skeleton<float>(loaded.config, /*training_buffers=*/false);

    std::vector<Tensor<float>*> tensors = model.params.all_tensors();
    if (tensors.size() != loaded.tensors.size())
        throw ValidationError("model file: expected " + std::to_string(tensors.size()) + " tensors, found " +
                              std::to_string(loaded.tensors.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        TensorRecord& rec = loaded.tensors[i];
        Tensor<float>* dst = tensors[i];
        if (rec.name != dst->name)
            throw ValidationError("model file: tensor " + std::to_string(i) + " is '" + rec.name +
                                  "', expected '" + dst->name + "'");
        if (rec.shape != dst->shape) throw ValidationError("model file: shape mismatch in tensor '" + rec.name + "'");
        if (rec.dtype == TensorDType::I8Affine) {
            QuantizedTensor q;
            q.name = rec.name;
            q.shape = rec.shape;
            q.values = consume ? std::move(rec.i8) : rec.i8;
            q.scale = rec.scale;
            q.zero_point = rec.zero_point;
            dequantize_into(q, dst->values);
        } else {
            if (rec.f32.size() != dst->values.size())
                throw ValidationError("model file: element count mismatch in tensor '" + rec.name + "'");
            if (consume)
                dst->values = std::move(rec.f32);
            else
                dst->values = rec.f32;
        }
        if (consume) {
            rec.i8 = {};
            rec.f32 = {};
        }
    }
    return model;
}

}  // namespace

TrainedModel to_trained_model(const LoadedModel& loaded) {
    // With consume=false nothing is written through this reference.
    LoadedModel& mut = const_cast<LoadedModel&>(loaded);
    return rebuild_model(mut, /*consume=*/false);
}

TrainedModel to_trained_model(LoadedModel&& loaded) { return rebuild_model(loaded, /*consume=*/true); }

}  // namespace tinyintent
