#include "setlstm/errors.hpp"
#include "setlstm/trainer.hpp"

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace setlstm {

// File layout: header (magic "SETL", format version u32, FNV-1a content
// digest u64) followed by length-prefixed sections in fixed order:
//   config | progress | positions | values | optimizer | rng | metrics
//   | epoch-0 snapshot | best topology

namespace {

constexpr char kMagic[4] = {'S', 'E', 'T', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct ByteWriter {
    std::string buf;

    void raw(const void* p, std::size_t n) { buf.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 8);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void section(const ByteWriter& w) {
        u64(w.buf.size());
        raw(w.buf.data(), w.buf.size());
    }
    void text(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
};

struct ByteReader {
    std::string buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CorruptCheckpoint("checkpoint truncated");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    ByteReader section() {
        const std::uint64_t n = u64();
        need(n);
        ByteReader inner{buf.substr(pos, n), 0};
        pos += n;
        return inner;
    }
    std::string text() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    void expect_done(const char* what) const {
        if (pos != buf.size())
            throw CorruptCheckpoint(std::string("trailing bytes in ") + what);
    }
};

void write_positions(ByteWriter& w, const ConnectionSet& c) {
    w.u32(static_cast<std::uint32_t>(c.rows()));
    w.u32(static_cast<std::uint32_t>(c.cols()));
    w.u64(static_cast<std::uint64_t>(c.size()));
    for (const Position& p : c.positions()) {
        w.u32(static_cast<std::uint32_t>(p.row));
        w.u32(static_cast<std::uint32_t>(p.col));
    }
}

ConnectionSet read_positions(ByteReader& r) {
    const Index rows = static_cast<Index>(r.u32());
    const Index cols = static_cast<Index>(r.u32());
    const std::uint64_t n = r.u64();
    std::vector<Position> positions;
    positions.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        const Index row = static_cast<Index>(r.u32());
        const Index col = static_cast<Index>(r.u32());
        positions.push_back(Position{row, col});
    }
    try {
        return ConnectionSet(rows, cols, std::move(positions));
    } catch (const Error& e) {
        throw CorruptCheckpoint(std::string("invalid connection set: ") + e.what());
    }
}

void write_values(ByteWriter& w, std::span<const double> values) {
    w.u64(values.size());
    for (double v : values) w.f64(v);
}

std::vector<double> read_values(ByteReader& r) {
    const std::uint64_t n = r.u64();
    std::vector<double> values(n);
    for (std::uint64_t k = 0; k < n; ++k) values[k] = r.f64();
    return values;
}

void write_vec(ByteWriter& w, const Vec& v) {
    w.u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) w.f64(v(k));
}

Vec read_vec(ByteReader& r) {
    const std::uint64_t n = r.u64();
    Vec v(static_cast<Eigen::Index>(n));
    for (std::uint64_t k = 0; k < n; ++k) v(static_cast<Eigen::Index>(k)) = r.f64();
    return v;
}

void write_mat(ByteWriter& w, const Mat& m) {
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

Mat read_mat(ByteReader& r) {
    const Index rows = static_cast<Index>(r.u32());
    const Index cols = static_cast<Index>(r.u32());
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
    return m;
}

void write_sparse(ByteWriter& w, const SparseMatrix& m) {
    write_positions(w, m.mask());
    write_values(w, m.values());
}

SparseMatrix read_sparse(ByteReader& r) {
    ConnectionSet mask = read_positions(r);
    std::vector<double> values = read_values(r);
    if (values.size() != static_cast<std::size_t>(mask.size()))
        throw CorruptCheckpoint("sparse layer values out of sync with positions");
    return SparseMatrix(std::move(mask), std::move(values));
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    ByteWriter config_sec;
    const std::string config_text = serialize_config(ckpt.config);
    config_sec.raw(config_text.data(), config_text.size());

    ByteWriter progress_sec;
    progress_sec.u32(static_cast<std::uint32_t>(ckpt.epochs_completed));

    ByteWriter positions_sec;
    for (std::size_t l = 0; l < kSparseLayerCount; ++l)
        write_positions(positions_sec, ckpt.model.sparse_layer(l).mask());

    ByteWriter values_sec;
    for (std::size_t l = 0; l < kSparseLayerCount; ++l)
        write_values(values_sec, ckpt.model.sparse_layer(l).values());
    for (std::size_t g = 0; g < 4; ++g) write_vec(values_sec, ckpt.model.cell.b[g]);
    write_mat(values_sec, ckpt.model.output.w);
    write_vec(values_sec, ckpt.model.output.b);

    ByteWriter opt_sec;
    const AdamState& opt = ckpt.optimizer;
    opt_sec.f64(opt.hyper.lr);
    opt_sec.f64(opt.hyper.beta1);
    opt_sec.f64(opt.hyper.beta2);
    opt_sec.f64(opt.hyper.eps);
    opt_sec.u64(static_cast<std::uint64_t>(opt.t));
    for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
        write_values(opt_sec, opt.sparse[l].m);
        write_values(opt_sec, opt.sparse[l].v);
    }
    for (std::size_t g = 0; g < 4; ++g) {
        write_vec(opt_sec, opt.bias[g].m);
        write_vec(opt_sec, opt.bias[g].v);
    }
    write_mat(opt_sec, opt.output_w.m);
    write_mat(opt_sec, opt.output_w.v);
    write_vec(opt_sec, opt.output_b.m);
    write_vec(opt_sec, opt.output_b.v);

    ByteWriter rng_sec;
    rng_sec.raw(ckpt.rng_state.data(), ckpt.rng_state.size());

    ByteWriter metrics_sec;
    metrics_sec.u64(ckpt.history.size());
    for (const MetricsRecord& rec : ckpt.history) {
        metrics_sec.u32(static_cast<std::uint32_t>(rec.epoch));
        metrics_sec.f64(rec.train_loss);
        metrics_sec.f64(rec.train_accuracy);
        metrics_sec.f64(rec.test_accuracy);
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            metrics_sec.u64(static_cast<std::uint64_t>(rec.nnz[l]));
        metrics_sec.u64(static_cast<std::uint64_t>(rec.nnz_total));
        metrics_sec.f64(rec.sparsity);
        metrics_sec.u64(static_cast<std::uint64_t>(rec.removed_connections));
        metrics_sec.u64(static_cast<std::uint64_t>(rec.added_connections));
    }

    ByteWriter init_sec;
    const bool has_init = ckpt.init.output_w.size() > 0;
    init_sec.u8(has_init ? 1 : 0);
    if (has_init) {
        for (std::uint64_t key : ckpt.init.keys) init_sec.u64(key);
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            write_sparse(init_sec, ckpt.init.layers[l]);
        for (std::size_t g = 0; g < 4; ++g) write_vec(init_sec, ckpt.init.bias[g]);
        write_mat(init_sec, ckpt.init.output_w);
        write_vec(init_sec, ckpt.init.output_b);
    }

    ByteWriter best_sec;
    best_sec.u32(static_cast<std::uint32_t>(ckpt.best.epoch));
    best_sec.f64(ckpt.best.test_accuracy);
    if (ckpt.best.epoch > 0)
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            write_positions(best_sec, ckpt.best.masks[l]);

    ByteWriter payload;
    payload.section(config_sec);
    payload.section(progress_sec);
    payload.section(positions_sec);
    payload.section(values_sec);
    payload.section(opt_sec);
    payload.section(rng_sec);
    payload.section(metrics_sec);
    payload.section(init_sec);
    payload.section(best_sec);

    ByteWriter file;
    file.raw(kMagic, 4);
    file.u32(kFormatVersion);
    file.u64(fnv1a(payload.buf));
    file.raw(payload.buf.data(), payload.buf.size());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(file.buf.data(), static_cast<std::streamsize>(file.buf.size()));
    if (!out) throw IoError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (file.size() < 16 || std::memcmp(file.data(), kMagic, 4) != 0)
        throw CorruptCheckpoint("not a checkpoint file: " + path);
    ByteReader header{file.substr(4, 12), 0};
    const std::uint32_t version = header.u32();
    if (version != kFormatVersion)
        throw VersionMismatch("checkpoint format version " + std::to_string(version) +
                              ", expected " + std::to_string(kFormatVersion));
    const std::uint64_t digest = header.u64();
    ByteReader payload{file.substr(16), 0};
    if (fnv1a(payload.buf) != digest)
        throw CorruptCheckpoint("checkpoint digest mismatch: " + path);

    Checkpoint ckpt;

    ByteReader config_sec = payload.section();
    try {
        ckpt.config = parse_config(config_sec.buf);
    } catch (const ConfigError& e) {
        throw CorruptCheckpoint(std::string("bad config section: ") + e.what());
    }

    ByteReader progress_sec = payload.section();
    ckpt.epochs_completed = static_cast<Index>(progress_sec.u32());
    progress_sec.expect_done("progress section");

    ByteReader positions_sec = payload.section();
    std::vector<ConnectionSet> masks;
    masks.reserve(kSparseLayerCount);
    for (std::size_t l = 0; l < kSparseLayerCount; ++l)
        masks.push_back(read_positions(positions_sec));
    positions_sec.expect_done("positions section");

    ByteReader values_sec = payload.section();
    ckpt.model.dims = ckpt.config.dims();
    for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
        std::vector<double> values = read_values(values_sec);
        if (values.size() != static_cast<std::size_t>(masks[l].size()))
            throw CorruptCheckpoint("layer values out of sync with positions");
        ckpt.model.sparse_layer(l) = SparseMatrix(std::move(masks[l]), std::move(values));
    }
    for (std::size_t g = 0; g < 4; ++g) ckpt.model.cell.b[g] = read_vec(values_sec);
    ckpt.model.output.w = read_mat(values_sec);
    ckpt.model.output.b = read_vec(values_sec);
    values_sec.expect_done("values section");

    ByteReader opt_sec = payload.section();
    AdamState& opt = ckpt.optimizer;
    opt.hyper.lr = opt_sec.f64();
    opt.hyper.beta1 = opt_sec.f64();
    opt.hyper.beta2 = opt_sec.f64();
    opt.hyper.eps = opt_sec.f64();
    opt.t = static_cast<std::int64_t>(opt_sec.u64());
    for (std::size_t l = 0; l < kSparseLayerCount; ++l) {
        opt.sparse[l].m = read_values(opt_sec);
        opt.sparse[l].v = read_values(opt_sec);
        opt.sparse[l].mask = ckpt.model.sparse_layer(l).mask_ptr();
        if (opt.sparse[l].m.size() != static_cast<std::size_t>(opt.sparse[l].mask->size()) ||
            opt.sparse[l].v.size() != opt.sparse[l].m.size())
            throw CorruptCheckpoint("optimizer state out of sync with model masks");
    }
    for (std::size_t g = 0; g < 4; ++g) {
        opt.bias[g].m = read_vec(opt_sec);
        opt.bias[g].v = read_vec(opt_sec);
    }
    opt.output_w.m = read_mat(opt_sec);
    opt.output_w.v = read_mat(opt_sec);
    opt.output_b.m = read_vec(opt_sec);
    opt.output_b.v = read_vec(opt_sec);
    opt_sec.expect_done("optimizer section");

    ByteReader rng_sec = payload.section();
    ckpt.rng_state = rng_sec.buf;

    ByteReader metrics_sec = payload.section();
    const std::uint64_t n_records = metrics_sec.u64();
    ckpt.history.reserve(n_records);
    for (std::uint64_t k = 0; k < n_records; ++k) {
        MetricsRecord rec;
        rec.epoch = static_cast<Index>(metrics_sec.u32());
        rec.train_loss = metrics_sec.f64();
        rec.train_accuracy = metrics_sec.f64();
        rec.test_accuracy = metrics_sec.f64();
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            rec.nnz[l] = static_cast<std::int64_t>(metrics_sec.u64());
        rec.nnz_total = static_cast<std::int64_t>(metrics_sec.u64());
        rec.sparsity = metrics_sec.f64();
        rec.removed_connections = static_cast<std::int64_t>(metrics_sec.u64());
        rec.added_connections = static_cast<std::int64_t>(metrics_sec.u64());
        ckpt.history.push_back(rec);
    }
    metrics_sec.expect_done("metrics section");

    ByteReader init_sec = payload.section();
    if (init_sec.u8() != 0) {
        for (std::size_t l = 0; l < kSparseLayerCount; ++l) ckpt.init.keys[l] = init_sec.u64();
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            ckpt.init.layers[l] = read_sparse(init_sec);
        for (std::size_t g = 0; g < 4; ++g) ckpt.init.bias[g] = read_vec(init_sec);
        ckpt.init.output_w = read_mat(init_sec);
        ckpt.init.output_b = read_vec(init_sec);
    }
    init_sec.expect_done("init section");

    ByteReader best_sec = payload.section();
    ckpt.best.epoch = static_cast<Index>(best_sec.u32());
    ckpt.best.test_accuracy = best_sec.f64();
    if (ckpt.best.epoch > 0)
        for (std::size_t l = 0; l < kSparseLayerCount; ++l)
            ckpt.best.masks[l] = read_positions(best_sec);
    best_sec.expect_done("best-topology section");

    payload.expect_done("checkpoint payload");
    return ckpt;
}

}  // namespace setlstm
