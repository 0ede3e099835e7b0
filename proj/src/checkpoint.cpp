#include "clipsam/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace clipsam {

namespace {

constexpr char kMagic[] = {'C', 'S', 'A', 'M', '1'};

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

    bool done() const { return pos_ == bytes_.size(); }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str(std::uint64_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void need(std::uint64_t n) const {
        if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
    }

private:
    std::vector<unsigned char> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
    std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
    for (const Param* p : params.all()) {
        put_u64(out, p->name.size());
        out.insert(out.end(), p->name.begin(), p->name.end());
        put_u64(out, p->value.rank());
        for (std::size_t e : p->value.shape()) put_u64(out, e);
        for (double v : p->value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("write failed: " + path.string());
}

std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
    Reader r(std::vector<unsigned char>(std::istreambuf_iterator<char>(f), {}));
    if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
    }
    std::map<std::string, Tensor> out;
    std::string previous;
    while (!r.done()) {
        const std::uint64_t name_len = r.u64();
        std::string name = r.str(name_len);
        if (!out.empty() && name <= previous) throw CheckpointError("checkpoint records not in sorted-name order");
        const std::uint64_t rank = r.u64();
        if (rank > 8) throw CheckpointError("implausible rank for " + name);
        Shape shape;
        for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(r.u64());
        const std::size_t n = shape_numel(shape);
        r.need(n * 8);
        std::vector<double> data(n);
        for (double& v : data) v = r.f64();
        previous = name;
        out.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return out;
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& params) {
    auto records = read_checkpoint(path);
    if (records.size() != params.size()) {
        throw CheckpointError("checkpoint holds " + std::to_string(records.size()) + " parameters, model expects " +
                              std::to_string(params.size()));
    }
    for (Param* p : params.all()) {
        auto it = records.find(p->name);
        if (it == records.end()) throw CheckpointError("checkpoint lacks parameter " + p->name);
        if (it->second.shape() != p->value.shape()) {
            throw CheckpointError("parameter " + p->name + " has shape " + shape_str(it->second.shape()) +
                                  ", model expects " + shape_str(p->value.shape()));
        }
        it->second.require_finite("checkpoint parameter " + p->name);
        p->value = std::move(it->second);
    }
}

}  // namespace clipsam
