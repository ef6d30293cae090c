#include "ncn/propagation.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ncn/error.hpp"

namespace ncn {

std::string to_string(Scheme s) { return s == Scheme::ppr ? "ppr" : "rw"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "ppr") return Scheme::ppr;
    if (s == "rw") return Scheme::rw;
    throw UsageError("unknown propagation scheme '" + s + "' (expected ppr or rw)");
}

void PropagationSpec::validate() const {
    if (K < 1) throw UsageError("propagation: K must be >= 1");
    if (scheme == Scheme::ppr && !(gamma > 0.0 && gamma <= 1.0)) {
        throw UsageError("propagation: gamma must lie in (0, 1] for ppr");
    }
}

std::vector<DenseMatrix> propagate_hops(const NormAdj& adj, const DenseMatrix& x, const PropagationSpec& spec,
                                        unsigned threads) {
    spec.validate();
    if (x.rows != adj.num_nodes()) throw UsageError("propagate: feature rows do not match adjacency");
    for (double v : x.data) {
        if (!std::isfinite(v)) throw NumericError("propagate: non-finite input feature");
    }

    std::vector<DenseMatrix> hops;
    hops.reserve(spec.K + 1);
    hops.push_back(x);
    const double keep = 1.0 - spec.gamma;
    for (std::uint32_t k = 1; k <= spec.K; ++k) {
        DenseMatrix next = sparse_matvec_rows(adj, hops.back(), threads);
        if (spec.scheme == Scheme::ppr) {
            for (std::size_t i = 0; i < next.data.size(); ++i) {
                next.data[i] = keep * next.data[i] + spec.gamma * x.data[i];
            }
        }
        hops.push_back(std::move(next));
    }
    return hops;
}

GridTensor propagate(const NormAdj& adj, const DenseMatrix& x, const PropagationSpec& spec,
                     std::uint64_t graph_checksum, unsigned threads) {
    const auto hops = propagate_hops(adj, x, spec, threads);
    GridTensor t;
    t.n = x.rows;
    t.K = spec.K;
    t.d = static_cast<std::uint32_t>(x.cols);
    t.scheme = spec.scheme;
    t.gamma = spec.gamma;
    t.graph_checksum = graph_checksum;
    t.data.resize(t.n * t.node_stride());
    for (std::size_t v = 0; v < t.n; ++v) {
        float* dst = t.data.data() + v * t.node_stride();
        for (std::size_t k = 0; k <= spec.K; ++k) {
            const auto row = hops[k].row(v);
            for (std::size_t j = 0; j < t.d; ++j) dst[k * t.d + j] = static_cast<float>(row[j]);
        }
    }
    for (float f : t.data) {
        if (!std::isfinite(f)) throw NumericError("propagate: aggregated feature overflows float");
    }
    return t;
}

GridTensor build_grid(const Graph& g, const PropagationSpec& spec, unsigned threads) {
    return propagate(normalize_adjacency(g), g.features(), spec, graph_checksum(g), threads);
}

namespace {

constexpr char kMagic[4] = {'N', 'C', 'N', 'T'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4 + 4 + 1 + 8 + 8;

template <typename T>
void put_le(std::string& buf, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char*& p) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
    p += sizeof(U);
    return std::bit_cast<T>(bits);
}

}  // namespace

void save_grid(const GridTensor& t, const std::filesystem::path& path) {
    if (t.data.size() != t.n * t.node_stride()) throw UsageError("save_grid: data size does not match header");
    std::string buf;
    buf.reserve(kHeaderBytes + t.data.size() * 4);
    buf.append(kMagic, 4);
    put_le<std::uint32_t>(buf, kGridFormatVersion);
    put_le<std::uint64_t>(buf, t.n);
    put_le<std::uint32_t>(buf, t.K);
    put_le<std::uint32_t>(buf, t.d);
    put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(t.scheme));
    put_le<double>(buf, t.gamma);
    put_le<std::uint64_t>(buf, t.graph_checksum);
    if constexpr (std::endian::native == std::endian::little) {
        buf.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
    } else {
        for (float f : t.data) put_le<float>(buf, f);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write grid file " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("short write to grid file " + path.string());
}

GridTensor load_grid(const std::filesystem::path& path, const GridExpectation& expect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open grid file " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < kHeaderBytes) throw DataError(path.string() + ": truncated grid header");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw DataError(path.string() + ": bad magic (not a grid file)");

    const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + 4;
    const auto version = get_le<std::uint32_t>(p);
    if (version != kGridFormatVersion) {
        throw DataError(path.string() + ": unsupported grid version " + std::to_string(version));
    }
    GridTensor t;
    t.n = get_le<std::uint64_t>(p);
    t.K = get_le<std::uint32_t>(p);
    t.d = get_le<std::uint32_t>(p);
    const auto tag = get_le<std::uint8_t>(p);
    if (tag > 1) throw DataError(path.string() + ": unknown scheme tag " + std::to_string(tag));
    t.scheme = static_cast<Scheme>(tag);
    t.gamma = get_le<double>(p);
    t.graph_checksum = get_le<std::uint64_t>(p);

    const std::size_t count = t.n * t.node_stride();
    if (buf.size() - kHeaderBytes != count * sizeof(float)) {
        throw DataError(path.string() + ": payload size " + std::to_string(buf.size() - kHeaderBytes) +
                        " bytes, header implies " + std::to_string(count * sizeof(float)));
    }
    t.data.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(t.data.data(), p, count * sizeof(float));
    } else {
        for (auto& f : t.data) f = get_le<float>(p);
    }
    check_grid(t, expect);
    return t;
}

void check_grid(const GridTensor& t, const GridExpectation& expect) {
    if (expect.K && *expect.K != t.K) {
        throw DataError("grid propagation step mismatch: grid has K=" + std::to_string(t.K) +
                        ", configuration expects K=" + std::to_string(*expect.K));
    }
    if (expect.d && *expect.d != t.d) {
        throw DataError("grid feature dimension mismatch: grid has d=" + std::to_string(t.d) + ", expected " +
                        std::to_string(*expect.d));
    }
    if (expect.n && *expect.n != t.n) {
        throw DataError("grid node count mismatch: grid has n=" + std::to_string(t.n) + ", expected " +
                        std::to_string(*expect.n));
    }
    if (expect.graph_checksum && *expect.graph_checksum != t.graph_checksum) {
        throw DataError("grid checksum mismatch: grid was built from a different graph");
    }
}

std::vector<float> slice_batch(const GridTensor& t, std::span<const NodeId> ids) {
    const std::size_t stride = t.node_stride();
    std::vector<float> out(ids.size() * stride);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= t.n) {
            throw UsageError("slice_batch: node " + std::to_string(ids[i]) + " >= " + std::to_string(t.n));
        }
        std::memcpy(out.data() + i * stride, t.data.data() + static_cast<std::size_t>(ids[i]) * stride,
                    stride * sizeof(float));
    }
    return out;
}

}  // namespace ncn
