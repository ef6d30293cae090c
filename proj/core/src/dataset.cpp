#include "ncn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ncn/error.hpp"
#include "ncn/rng.hpp"

namespace ncn {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_cell(std::string_view cell, const fs::path& file, std::size_t line) {
    cell = trim(cell);
    T value{};
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (!cell.empty() && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        throw DataError(file.string() + ":" + std::to_string(line) + ": cannot parse '" + std::string(cell) + "'");
    }
    return value;
}

template <typename Fn>
void for_each_line(const fs::path& file, Fn&& fn) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty()) continue;
        fn(body, lineno);
    }
}

template <typename T>
std::vector<T> split_row(std::string_view row, const fs::path& file, std::size_t lineno) {
    std::vector<T> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = row.find(',', start);
        out.push_back(parse_cell<T>(row.substr(start, comma - start), file, lineno));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

void append_real(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

std::vector<NodeId> id_list(const nlohmann::json& j, const char* key, const fs::path& path) {
    if (!j.contains(key) || !j[key].is_array()) throw DataError(path.string() + ": missing array '" + key + "'");
    std::vector<NodeId> ids;
    for (const auto& v : j[key]) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw DataError(path.string() + ": non-integer or negative id in '" + key + "'");
        }
        ids.push_back(static_cast<NodeId>(v.get<long long>()));
    }
    return ids;
}

}  // namespace

Graph load_graph(const fs::path& dir) { return load_dataset(dir).graph; }

Dataset load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
    for (const char* name : {"edges.csv", "features.csv", "labels.csv"}) {
        if (!fs::exists(dir / name)) throw DataError("missing " + (dir / name).string());
    }

    DenseMatrix x;
    for_each_line(dir / "features.csv", [&](std::string_view row, std::size_t lineno) {
        auto values = split_row<double>(row, dir / "features.csv", lineno);
        if (x.rows == 0) x.cols = values.size();
        if (values.size() != x.cols) {
            throw DataError((dir / "features.csv").string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(x.cols) + " columns, found " + std::to_string(values.size()));
        }
        x.data.insert(x.data.end(), values.begin(), values.end());
        ++x.rows;
    });
    const std::size_t n = x.rows;

    std::vector<Label> y;
    for_each_line(dir / "labels.csv", [&](std::string_view row, std::size_t lineno) {
        const auto label = parse_cell<long long>(row, dir / "labels.csv", lineno);
        if (label < 0 || label > std::numeric_limits<Label>::max()) {
            throw DataError((dir / "labels.csv").string() + ":" + std::to_string(lineno) + ": label " +
                            std::to_string(label) + " out of range");
        }
        y.push_back(static_cast<Label>(label));
    });

    std::vector<std::pair<NodeId, NodeId>> edges;
    for_each_line(dir / "edges.csv", [&](std::string_view row, std::size_t lineno) {
        auto ends = split_row<long long>(row, dir / "edges.csv", lineno);
        if (ends.size() != 2) {
            throw DataError((dir / "edges.csv").string() + ":" + std::to_string(lineno) + ": expected 'src,dst'");
        }
        for (long long e : ends) {
            if (e < 0 || static_cast<unsigned long long>(e) >= n) {
                throw DataError((dir / "edges.csv").string() + ":" + std::to_string(lineno) + ": node index " +
                                std::to_string(e) + " outside [0, " + std::to_string(n) + ")");
            }
        }
        edges.emplace_back(static_cast<NodeId>(ends[0]), static_cast<NodeId>(ends[1]));
    });

    const std::size_t c = y.empty() ? 0 : static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1;
    Dataset ds;
    ds.graph = Graph::from_edges(n, edges, std::move(x), std::move(y), c);
    if (fs::exists(dir / "splits.json")) ds.split = load_split(dir / "splits.json", n);
    return ds;
}

void save_graph(const Graph& g, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "edges.csv");
        for (auto [a, b] : g.edge_list()) out << a << ',' << b << '\n';
    }
    {
        std::ofstream out(dir / "features.csv");
        std::string line;
        for (std::size_t v = 0; v < g.num_nodes(); ++v) {
            line.clear();
            const auto row = g.features().row(v);
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) line.push_back(',');
                append_real(line, row[j]);
            }
            line.push_back('\n');
            out << line;
        }
    }
    {
        std::ofstream out(dir / "labels.csv");
        for (Label l : g.labels()) out << l << '\n';
    }
    if (!fs::exists(dir / "labels.csv")) throw DataError("failed to write dataset to " + dir.string());
}

void save_split(const SplitSpec& split, const fs::path& path) {
    nlohmann::json j;
    j["train"] = split.train;
    j["val"] = split.val;
    j["test"] = split.test;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump() << '\n';
}

SplitSpec load_split(const fs::path& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    SplitSpec split;
    split.train = id_list(j, "train", path);
    split.val = id_list(j, "val", path);
    split.test = id_list(j, "test", path);
    validate_split(split, n);
    return split;
}

void validate_split(const SplitSpec& split, std::size_t n) {
    std::vector<char> seen(n, 0);
    for (const auto* part : {&split.train, &split.val, &split.test}) {
        for (NodeId v : *part) {
            if (v >= n) throw DataError("split references node " + std::to_string(v) + " >= " + std::to_string(n));
            if (seen[v]) throw DataError("split parts overlap at node " + std::to_string(v));
            seen[v] = 1;
        }
    }
}

Graph generate_sbm(const SbmSpec& spec) {
    if (spec.n == 0 || spec.c == 0 || spec.feat_dim == 0) throw UsageError("sbm: n, c and feat_dim must be positive");
    for (double p : {spec.p_in, spec.p_out}) {
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError("sbm: edge probabilities must lie in [0, 1]");
    }
    if (!(spec.sigma >= 0.0) || !std::isfinite(spec.mu)) throw UsageError("sbm: sigma must be >= 0 and mu finite");

    Rng edge_rng(derive_seed(spec.seed, 1));
    Rng feat_rng(derive_seed(spec.seed, 2));

    std::vector<Label> y(spec.n);
    for (std::size_t v = 0; v < spec.n; ++v) y[v] = static_cast<Label>(v % spec.c);

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = i + 1; j < spec.n; ++j) {
            const double p = (y[i] == y[j]) ? spec.p_in : spec.p_out;
            if (edge_rng.bernoulli(p)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
    }

    DenseMatrix x(spec.n, spec.feat_dim);
    for (std::size_t v = 0; v < spec.n; ++v) {
        for (std::size_t k = 0; k < spec.feat_dim; ++k) x(v, k) = spec.sigma * feat_rng.normal();
        x(v, static_cast<std::size_t>(y[v]) % spec.feat_dim) += spec.mu;
    }
    return Graph::from_edges(spec.n, edges, std::move(x), std::move(y), spec.c);
}

namespace {

void partition_into(std::vector<NodeId> ids, const std::array<double, 3>& ratios, Rng& rng, SplitSpec& out) {
    rng.shuffle(std::span<NodeId>(ids));
    const double m = static_cast<double>(ids.size());
    const auto n_train = std::min(ids.size(), static_cast<std::size_t>(std::llround(ratios[0] * m)));
    const auto n_val = std::min(ids.size() - n_train, static_cast<std::size_t>(std::llround(ratios[1] * m)));
    auto it = ids.begin();
    out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(n_train));
    it += static_cast<std::ptrdiff_t>(n_train);
    out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    out.test.insert(out.test.end(), it, ids.end());
}

}  // namespace

SplitSpec make_split(std::size_t n, std::array<double, 3> ratios, std::uint64_t seed,
                     std::optional<std::span<const Label>> stratify_labels) {
    if (n < 3) throw UsageError("make_split: need at least 3 nodes, got " + std::to_string(n));
    for (double r : ratios) {
        if (!(r >= 0.0 && r <= 1.0)) throw UsageError("make_split: ratios must lie in [0, 1]");
    }
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw UsageError("make_split: ratios must sum to 1");

    SplitSpec split;
    split.seed = seed;
    split.ratios = ratios;
    Rng rng(seed);
    if (!stratify_labels) {
        std::vector<NodeId> ids(n);
        std::iota(ids.begin(), ids.end(), NodeId{0});
        partition_into(std::move(ids), ratios, rng, split);
        return split;
    }

    const auto labels = *stratify_labels;
    if (labels.size() != n) throw UsageError("make_split: label count does not match n");
    Label max_label = 0;
    for (Label l : labels) {
        if (l < 0) throw UsageError("make_split: negative label");
        max_label = std::max(max_label, l);
    }
    std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t v = 0; v < n; ++v) by_class[static_cast<std::size_t>(labels[v])].push_back(static_cast<NodeId>(v));
    for (auto& members : by_class) partition_into(std::move(members), ratios, rng, split);
    return split;
}

}  // namespace ncn
