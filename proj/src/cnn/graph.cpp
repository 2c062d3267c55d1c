#include "texbench/cnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "texbench/error.hpp"

namespace texbench {

std::string to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::Data: return "data";
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::Lrn: return "lrn";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::Fc: return "fc";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::Concat: return "concat";
    case LayerKind::Dropout: return "dropout";
    }
    return "?";
}

int NetworkGraph::find(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].name == name) return static_cast<int>(i);
    return -1;
}

std::size_t NetworkGraph::index_of(const std::string& name) const {
    const int i = find(name);
    if (i < 0) {
        std::string all;
        for (const auto& n : nodes) all += (all.empty() ? "" : ", ") + n.name;
        throw Error("unknown layer '" + name + "'; available: " + all);
    }
    return static_cast<std::size_t>(i);
}

std::vector<std::string> NetworkGraph::names() const {
    std::vector<std::string> out;
    for (const auto& n : nodes) out.push_back(n.name);
    return out;
}

namespace {

std::optional<LayerKind> kind_from(const std::string& s) {
    static const std::map<std::string, LayerKind> kinds{
        {"data", LayerKind::Data},       {"conv", LayerKind::Conv},       {"relu", LayerKind::Relu},
        {"lrn", LayerKind::Lrn},         {"maxpool", LayerKind::MaxPool}, {"avgpool", LayerKind::AvgPool},
        {"fc", LayerKind::Fc},           {"softmax", LayerKind::Softmax}, {"concat", LayerKind::Concat},
        {"dropout", LayerKind::Dropout}};
    auto it = kinds.find(s);
    if (it == kinds.end()) return std::nullopt;
    return it->second;
}

struct LineParser {
    const std::string& source;
    std::size_t line;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, line, what); }

    int to_int(const std::string& key, const std::string& v) const {
        int out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size()) fail("'" + key + "' expects an integer, got '" + v + "'");
        return out;
    }
    float to_float(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            const float f = std::stof(v, &used);
            if (used == v.size()) return f;
        } catch (const std::exception&) {
        }
        fail("'" + key + "' expects a number, got '" + v + "'");
    }
    std::vector<std::string> to_list(const std::string& v) const {
        std::vector<std::string> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(item);
        return out;
    }
    Shape to_shape(const std::string& key, const std::string& v) const {
        Shape s;
        for (const auto& item : to_list(v)) {
            const int d = to_int(key, item);
            if (d < 1) fail("'" + key + "' dimensions must be positive");
            s.push_back(d);
        }
        if (s.empty()) fail("'" + key + "' is empty");
        return s;
    }
    // "k" or "kh,kw"
    std::pair<int, int> to_pair(const std::string& key, const std::string& v) const {
        const auto items = to_list(v);
        if (items.size() == 1) {
            const int a = to_int(key, items[0]);
            return {a, a};
        }
        if (items.size() == 2) return {to_int(key, items[0]), to_int(key, items[1])};
        fail("'" + key + "' expects one or two integers");
    }
};

bool allowed(LayerKind kind, const std::string& key) {
    if (key == "inputs" || key == "shape") return true;
    switch (kind) {
    case LayerKind::Conv:
        return key == "num_output" || key == "kernel" || key == "stride" || key == "pad" || key == "groups" ||
               key == "relu";
    case LayerKind::Fc: return key == "num_output" || key == "relu";
    case LayerKind::MaxPool:
    case LayerKind::AvgPool: return key == "kernel" || key == "stride" || key == "pad";
    case LayerKind::Lrn: return key == "local_size" || key == "alpha" || key == "beta" || key == "k";
    case LayerKind::Concat: return key == "axis";
    default: return false;
    }
}

} // namespace

std::vector<Shape> infer_shapes(const std::vector<LayerNode>& nodes, const Shape& input_shape) {
    std::map<std::string, std::size_t> index;
    std::vector<Shape> shapes(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const LayerNode& n = nodes[i];
        auto fail = [&](const std::string& what) -> void {
            throw ShapeError("layer '" + n.name + "': " + what);
        };
        std::vector<const Shape*> in;
        for (const auto& name : n.inputs) {
            auto it = index.find(name);
            if (it == index.end()) fail("input '" + name + "' is not defined before use");
            in.push_back(&shapes[it->second]);
        }
        auto single_chw = [&]() -> const Shape& {
            if (in.size() != 1) fail("expects exactly one input");
            if (in[0]->size() != 3) fail("expects a [C, H, W] input, got " + shape_to_string(*in[0]));
            return *in[0];
        };
        Shape out;
        try {
            switch (n.kind) {
            case LayerKind::Data: out = input_shape; break;
            case LayerKind::Conv: {
                const Shape& s = single_chw();
                if (n.num_output < 1) fail("num_output must be positive");
                if (n.conv.groups < 1 || s[0] % n.conv.groups || n.num_output % n.conv.groups)
                    fail("channels " + std::to_string(s[0]) + " -> " + std::to_string(n.num_output) +
                         " not divisible by groups " + std::to_string(n.conv.groups));
                out = {n.num_output, conv_output_size(s[1], n.kernel_h, n.conv.stride_h, n.conv.pad_h, "height"),
                       conv_output_size(s[2], n.kernel_w, n.conv.stride_w, n.conv.pad_w, "width")};
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::AvgPool: {
                const Shape& s = single_chw();
                out = {s[0], pool_output_size(s[1], n.kernel_h, n.conv.stride_h, n.conv.pad_h, "height"),
                       pool_output_size(s[2], n.kernel_w, n.conv.stride_w, n.conv.pad_w, "width")};
                break;
            }
            case LayerKind::Lrn:
                out = single_chw();
                if (n.lrn.local_size < 1 || n.lrn.local_size % 2 == 0) fail("local_size must be odd");
                break;
            case LayerKind::Relu:
            case LayerKind::Dropout:
            case LayerKind::Softmax:
                if (in.size() != 1) fail("expects exactly one input");
                out = *in[0];
                break;
            case LayerKind::Fc:
                if (in.size() != 1) fail("expects exactly one input");
                if (n.num_output < 1) fail("num_output must be positive");
                out = {n.num_output};
                break;
            case LayerKind::Concat: {
                if (in.empty()) fail("expects at least one input");
                const Shape& f = *in[0];
                if (n.axis < 0 || static_cast<std::size_t>(n.axis) >= f.size()) fail("concat axis out of range");
                out = f;
                out[n.axis] = 0;
                for (const Shape* s : in) {
                    bool ok = s->size() == f.size();
                    for (std::size_t d = 0; ok && d < f.size(); ++d)
                        if (static_cast<int>(d) != n.axis && (*s)[d] != f[d]) ok = false;
                    if (!ok) fail("concat inputs disagree: " + shape_to_string(f) + " vs " + shape_to_string(*s));
                    out[n.axis] += (*s)[n.axis];
                }
                break;
            }
            }
        } catch (const ShapeError& e) {
            const std::string msg = e.what();
            if (msg.rfind("layer '", 0) == 0) throw;
            fail(msg);
        }
        if (n.declared_shape && *n.declared_shape != out)
            fail("declared shape " + shape_to_string(*n.declared_shape) + " but inferred " + shape_to_string(out));
        shapes[i] = out;
        index[n.name] = i;
    }
    return shapes;
}

NetworkGraph parse_arch(const std::string& text, const std::string& source) {
    std::vector<LayerNode> parsed;
    std::vector<std::size_t> lines;
    std::optional<Shape> input_shape;
    std::set<std::string> names;

    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const LineParser lp{source, lineno};
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        if (tok[0].find('=') != std::string::npos) {
            const auto eq = tok[0].find('=');
            if (tok.size() != 1 || tok[0].substr(0, eq) != "input_shape")
                lp.fail("expected 'input_shape=c,h,w' or a layer line");
            if (input_shape) lp.fail("input_shape declared twice");
            input_shape = lp.to_shape("input_shape", tok[0].substr(eq + 1));
            continue;
        }
        if (tok.size() < 2) lp.fail("layer '" + tok[0] + "' has no kind");
        LayerNode node;
        node.name = tok[0];
        const auto kind = kind_from(tok[1]);
        if (!kind) lp.fail("unknown layer kind '" + tok[1] + "' for '" + node.name + "'");
        node.kind = *kind;
        if (!names.insert(node.name).second) lp.fail("duplicate layer name '" + node.name + "'");

        bool have_kernel = false;
        for (std::size_t t = 2; t < tok.size(); ++t) {
            const auto eq = tok[t].find('=');
            if (eq == std::string::npos || eq == 0) lp.fail("expected key=value, got '" + tok[t] + "'");
            const std::string key = tok[t].substr(0, eq);
            const std::string val = tok[t].substr(eq + 1);
            if (!allowed(node.kind, key))
                lp.fail("key '" + key + "' is not valid for " + to_string(node.kind) + " layer '" + node.name + "'");
            if (key == "inputs") node.inputs = lp.to_list(val);
            else if (key == "shape") node.declared_shape = lp.to_shape(key, val);
            else if (key == "num_output") node.num_output = lp.to_int(key, val);
            else if (key == "kernel") {
                std::tie(node.kernel_h, node.kernel_w) = lp.to_pair(key, val);
                have_kernel = true;
            } else if (key == "stride") std::tie(node.conv.stride_h, node.conv.stride_w) = lp.to_pair(key, val);
            else if (key == "pad") std::tie(node.conv.pad_h, node.conv.pad_w) = lp.to_pair(key, val);
            else if (key == "groups") node.conv.groups = lp.to_int(key, val);
            else if (key == "relu") node.fused_relu = lp.to_int(key, val) != 0;
            else if (key == "local_size") node.lrn.local_size = lp.to_int(key, val);
            else if (key == "alpha") node.lrn.alpha = lp.to_float(key, val);
            else if (key == "beta") node.lrn.beta = lp.to_float(key, val);
            else if (key == "k") node.lrn.k = lp.to_float(key, val);
            else if (key == "axis") node.axis = lp.to_int(key, val);
        }
        const bool spatial = node.kind == LayerKind::Conv || node.kind == LayerKind::MaxPool ||
                             node.kind == LayerKind::AvgPool;
        if (spatial && !have_kernel) lp.fail("layer '" + node.name + "' needs kernel=");
        if ((node.kind == LayerKind::Conv || node.kind == LayerKind::Fc) && node.num_output < 1)
            lp.fail("layer '" + node.name + "' needs num_output=");
        if (node.kind == LayerKind::Data && !node.inputs.empty()) lp.fail("data layer takes no inputs");
        if (node.kind != LayerKind::Data && node.inputs.empty()) lp.fail("layer '" + node.name + "' needs inputs=");
        parsed.push_back(std::move(node));
        lines.push_back(lineno);
    }

    if (!input_shape) throw ParseError(source, 0, "missing input_shape=c,h,w header");
    const auto data_count = std::count_if(parsed.begin(), parsed.end(),
                                          [](const LayerNode& n) { return n.kind == LayerKind::Data; });
    if (data_count != 1)
        throw ParseError(source, 0, "expected exactly one data layer, found " + std::to_string(data_count));

    // Resolve names, then a stable Kahn topological sort.
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < parsed.size(); ++i) index[parsed[i].name] = i;
    std::vector<std::vector<std::size_t>> users(parsed.size());
    std::vector<int> pending(parsed.size(), 0);
    for (std::size_t i = 0; i < parsed.size(); ++i)
        for (const auto& in_name : parsed[i].inputs) {
            auto it = index.find(in_name);
            if (it == index.end())
                throw ParseError(source, lines[i], "layer '" + parsed[i].name + "' references unknown input '" + in_name + "'");
            users[it->second].push_back(i);
            ++pending[i];
        }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < parsed.size(); ++i)
        if (pending[i] == 0) ready.insert(i);
    NetworkGraph g;
    g.input_shape = *input_shape;
    while (!ready.empty()) {
        const std::size_t i = *ready.begin();
        ready.erase(ready.begin());
        g.nodes.push_back(parsed[i]);
        for (std::size_t u : users[i])
            if (--pending[u] == 0) ready.insert(u);
    }
    if (g.nodes.size() != parsed.size()) {
        std::string cyc;
        for (std::size_t i = 0; i < parsed.size(); ++i)
            if (pending[i] > 0) cyc += (cyc.empty() ? "" : ", ") + parsed[i].name;
        throw ParseError(source, 0, "cycle among layers: " + cyc);
    }
    g.shapes = infer_shapes(g.nodes, g.input_shape);
    return g;
}

NetworkGraph load_arch(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open arch file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_arch(ss.str(), path.string());
}

} // namespace texbench
