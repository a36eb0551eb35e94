#include "dlp/backends.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dlp/rng.hpp"

namespace dlp::backends {

namespace fs = std::filesystem;
using nn::ActivationLayer;
using nn::Conv2d;
using nn::ModulePtr;
using nn::Sequential;

Kind kind_from_string(const std::string& s) {
    if (s == "feature_vgg16_relu3_3") return Kind::feature_vgg16_relu3_3;
    if (s == "edge_dexined") return Kind::edge_dexined;
    if (s == "lpips_distance") return Kind::lpips_distance;
    if (s == "stub_feature") return Kind::stub_feature;
    if (s == "stub_edge") return Kind::stub_edge;
    if (s == "stub_distance") return Kind::stub_distance;
    if (s == "stub_inception") return Kind::stub_inception;
    throw std::invalid_argument("unknown backend kind '" + s + "'");
}

std::string to_string(Kind k) {
    switch (k) {
        case Kind::feature_vgg16_relu3_3: return "feature_vgg16_relu3_3";
        case Kind::edge_dexined: return "edge_dexined";
        case Kind::lpips_distance: return "lpips_distance";
        case Kind::stub_feature: return "stub_feature";
        case Kind::stub_edge: return "stub_edge";
        case Kind::stub_distance: return "stub_distance";
        case Kind::stub_inception: return "stub_inception";
    }
    return "?";
}

bool is_stub(Kind k) {
    return k == Kind::stub_feature || k == Kind::stub_edge || k == Kind::stub_distance ||
           k == Kind::stub_inception;
}
bool is_feature_kind(Kind k) {
    return k == Kind::feature_vgg16_relu3_3 || k == Kind::stub_feature;
}
bool is_edge_kind(Kind k) { return k == Kind::edge_dexined || k == Kind::stub_edge; }
bool is_distance_kind(Kind k) {
    return k == Kind::lpips_distance || k == Kind::stub_distance;
}

std::vector<std::pair<std::string, ag::Var>> BackendHandle::parameters() const {
    std::vector<std::pair<std::string, ag::Var>> out;
    for (size_t i = 0; i < stages.size(); ++i)
        for (auto& [name, p] : stages[i]->named_parameters())
            out.emplace_back("stage" + std::to_string(i) + "." + name, p);
    for (size_t i = 0; i < lin_weights.size(); ++i)
        out.emplace_back("lin" + std::to_string(i), lin_weights[i]);
    return out;
}

namespace {

// ------------------------------------------------------------- stub stacks

ModulePtr seeded_conv(int64_t in_ch, int64_t out_ch, int64_t k, int64_t stride, bool reflect,
                      double stddev, Rng& rng, bool final_layer = false) {
    auto seq = std::make_shared<Sequential>();
    auto conv = std::make_shared<Conv2d>(in_ch, out_ch, k, stride, k / 2, reflect);
    seq->push(conv);
    if (!final_layer) seq->push(std::make_shared<ActivationLayer>(nn::Activation::relu));
    Rng local = rng;  // keep the outer stream position deterministic per layer
    for (auto& [name, p] : seq->named_parameters()) {
        if (name.ends_with("bias"))
            p->value.fill(0.0);
        else
            for (int64_t i = 0; i < p->value.numel(); ++i) p->value[i] = local.normal(0.0, stddev);
    }
    rng = local;
    seq->set_trainable(false);
    return seq;
}

BackendHandle make_stub_feature() {
    BackendHandle b;
    b.kind = Kind::stub_feature;
    b.id = "stub_feature/seed17";
    Rng rng(17);
    b.stages.push_back(seeded_conv(3, 16, 3, 2, false, 0.25, rng));
    b.stages.push_back(seeded_conv(16, 32, 3, 2, false, 0.20, rng));
    b.stages.push_back(seeded_conv(32, 32, 3, 1, false, 0.20, rng));
    b.feature_channels = 32;
    b.feature_divisor = 4;
    return b;
}

BackendHandle make_stub_edge() {
    BackendHandle b;
    b.kind = Kind::stub_edge;
    b.id = "stub_edge/seed29";
    Rng rng(29);
    auto stack = std::make_shared<Sequential>();
    stack->push(seeded_conv(3, 8, 3, 1, true, 0.30, rng));
    stack->push(seeded_conv(8, 8, 3, 1, true, 0.30, rng));
    stack->push(seeded_conv(8, 1, 3, 1, true, 0.30, rng, /*final_layer=*/true));
    stack->set_trainable(false);
    b.stages.push_back(stack);
    b.feature_channels = 1;
    return b;
}

BackendHandle make_stub_distance() {
    BackendHandle b;
    b.kind = Kind::stub_distance;
    b.id = "stub_distance/seed43";
    Rng rng(43);
    b.stages.push_back(seeded_conv(3, 12, 3, 2, false, 0.25, rng));
    b.stages.push_back(seeded_conv(12, 24, 3, 2, false, 0.20, rng));
    b.stages.push_back(seeded_conv(24, 24, 3, 1, false, 0.20, rng));
    for (int64_t c : {int64_t{12}, int64_t{24}, int64_t{24}})
        b.lin_weights.push_back(ag::leaf(Tensor({c}, 1.0), false, "lin"));
    return b;
}

BackendHandle make_stub_inception() {
    BackendHandle b;
    b.kind = Kind::stub_inception;
    b.id = "stub_inception/seed71";
    Rng rng(71);
    b.stages.push_back(seeded_conv(3, 16, 3, 2, false, 0.25, rng));
    b.stages.push_back(seeded_conv(16, 32, 3, 2, false, 0.20, rng));
    b.stages.push_back(seeded_conv(32, 64, 3, 2, false, 0.15, rng));
    b.feature_channels = 64;
    return b;
}

// --------------------------------------------------------- manifest loading

struct ManifestEntry {
    std::string name;
    std::vector<int64_t> shape;
};

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
    const fs::path mf = dir / "manifest.txt";
    std::ifstream in(mf);
    if (!in) throw std::runtime_error("backend weights: cannot open " + mf.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ManifestEntry e;
        std::string shape_str, dtype;
        if (!(ls >> e.name >> shape_str >> dtype))
            throw std::runtime_error("backend weights: malformed manifest line: " + line);
        if (dtype != "float32")
            throw std::runtime_error("backend weights: entry '" + e.name +
                                     "': unsupported dtype " + dtype);
        std::istringstream ss(shape_str);
        std::string d;
        while (std::getline(ss, d, 'x')) e.shape.push_back(std::stoll(d));
        entries.push_back(std::move(e));
    }
    return entries;
}

Tensor load_entry(const fs::path& dir, const ManifestEntry& e) {
    const fs::path f = dir / (e.name + ".bin");
    std::ifstream in(f, std::ios::binary);
    if (!in) throw std::runtime_error("backend weights: missing file " + f.string());
    const int64_t n = Tensor::numel_of(e.shape);
    std::vector<float> raw(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(raw.data()), n * static_cast<int64_t>(sizeof(float)));
    if (!in)
        throw std::runtime_error("backend weights: entry '" + e.name + "': file too short");
    Tensor t(e.shape);
    for (int64_t i = 0; i < n; ++i) t[i] = static_cast<double>(raw[static_cast<size_t>(i)]);
    return t;
}

std::string shape_str(const std::vector<int64_t>& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out;
}

// expected entry list for the vgg16 relu3_3 subnetwork, in forward order
struct VggLayer {
    const char* name;
    int64_t in_ch, out_ch;
    bool pool_after;
};
constexpr VggLayer kVggLayers[] = {
    {"conv1_1", 3, 64, false},   {"conv1_2", 64, 64, true},
    {"conv2_1", 64, 128, false}, {"conv2_2", 128, 128, true},
    {"conv3_1", 128, 256, false}, {"conv3_2", 256, 256, false}, {"conv3_3", 256, 256, false},
};

class MaxPoolLayer : public nn::Module {
public:
    ag::Var forward(const ag::Var& x) override { return ag::maxpool2(x); }
};

ModulePtr conv_from_tensors(Tensor w, Tensor bias, int64_t stride, bool with_relu) {
    auto seq = std::make_shared<Sequential>();
    auto conv = std::make_shared<Conv2d>(w.dim(1), w.dim(0), w.dim(2), stride, w.dim(2) / 2);
    seq->push(conv);
    if (with_relu) seq->push(std::make_shared<ActivationLayer>(nn::Activation::relu));
    for (auto& [name, p] : seq->named_parameters()) {
        if (name.ends_with("bias"))
            p->value = std::move(bias);
        else
            p->value = std::move(w);
    }
    seq->set_trainable(false);
    return seq;
}

const ManifestEntry& find_entry(const std::vector<ManifestEntry>& entries,
                                const std::string& name,
                                const std::vector<int64_t>& expected_shape) {
    for (const auto& e : entries) {
        if (e.name != name) continue;
        if (!expected_shape.empty() && e.shape != expected_shape)
            throw std::runtime_error("backend weights: entry '" + name + "': expected shape " +
                                     shape_str(expected_shape) + ", manifest has " +
                                     shape_str(e.shape));
        return e;
    }
    throw std::runtime_error("backend weights: missing manifest entry '" + name + "'");
}

BackendHandle load_vgg16(const fs::path& dir) {
    auto entries = read_manifest(dir);
    BackendHandle b;
    b.kind = Kind::feature_vgg16_relu3_3;
    b.id = "feature_vgg16_relu3_3@" + dir.string();
    b.weights_path = dir;
    auto stage = std::make_shared<Sequential>();
    for (const auto& layer : kVggLayers) {
        const auto& we = find_entry(entries, std::string(layer.name) + ".weight",
                                    {layer.out_ch, layer.in_ch, 3, 3});
        const auto& be =
            find_entry(entries, std::string(layer.name) + ".bias", {layer.out_ch});
        stage->push(conv_from_tensors(load_entry(dir, we), load_entry(dir, be), 1, true));
        if (layer.pool_after) {
            stage->set_trainable(false);
            b.stages.push_back(stage);
            b.stages.push_back(std::make_shared<MaxPoolLayer>());
            stage = std::make_shared<Sequential>();
        }
    }
    stage->set_trainable(false);
    b.stages.push_back(stage);
    b.feature_channels = 256;
    b.feature_divisor = 4;
    // [-1,1] -> [0,1] -> ImageNet normalization
    const double mean[3] = {0.485, 0.456, 0.406};
    const double stdd[3] = {0.229, 0.224, 0.225};
    for (int c = 0; c < 3; ++c) {
        b.in_scale.push_back(0.5 / stdd[c]);
        b.in_shift.push_back((0.5 - mean[c]) / stdd[c]);
    }
    return b;
}

// Generic sequential conv stack: consecutive convN.weight/convN.bias entries.
// Used for the edge backend (fused-output subnetwork exported to this layout).
BackendHandle load_conv_stack_edge(const fs::path& dir) {
    auto entries = read_manifest(dir);
    BackendHandle b;
    b.kind = Kind::edge_dexined;
    b.id = "edge_dexined@" + dir.string();
    b.weights_path = dir;
    auto stack = std::make_shared<Sequential>();
    int64_t in_ch = 3;
    int idx = 0;
    int64_t out_ch = 0;
    while (true) {
        const std::string wn = "conv" + std::to_string(idx) + ".weight";
        bool found = false;
        for (const auto& e : entries)
            if (e.name == wn) found = true;
        if (!found) break;
        const auto& we = find_entry(entries, wn, {});
        if (we.shape.size() != 4 || we.shape[1] != in_ch)
            throw std::runtime_error("backend weights: entry '" + wn + "': expected " +
                                     std::to_string(in_ch) + " input channels, manifest has " +
                                     shape_str(we.shape));
        out_ch = we.shape[0];
        const auto& be =
            find_entry(entries, "conv" + std::to_string(idx) + ".bias", {out_ch});
        const bool last = [&] {
            const std::string next = "conv" + std::to_string(idx + 1) + ".weight";
            for (const auto& e : entries)
                if (e.name == next) return false;
            return true;
        }();
        stack->push(conv_from_tensors(load_entry(dir, we), load_entry(dir, be), 1, !last));
        in_ch = out_ch;
        ++idx;
    }
    if (idx == 0) throw std::runtime_error("backend weights: no conv entries in manifest");
    if (out_ch != 1)
        throw std::runtime_error("backend weights: edge stack must end in 1 channel, got " +
                                 std::to_string(out_ch));
    stack->set_trainable(false);
    b.stages.push_back(stack);
    b.feature_channels = 1;
    return b;
}

BackendHandle load_lpips(const fs::path& dir) {
    auto entries = read_manifest(dir);
    BackendHandle b;
    b.kind = Kind::lpips_distance;
    b.id = "lpips_distance@" + dir.string();
    b.weights_path = dir;
    int64_t in_ch = 3;
    int idx = 0;
    while (true) {
        const std::string wn = "conv" + std::to_string(idx) + ".weight";
        bool found = false;
        for (const auto& e : entries)
            if (e.name == wn) found = true;
        if (!found) break;
        const auto& we = find_entry(entries, wn, {});
        if (we.shape.size() != 4 || we.shape[1] != in_ch)
            throw std::runtime_error("backend weights: entry '" + wn + "': expected " +
                                     std::to_string(in_ch) + " input channels, manifest has " +
                                     shape_str(we.shape));
        const int64_t out_ch = we.shape[0];
        const auto& be = find_entry(entries, "conv" + std::to_string(idx) + ".bias", {out_ch});
        b.stages.push_back(conv_from_tensors(load_entry(dir, we), load_entry(dir, be), 2, true));
        const auto& le = find_entry(entries, "lin" + std::to_string(idx) + ".weight", {out_ch});
        b.lin_weights.push_back(ag::leaf(load_entry(dir, le), false, le.name));
        in_ch = out_ch;
        ++idx;
    }
    if (idx == 0) throw std::runtime_error("backend weights: no conv entries in manifest");
    return b;
}

ag::Var apply_input_convention(const BackendHandle& b, const ag::Var& img) {
    if (b.in_scale.empty()) return img;
    Tensor s({static_cast<int64_t>(b.in_scale.size())});
    Tensor sh({static_cast<int64_t>(b.in_shift.size())});
    for (size_t i = 0; i < b.in_scale.size(); ++i) {
        s[static_cast<int64_t>(i)] = b.in_scale[i];
        sh[static_cast<int64_t>(i)] = b.in_shift[i];
    }
    return ag::channel_shift(ag::channel_scale(img, ag::constant(std::move(s))),
                             ag::constant(std::move(sh)));
}

ag::Var ensure_3ch(const ag::Var& x) {
    if (x->value.dim(1) == 3) return x;
    if (x->value.dim(1) == 1) return ag::concat_channels({x, x, x});
    throw std::invalid_argument("perceptual_distance: inputs must have 1 or 3 channels");
}

}  // namespace

BackendHandle load_backend(Kind kind, const fs::path& weights_path) {
    switch (kind) {
        case Kind::stub_feature: return make_stub_feature();
        case Kind::stub_edge: return make_stub_edge();
        case Kind::stub_distance: return make_stub_distance();
        case Kind::stub_inception: return make_stub_inception();
        case Kind::feature_vgg16_relu3_3: return load_vgg16(weights_path);
        case Kind::edge_dexined: return load_conv_stack_edge(weights_path);
        case Kind::lpips_distance: return load_lpips(weights_path);
    }
    throw std::invalid_argument("load_backend: unknown kind");
}

ag::Var extract_features(const BackendHandle& b, const ag::Var& img) {
    if (!is_feature_kind(b.kind))
        throw std::invalid_argument("extract_features: backend kind " + to_string(b.kind) +
                                    " is not a feature backend");
    ag::Var v = apply_input_convention(b, img);
    for (const auto& stage : b.stages) v = stage->forward(v);
    return v;
}

Tensor extract_features(const BackendHandle& b, const Tensor& img) {
    return extract_features(b, ag::constant(img))->value;
}

ag::Var extract_edges(const BackendHandle& b, const ag::Var& img) {
    if (!is_edge_kind(b.kind))
        throw std::invalid_argument("extract_edges: backend kind " + to_string(b.kind) +
                                    " is not an edge backend");
    ag::Var v = apply_input_convention(b, img);
    for (const auto& stage : b.stages) v = stage->forward(v);
    return ag::sigmoid(v);
}

Tensor extract_edges(const BackendHandle& b, const Tensor& img) {
    return extract_edges(b, ag::constant(img))->value;
}

ag::Var perceptual_distance(const BackendHandle& b, const ag::Var& a, const ag::Var& c) {
    if (!is_distance_kind(b.kind))
        throw std::invalid_argument("perceptual_distance: backend kind " + to_string(b.kind) +
                                    " is not a distance backend");
    if (!a->value.same_shape(c->value))
        throw std::invalid_argument("perceptual_distance: shape mismatch " +
                                    a->value.shape_str() + " vs " + c->value.shape_str());
    ag::Var va = apply_input_convention(b, ensure_3ch(a));
    ag::Var vc = apply_input_convention(b, ensure_3ch(c));
    ag::Var total;
    for (size_t i = 0; i < b.stages.size(); ++i) {
        va = b.stages[i]->forward(va);
        vc = b.stages[i]->forward(vc);
        ag::Var diff = ag::square(
            ag::sub(ag::channel_l2_normalize(va), ag::channel_l2_normalize(vc)));
        ag::Var weighted = ag::channel_scale(diff, b.lin_weights[i]);
        // spatial mean, sum over channels
        ag::Var layer =
            ag::mul_scalar(ag::mean_all(weighted), static_cast<double>(diff->value.dim(1)));
        total = total ? ag::add(total, layer) : layer;
    }
    return total;
}

double perceptual_distance(const BackendHandle& b, const Tensor& a, const Tensor& c) {
    return perceptual_distance(b, ag::constant(a), ag::constant(c))->value[0];
}

std::vector<double> pooled_features(const BackendHandle& b, const Tensor& img) {
    if (b.kind != Kind::stub_inception)
        throw std::invalid_argument("pooled_features: backend kind " + to_string(b.kind) +
                                    " does not produce pooled vectors");
    ag::Var v = ag::constant(img);
    for (const auto& stage : b.stages) v = stage->forward(v);
    ag::Var pooled = ag::global_avg_pool(v);
    std::vector<double> out(static_cast<size_t>(pooled->value.numel()));
    for (int64_t i = 0; i < pooled->value.numel(); ++i) out[static_cast<size_t>(i)] =
        pooled->value[i];
    return out;
}

}  // namespace dlp::backends
