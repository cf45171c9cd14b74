#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tagspace/errors.hpp"
#include "tagspace/trainer.hpp"

namespace tagspace {

namespace {

constexpr const char* kMagic = "tagspace-checkpoint";
constexpr int kVersion = 1;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void put_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);  // hexfloat, bit-exact round trip
    os << buf << '\n';
}

void put_matrix(std::ostream& os, const Matrix& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    for (double v : m.data()) put_double(os, v);
}

void put_vec(std::ostream& os, const std::vector<double>& v) {
    os << v.size() << '\n';
    for (double x : v) put_double(os, x);
}

struct Reader {
    std::istringstream in;
    explicit Reader(std::string s) : in(std::move(s)) {}

    std::string token() {
        std::string t;
        if (!(in >> t)) throw ParseError("checkpoint: unexpected end of file");
        return t;
    }
    long long integer() {
        try {
            return std::stoll(token());
        } catch (const std::exception&) {
            throw ParseError("checkpoint: expected integer");
        }
    }
    double real() {
        std::string t = token();
        char* end = nullptr;
        double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size()) throw ParseError("checkpoint: bad real '" + t + "'");
        return v;
    }
    Matrix matrix() {
        auto r = integer(), c = integer();
        Matrix m(r, c);
        for (double& v : m.data()) v = real();
        return m;
    }
    std::vector<double> vec() {
        auto n = integer();
        std::vector<double> v(n);
        for (double& x : v) x = real();
        return v;
    }
};

void put_layers(std::ostream& os, const std::vector<ProjectorNet::Layer>& layers) {
    os << layers.size() << '\n';
    for (const auto& l : layers) {
        put_matrix(os, l.weight);
        put_vec(os, l.bias);
    }
}

std::vector<ProjectorNet::Layer> read_layers(Reader& r) {
    auto n = r.integer();
    std::vector<ProjectorNet::Layer> layers(n);
    for (auto& l : layers) {
        l.weight = r.matrix();
        l.bias = r.vec();
    }
    return layers;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ostringstream body;
    body << kMagic << ' ' << kVersion << '\n';

    const auto& nc = ck.net.config();
    body << "net " << nc.input_dim << ' ' << nc.output_dim << ' '
         << (nc.activation == Activation::Relu ? "relu" : "tanh") << ' ' << nc.init_seed << ' '
         << nc.hidden_dims.size();
    for (int h : nc.hidden_dims) body << ' ' << h;
    body << '\n';
    put_layers(body, ck.net.layers());

    body << "table " << ck.table.dim << '\n';
    put_matrix(body, ck.table.vectors);
    body << "mask " << ck.table.trainable_mask.size() << '\n';
    for (bool b : ck.table.trainable_mask) body << (b ? 1 : 0) << '\n';
    body << "snapshot\n";
    put_matrix(body, ck.snapshot.initial_vectors);

    body << "vocab " << ck.vocab.tokens.size() << '\n';
    for (std::size_t i = 0; i < ck.vocab.tokens.size(); ++i)
        body << ck.vocab.tokens[i] << ' ' << ck.vocab.frequencies[i] << '\n';

    const auto& oc = ck.opt.cfg;
    body << "optimizer " << static_cast<int>(oc.kind) << ' ' << ck.opt.step << '\n';
    put_double(body, oc.lr_net);
    put_double(body, oc.lr_table);
    put_double(body, oc.momentum);
    put_double(body, oc.adam_beta1);
    put_double(body, oc.adam_beta2);
    put_double(body, oc.adam_eps);
    put_layers(body, ck.opt.m);
    put_layers(body, ck.opt.v);

    std::string text = body.str();
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw ParseError("cannot write checkpoint: " + path);
        f << text << "checksum " << fnv1a(text) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("checkpoint not found: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    std::string text = buf.str();

    auto cpos = text.rfind("checksum ");
    if (cpos == std::string::npos)
        throw ParseError("checkpoint corrupted: missing checksum: " + path);
    std::string body = text.substr(0, cpos);
    std::uint64_t stored = 0;
    try {
        stored = std::stoull(text.substr(cpos + 9));
    } catch (const std::exception&) {
        throw ParseError("checkpoint corrupted: bad checksum line: " + path);
    }
    if (fnv1a(body) != stored)
        throw ParseError("checkpoint corrupted: checksum mismatch: " + path);

    Reader r(std::move(body));
    if (r.token() != kMagic) throw ParseError("not a checkpoint file: " + path);
    auto version = r.integer();
    if (version != kVersion)
        throw ParseError("checkpoint version " + std::to_string(version) +
                         " unsupported (expected " + std::to_string(kVersion) + ")");

    Checkpoint ck;
    if (r.token() != "net") throw ParseError("checkpoint: expected net section");
    ProjectorConfig nc;
    nc.input_dim = static_cast<int>(r.integer());
    nc.output_dim = static_cast<int>(r.integer());
    nc.activation = r.token() == "relu" ? Activation::Relu : Activation::Tanh;
    nc.init_seed = static_cast<std::uint64_t>(r.integer());
    auto nh = r.integer();
    for (long long i = 0; i < nh; ++i) nc.hidden_dims.push_back(static_cast<int>(r.integer()));
    ck.net = ProjectorNet(nc);
    ck.net.layers() = read_layers(r);

    if (r.token() != "table") throw ParseError("checkpoint: expected table section");
    ck.table.dim = static_cast<int>(r.integer());
    ck.table.vectors = r.matrix();
    if (r.token() != "mask") throw ParseError("checkpoint: expected mask section");
    auto nm = r.integer();
    ck.table.trainable_mask.resize(nm);
    for (long long i = 0; i < nm; ++i) ck.table.trainable_mask[i] = r.integer() != 0;
    if (r.token() != "snapshot") throw ParseError("checkpoint: expected snapshot section");
    ck.snapshot.initial_vectors = r.matrix();

    if (r.token() != "vocab") throw ParseError("checkpoint: expected vocab section");
    auto nv = r.integer();
    for (long long i = 0; i < nv; ++i) {
        std::string tok = r.token();
        auto freq = r.integer();
        ck.vocab.index[tok] = static_cast<int>(ck.vocab.tokens.size());
        ck.vocab.tokens.push_back(tok);
        ck.vocab.frequencies.push_back(freq);
    }

    if (r.token() != "optimizer") throw ParseError("checkpoint: expected optimizer section");
    ck.opt.cfg.kind = static_cast<OptimizerKind>(r.integer());
    ck.opt.step = r.integer();
    ck.opt.cfg.lr_net = r.real();
    ck.opt.cfg.lr_table = r.real();
    ck.opt.cfg.momentum = r.real();
    ck.opt.cfg.adam_beta1 = r.real();
    ck.opt.cfg.adam_beta2 = r.real();
    ck.opt.cfg.adam_eps = r.real();
    ck.opt.m = read_layers(r);
    ck.opt.v = read_layers(r);
    return ck;
}

}  // namespace tagspace
