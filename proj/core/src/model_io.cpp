#include "sobolev/model_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sobolev::nn {

namespace {

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
    out << "tensor " << name << " " << t.rows() << " " << t.cols() << "\n";
    char buf[40];
    for (size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", t.at(i));
        out << buf << (i + 1 == t.size() ? "\n" : " ");
    }
}

Tensor read_tensor(std::istream& in, const std::string& want_name) {
    std::string kw, name;
    int rows = 0, cols = 0;
    if (!(in >> kw >> name >> rows >> cols) || kw != "tensor")
        throw Error("checkpoint: expected 'tensor " + want_name + "' record");
    if (name != want_name)
        throw Error("checkpoint: expected tensor '" + want_name + "', found '" + name + "'");
    Tensor t(rows, cols);
    for (size_t i = 0; i < t.size(); ++i)
        if (!(in >> t.at(i))) throw Error("checkpoint: truncated data for tensor '" + name + "'");
    return t;
}

}  // namespace

void save_mlp(std::ostream& out, const Mlp& m) {
    out << "sobolev-mlp v1\n";
    out << "layers";
    for (int s : m.spec.layer_sizes) out << " " << s;
    out << "\n";
    out << "activation " << to_string(m.spec.activation) << "\n";
    out << "head " << to_string(m.spec.head) << "\n";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", m.spec.leaky_slope);
    out << "leaky_slope " << buf << "\n";
    for (size_t l = 0; l < m.weights.size(); ++l) {
        write_tensor(out, "w" + std::to_string(l), m.weights[l]);
        write_tensor(out, "b" + std::to_string(l), m.biases[l]);
    }
    if (!out) throw Error("checkpoint: write failed");
}

void save_mlp(const std::string& path, const Mlp& m) {
    std::ofstream f(path);
    if (!f) throw Error("checkpoint: cannot open '" + path + "' for writing");
    save_mlp(f, m);
}

Mlp load_mlp(std::istream& in) {
    std::string magic, version;
    if (!(in >> magic >> version) || magic != "sobolev-mlp" || version != "v1")
        throw Error("checkpoint: bad header (expected 'sobolev-mlp v1')");

    std::string kw;
    if (!(in >> kw) || kw != "layers") throw Error("checkpoint: missing 'layers'");
    std::string rest;
    std::getline(in, rest);
    std::istringstream ls(rest);
    MlpSpec spec;
    for (int s; ls >> s;) spec.layer_sizes.push_back(s);
    if (spec.layer_sizes.size() < 2) throw Error("checkpoint: need at least two layer sizes");

    std::string word;
    if (!(in >> kw >> word) || kw != "activation") throw Error("checkpoint: missing 'activation'");
    spec.activation = activation_from_string(word);
    if (!(in >> kw >> word) || kw != "head") throw Error("checkpoint: missing 'head'");
    spec.head = head_from_string(word);
    if (!(in >> kw >> spec.leaky_slope) || kw != "leaky_slope")
        throw Error("checkpoint: missing 'leaky_slope'");

    Mlp m;
    m.spec = spec;
    for (size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        Tensor w = read_tensor(in, "w" + std::to_string(l));
        if (w.rows() != spec.layer_sizes[l] || w.cols() != spec.layer_sizes[l + 1])
            throw Error("checkpoint: tensor w" + std::to_string(l) + " shape " + w.shape_str() +
                        " does not match layers header");
        Tensor b = read_tensor(in, "b" + std::to_string(l));
        if (b.rows() != 1 || b.cols() != spec.layer_sizes[l + 1])
            throw Error("checkpoint: tensor b" + std::to_string(l) + " shape " + b.shape_str() +
                        " does not match layers header");
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

Mlp load_mlp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("checkpoint: cannot open '" + path + "'");
    return load_mlp(f);
}

}  // namespace sobolev::nn
