#include "donet/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace donet {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
} // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_prime(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

std::size_t param_count(const MlpShape& s) {
    return s.input_dim * s.width + s.width
         + (s.depth - 1) * (s.width * s.width + s.width)
         + s.width * s.output_dim;
}

std::size_t param_count(const MlpParams& p) { return param_count(p.shape); }

MlpParams init_mlp(const MlpShape& shape, Rng& rng) {
    if (shape.input_dim < 1 || shape.width < 1 || shape.depth < 1 || shape.output_dim < 1)
        throw std::invalid_argument("init_mlp: all shape fields must be >= 1");
    MlpParams p;
    p.shape = shape;
    auto make_layer = [&](std::size_t out, std::size_t in, bool with_bias) {
        Layer l;
        l.w = Matrix(out, in);
        const double bound = std::sqrt(6.0 / double(in + out));
        for (std::size_t i = 0; i < out; ++i)
            for (std::size_t j = 0; j < in; ++j) l.w(i, j) = rng.uniform(-bound, bound);
        if (with_bias) l.b.assign(out, 0.0);
        return l;
    };
    p.layers.push_back(make_layer(shape.width, shape.input_dim, true));
    for (std::size_t d = 1; d < shape.depth; ++d)
        p.layers.push_back(make_layer(shape.width, shape.width, true));
    p.layers.push_back(make_layer(shape.output_dim, shape.width, false));
    return p;
}

Matrix forward(const MlpParams& p, const Matrix& x_batch, ForwardCache* cache) {
    if (x_batch.rows() != p.shape.input_dim)
        throw std::invalid_argument("forward: input rows != input_dim");
    if (cache) {
        cache->input = x_batch;
        cache->pre.clear();
        cache->post.clear();
    }
    Matrix z = x_batch;
    for (std::size_t d = 0; d < p.shape.depth; ++d) {
        const Layer& l = p.layers[d];
        Matrix pre = multiply(l.w, z);
        for (std::size_t i = 0; i < pre.rows(); ++i) {
            double* r = pre.row(i);
            const double bi = l.b[i];
            for (std::size_t j = 0; j < pre.cols(); ++j) r[j] += bi;
        }
        Matrix post = pre;
        for (std::size_t i = 0; i < post.rows(); ++i) {
            double* r = post.row(i);
            for (std::size_t j = 0; j < post.cols(); ++j) r[j] = gelu(r[j]);
        }
        if (cache) {
            cache->pre.push_back(std::move(pre));
            cache->post.push_back(post);
        }
        z = std::move(post);
    }
    return multiply(p.layers.back().w, z);
}

MlpGrads backward(const MlpParams& p, const ForwardCache& cache, const Matrix& d_out) {
    if (cache.pre.size() != p.shape.depth || cache.post.size() != p.shape.depth)
        throw std::invalid_argument("backward: cache does not match network depth");
    if (d_out.rows() != p.shape.output_dim || d_out.cols() != cache.input.cols())
        throw std::invalid_argument("backward: d_out shape mismatch");

    MlpGrads g(p.layers.size());
    // Output layer (linear, bias-free).
    g.back().w = multiply_a_bt(d_out, cache.post.back());
    Matrix d_hidden = multiply_at_b(p.layers.back().w, d_out);

    for (std::size_t d = p.shape.depth; d-- > 0;) {
        const Matrix& pre = cache.pre[d];
        Matrix d_pre = d_hidden;
        for (std::size_t i = 0; i < d_pre.rows(); ++i) {
            double* r = d_pre.row(i);
            const double* q = pre.row(i);
            for (std::size_t j = 0; j < d_pre.cols(); ++j) r[j] *= gelu_prime(q[j]);
        }
        const Matrix& in = (d == 0) ? cache.input : cache.post[d - 1];
        g[d].w = multiply_a_bt(d_pre, in);
        g[d].b.assign(d_pre.rows(), 0.0);
        for (std::size_t i = 0; i < d_pre.rows(); ++i) {
            const double* r = d_pre.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d_pre.cols(); ++j) s += r[j];
            g[d].b[i] = s;
        }
        if (d > 0) d_hidden = multiply_at_b(p.layers[d].w, d_pre);
    }
    return g;
}

std::vector<double> flatten(const std::vector<Layer>& layers) {
    std::vector<double> out;
    std::size_t total = 0;
    for (const Layer& l : layers) total += l.w.size() + l.b.size();
    out.reserve(total);
    for (const Layer& l : layers) {
        out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
        out.insert(out.end(), l.b.begin(), l.b.end());
    }
    return out;
}

void assign_from_flat(std::vector<Layer>& layers, const std::vector<double>& flat) {
    std::size_t k = 0;
    for (Layer& l : layers) {
        if (k + l.w.size() + l.b.size() > flat.size())
            throw std::invalid_argument("assign_from_flat: vector too short");
        std::copy(flat.begin() + k, flat.begin() + k + l.w.size(), l.w.data());
        k += l.w.size();
        std::copy(flat.begin() + k, flat.begin() + k + l.b.size(), l.b.begin());
        k += l.b.size();
    }
    if (k != flat.size()) throw std::invalid_argument("assign_from_flat: length mismatch");
}

MlpGrads zeros_like(const MlpParams& p) {
    MlpGrads g(p.layers.size());
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        g[i].w = Matrix(p.layers[i].w.rows(), p.layers[i].w.cols());
        g[i].b.assign(p.layers[i].b.size(), 0.0);
    }
    return g;
}

void save_mlp(const MlpParams& p, const std::string& path) {
    nlohmann::json header = {
        {"input_dim", p.shape.input_dim},
        {"width", p.shape.width},
        {"depth", p.shape.depth},
        {"output_dim", p.shape.output_dim},
    };
    const std::vector<double> flat = flatten(p.layers);
    Matrix row(1, flat.size());
    std::copy(flat.begin(), flat.end(), row.data());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_mlp: cannot open " + path);
    f << header.dump() << "\n" << to_csv(row);
}

MlpParams load_mlp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_mlp: cannot open " + path);
    std::string line;
    std::getline(f, line);
    const auto header = nlohmann::json::parse(line);
    MlpShape shape{header.at("input_dim"), header.at("width"), header.at("depth"),
                   header.at("output_dim")};
    std::ostringstream rest;
    rest << f.rdbuf();
    const Matrix row = from_csv(rest.str());
    Rng dummy(0);
    MlpParams p = init_mlp(shape, dummy);
    std::vector<double> flat(row.data(), row.data() + row.size());
    assign_from_flat(p.layers, flat);
    return p;
}

} // namespace donet
