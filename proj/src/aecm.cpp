#include "clmod/aecm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clmod/baselines.hpp"
#include "clmod/error.hpp"

namespace clmod {

namespace {

constexpr double kLogFloor = 1e-12;

double apply(Activation a, double v) { return a == Activation::leaky_relu && v < 0.0 ? kLeakySlope * v : v; }

void check_terms(const AecmLossBreakdown& b, std::size_t epoch) {
    const std::pair<double, const char*> terms[] = {{b.rec_dae, "rec_dae"}, {b.rec_cm, "rec_cm"},
                                                    {b.sparsity, "sparsity"}, {b.prior, "prior"},
                                                    {b.ortho, "ortho"},     {b.total, "total"}};
    for (const auto& [v, name] : terms)
        if (!std::isfinite(v)) throw DivergenceError(epoch, name);
}

void check_chain(const std::vector<MlpLayer>& layers, std::size_t in, std::size_t out, const char* what) {
    std::size_t width = in;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const MlpLayer& l = layers[i];
        if (l.in() != width || l.bias.rows() != 1 || l.bias.cols() != l.out())
            throw DimensionError(std::string(what) + " layer " + std::to_string(i) + " does not chain");
        width = l.out();
    }
    if (width != out) throw DimensionError(std::string(what) + " ends at the wrong width");
}

std::size_t dense_input_width(const AecmParams& p) {
    if (!p.encoder_layers.empty()) return p.encoder_layers.front().in();
    return p.cm.dim();
}

}  // namespace

AecmArch AecmArch::shallow(std::size_t d, std::size_t code) { return AecmArch{d, {code}, std::nullopt, false}; }

AecmArch AecmArch::identity(std::size_t d) { return AecmArch{d, {}, std::nullopt, false}; }

std::size_t AecmArch::code_dim() const {
    if (!encoder.empty()) return encoder.back();
    return quadratic_input ? 7 : input_dim;
}

std::size_t AecmParams::input_dim() const {
    if (quadratic_input) return 2;
    return dense_input_width(*this);
}

void AecmParams::validate() const {
    cm.validate();
    if (quadratic_input && dense_input_width(*this) != 7)
        throw DimensionError("quadratic features feed 7 columns into the encoder");
    check_chain(encoder_layers, dense_input_width(*this), cm.dim(), "encoder");
    if (encoder_layers.empty() && quadratic_input == false && !decoder_layers.empty())
        throw DimensionError("identity encoder requires an identity decoder");
    if (encoder_layers.empty() && !quadratic_input) return;
    if (decoder_layers.empty()) {
        if (cm.dim() != input_dim()) throw DimensionError("decoder missing for a non-identity encoder");
        return;
    }
    check_chain(decoder_layers, cm.dim(), input_dim(), "decoder");
}

std::vector<MlpLayer> mlp_init(const std::vector<std::size_t>& widths, Rng& rng) {
    std::vector<MlpLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::size_t in = widths[i], out = widths[i + 1];
        if (in == 0 || out == 0) throw DomainError("layer widths must be positive");
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        MlpLayer l;
        l.weights = sample_uniform(rng, in, out, -limit, limit);
        l.bias = Matrix(1, out);
        l.activation = i + 2 == widths.size() ? Activation::linear : Activation::leaky_relu;
        layers.push_back(std::move(l));
    }
    return layers;
}

AecmParams aecm_random_init(const AecmArch& arch, std::size_t k, Rng& rng, double cm_std) {
    if (arch.input_dim == 0) throw DomainError("input_dim must be positive");
    if (arch.quadratic_input && arch.input_dim != 2) throw DomainError("quadratic features need 2 input columns");
    if (k == 0) throw DomainError("k must be positive");
    AecmParams p;
    p.quadratic_input = arch.quadratic_input;
    const std::size_t code = arch.code_dim();
    if (!arch.encoder.empty()) {
        std::vector<std::size_t> enc{arch.quadratic_input ? std::size_t{7} : arch.input_dim};
        enc.insert(enc.end(), arch.encoder.begin(), arch.encoder.end());
        p.encoder_layers = mlp_init(enc, rng);

        std::vector<std::size_t> dec{code};
        if (arch.decoder) {
            dec.insert(dec.end(), arch.decoder->begin(), arch.decoder->end());
        } else {
            dec.insert(dec.end(), arch.encoder.rbegin() + 1, arch.encoder.rend());
        }
        dec.push_back(arch.input_dim);
        p.decoder_layers = mlp_init(dec, rng);
    } else if (arch.quadratic_input) {
        p.decoder_layers = mlp_init({code, arch.input_dim}, rng);
    }
    p.cm = cm_random_init(code, k, rng, cm_std);
    return p;
}

Matrix quadratic_feature_layer(const Matrix& x) {
    if (x.cols() != 2) throw DimensionError("quadratic_feature_layer: expected 2 columns, got " +
                                            std::to_string(x.cols()));
    Matrix out(x.rows(), 7);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double a = x(i, 0), b = x(i, 1);
        const double row[7] = {1.0, a, b, a * a, a * b, b * b, b * a};
        std::copy(row, row + 7, out.row(i).begin());
    }
    return out;
}

Matrix mlp_forward(const Matrix& x, const std::vector<MlpLayer>& layers) {
    Matrix h = x;
    for (const MlpLayer& l : layers) {
        if (h.cols() != l.in()) throw DimensionError("mlp_forward: width mismatch");
        Matrix next = matmul(h, l.weights);
        for (std::size_t i = 0; i < next.rows(); ++i) {
            auto r = next.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) r[j] = apply(l.activation, r[j] + l.bias(0, j));
        }
        h = std::move(next);
    }
    return h;
}

Matrix encode(const Matrix& x, const AecmParams& p) {
    if (x.cols() != p.input_dim())
        throw DimensionError("encode: data has " + std::to_string(x.cols()) + " columns, model expects " +
                             std::to_string(p.input_dim()));
    return mlp_forward(p.quadratic_input ? quadratic_feature_layer(x) : x, p.encoder_layers);
}

Matrix decode(const Matrix& z, const AecmParams& p) {
    if (z.cols() != p.code_dim()) throw DimensionError("decode: code width mismatch");
    if (p.decoder_layers.empty()) return z;
    return mlp_forward(z, p.decoder_layers);
}

AecmForward aecm_forward(const Matrix& x, const AecmParams& p) {
    AecmForward f;
    f.z = encode(x, p);
    CmForward c = cm_forward(f.z, p.cm);
    f.gamma = std::move(c.gamma);
    f.z_rec = std::move(c.x_rec);
    f.x_rec = decode(f.z, p);
    return f;
}

std::vector<int> aecm_predict(const Matrix& x, const AecmParams& p) { return cm_predict(encode(x, p), p.cm); }

AecmLossBreakdown& AecmLossBreakdown::operator+=(const AecmLossBreakdown& o) {
    rec_dae += o.rec_dae;
    rec_cm += o.rec_cm;
    sparsity += o.sparsity;
    prior += o.prior;
    ortho += o.ortho;
    total += o.total;
    return *this;
}

double ortho_penalty(const Matrix& mu) {
    double s = 0.0;
    for (std::size_t k = 0; k < mu.rows(); ++k)
        for (std::size_t l = 0; l < mu.rows(); ++l) {
            double dot = 0.0;
            for (std::size_t j = 0; j < mu.cols(); ++j) dot += mu(k, j) * mu(l, j);
            s += std::abs(dot - (k == l ? 1.0 : 0.0));
        }
    return s;
}

AecmLossBreakdown aecm_loss(const Matrix& x, const AecmForward& f, const AecmParams& p,
                            std::span<const double> alpha, const AecmLossWeights& w, PriorMode mode) {
    const std::size_t n = x.rows(), k = p.k();
    if (f.gamma.rows() != n || f.gamma.cols() != k || f.x_rec.rows() != n || f.x_rec.cols() != x.cols() ||
        f.z.rows() != n || f.z_rec.rows() != n || f.z.cols() != f.z_rec.cols())
        throw DimensionError("aecm_loss: forward outputs do not match the data");
    if (alpha.size() != k) throw DimensionError("aecm_loss: alpha length differs from K");

    AecmLossBreakdown b;
    for (std::size_t i = 0; i < n; ++i) {
        b.rec_dae += squared_distance(x.row(i), f.x_rec.row(i));
        b.rec_cm += squared_distance(f.z.row(i), f.z_rec.row(i));
        for (double g : f.gamma.row(i)) b.sparsity += g * (1.0 - g);
    }
    const std::vector<double> mg = column_means(f.gamma);
    const std::vector<double> pw = prior_weights(alpha, mg, mode);
    for (std::size_t j = 0; j < k; ++j) b.prior += pw[j] * std::log(std::max(mg[j], kLogFloor));
    b.ortho = ortho_penalty(extract_centroids(p.cm));
    b.total = w.beta * b.rec_dae + b.rec_cm + b.sparsity + b.prior + w.lambda * b.ortho;

    const std::pair<double, const char*> terms[] = {{b.rec_dae, "rec_dae"}, {b.rec_cm, "rec_cm"},
                                                    {b.sparsity, "sparsity"}, {b.prior, "prior"},
                                                    {b.ortho, "ortho"},     {b.total, "total"}};
    for (const auto& [v, name] : terms)
        if (!std::isfinite(v)) throw NumericalError(std::string("aecm_loss: term '") + name + "' is not finite");
    return b;
}

AecmVars aecm_leaves(ad::Tape& tape, const AecmParams& p) {
    AecmVars v;
    for (const MlpLayer& l : p.encoder_layers) {
        v.enc_w.push_back(tape.leaf(l.weights));
        v.enc_b.push_back(tape.leaf(l.bias));
    }
    for (const MlpLayer& l : p.decoder_layers) {
        v.dec_w.push_back(tape.leaf(l.weights));
        v.dec_b.push_back(tape.leaf(l.bias));
    }
    v.cm = cm_leaves(tape, p.cm);
    return v;
}

ad::Var mlp_graph(ad::Var x, const std::vector<ad::Var>& w, const std::vector<ad::Var>& b,
                  const std::vector<MlpLayer>& layers) {
    ad::Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = ad::add_row_broadcast(ad::matmul(h, w[i]), b[i]);
        if (layers[i].activation == Activation::leaky_relu) h = ad::leaky_relu(h, kLeakySlope);
    }
    return h;
}

ad::Var quadratic_feature_graph(ad::Var x) {
    return x.tape->record(quadratic_feature_layer(x.value()), {x.id}, [x](ad::Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        const Matrix& v = t.value(x.id);
        Matrix gx(v.rows(), 2);
        for (std::size_t i = 0; i < v.rows(); ++i) {
            const double a = v(i, 0), b = v(i, 1);
            gx(i, 0) = g(i, 1) + 2.0 * a * g(i, 3) + b * (g(i, 4) + g(i, 6));
            gx(i, 1) = g(i, 2) + 2.0 * b * g(i, 5) + a * (g(i, 4) + g(i, 6));
        }
        t.accumulate(x.id, gx);
    });
}

AecmGraph aecm_graph(ad::Var x, const AecmVars& v, const AecmParams& p, std::span<const double> alpha,
                     PriorMode mode) {
    using namespace ad;
    Tape& t = *x.tape;
    AecmGraph g;
    Var h = p.quadratic_input ? quadratic_feature_graph(x) : x;
    g.z = mlp_graph(h, v.enc_w, v.enc_b, p.encoder_layers);
    g.cm = cm_graph(g.z, v.cm, alpha, mode, false);
    g.x_rec = p.decoder_layers.empty() ? g.z : mlp_graph(g.z, v.dec_w, v.dec_b, p.decoder_layers);
    g.rec_dae = sum(square(x - g.x_rec));
    g.sparsity = sum(g.cm.gamma - square(g.cm.gamma));
    g.ortho = sum(abs(matmul(g.cm.mu, transpose(g.cm.mu)) - t.constant(Matrix::identity(p.k()))));
    return g;
}

ad::Var aecm_total(const AecmGraph& g, const AecmLossWeights& w) {
    using namespace ad;
    return w.beta * g.rec_dae + g.cm.e_rec + g.sparsity + g.cm.e_prior + w.lambda * g.ortho;
}

AecmLossBreakdown aecm_breakdown(const AecmGraph& g, const AecmLossWeights& w) {
    AecmLossBreakdown b;
    b.rec_dae = g.rec_dae.scalar();
    b.rec_cm = g.cm.e_rec.scalar();
    b.sparsity = g.sparsity.scalar();
    b.prior = g.cm.e_prior.scalar();
    b.ortho = g.ortho.scalar();
    b.total = w.beta * b.rec_dae + b.rec_cm + b.sparsity + b.prior + w.lambda * b.ortho;
    return b;
}

std::vector<Matrix*> aecm_tensors(AecmParams& p) {
    std::vector<Matrix*> out;
    for (MlpLayer& l : p.encoder_layers) {
        out.push_back(&l.weights);
        out.push_back(&l.bias);
    }
    for (MlpLayer& l : p.decoder_layers) {
        out.push_back(&l.weights);
        out.push_back(&l.bias);
    }
    for (Matrix* m : {&p.cm.w_enc, &p.cm.b_enc, &p.cm.w_dec, &p.cm.b_dec}) out.push_back(m);
    return out;
}

std::vector<const Matrix*> aecm_tensors(const AecmParams& p) {
    std::vector<Matrix*> mut = aecm_tensors(const_cast<AecmParams&>(p));
    return {mut.begin(), mut.end()};
}

namespace {

std::vector<const Matrix*> var_grads(const AecmVars& v) {
    std::vector<const Matrix*> out;
    for (std::size_t i = 0; i < v.enc_w.size(); ++i) {
        out.push_back(&v.enc_w[i].grad());
        out.push_back(&v.enc_b[i].grad());
    }
    for (std::size_t i = 0; i < v.dec_w.size(); ++i) {
        out.push_back(&v.dec_w[i].grad());
        out.push_back(&v.dec_b[i].grad());
    }
    for (const ad::Var& c : {v.cm.w_enc, v.cm.b_enc, v.cm.w_dec, v.cm.b_dec}) out.push_back(&c.grad());
    return out;
}

bool all_finite(const AecmParams& p) {
    for (const Matrix* m : aecm_tensors(p))
        if (!m->all_finite()) return false;
    return true;
}

template <class BatchFn>
void for_each_batch(std::vector<std::size_t>& order, std::size_t batch, Rng& rng, BatchFn&& fn) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t stop = std::min(order.size(), start + batch);
        fn(std::span<const std::size_t>(order).subspan(start, stop - start));
    }
}

}  // namespace

void validate_aecm_config(const AecmTrainConfig& c, std::size_t n, std::size_t k) {
    if (k == 0) throw ConfigError("k must be positive");
    if (c.alpha.size() != k)
        throw ConfigError("alpha has " + std::to_string(c.alpha.size()) + " entries, expected " + std::to_string(k));
    for (double a : c.alpha)
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha entries must be positive and finite");
    if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ConfigError("beta must be positive");
    if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) throw ConfigError("lambda must be positive");
    if (c.batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (c.batch_size > n)
        throw ConfigError("batch_size " + std::to_string(c.batch_size) + " exceeds N=" + std::to_string(n));
    if (!(c.optimizer.lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(c.cm_init_std >= 0.0)) throw ConfigError("cm_init_std must be non-negative");
}

AecmParams pretrain(const Matrix& x, AecmParams p, const AecmTrainConfig& config, const PretrainConfig& pc,
                    Rng& rng, std::vector<double>* dae_loss, bool* fell_back) {
    p.validate();
    if (x.cols() != p.input_dim()) throw DimensionError("pretrain: data width differs from model");
    if (fell_back) *fell_back = false;
    const std::size_t n = x.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    if (pc.dae_epochs > 0 && !p.encoder_layers.empty()) {
        std::vector<Matrix*> tensors;
        for (auto* layers : {&p.encoder_layers, &p.decoder_layers})
            for (MlpLayer& l : *layers) {
                tensors.push_back(&l.weights);
                tensors.push_back(&l.bias);
            }
        Optimizer opt(config.optimizer, tensors);
        for (std::size_t epoch = 0; epoch < pc.dae_epochs; ++epoch) {
            double total = 0.0;
            for_each_batch(order, config.batch_size, rng, [&](std::span<const std::size_t> idx) {
                ad::Tape tape;
                const AecmVars v = aecm_leaves(tape, p);
                const ad::Var xb = tape.constant(x.select_rows(idx));
                ad::Var z = mlp_graph(p.quadratic_input ? quadratic_feature_graph(xb) : xb, v.enc_w, v.enc_b,
                                      p.encoder_layers);
                ad::Var xr = p.decoder_layers.empty() ? z : mlp_graph(z, v.dec_w, v.dec_b, p.decoder_layers);
                ad::Var loss = ad::sum(ad::square(xb - xr));
                if (!std::isfinite(loss.scalar())) throw DivergenceError(epoch, "rec_dae");
                total += loss.scalar();
                tape.backward(loss);
                std::vector<const Matrix*> grads = var_grads(v);
                grads.resize(tensors.size());
                opt.step(grads);
            });
            if (dae_loss) dae_loss->push_back(total);
        }
    }

    const Matrix z = encode(x, p);
    if (pc.init == InitScheme::kmeanspp) {
        const Matrix c = kmeans_pp_init(z, p.k(), rng);
        try {
            p.cm = cm_init_from_centroids(c);
        } catch (const SingularMatrixError&) {
            if (fell_back) *fell_back = true;
        }
    }

    if (pc.cm_epochs > 0) {
        CmTrainConfig cc;
        cc.alpha = config.alpha;
        cc.batch_size = config.batch_size;
        cc.epochs = pc.cm_epochs;
        cc.optimizer = config.optimizer;
        cc.prior_mode = config.prior_mode;
        cc.averaging_epoch = false;
        p.cm = train_cm_from(z, std::move(p.cm), cc, rng).params;
    }
    return p;
}

AecmTrainResult train_aecm(const Matrix& x, std::size_t k, const AecmArch& arch, const AecmTrainConfig& config,
                           const AecmEpochHook& hook) {
    if (arch.input_dim != x.cols()) throw DimensionError("train_aecm: architecture input differs from data width");
    validate_aecm_config(config, x.rows(), k);
    Rng rng(config.seed);
    AecmParams init = aecm_random_init(arch, k, rng, config.cm_init_std);
    std::vector<double> dae_loss;
    bool fell_back = false;
    if (config.pretrain) init = pretrain(x, std::move(init), config, *config.pretrain, rng, &dae_loss, &fell_back);
    AecmTrainResult res = train_aecm_from(x, std::move(init), config, rng, hook);
    res.pretrain_dae_loss = std::move(dae_loss);
    res.pretrain_fell_back = fell_back;
    return res;
}

AecmTrainResult train_aecm_from(const Matrix& x, AecmParams init, const AecmTrainConfig& config, Rng& rng,
                                const AecmEpochHook& hook) {
    init.validate();
    if (x.cols() != init.input_dim()) throw DimensionError("train_aecm: data width differs from model");
    validate_aecm_config(config, x.rows(), init.k());

    AecmTrainResult res;
    res.params = std::move(init);
    AecmParams& p = res.params;
    const std::vector<Matrix*> tensors = aecm_tensors(p);
    const std::size_t n_dae = tensors.size() - 4;
    Optimizer opt(config.optimizer, tensors);
    const AecmLossWeights weights{config.beta, config.lambda};

    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), 0);

    auto run_epoch = [&](std::size_t epoch, bool averaging, Matrix* sum_wdec, Matrix* sum_bdec,
                         std::size_t* iterations) {
        AecmLossBreakdown total;
        for_each_batch(order, config.batch_size, rng, [&](std::span<const std::size_t> idx) {
            ad::Tape tape;
            const AecmVars v = aecm_leaves(tape, p);
            AecmGraph g;
            try {
                g = aecm_graph(tape.constant(x.select_rows(idx)), v, p, config.alpha, config.prior_mode);
            } catch (const NumericalError& e) {
                throw DivergenceError(epoch, std::string("forward (") + e.what() + ")");
            }
            const ad::Var loss = aecm_total(g, weights);
            const AecmLossBreakdown b = aecm_breakdown(g, weights);
            check_terms(b, epoch);
            total += b;
            tape.backward(loss);
            std::vector<const Matrix*> grads = var_grads(v);
            if (averaging || config.freeze_autoencoder)
                std::fill(grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(n_dae), nullptr);
            if (averaging) grads[n_dae] = grads[n_dae + 1] = nullptr;  // CM encoder
            opt.step(grads);
            if (!all_finite(p)) throw DivergenceError(epoch, "parameters");
            if (averaging) {
                *sum_wdec += p.cm.w_dec;
                *sum_bdec += p.cm.b_dec;
                ++*iterations;
            }
        });
        return total;
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        res.history.push_back({epoch, run_epoch(epoch, false, nullptr, nullptr, nullptr), false});
        if (hook) hook(epoch, p);
    }

    if (config.averaging_epoch) {
        Matrix sum_wdec(p.cm.w_dec.rows(), p.cm.w_dec.cols());
        Matrix sum_bdec(1, p.cm.b_dec.cols());
        std::size_t iterations = 0;
        const std::size_t epoch = config.epochs;
        res.history.push_back({epoch, run_epoch(epoch, true, &sum_wdec, &sum_bdec, &iterations), true});
        const double inv = 1.0 / static_cast<double>(iterations);
        p.cm.w_dec = sum_wdec * inv;
        p.cm.b_dec = sum_bdec * inv;
        if (hook) hook(epoch, p);
    }
    return res;
}

std::vector<double> decode_centroid(const AecmParams& p, std::size_t k) {
    if (k >= p.k()) throw DomainError("centroid index " + std::to_string(k) + " out of range");
    const Matrix mu = extract_centroids(p.cm);
    const Matrix out = decode(Matrix::row_vector(mu.row(k)), p);
    return {out.values().begin(), out.values().end()};
}

std::vector<std::vector<double>> interpolate(const AecmParams& p, std::size_t k1, std::size_t k2,
                                             std::size_t steps) {
    if (k1 >= p.k() || k2 >= p.k()) throw DomainError("centroid index out of range");
    if (steps < 2) throw DomainError("interpolate needs at least 2 steps");
    const Matrix mu = extract_centroids(p.cm);
    Matrix path(steps, mu.cols());
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps - 1);
        for (std::size_t j = 0; j < mu.cols(); ++j) path(s, j) = (1.0 - t) * mu(k1, j) + t * mu(k2, j);
    }
    const Matrix out = decode(path, p);
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s < steps; ++s) rows.emplace_back(out.row(s).begin(), out.row(s).end());
    return rows;
}

std::optional<AecmPreset> aecm_preset(std::string_view dataset) {
    struct Entry {
        std::string_view name;
        AecmPreset preset;
    };
    static constexpr Entry table[] = {
        {"mnist", {230.0, 500, 5.0, 1.0, 10}},   {"fmnist", {13.0, 175, 47.0, 1.0, 10}},
        {"usps", {20.0, 256, 0.5, 1.0, 10}},     {"cifar10", {64.0, 256, 1.0, 1.0, 10}},
        {"r10k", {2.0, 256, 1.0, 1.0, 100}},     {"20news", {10.0, 300, 232.0, 1.0, 100}},
        {"10x73k", {7.0, 7, 15.0, 1.0, 10}},     {"pendigit", {13.0, 100, 0.5, 1.0, 10}},
    };
    for (const auto& e : table)
        if (e.name == dataset) return e.preset;
    return std::nullopt;
}

}  // namespace clmod
