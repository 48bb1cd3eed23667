#include "tnet/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace tnet {

std::string to_string(HeadMode m) { return m == HeadMode::mixed ? "mixed" : "pose-only"; }
std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

HeadMode head_mode_from_string(const std::string& s) {
    if (s == "mixed") return HeadMode::mixed;
    if (s == "pose-only") return HeadMode::pose_only;
    throw std::invalid_argument("unknown head mode: " + s + " (expected mixed or pose-only)");
}

Precision precision_from_string(const std::string& s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    throw std::invalid_argument("unknown precision: " + s + " (expected f32 or f64)");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0,1)");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (hardmine_period < 1) throw std::invalid_argument("hardmine_period must be >= 1");
    if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
        throw std::invalid_argument("subset_fraction must be in (0,1]");
    if (!(early_stop_acc >= 0.0 && early_stop_acc <= 1.0))
        throw std::invalid_argument("early_stop_acc must be in [0,1]");
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string serialize_train_config(const TrainConfig& cfg) {
    std::ostringstream os;
    os << "learning_rate = " << fmt17(cfg.learning_rate) << '\n';
    os << "momentum = " << fmt17(cfg.momentum) << '\n';
    os << "batch_size = " << cfg.batch_size << '\n';
    os << "epochs = " << cfg.epochs << '\n';
    os << "lambda = " << fmt17(cfg.lambda) << '\n';
    os << "hardmine_period = " << cfg.hardmine_period << '\n';
    os << "subset_fraction = " << fmt17(cfg.subset_fraction) << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "precision = " << to_string(cfg.precision) << '\n';
    os << "head = " << to_string(cfg.head) << '\n';
    os << "early_stop_acc = " << fmt17(cfg.early_stop_acc) << '\n';
    return os.str();
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("bad config line (need key = value): " + line);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "learning_rate") cfg.learning_rate = std::stod(value);
            else if (key == "momentum") cfg.momentum = std::stod(value);
            else if (key == "batch_size") cfg.batch_size = std::stoi(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "lambda") cfg.lambda = std::stod(value);
            else if (key == "hardmine_period") cfg.hardmine_period = std::stoi(value);
            else if (key == "subset_fraction") cfg.subset_fraction = std::stod(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "precision") cfg.precision = precision_from_string(value);
            else if (key == "head") cfg.head = head_mode_from_string(value);
            else if (key == "early_stop_acc") cfg.early_stop_acc = std::stod(value);
            else throw std::invalid_argument("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("bad value for config key " + key + ": " + value);
        }
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_train_config(ss.str());
}

namespace {

template <class Real>
TensorT<Real> patch_cast(const Tensor& t) {
    TensorT<Real> r;
    r.shape = t.shape;
    r.data.assign(t.data.begin(), t.data.end());
    return r;
}

template <>
TensorT<float> patch_cast<float>(const Tensor& t) {
    return t;
}

template <class Real>
struct HeadGrads {
    double loss = 0.0;
    std::vector<Real> gc, gp;
};

template <class Real>
HeadGrads<Real> head_grads(const ForwardTraceT<Real>& trace, const SoftLabel& label, double lambda,
                           HeadMode mode) {
    MixedLossResult<Real> ml = mixed_loss<Real>({trace.p_c.data(), trace.p_c.size()},
                                                {trace.p_p.data(), trace.p_p.size()}, label, lambda);
    HeadGrads<Real> h;
    h.gp = std::move(ml.grad_logits_p);
    if (mode == HeadMode::pose_only) {
        // Pose-classification cost alone; the fg head neither contributes
        // loss nor receives gradient.
        h.gc.assign(2, Real(0));
        double fg_ce = 0.0;
        for (int i = 0; i < 2; ++i) {
            double p = static_cast<double>(trace.p_c[static_cast<std::size_t>(i)]);
            p = p < 1e-12 ? 1e-12 : p;
            fg_ce -= label.fg[static_cast<std::size_t>(i)] * std::log(p);
        }
        h.loss = ml.loss - fg_ce;
    } else {
        h.gc = std::move(ml.grad_logits_c);
        h.loss = ml.loss;
    }
    return h;
}

template <class Real>
ParamGradsT<Real> make_zero_grads(const NetworkParamsT<Real>& p) {
    ParamGradsT<Real> g;
    g.base.resize(p.base.size());
    g.cls.resize(p.cls.size());
    for (std::size_t i = 0; i < p.base.size(); ++i) {
        g.base[i].kernels = TensorT<Real>(p.base[i].kernels.shape);
        g.base[i].bias.assign(p.base[i].bias.size(), Real(0));
    }
    for (std::size_t i = 0; i < p.cls.size(); ++i) {
        g.cls[i].kernels = TensorT<Real>(p.cls[i].kernels.shape);
        g.cls[i].bias.assign(p.cls[i].bias.size(), Real(0));
    }
    g.fc.w = TensorT<Real>(p.fc.w.shape);
    g.fc.b.assign(p.fc.b.size(), Real(0));
    g.fg_head.w = TensorT<Real>(p.fg_head.w.shape);
    g.fg_head.b.assign(p.fg_head.b.size(), Real(0));
    g.pose_head.w = TensorT<Real>(p.pose_head.w.shape);
    g.pose_head.b.assign(p.pose_head.b.size(), Real(0));
    return g;
}

template <class Real>
void accumulate_grads(ParamGradsT<Real>& into, ParamGradsT<Real>& g) {
    auto dst = grad_refs(into);
    auto src = grad_refs(g);
    for (std::size_t r = 0; r < dst.size(); ++r)
        for (std::size_t i = 0; i < dst[r].size; ++i) dst[r].data[i] += src[r].data[i];
}

// Runs fn(i) over [0,n) on `workers` threads; any exception is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

template <class Real>
std::vector<double> score_examples(const NetworkParamsT<Real>& params, const Dataset& pool, double lambda,
                                   HeadMode head, int workers) {
    std::vector<double> losses(pool.examples.size(), 0.0);
    parallel_for(static_cast<int>(pool.examples.size()), workers, [&](int i) {
        const LabeledExample& ex = pool.examples[static_cast<std::size_t>(i)];
        const ForwardTraceT<Real> trace = forward(params, patch_cast<Real>(ex.patch));
        losses[static_cast<std::size_t>(i)] = head_grads<Real>(trace, ex.label, lambda, head).loss;
    });
    return losses;
}

template <class Real>
std::vector<int> hard_mine(const NetworkParamsT<Real>& params, const Dataset& pool, double fraction,
                           double lambda, HeadMode head, int workers) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("hard_mine: fraction must be in (0,1]");
    const int n = static_cast<int>(pool.examples.size());
    const int k = static_cast<int>(std::ceil(fraction * n));
    const std::vector<double> losses = score_examples(params, pool, lambda, head, workers);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return losses[static_cast<std::size_t>(a)] > losses[static_cast<std::size_t>(b)];
    });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

template <class Real>
HeadAccuracy dataset_accuracy(const NetworkParamsT<Real>& params, const Dataset& data, int workers) {
    std::vector<std::uint8_t> fg_ok(data.examples.size(), 0), pose_ok(data.examples.size(), 0);
    parallel_for(static_cast<int>(data.examples.size()), workers, [&](int i) {
        const LabeledExample& ex = data.examples[static_cast<std::size_t>(i)];
        const ForwardTraceT<Real> trace = forward(params, patch_cast<Real>(ex.patch));
        const int want_fg = ex.foreground ? kFgIndex : kBgIndex;
        const int got_fg = trace.p_c[0] >= trace.p_c[1] ? 0 : 1;
        fg_ok[static_cast<std::size_t>(i)] = got_fg == want_fg;
        int want_pose = 0, got_pose = 0;
        for (int j = 1; j < kPoseLabels; ++j) {
            if (ex.label.pose[static_cast<std::size_t>(j)] >
                ex.label.pose[static_cast<std::size_t>(want_pose)])
                want_pose = j;
            if (trace.p_p[static_cast<std::size_t>(j)] > trace.p_p[static_cast<std::size_t>(got_pose)])
                got_pose = j;
        }
        pose_ok[static_cast<std::size_t>(i)] = got_pose == want_pose;
    });
    HeadAccuracy acc;
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        acc.fg += fg_ok[i];
        acc.pose += pose_ok[i];
    }
    acc.fg /= static_cast<double>(data.examples.size());
    acc.pose /= static_cast<double>(data.examples.size());
    return acc;
}

template <class Real>
TrainResult train(NetworkParamsT<Real>& params, const Dataset& data, const TrainConfig& cfg, int workers) {
    cfg.validate();
    validate_network(params);
    bool has_fg = false, has_bg = false;
    for (const LabeledExample& ex : data.examples) (ex.foreground ? has_fg : has_bg) = true;
    if (!has_fg || !has_bg)
        throw std::invalid_argument("training data must contain both foreground and background examples");

    const int n = static_cast<int>(data.examples.size());
    const int subset_size = static_cast<int>(std::ceil(cfg.subset_fraction * n));
    if (subset_size < 1) throw std::invalid_argument("subset too small for the pool");

    std::mt19937_64 rng = make_rng(cfg.seed);

    std::vector<int> subset(static_cast<std::size_t>(n));
    std::iota(subset.begin(), subset.end(), 0);
    if (subset_size < n) {
        std::shuffle(subset.begin(), subset.end(), rng);
        subset.resize(static_cast<std::size_t>(subset_size));
    }

    auto refs = trainable_refs(params);
    std::vector<std::vector<Real>> velocity(refs.size());
    for (std::size_t r = 0; r < refs.size(); ++r) velocity[r].assign(refs[r].size, Real(0));

    const int thread_count = std::max(1, workers);
    TrainResult result;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * (epoch >= 30 ? 0.5 : 1.0);  // fixed step decay
        std::shuffle(subset.begin(), subset.end(), rng);

        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < static_cast<int>(subset.size()); start += cfg.batch_size) {
            const int count = std::min<int>(cfg.batch_size, static_cast<int>(subset.size()) - start);

            // Per-worker accumulators merged in worker order keep the update
            // deterministic for a fixed worker count.
            const int chunks = std::min(thread_count, count);
            std::vector<ParamGradsT<Real>> worker_grads;
            std::vector<double> worker_loss(static_cast<std::size_t>(chunks), 0.0);
            worker_grads.reserve(static_cast<std::size_t>(chunks));
            for (int w = 0; w < chunks; ++w) worker_grads.push_back(make_zero_grads(params));

            auto run_chunk = [&](int w) {
                const int lo = start + w * count / chunks;
                const int hi = start + (w + 1) * count / chunks;
                for (int b = lo; b < hi; ++b) {
                    const LabeledExample& ex = data.examples[static_cast<std::size_t>(subset[static_cast<std::size_t>(b)])];
                    const ForwardTraceT<Real> trace = forward(params, patch_cast<Real>(ex.patch));
                    const HeadGrads<Real> h = head_grads<Real>(trace, ex.label, cfg.lambda, cfg.head);
                    ParamGradsT<Real> g = backward(params, trace, h.gc, h.gp);
                    accumulate_grads(worker_grads[static_cast<std::size_t>(w)], g);
                    worker_loss[static_cast<std::size_t>(w)] += h.loss;
                }
            };
            if (chunks == 1) {
                run_chunk(0);
            } else {
                std::vector<std::thread> pool;
                for (int w = 0; w < chunks; ++w) pool.emplace_back(run_chunk, w);
                for (auto& t : pool) t.join();
            }

            for (int w = 1; w < chunks; ++w) accumulate_grads(worker_grads[0], worker_grads[static_cast<std::size_t>(w)]);
            double batch_loss = 0.0;
            for (double l : worker_loss) batch_loss += l;
            batch_loss /= count;
            if (!std::isfinite(batch_loss)) throw TrainAbort(epoch, batches);

            auto grefs = grad_refs(worker_grads[0]);
            const Real scale = static_cast<Real>(1.0 / count);
            const Real mom = static_cast<Real>(cfg.momentum);
            const Real step = static_cast<Real>(lr);
            for (std::size_t r = 0; r < refs.size(); ++r) {
                Real* v = velocity[r].data();
                Real* theta = refs[r].data;
                const Real* grad = grefs[r].data;
                for (std::size_t i = 0; i < refs[r].size; ++i) {
                    v[i] = mom * v[i] - step * grad[i] * scale;
                    theta[i] += v[i];
                }
            }
            epoch_loss += batch_loss;
            ++batches;
        }

        result.loss_history.push_back(epoch_loss / batches);
        result.epochs_run = epoch;

        if (cfg.early_stop_acc > 0.0 &&
            dataset_accuracy(params, data, thread_count).worst() >= cfg.early_stop_acc)
            break;

        if (cfg.subset_fraction < 1.0 && epoch % cfg.hardmine_period == 0 && epoch < cfg.epochs)
            subset = hard_mine(params, data, cfg.subset_fraction, cfg.lambda, cfg.head, thread_count);
    }
    return result;
}

template TrainResult train<float>(NetworkParamsT<float>&, const Dataset&, const TrainConfig&, int);
template TrainResult train<double>(NetworkParamsT<double>&, const Dataset&, const TrainConfig&, int);
template std::vector<double> score_examples<float>(const NetworkParamsT<float>&, const Dataset&, double,
                                                   HeadMode, int);
template std::vector<double> score_examples<double>(const NetworkParamsT<double>&, const Dataset&, double,
                                                    HeadMode, int);
template std::vector<int> hard_mine<float>(const NetworkParamsT<float>&, const Dataset&, double, double,
                                           HeadMode, int);
template std::vector<int> hard_mine<double>(const NetworkParamsT<double>&, const Dataset&, double, double,
                                            HeadMode, int);
template HeadAccuracy dataset_accuracy<float>(const NetworkParamsT<float>&, const Dataset&, int);
template HeadAccuracy dataset_accuracy<double>(const NetworkParamsT<double>&, const Dataset&, int);

// ---- gradient check ----

namespace {

struct GradCheckContext {
    NetworkParamsT<double> params;
    std::shared_ptr<TemplateBankT<double>> bank;
    TensorD input;
    SoftLabel label;
    double lambda = 1.0;
};

double eval_loss(const GradCheckContext& ctx, ForwardTraceT<double>* trace_out = nullptr) {
    ForwardTraceT<double> trace = forward(ctx.params, ctx.input);
    const MixedLossResult<double> ml = mixed_loss<double>({trace.p_c.data(), trace.p_c.size()},
                                                          {trace.p_p.data(), trace.p_p.size()}, ctx.label,
                                                          ctx.lambda);
    if (trace_out) *trace_out = std::move(trace);
    return ml.loss;
}

// True when any ReLU input (conv/fc pre-activations, template products)
// changes active state between the two perturbed evaluations, i.e. the
// central difference straddles a kink.
bool relu_state_differs(const ForwardTraceT<double>& a, const ForwardTraceT<double>& b) {
    auto differs = [](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if ((x[i] > 0.0) != (y[i] > 0.0)) return true;
        return false;
    };
    for (std::size_t l = 0; l < a.base_pre.size(); ++l)
        if (differs(a.base_pre[l].data, b.base_pre[l].data)) return true;
    if (differs(a.template_pre.data, b.template_pre.data)) return true;
    for (std::size_t l = 0; l < a.cls_pre.size(); ++l)
        if (differs(a.cls_pre[l].data, b.cls_pre[l].data)) return true;
    return differs(a.fc_pre, b.fc_pre);
}

// A double-precision central difference with eps 1e-6 on an O(1) loss
// carries about 1e-9 of absolute noise; below this the comparison cannot
// certify anything, so the check is two-sided:
//   |analytic - numeric| <= tol * max(|analytic|, |numeric|) + kFdNoiseFloor.
constexpr double kFdNoiseFloor = 1e-8;

}  // namespace

std::string GradCheckReport::to_string() const {
    std::ostringstream os;
    os << "gradient check: " << (pass ? "PASS" : "FAIL") << " (relative tolerance " << tolerance
       << ", finite-difference noise floor 1e-8)\n";
    char buf[256];
    for (const GradCheckLayer& l : layers) {
        std::snprintf(buf, sizeof(buf), "  %-22s checked %4d  excluded %2d  max rel err %.3e", l.layer.c_str(),
                      l.checked, l.excluded, l.max_rel_err);
        os << buf;
        if (l.max_rel_err > tolerance)
            os << "  WORST " << l.worst_coord << " analytic " << l.worst_analytic << " numeric "
               << l.worst_numeric;
        os << '\n';
    }
    return os.str();
}

GradCheckReport gradcheck(const NetConfig& cfg, int trials, std::uint64_t seed, double tolerance,
                          const std::function<void(ParamGradsT<double>&)>& corrupt) {
    if (trials < 1) throw std::invalid_argument("gradcheck: trials must be >= 1");
    const ShapeInfo shapes = infer_shapes(cfg);

    std::mt19937_64 rng = make_rng(mix_seed(seed, 11, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    GradCheckContext ctx;
    if (cfg.use_template_layer) {
        // Synthetic bank: values in [0,1] with exact zeros for background,
        // matching the sparsity structure of a rendered bank.
        ctx.bank = std::make_shared<TemplateBankT<double>>();
        const int m = cfg.template_count();
        ctx.bank->maps = TensorD({m, shapes.template_in.h, shapes.template_in.w});
        ctx.bank->viewpoints.assign(static_cast<std::size_t>(m) / 3, Vec3{});
        for (double& v : ctx.bank->maps.data) {
            const double u = unit(rng);
            v = u < 0.3 ? 0.0 : unit(rng);
        }
        for (int i = 0; i < m; ++i) ctx.bank->maps.at(i, 0, 0) = std::max(ctx.bank->maps.at(i, 0, 0), 0.5);
    }

    ctx.params = init_params<double>(cfg, ctx.bank, mix_seed(seed, 12, 0));
    ctx.input = TensorD({cfg.in_channels, cfg.in_h, cfg.in_w});
    for (double& v : ctx.input.data) v = unit(rng);
    const Mat3 view = rot_ypr(unit(rng) * 1.6 - 0.8, unit(rng) * 0.8 - 0.4, unit(rng) * 0.8 - 0.4);
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    ctx.label = soft_labels(view, grid);

    ForwardTraceT<double> trace;
    eval_loss(ctx, &trace);
    const MixedLossResult<double> ml = mixed_loss<double>({trace.p_c.data(), trace.p_c.size()},
                                                          {trace.p_p.data(), trace.p_p.size()}, ctx.label,
                                                          ctx.lambda);
    ParamGradsT<double> grads = backward(ctx.params, trace, ml.grad_logits_c, ml.grad_logits_p);
    if (corrupt) corrupt(grads);

    const double eps = 1e-6;
    GradCheckReport report;
    report.tolerance = tolerance;
    report.pass = true;

    auto prefs = trainable_refs(ctx.params);
    auto grefs = grad_refs(grads);

    // The template derivative rides along as an extra row even though the
    // optimizer never consumes it.
    std::vector<std::pair<ParamRef<double>, const double*>> rows;
    for (std::size_t r = 0; r < prefs.size(); ++r) rows.push_back({prefs[r], grefs[r].data});
    if (cfg.use_template_layer)
        rows.push_back({{"templates (fixed)", ctx.bank->maps.data.data(), ctx.bank->maps.data.size()},
                        grads.grad_templates.data.data()});

    for (auto& [ref, analytic] : rows) {
        GradCheckLayer row;
        row.layer = ref.name;

        std::vector<std::size_t> coords(ref.size);
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (coords.size() > static_cast<std::size_t>(trials)) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(static_cast<std::size_t>(trials));
        }

        for (std::size_t c : coords) {
            const double saved = ref.data[c];
            ForwardTraceT<double> tp, tm;
            ref.data[c] = saved + eps;
            const double lp = eval_loss(ctx, &tp);
            ref.data[c] = saved - eps;
            const double lm = eval_loss(ctx, &tm);
            ref.data[c] = saved;

            const double numeric = (lp - lm) / (2.0 * eps);
            const double a = analytic[c];
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), kFdNoiseFloor / tolerance});
            // Kink guard: the central difference is invalid when it straddles
            // a ReLU boundary, which is exactly when some rectifier input is
            // active on one side and not the other.
            if (rel > tolerance && relu_state_differs(tp, tm)) {
                ++row.excluded;
                continue;
            }
            ++row.checked;
            if (rel > row.max_rel_err) {
                row.max_rel_err = rel;
                row.worst_coord = ref.name + "[" + std::to_string(c) + "]";
                row.worst_analytic = a;
                row.worst_numeric = numeric;
            }
        }
        if (row.max_rel_err > tolerance) report.pass = false;
        report.layers.push_back(std::move(row));
    }
    return report;
}

}  // namespace tnet
