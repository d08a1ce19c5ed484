// atnj: toy latent-diffusion engine with reference-feature attention
// injection. Subcommands cover model init, DDIM inversion, personalized
// generation, encoder training, ablation sweeps and a self-test suite.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "atnj/encoder.hpp"
#include "atnj/image.hpp"
#include "atnj/injector.hpp"
#include "atnj/model.hpp"
#include "atnj/ops.hpp"
#include "atnj/pipeline.hpp"
#include "atnj/schedule.hpp"
#include "atnj/selftest.hpp"
#include "atnj/tenio.hpp"

namespace {

namespace fs = std::filesystem;
using namespace atnj;

constexpr int kExitFailure = 1;
constexpr int kExitIo = 2;
constexpr int kExitBadImage = 3;
constexpr int kExitBadToken = 4;
constexpr int kExitEmptyDataset = 5;
constexpr int kExitSweep = 6;

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

std::vector<double> parse_value_list(const std::string& s) {
    std::vector<double> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

// Flat "key = value" config file; '#' starts a comment. Values apply only
// to options not set on the command line, so flags override the file.
class ConfigMerger {
public:
    void bind(const std::string& key, CLI::Option* opt,
              std::function<void(const std::string&)> apply) {
        bindings_[key] = {opt, std::move(apply)};
    }

    void apply_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open config file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            if (eq == std::string::npos) {
                throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
            }
            auto trim = [](std::string v) {
                const auto b = v.find_first_not_of(" \t\r");
                const auto e = v.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            auto it = bindings_.find(key);
            if (it == bindings_.end()) {
                throw ParseError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
            if (it->second.opt->count() == 0) it->second.apply(value);
        }
    }

private:
    struct Binding {
        CLI::Option* opt;
        std::function<void(const std::string&)> apply;
    };
    std::map<std::string, Binding> bindings_;
};

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ParseError("expected a boolean, got '" + v + "'");
}

struct CommonGenOptions {
    std::string image_path, traj_path, model_path, encoder_path;
    std::string prompt = "a blob";
    std::string prompt_ref = "blob";
    double ws = 1.0, wc = 1.0;
    std::uint64_t k = 2;
    std::uint64_t coarse_token = 0, coarse_token_ref = 0;
    std::string scale_scope = "all";
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool no_self_inject = false, no_cross_inject = false, no_mask = false;
};

void add_generation_options(CLI::App* cmd, CommonGenOptions& o, ConfigMerger& merge) {
    auto bind = [&](const char* key, CLI::Option* opt, auto setter) {
        merge.bind(key, opt, setter);
        return opt;
    };
    bind("image", cmd->add_option("--image", o.image_path, "Reference image (.ppm) or latent (.ten)"),
         [&o](const std::string& v) { o.image_path = v; });
    bind("traj", cmd->add_option("--traj", o.traj_path, "Precomputed trajectory (.traj)"),
         [&o](const std::string& v) { o.traj_path = v; });
    bind("model", cmd->add_option("--model", o.model_path, "Denoiser weights (.mw)"),
         [&o](const std::string& v) { o.model_path = v; });
    bind("encoder", cmd->add_option("--encoder", o.encoder_path, "Concept encoder weights (.enc)"),
         [&o](const std::string& v) { o.encoder_path = v; });
    bind("prompt", cmd->add_option("--prompt", o.prompt, "Generation prompt"),
         [&o](const std::string& v) { o.prompt = v; });
    bind("prompt-ref", cmd->add_option("--prompt-ref", o.prompt_ref, "Reference prompt"),
         [&o](const std::string& v) { o.prompt_ref = v; });
    bind("ws", cmd->add_option("--ws", o.ws, "Self-attention output scale"),
         [&o](const std::string& v) { o.ws = std::stod(v); });
    bind("wc", cmd->add_option("--wc", o.wc, "Cross-attention output scale"),
         [&o](const std::string& v) { o.wc = std::stod(v); });
    bind("k", cmd->add_option("--k", o.k, "Mask initialization steps"),
         [&o](const std::string& v) { o.k = std::stoull(v); });
    bind("coarse-token", cmd->add_option("--coarse-token", o.coarse_token, "Coarse token index (generation prompt)"),
         [&o](const std::string& v) { o.coarse_token = std::stoull(v); });
    bind("coarse-token-ref", cmd->add_option("--coarse-token-ref", o.coarse_token_ref, "Coarse token index (reference prompt)"),
         [&o](const std::string& v) { o.coarse_token_ref = std::stoull(v); });
    bind("scale-scope", cmd->add_option("--scale-scope", o.scale_scope, "all | injected-only")
                            ->check(CLI::IsMember({"all", "injected-only"})),
         [&o](const std::string& v) { o.scale_scope = v; });
    auto* seed_opt = cmd->add_option("--seed", o.seed, "Noise seed");
    bind("seed", seed_opt, [&o](const std::string& v) {
        o.seed = std::stoull(v);
        o.seed_given = true;
    });
    bind("no-self-inject", cmd->add_flag("--no-self-inject", o.no_self_inject, "Disable self-attention injection"),
         [&o](const std::string& v) { o.no_self_inject = parse_bool(v); });
    bind("no-cross-inject", cmd->add_flag("--no-cross-inject", o.no_cross_inject, "Disable cross-attention injection"),
         [&o](const std::string& v) { o.no_cross_inject = parse_bool(v); });
    bind("no-mask", cmd->add_flag("--no-mask", o.no_mask, "Disable attention masking"),
         [&o](const std::string& v) { o.no_mask = parse_bool(v); });
}

// ATNJ_SEED is a default fallback only: flags and config both win.
void resolve_seed(const CLI::Option* seed_opt, bool config_set, std::uint64_t& seed) {
    if (seed_opt->count() > 0 || config_set) return;
    if (const char* env = std::getenv("ATNJ_SEED")) {
        seed = std::stoull(env);
    }
}

InjectionConfig make_injection_config(const CommonGenOptions& o, const NoiseSchedule& sched) {
    InjectionConfig cfg;
    cfg.w_s = o.ws;
    cfg.w_c = o.wc;
    cfg.mask_steps = static_cast<std::uint32_t>(o.k);
    cfg.total_steps = static_cast<std::uint32_t>(sched.num_inference_steps());
    cfg.coarse_token_gen = o.coarse_token;
    cfg.coarse_token_ref = o.coarse_token_ref;
    cfg.scale_scope = o.scale_scope == "all" ? ScaleScope::All : ScaleScope::InjectedOnly;
    cfg.enable_self_inject = !o.no_self_inject;
    cfg.enable_cross_inject = !o.no_cross_inject;
    cfg.enable_mask = !o.no_mask;
    return cfg;
}

void print_generation_config(const CommonGenOptions& o) {
    std::cout << "image = " << o.image_path << "\n"
              << "traj = " << o.traj_path << "\n"
              << "model = " << o.model_path << "\n"
              << "encoder = " << o.encoder_path << "\n"
              << "prompt = " << o.prompt << "\n"
              << "prompt-ref = " << o.prompt_ref << "\n"
              << "ws = " << o.ws << "\n"
              << "wc = " << o.wc << "\n"
              << "k = " << o.k << "\n"
              << "coarse-token = " << o.coarse_token << "\n"
              << "coarse-token-ref = " << o.coarse_token_ref << "\n"
              << "scale-scope = " << o.scale_scope << "\n"
              << "seed = " << o.seed << "\n"
              << "no-self-inject = " << (o.no_self_inject ? "true" : "false") << "\n"
              << "no-cross-inject = " << (o.no_cross_inject ? "true" : "false") << "\n"
              << "no-mask = " << (o.no_mask ? "true" : "false") << "\n";
}

GenerationRequest build_request(const CommonGenOptions& o, const ModelWeights& model,
                                const EncoderWeights* encoder, const NoiseSchedule& sched) {
    GenerationRequest req;
    req.prompt_gen = split_words(o.prompt);
    req.prompt_ref = split_words(o.prompt_ref);
    req.cfg = make_injection_config(o, sched);
    req.seed = o.seed;
    req.model = &model;
    req.encoder = encoder;
    if (!o.traj_path.empty()) {
        req.trajectory = load_trajectory(o.traj_path);
    }
    if (!o.image_path.empty()) {
        if (fs::path(o.image_path).extension() != ".ppm") {
            throw MissingInput("expected a .ppm reference image; run invert for .ten latents");
        }
        req.image = load_ppm(o.image_path);
    }
    return req;
}

void write_diagnostics_csv(const std::string& path, const GenerationResult& res) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "step,t_index,identity_proxy,latent_l2\n";
    for (const StepDiag& d : res.diagnostics) {
        os << d.step << "," << d.t_index << "," << std::setprecision(17) << d.identity
           << "," << d.latent_l2 << "\n";
    }
}

int cmd_init_model(const std::string& out, std::uint64_t seed) {
    ModelConfig config;
    ModelWeights w = init_weights(config, seed);
    save_weights(out, w);
    std::cout << "parameters = " << w.param_count() << "\n"
              << "out = " << out << "\n";
    return 0;
}

int cmd_invert(const CommonGenOptions& o, const std::string& out, bool verify) {
    if (o.image_path.empty()) throw MissingInput("--image is required");
    ModelWeights model = load_weights(o.model_path);
    NoiseSchedule sched = build_schedule();
    PromptEmbedding prompt_ref = embed_prompt(split_words(o.prompt_ref), model.config);

    Tensor x0;
    if (fs::path(o.image_path).extension() == ".ten") {
        x0 = load_tensor(o.image_path);  // latent input, no reduction
    } else {
        x0 = image_to_latent(load_ppm(o.image_path));
    }

    auto eps_fn = [&](const Tensor& x, std::uint32_t t) {
        return forward(x, t, prompt_ref, model).eps;
    };
    LatentTrajectory traj = invert_reference(x0, eps_fn, sched);
    save_trajectory(out, traj);
    std::cout << "steps = " << traj.num_steps() << "\n"
              << "out = " << out << "\n";

    if (verify) {
        Tensor z = traj.latents.back();
        const auto& steps = sched.inference_steps;
        for (std::size_t s = 0; s < steps.size(); ++s) {
            const std::uint32_t t = steps[s];
            const std::uint32_t t_next = s + 1 < steps.size() ? steps[s + 1] : 0;
            z = ddim_step(z, eps_fn(z, t), t, t_next, sched);
        }
        std::cout << "reconstruction_linf = " << std::setprecision(17)
                  << max_abs_diff(z, x0) << "\n";
    }
    return 0;
}

int cmd_generate(const CommonGenOptions& o, const std::string& outdir) {
    ModelWeights model = load_weights(o.model_path);
    NoiseSchedule sched = build_schedule();

    EncoderWeights encoder;
    const EncoderWeights* encoder_ptr = nullptr;
    if (!o.no_cross_inject) {
        encoder = o.encoder_path.empty() ? init_encoder(EncoderConfig{}, 0)
                                         : load_encoder(o.encoder_path);
        encoder_ptr = &encoder;
    }

    GenerationRequest req = build_request(o, model, encoder_ptr, sched);
    GenerationResult res = generate(req, sched);

    fs::create_directories(outdir);
    save_tensor(outdir + "/latent.ten", res.z0);
    save_mask_pgm(outdir + "/mask_g.pgm", res.mask.m_g, model.config.spatial);
    save_mask_pgm(outdir + "/mask_r.pgm", res.mask.m_r, model.config.spatial);
    write_diagnostics_csv(outdir + "/diagnostics.csv", res);
    std::cout << "identity_proxy = " << std::setprecision(17) << res.identity << "\n"
              << "mask_freeze_step = " << res.mask_freeze_step << "\n"
              << "outdir = " << outdir << "\n";
    return 0;
}

int cmd_train_encoder(const std::string& data_dir, const std::string& model_path,
                      std::size_t iters, std::uint64_t seed, std::uint64_t init_seed,
                      const std::string& out, const std::string& trace_path,
                      const std::string& prompt) {
    const auto dataset = load_ppm_dir(data_dir);
    if (dataset.empty()) throw EmptyDataset("no .ppm images in " + data_dir);
    ModelWeights model = load_weights(model_path);
    NoiseSchedule sched = build_schedule();
    EncoderWeights enc = init_encoder(EncoderConfig{}, init_seed);

    TrainResult res = train_encoder(dataset, enc, model, sched, InjectionConfig{},
                                    iters, seed, split_words(prompt));
    save_encoder(out, res.weights);

    const std::string tpath = trace_path.empty() ? out + ".loss.csv" : trace_path;
    std::ofstream os(tpath);
    if (!os) throw IoError("cannot open for writing: " + tpath);
    os << "iteration,loss\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        os << i << "," << std::setprecision(17) << res.trace[i] << "\n";
    }
    std::cout << "initial_smoothed_loss = " << std::setprecision(17)
              << smoothed_initial(res.trace) << "\n"
              << "final_smoothed_loss = " << smoothed_final(res.trace) << "\n"
              << "out = " << out << "\n"
              << "trace = " << tpath << "\n";
    return 0;
}

int cmd_sweep(const CommonGenOptions& o, const std::string& axis,
              const std::string& values_csv, const std::string& out, std::size_t jobs) {
    SweepAxis ax;
    if (axis == "ws") {
        ax = SweepAxis::WS;
    } else if (axis == "wc") {
        ax = SweepAxis::WC;
    } else if (axis == "k") {
        ax = SweepAxis::K;
    } else {
        throw EmptySweep("unknown sweep axis: " + axis);
    }
    const std::vector<double> values = parse_value_list(values_csv);
    if (values.empty()) throw EmptySweep("no sweep values given");

    ModelWeights model = load_weights(o.model_path);
    NoiseSchedule sched = build_schedule();
    EncoderWeights encoder;
    const EncoderWeights* encoder_ptr = nullptr;
    if (!o.no_cross_inject) {
        encoder = o.encoder_path.empty() ? init_encoder(EncoderConfig{}, 0)
                                         : load_encoder(o.encoder_path);
        encoder_ptr = &encoder;
    }
    GenerationRequest req = build_request(o, model, encoder_ptr, sched);

    const auto rows = sweep(req, sched, ax, values, jobs);
    std::ostringstream table;
    table << "axis,value,identity_proxy,latent_l2\n";
    for (const SweepRow& r : rows) {
        table << axis << "," << std::setprecision(17) << r.value << "," << r.identity
              << "," << r.latent_l2 << "\n";
    }
    std::cout << table.str();
    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) throw IoError("cannot open for writing: " + out);
        os << table.str();
        std::cout << "out = " << out << "\n";
    }
    return 0;
}

int cmd_selftest(const std::string& data_dir, const std::string& golden_dir) {
    const auto results = run_selftest(data_dir, golden_dir);
    std::size_t failed = 0;
    for (const CheckResult& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
        if (!r.pass) std::cout << ": " << r.detail;
        std::cout << "\n";
        failed += r.pass ? 0 : 1;
    }
    std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toy latent-diffusion engine with reference-feature attention injection"};
    app.require_subcommand(1);

    std::string config_path;

    // init-model
    auto* init_cmd = app.add_subcommand("init-model", "Initialize denoiser weights");
    std::uint64_t init_seed = 0;
    std::string init_out = "model.mw";
    ConfigMerger init_merge;
    bool init_seed_cfg = false;
    auto* init_seed_opt = init_cmd->add_option("--seed", init_seed, "Init seed");
    init_merge.bind("seed", init_seed_opt, [&](const std::string& v) {
        init_seed = std::stoull(v);
        init_seed_cfg = true;
    });
    init_merge.bind("out", init_cmd->add_option("--out", init_out, "Output path (.mw)"),
                    [&](const std::string& v) { init_out = v; });
    init_cmd->add_option("--config", config_path, "key = value config file");

    // invert
    auto* invert_cmd = app.add_subcommand("invert", "DDIM-invert a reference image");
    CommonGenOptions invert_opts;
    ConfigMerger invert_merge;
    add_generation_options(invert_cmd, invert_opts, invert_merge);
    std::string invert_out = "reference.traj";
    bool invert_verify = false;
    invert_merge.bind("out", invert_cmd->add_option("--out", invert_out, "Output path (.traj)"),
                      [&](const std::string& v) { invert_out = v; });
    invert_merge.bind("verify", invert_cmd->add_flag("--verify", invert_verify, "Report reconstruction error"),
                      [&](const std::string& v) { invert_verify = parse_bool(v); });
    invert_cmd->add_option("--config", config_path, "key = value config file");

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Personalized generation");
    CommonGenOptions gen_opts;
    ConfigMerger gen_merge;
    add_generation_options(gen_cmd, gen_opts, gen_merge);
    std::string gen_outdir = "out";
    gen_merge.bind("outdir", gen_cmd->add_option("--outdir", gen_outdir, "Output directory"),
                   [&](const std::string& v) { gen_outdir = v; });
    gen_cmd->add_option("--config", config_path, "key = value config file");

    // train-encoder
    auto* train_cmd = app.add_subcommand("train-encoder", "Train the concept encoder");
    std::string train_data, train_model, train_out = "encoder.enc", train_trace, train_prompt = "blob";
    std::uint64_t train_seed = 7;
    std::uint64_t train_init_seed = 11;
    std::size_t train_iters = 200;
    ConfigMerger train_merge;
    bool train_seed_cfg = false;
    train_merge.bind("data-dir", train_cmd->add_option("--data-dir", train_data, "Directory of .ppm images")->required(),
                     [&](const std::string& v) { train_data = v; });
    train_merge.bind("model", train_cmd->add_option("--model", train_model, "Denoiser weights (.mw)")->required(),
                     [&](const std::string& v) { train_model = v; });
    train_merge.bind("iters", train_cmd->add_option("--iters", train_iters, "Optimizer iterations"),
                     [&](const std::string& v) { train_iters = std::stoull(v); });
    auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Training seed");
    train_merge.bind("seed", train_seed_opt, [&](const std::string& v) {
        train_seed = std::stoull(v);
        train_seed_cfg = true;
    });
    train_merge.bind("init-seed",
                     train_cmd->add_option("--init-seed", train_init_seed,
                                           "Encoder weight init seed"),
                     [&](const std::string& v) { train_init_seed = std::stoull(v); });
    train_merge.bind("out", train_cmd->add_option("--out", train_out, "Output path (.enc)"),
                     [&](const std::string& v) { train_out = v; });
    train_merge.bind("trace", train_cmd->add_option("--trace", train_trace, "Loss trace CSV path"),
                     [&](const std::string& v) { train_trace = v; });
    train_merge.bind("prompt", train_cmd->add_option("--prompt", train_prompt, "Coarse training prompt"),
                     [&](const std::string& v) { train_prompt = v; });
    train_cmd->add_option("--config", config_path, "key = value config file");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Ablation sweep over one knob");
    CommonGenOptions sweep_opts;
    ConfigMerger sweep_merge;
    add_generation_options(sweep_cmd, sweep_opts, sweep_merge);
    std::string sweep_axis_s, sweep_values, sweep_out = "sweep.csv";
    std::size_t sweep_jobs = 1;
    sweep_merge.bind("axis", sweep_cmd->add_option("--axis", sweep_axis_s, "ws | wc | k")->required(),
                     [&](const std::string& v) { sweep_axis_s = v; });
    sweep_merge.bind("values", sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required(),
                     [&](const std::string& v) { sweep_values = v; });
    sweep_merge.bind("out", sweep_cmd->add_option("--out", sweep_out, "Output CSV path"),
                     [&](const std::string& v) { sweep_out = v; });
    sweep_merge.bind("jobs", sweep_cmd->add_option("--jobs", sweep_jobs, "Worker threads"),
                     [&](const std::string& v) { sweep_jobs = std::stoull(v); });
    sweep_cmd->add_option("--config", config_path, "key = value config file");

    // selftest
    auto* self_cmd = app.add_subcommand("selftest", "Run the invariant suite");
    std::string self_data = "data/toyset", self_golden = "tests/golden";
    self_cmd->add_option("--data-dir", self_data, "Fixture image directory");
    self_cmd->add_option("--golden-dir", self_golden, "Golden file directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (init_cmd->parsed()) {
            if (!config_path.empty()) init_merge.apply_file(config_path);
            resolve_seed(init_seed_opt, init_seed_cfg, init_seed);
            std::cout << "seed = " << init_seed << "\nout = " << init_out << "\n";
            try {
                return cmd_init_model(init_out, init_seed);
            } catch (const IoError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitIo;
            }
        }
        if (invert_cmd->parsed()) {
            if (!config_path.empty()) invert_merge.apply_file(config_path);
            resolve_seed(invert_cmd->get_option("--seed"), invert_opts.seed_given, invert_opts.seed);
            print_generation_config(invert_opts);
            std::cout << "out = " << invert_out << "\n"
                      << "verify = " << (invert_verify ? "true" : "false") << "\n";
            try {
                return cmd_invert(invert_opts, invert_out, invert_verify);
            } catch (const ParseError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitBadImage;
            }
        }
        if (gen_cmd->parsed()) {
            if (!config_path.empty()) gen_merge.apply_file(config_path);
            resolve_seed(gen_cmd->get_option("--seed"), gen_opts.seed_given, gen_opts.seed);
            print_generation_config(gen_opts);
            std::cout << "outdir = " << gen_outdir << "\n";
            try {
                return cmd_generate(gen_opts, gen_outdir);
            } catch (const TokenIndexOutOfRange& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitBadToken;
            }
        }
        if (train_cmd->parsed()) {
            if (!config_path.empty()) train_merge.apply_file(config_path);
            resolve_seed(train_seed_opt, train_seed_cfg, train_seed);
            std::cout << "data-dir = " << train_data << "\nmodel = " << train_model
                      << "\niters = " << train_iters << "\nseed = " << train_seed
                      << "\ninit-seed = " << train_init_seed << "\nout = " << train_out
                      << "\nprompt = " << train_prompt << "\n";
            try {
                return cmd_train_encoder(train_data, train_model, train_iters, train_seed,
                                         train_init_seed, train_out, train_trace,
                                         train_prompt);
            } catch (const EmptyDataset& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitEmptyDataset;
            }
        }
        if (sweep_cmd->parsed()) {
            if (!config_path.empty()) sweep_merge.apply_file(config_path);
            resolve_seed(sweep_cmd->get_option("--seed"), sweep_opts.seed_given, sweep_opts.seed);
            print_generation_config(sweep_opts);
            std::cout << "axis = " << sweep_axis_s << "\nvalues = " << sweep_values
                      << "\njobs = " << sweep_jobs << "\nout = " << sweep_out << "\n";
            try {
                return cmd_sweep(sweep_opts, sweep_axis_s, sweep_values, sweep_out, sweep_jobs);
            } catch (const EmptySweep& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitSweep;
            }
        }
        if (self_cmd->parsed()) {
            return cmd_selftest(self_data, self_golden);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
