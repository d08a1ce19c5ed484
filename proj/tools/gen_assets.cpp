// Maintenance tool: regenerates the committed PPM fixture set and the
// frozen golden files. Run from the repo root after any intentional
// numeric change, then review the diff.

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "atnj/encoder.hpp"
#include "atnj/image.hpp"
#include "atnj/model.hpp"
#include "atnj/rng.hpp"
#include "atnj/schedule.hpp"
#include "atnj/tenio.hpp"

using namespace atnj;

int main(int argc, char** argv) {
    const std::string root = argc > 1 ? argv[1] : ".";
    std::filesystem::create_directories(root + "/data/toyset");
    std::filesystem::create_directories(root + "/tests/golden");

    const auto images = make_toy_dataset();
    for (std::size_t i = 0; i < images.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s/data/toyset/blob_%02zu.ppm", root.c_str(), i);
        save_ppm(name, images[i]);
        std::printf("wrote %s\n", name);
    }

    {
        std::ofstream os(root + "/tests/golden/rng_splitmix64.txt");
        Rng rng(0x9E3779B97F4A7C15ull);
        for (int i = 0; i < 8; ++i) {
            char line[32];
            std::snprintf(line, sizeof line, "%016llx",
                          static_cast<unsigned long long>(rng.next_u64()));
            os << line << "\n";
        }
        std::printf("wrote tests/golden/rng_splitmix64.txt\n");
    }

    ModelConfig mc;
    ModelWeights model = init_weights(mc, 7);
    {
        PromptEmbedding prompt = embed_prompt({"a", "blob"}, mc);
        Rng rng(42);
        Tensor x = rng_normal(rng, 256).reshaped({4, 8, 8});
        ForwardResult r = forward(x, 981, prompt, model);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(tensor_hash(r.eps)));
        std::ofstream os(root + "/tests/golden/forward_eps.hash");
        os << buf << "\n";
        std::printf("wrote tests/golden/forward_eps.hash (%s)\n", buf);
    }

    {
        NoiseSchedule sched = build_schedule();
        EncoderWeights enc = init_encoder(EncoderConfig{}, 11);
        PromptEmbedding prompt = embed_prompt({"blob"}, mc);
        Rng rng(5);
        // From the written fixture files, not the in-memory images: the
        // u8 quantization in the PPMs is part of the fixture.
        const auto fixture_images = load_ppm_dir(root + "/data/toyset");
        TrainingBatch batch = make_training_batch(fixture_images, sched, prompt, rng);
        const double loss = concept_loss(batch, enc, model, sched, InjectionConfig{});
        std::ofstream os(root + "/tests/golden/concept_loss.txt");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", loss);
        os << buf << "\n";
        std::printf("wrote tests/golden/concept_loss.txt (%s)\n", buf);
    }
    return 0;
}
