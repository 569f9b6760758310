// Copyright 2026 The SANet Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sanet: command-line front end. Every command prints key=value lines on
// stdout. Exit status is 0 on success, 2 for invalid input or arguments and
// 1 for anything unexpected.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sanet/attractor.hpp"
#include "sanet/codec.hpp"
#include "sanet/metrics.hpp"
#include "sanet/mixsim.hpp"
#include "sanet/oracle_spec.hpp"
#include "sanet/wav.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;

struct MixArgs {
  std::string in_a, in_b, out;
  double gain = 0.5;
  std::uint64_t seed = 0;
};

struct PretrainArgs {
  std::string corpus_dir, out;
  std::size_t feature_dim = sanet::kDefaultFeatureDim;
  std::size_t steps = 2000;
  std::size_t batch_frames = 256;
  double lr = 1.0;
  std::uint64_t seed = 0;
};

struct PipelineArgs {
  std::string in, codec, embedder, out;
  std::size_t k = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct EvalArgs {
  std::string est, ref;
};

struct RirArgs {
  std::string in, rir, out;
};

void print_kv(const char* key, double value, int decimals = 6) {
  std::printf("%s=%.*f\n", key, decimals, value);
}

int cmd_mix(const MixArgs& a, bool gain_given, bool seed_given) {
  if (gain_given == seed_given) {
    std::cerr << "mix: give exactly one of --gain or --seed\n";
    return kExitUsage;
  }
  const double r = gain_given ? a.gain : sanet::sample_gain(a.seed);
  const auto x = sanet::wav::read(a.in_a);
  const auto y = sanet::wav::read(a.in_b);
  sanet::wav::write(a.out, sanet::mix(x, y, r));
  print_kv("gain", r);
  return 0;
}

std::vector<sanet::Waveform> read_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw sanet::InputError("corpus directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<sanet::Waveform> corpus;
  for (const auto& f : files) corpus.push_back(sanet::wav::read(f));
  if (corpus.empty()) throw sanet::InputError("no .wav files in " + dir.string());
  return corpus;
}

int cmd_pretrain(const PretrainArgs& a) {
  const auto corpus = read_corpus(a.corpus_dir);
  const auto init = sanet::init_codec(a.feature_dim, sanet::kDefaultWindow, sanet::kDefaultHop, a.seed);
  const auto result =
      sanet::pretrain_codec(corpus, init, {a.steps, a.lr, a.batch_frames, a.seed});
  sanet::save_codec(result.weights, a.out);
  double total = 0.0;
  for (const auto& clip : corpus) {
    const auto y = sanet::round_trip(clip, result.weights);
    const std::span<const double> ref(clip.samples.data(), y.size());
    total += sanet::si_sdr(y.samples, ref);
  }
  std::printf("clips=%zu\n", corpus.size());
  std::printf("steps=%zu\n", a.steps);
  if (!result.loss_trace.empty()) print_kv("final_loss", result.loss_trace.back(), 9);
  print_kv("si_sdr", total / static_cast<double>(corpus.size()), 2);
  return 0;
}

int cmd_extract(const PipelineArgs& a) {
  const auto input = sanet::wav::read(a.in);
  const auto codec = sanet::load_codec(a.codec);
  const auto embedder = sanet::load_embedder(a.embedder);
  const auto attractors = sanet::extract_reference_attractors(
      input, codec, embedder, {a.k, a.seed, 100, 1e-6, a.threads});
  sanet::save_attractors(attractors, a.out);
  std::printf("k=%zu\n", attractors.k);
  std::printf("d=%zu\n", attractors.dim);
  std::printf("iterations=%zu\n", attractors.iterations_used);
  for (std::size_t i = 0; i < attractors.k; ++i)
    std::printf("energy_%zu=%.6f\n", i, static_cast<double>(attractors.mask_energy[i]));
  return 0;
}

int cmd_separate(const PipelineArgs& a) {
  const auto input = sanet::wav::read(a.in);
  const auto codec = sanet::load_codec(a.codec);
  const auto embedder = sanet::load_embedder(a.embedder);
  const auto result = sanet::separate(input, codec, embedder,
                                      {a.k, a.temperature, a.seed, 100, 1e-6, a.threads});
  const fs::path dir(a.out);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < result.estimates.size(); ++i) {
    const auto path = dir / ("est_" + std::to_string(i) + ".wav");
    sanet::wav::write(path, result.estimates[i]);
    std::printf("estimate_%zu=%s\n", i, path.string().c_str());
  }
  sanet::save_attractors(result.attractors, dir / "attractors.saeb");
  std::printf("k=%zu\n", result.attractors.k);
  for (std::size_t i = 0; i < result.attractors.k; ++i)
    std::printf("energy_%zu=%.6f\n", i, static_cast<double>(result.attractors.mask_energy[i]));
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  const auto est = sanet::wav::read(a.est);
  const auto ref = sanet::wav::read(a.ref);
  print_kv("si_sdr", sanet::si_sdr(est, ref), 2);
  return 0;
}

int cmd_rir(const RirArgs& a) {
  const auto x = sanet::wav::read(a.in);
  const auto h = sanet::wav::read(a.rir);
  const auto y = sanet::convolve_rir(x, h);
  sanet::wav::write(a.out, y);
  std::printf("samples=%zu\n", y.size());
  return 0;
}

int cmd_info(const std::string& path) {
  const auto a = sanet::load_attractors(path);
  std::printf("k=%zu\n", a.k);
  std::printf("d=%zu\n", a.dim);
  std::printf("provenance=%s\n", sanet::to_string(a.provenance));
  for (std::size_t i = 0; i < a.k; ++i) {
    std::printf("norm_%zu=%.6f\n", i, sanet::detail::norm<float>(a.vector(i)));
    std::printf("energy_%zu=%.6f\n", i, static_cast<double>(a.mask_energy[i]));
  }
  const auto sim = sanet::attractor_similarity(a, a);
  for (std::size_t i = 0; i < a.k; ++i)
    for (std::size_t j = i + 1; j < a.k; ++j) {
      // Avoid printing "-0.000000" for orthogonal pairs.
      const double c = std::abs(sim(i, j)) < 5e-7 ? 0.0 : sim(i, j);
      std::printf("cos_%zu_%zu=%.6f\n", i, j, c);
    }
  return 0;
}

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a) {
  cmd->add_option("--in", a.in, "input WAV (16 kHz mono)")->required();
  cmd->add_option("--codec", a.codec, "SACW codec weights")->required();
  cmd->add_option("--embedder", a.embedder, "tcn:PATH or oracle:PATH")->required();
  cmd->add_option("--k", a.k, "number of clusters")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "clustering seed");
  cmd->add_option("--threads", a.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker-attractor separation toolkit"};
  app.require_subcommand(1);

  MixArgs mix;
  auto* mix_cmd = app.add_subcommand("mix", "mix two sources with gains r and 1-r");
  mix_cmd->add_option("--in-a", mix.in_a)->required();
  mix_cmd->add_option("--in-b", mix.in_b)->required();
  auto* gain_opt = mix_cmd->add_option("--gain", mix.gain, "gain r in [0.25, 0.75]");
  auto* seed_opt = mix_cmd->add_option("--seed", mix.seed, "sample r from this seed");
  mix_cmd->add_option("--out", mix.out)->required();

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain-codec", "pretrain the codec as an autoencoder");
  pre_cmd->add_option("--corpus-dir", pre.corpus_dir)->required();
  pre_cmd->add_option("--feature-dim", pre.feature_dim)->check(CLI::PositiveNumber);
  pre_cmd->add_option("--steps", pre.steps);
  pre_cmd->add_option("--lr", pre.lr)->check(CLI::PositiveNumber);
  pre_cmd->add_option("--batch-frames", pre.batch_frames)->check(CLI::PositiveNumber);
  pre_cmd->add_option("--seed", pre.seed);
  pre_cmd->add_option("--out", pre.out)->required();

  PipelineArgs ext;
  auto* ext_cmd = app.add_subcommand("extract", "extract K attractors from a reference");
  add_pipeline_options(ext_cmd, ext);
  ext_cmd->add_option("--out", ext.out, "SAEB output")->required();

  PipelineArgs sep;
  sep.k = 2;
  auto* sep_cmd = app.add_subcommand("separate", "separate a mixture into K estimates");
  add_pipeline_options(sep_cmd, sep);
  sep_cmd->add_option("--temperature", sep.temperature)->check(CLI::PositiveNumber);
  sep_cmd->add_option("--out-dir", sep.out)->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "SI-SDR of an estimate against a reference");
  eval_cmd->add_option("--est", ev.est)->required();
  eval_cmd->add_option("--ref", ev.ref)->required();

  RirArgs rir;
  auto* rir_cmd = app.add_subcommand("rir", "convolve with a room impulse response");
  rir_cmd->add_option("--in", rir.in)->required();
  rir_cmd->add_option("--rir", rir.rir)->required();
  rir_cmd->add_option("--out", rir.out)->required();

  std::string emb_path;
  auto* info_cmd = app.add_subcommand("info", "describe an SAEB attractor file");
  info_cmd->add_option("--emb", emb_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*mix_cmd) return cmd_mix(mix, gain_opt->count() > 0, seed_opt->count() > 0);
    if (*pre_cmd) return cmd_pretrain(pre);
    if (*ext_cmd) return cmd_extract(ext);
    if (*sep_cmd) return cmd_separate(sep);
    if (*eval_cmd) return cmd_eval(ev);
    if (*rir_cmd) return cmd_rir(rir);
    if (*info_cmd) return cmd_info(emb_path);
  } catch (const sanet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
