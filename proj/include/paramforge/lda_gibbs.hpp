#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "paramforge/preprocess.hpp"

namespace paramforge::lda {

using preprocess::Corpus;
using Count = std::uint32_t;

struct LdaConfig {
  std::size_t k = 15;
  double alpha = 50.0 / 15.0;
  double beta = 0.01;
  std::size_t sweeps = 100;
  std::size_t burn_in = 50;
  std::uint64_t seed = 1;
  // Average phi/theta over the post-burn-in sweeps instead of reading them
  // off the final state.
  bool average_after_burn_in = false;

  // alpha = 50/k, beta = 0.01.
  static LdaConfig with_default_priors(std::size_t k);

  // Full invariant set: k >= 2, alpha > 0, beta > 0, burn_in < sweeps.
  void validate() const;
  // Sampler-level checks only; admits the single-topic degenerate case.
  void validate_sampler() const;

  bool operator==(const LdaConfig&) const = default;
};

nlohmann::json to_json(const LdaConfig& cfg);
LdaConfig config_from_json(const nlohmann::json& j);

// Seeded 64-bit Mersenne Twister with explicitly specified conversions so
// draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

// Count tables and assignments of one Gibbs chain. Tables are dense:
// n_dk is D x K and the word table is stored word-major (V x K) so the
// per-token conditional reads a contiguous row.
class LdaModel {
 public:
  LdaModel(LdaConfig config, std::size_t num_docs, std::size_t vocab_size);

  const LdaConfig& config() const { return config_; }
  std::size_t num_topics() const { return config_.k; }
  std::size_t num_docs() const { return n_d_.size(); }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t total_tokens() const { return total_tokens_; }

  Count n_dk(std::size_t d, std::size_t k) const { return n_dk_[d * config_.k + k]; }
  Count n_kw(std::size_t k, std::size_t w) const { return n_wk_[w * config_.k + k]; }
  Count n_k(std::size_t k) const { return n_k_[k]; }
  Count n_d(std::size_t d) const { return n_d_[d]; }

  // Per-document topic assignments; empty when loaded without them.
  const std::vector<std::vector<std::uint32_t>>& z() const { return z_; }
  bool has_assignments() const { return has_assignments_; }

  // Rebuilds every table from z and compares; throws InvariantError on any
  // mismatch. Without assignments only the marginal identities are checked.
  void check_consistency(const Corpus& corpus) const;

  bool operator==(const LdaModel& o) const;

 private:
  friend LdaModel init(const Corpus&, const LdaConfig&);
  friend void sweep(LdaModel&, const Corpus&);
  friend LdaModel model_from_json(const nlohmann::json&);
  friend class ModelBuilder;

  void assign(std::size_t d, std::uint32_t w, std::uint32_t k, int delta);

  LdaConfig config_;
  std::size_t vocab_size_ = 0;
  std::size_t total_tokens_ = 0;
  std::vector<std::vector<std::uint32_t>> z_;
  bool has_assignments_ = true;
  std::vector<Count> n_dk_;
  std::vector<Count> n_wk_;
  std::vector<Count> n_k_;
  std::vector<Count> n_d_;
  std::vector<double> weights_;
  Rng rng_{0};
};

// Builds a model directly from count tables; used for mock models in
// analysis and tests, and by the model-file loader.
class ModelBuilder {
 public:
  ModelBuilder(LdaConfig config, std::size_t num_docs, std::size_t vocab_size);
  // Adds `count` tokens of word w in document d assigned to topic k.
  ModelBuilder& add(std::size_t d, std::uint32_t w, std::uint32_t k, Count count = 1);
  LdaModel build() &&;

 private:
  LdaModel model_;
};

struct TopicDistributions {
  std::size_t k = 0;
  std::size_t vocab_size = 0;
  std::size_t num_docs = 0;
  std::vector<double> phi;    // k x V, row-major
  std::vector<double> theta;  // D x k, row-major
  std::vector<Count> doc_tokens;
  std::vector<double> topic_proportions;  // n_k / total_tokens

  double phi_at(std::size_t t, std::size_t w) const { return phi[t * vocab_size + w]; }
  double theta_at(std::size_t d, std::size_t t) const { return theta[d * k + t]; }
};

LdaModel init(const Corpus& corpus, const LdaConfig& cfg);
// One pass resampling every token in corpus order.
void sweep(LdaModel& model, const Corpus& corpus);
TopicDistributions distributions(const LdaModel& model);
double log_likelihood(const LdaModel& model);

struct TrainResult {
  LdaModel model;
  TopicDistributions dists;
};

using SweepCallback = std::function<void(std::size_t sweep, const LdaModel&)>;

TrainResult train(const Corpus& corpus, const LdaConfig& cfg,
                  const SweepCallback& on_sweep = {});

// Model file: format 1. z is written when total_tokens <= 1e6 or `full`.
nlohmann::json model_to_json(const LdaModel& model, const std::string& vocabulary_ref,
                             bool full = false);
LdaModel model_from_json(const nlohmann::json& j);

}  // namespace paramforge::lda
