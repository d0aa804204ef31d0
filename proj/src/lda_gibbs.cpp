#include "paramforge/lda_gibbs.hpp"

#include <cmath>

#include "paramforge/error.hpp"

namespace paramforge::lda {

LdaConfig LdaConfig::with_default_priors(std::size_t k) {
  LdaConfig cfg;
  cfg.k = k;
  cfg.alpha = 50.0 / static_cast<double>(k);
  cfg.beta = 0.01;
  return cfg;
}

void LdaConfig::validate_sampler() const {
  if (k < 1) throw InvalidConfig("k must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidConfig("alpha must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidConfig("beta must be > 0");
}

void LdaConfig::validate() const {
  validate_sampler();
  if (k < 2) throw InvalidConfig("k must be >= 2");
  if (burn_in >= sweeps) throw InvalidConfig("burn_in must be < sweeps");
}

nlohmann::json to_json(const LdaConfig& cfg) {
  return {{"k", cfg.k},
          {"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"sweeps", cfg.sweeps},
          {"burn_in", cfg.burn_in},
          {"seed", cfg.seed},
          {"average_after_burn_in", cfg.average_after_burn_in}};
}

LdaConfig config_from_json(const nlohmann::json& j) {
  LdaConfig cfg;
  cfg.k = j.at("k").get<std::size_t>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.sweeps = j.value("sweeps", cfg.sweeps);
  cfg.burn_in = j.value("burn_in", cfg.burn_in);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.average_after_burn_in = j.value("average_after_burn_in", false);
  return cfg;
}

LdaModel::LdaModel(LdaConfig config, std::size_t num_docs, std::size_t vocab_size)
    : config_(config),
      vocab_size_(vocab_size),
      z_(num_docs),
      n_dk_(num_docs * config.k, 0),
      n_wk_(vocab_size * config.k, 0),
      n_k_(config.k, 0),
      n_d_(num_docs, 0),
      weights_(config.k, 0.0),
      rng_(config.seed) {}

void LdaModel::assign(std::size_t d, std::uint32_t w, std::uint32_t k, int delta) {
  const auto K = config_.k;
  n_dk_[d * K + k] += delta;
  n_wk_[static_cast<std::size_t>(w) * K + k] += delta;
  n_k_[k] += delta;
  n_d_[d] += delta;
}

bool LdaModel::operator==(const LdaModel& o) const {
  return config_ == o.config_ && vocab_size_ == o.vocab_size_ &&
         total_tokens_ == o.total_tokens_ && z_ == o.z_ && n_dk_ == o.n_dk_ &&
         n_wk_ == o.n_wk_ && n_k_ == o.n_k_ && n_d_ == o.n_d_;
}

void LdaModel::check_consistency(const Corpus& corpus) const {
  const auto K = config_.k;
  if (corpus.documents.size() != num_docs() || corpus.vocabulary.size() != vocab_size_) {
    throw InvariantError("model shape does not match corpus");
  }
  if (has_assignments_) {
    std::vector<Count> dk(n_dk_.size(), 0), wk(n_wk_.size(), 0), k_tot(K, 0),
        d_tot(num_docs(), 0);
    std::size_t total = 0;
    for (std::size_t d = 0; d < num_docs(); ++d) {
      const auto& tokens = corpus.documents[d].tokens;
      if (z_[d].size() != tokens.size()) {
        throw InvariantError("assignment length mismatch in document " +
                             std::to_string(d));
      }
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto k = z_[d][i];
        if (k >= K) throw InvariantError("assignment out of range");
        ++dk[d * K + k];
        ++wk[static_cast<std::size_t>(tokens[i]) * K + k];
        ++k_tot[k];
        ++d_tot[d];
        ++total;
      }
    }
    if (dk != n_dk_ || wk != n_wk_ || k_tot != n_k_ || d_tot != n_d_ ||
        total != total_tokens_) {
      throw InvariantError("count tables disagree with a full recount of z");
    }
    return;
  }
  std::vector<std::uint64_t> k_tot(K, 0);
  std::uint64_t total = 0;
  for (std::size_t d = 0; d < num_docs(); ++d) {
    std::uint64_t row = 0;
    for (std::size_t k = 0; k < K; ++k) row += n_dk(d, k);
    if (row != n_d_[d]) throw InvariantError("n_dk row sum != n_d");
    total += row;
  }
  for (std::size_t w = 0; w < vocab_size_; ++w) {
    for (std::size_t k = 0; k < K; ++k) k_tot[k] += n_kw(k, w);
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (k_tot[k] != n_k_[k]) throw InvariantError("n_kw row sum != n_k");
  }
  if (total != total_tokens_) throw InvariantError("total token mismatch");
}

ModelBuilder::ModelBuilder(LdaConfig config, std::size_t num_docs,
                           std::size_t vocab_size)
    : model_(config, num_docs, vocab_size) {
  model_.has_assignments_ = false;
}

ModelBuilder& ModelBuilder::add(std::size_t d, std::uint32_t w, std::uint32_t k,
                                Count count) {
  if (d >= model_.num_docs() || w >= model_.vocab_size_ || k >= model_.config_.k) {
    throw DimensionMismatch("ModelBuilder::add index out of range");
  }
  for (Count c = 0; c < count; ++c) model_.assign(d, w, k, +1);
  model_.total_tokens_ += count;
  return *this;
}

LdaModel ModelBuilder::build() && {
  model_.z_.clear();
  return std::move(model_);
}

LdaModel init(const Corpus& corpus, const LdaConfig& cfg) {
  cfg.validate_sampler();
  if (corpus.total_tokens == 0) throw EmptyCorpus("cannot train on an empty corpus");
  LdaModel model(cfg, corpus.documents.size(), corpus.vocabulary.size());
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const auto& tokens = corpus.documents[d].tokens;
    auto& zd = model.z_[d];
    zd.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto k = static_cast<std::uint32_t>(model.rng_.below(cfg.k));
      zd[i] = k;
      model.assign(d, tokens[i], k, +1);
    }
    model.total_tokens_ += tokens.size();
  }
  return model;
}

void sweep(LdaModel& model, const Corpus& corpus) {
  const std::size_t K = model.config_.k;
  const double alpha = model.config_.alpha;
  const double beta = model.config_.beta;
  const double v_beta = static_cast<double>(model.vocab_size_) * beta;
  auto& cum = model.weights_;

  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const auto& tokens = corpus.documents[d].tokens;
    auto& zd = model.z_[d];
    const Count* dk = &model.n_dk_[d * K];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::uint32_t w = tokens[i];
      model.assign(d, w, zd[i], -1);

      const Count* wk = &model.n_wk_[static_cast<std::size_t>(w) * K];
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        total += (dk[k] + alpha) * (wk[k] + beta) / (model.n_k_[k] + v_beta);
        cum[k] = total;
      }
      const double u = model.rng_.uniform() * total;
      std::uint32_t chosen = static_cast<std::uint32_t>(K - 1);
      for (std::size_t k = 0; k < K; ++k) {
        if (u < cum[k]) {
          chosen = static_cast<std::uint32_t>(k);
          break;
        }
      }
      zd[i] = chosen;
      model.assign(d, w, chosen, +1);
    }
  }
}

TopicDistributions distributions(const LdaModel& model) {
  const auto& cfg = model.config();
  const std::size_t K = cfg.k;
  const std::size_t V = model.vocab_size();
  const std::size_t D = model.num_docs();
  TopicDistributions out;
  out.k = K;
  out.vocab_size = V;
  out.num_docs = D;
  out.phi.resize(K * V);
  out.theta.resize(D * K);
  out.doc_tokens.resize(D);
  out.topic_proportions.resize(K);

  const double v_beta = static_cast<double>(V) * cfg.beta;
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = model.n_k(k) + v_beta;
    for (std::size_t w = 0; w < V; ++w) {
      out.phi[k * V + w] = (model.n_kw(k, w) + cfg.beta) / denom;
    }
    out.topic_proportions[k] =
        model.total_tokens() == 0
            ? 1.0 / static_cast<double>(K)
            : static_cast<double>(model.n_k(k)) / static_cast<double>(model.total_tokens());
  }
  const double k_alpha = static_cast<double>(K) * cfg.alpha;
  for (std::size_t d = 0; d < D; ++d) {
    out.doc_tokens[d] = model.n_d(d);
    const double denom = model.n_d(d) + k_alpha;
    for (std::size_t k = 0; k < K; ++k) {
      out.theta[d * K + k] = (model.n_dk(d, k) + cfg.alpha) / denom;
    }
  }
  return out;
}

double log_likelihood(const LdaModel& model) {
  const auto& cfg = model.config();
  const std::size_t K = cfg.k;
  const std::size_t V = model.vocab_size();
  const double v_beta = static_cast<double>(V) * cfg.beta;
  const double k_alpha = static_cast<double>(K) * cfg.alpha;

  // log p(w | z): one Dirichlet-multinomial per topic.
  double ll = 0.0;
  const double lg_beta = std::lgamma(cfg.beta);
  for (std::size_t k = 0; k < K; ++k) {
    ll += std::lgamma(v_beta) - std::lgamma(model.n_k(k) + v_beta);
    for (std::size_t w = 0; w < V; ++w) {
      const Count c = model.n_kw(k, w);
      if (c) ll += std::lgamma(c + cfg.beta) - lg_beta;
    }
  }
  // log p(z): one Dirichlet-multinomial per non-empty document.
  const double lg_alpha = std::lgamma(cfg.alpha);
  for (std::size_t d = 0; d < model.num_docs(); ++d) {
    if (model.n_d(d) == 0) continue;
    ll += std::lgamma(k_alpha) - std::lgamma(model.n_d(d) + k_alpha);
    for (std::size_t k = 0; k < K; ++k) {
      const Count c = model.n_dk(d, k);
      if (c) ll += std::lgamma(c + cfg.alpha) - lg_alpha;
    }
  }
  return ll;
}

TrainResult train(const Corpus& corpus, const LdaConfig& cfg,
                  const SweepCallback& on_sweep) {
  cfg.validate();
  LdaModel model = init(corpus, cfg);

  std::vector<double> phi_sum;
  std::vector<double> theta_sum;
  std::size_t samples = 0;
  for (std::size_t s = 0; s < cfg.sweeps; ++s) {
    sweep(model, corpus);
    if (on_sweep) on_sweep(s + 1, model);
    if (cfg.average_after_burn_in && s >= cfg.burn_in) {
      auto snap = distributions(model);
      if (phi_sum.empty()) {
        phi_sum.assign(snap.phi.size(), 0.0);
        theta_sum.assign(snap.theta.size(), 0.0);
      }
      for (std::size_t i = 0; i < phi_sum.size(); ++i) phi_sum[i] += snap.phi[i];
      for (std::size_t i = 0; i < theta_sum.size(); ++i) theta_sum[i] += snap.theta[i];
      ++samples;
    }
  }

  TopicDistributions dists = distributions(model);
  if (samples > 0) {
    const double inv = 1.0 / static_cast<double>(samples);
    for (std::size_t i = 0; i < phi_sum.size(); ++i) dists.phi[i] = phi_sum[i] * inv;
    for (std::size_t i = 0; i < theta_sum.size(); ++i) dists.theta[i] = theta_sum[i] * inv;
  }
  return {std::move(model), std::move(dists)};
}

namespace {

constexpr std::size_t kMaxInlineAssignments = 1'000'000;

}  // namespace

nlohmann::json model_to_json(const LdaModel& model, const std::string& vocabulary_ref,
                             bool full) {
  const std::size_t K = model.num_topics();
  nlohmann::json j;
  j["format"] = 1;
  j["config"] = to_json(model.config());
  j["vocabulary"] = vocabulary_ref;
  j["num_documents"] = model.num_docs();
  j["vocab_size"] = model.vocab_size();
  j["total_tokens"] = model.total_tokens();

  auto n_kw = nlohmann::json::array();
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<Count> row(model.vocab_size());
    for (std::size_t w = 0; w < row.size(); ++w) row[w] = model.n_kw(k, w);
    n_kw.push_back(std::move(row));
  }
  j["n_kw"] = std::move(n_kw);

  auto n_dk = nlohmann::json::array();
  for (std::size_t d = 0; d < model.num_docs(); ++d) {
    std::vector<Count> row(K);
    for (std::size_t k = 0; k < K; ++k) row[k] = model.n_dk(d, k);
    n_dk.push_back(std::move(row));
  }
  j["n_dk"] = std::move(n_dk);

  if (model.has_assignments() &&
      (full || model.total_tokens() <= kMaxInlineAssignments)) {
    j["z"] = model.z();
  }
  return j;
}

LdaModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", 0) != 1) throw DataError("unsupported model file format");
  const LdaConfig cfg = config_from_json(j.at("config"));
  cfg.validate_sampler();
  const auto D = j.at("num_documents").get<std::size_t>();
  const auto V = j.at("vocab_size").get<std::size_t>();
  const std::size_t K = cfg.k;

  LdaModel model(cfg, D, V);
  const auto& n_kw = j.at("n_kw");
  const auto& n_dk = j.at("n_dk");
  if (n_kw.size() != K || n_dk.size() != D) {
    throw DataError("model file table shapes do not match its header");
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto row = n_kw[k].get<std::vector<Count>>();
    if (row.size() != V) throw DataError("model file n_kw row has wrong length");
    for (std::size_t w = 0; w < V; ++w) {
      model.n_wk_[w * K + k] = row[w];
      model.n_k_[k] += row[w];
    }
  }
  for (std::size_t d = 0; d < D; ++d) {
    const auto row = n_dk[d].get<std::vector<Count>>();
    if (row.size() != K) throw DataError("model file n_dk row has wrong length");
    for (std::size_t k = 0; k < K; ++k) {
      model.n_dk_[d * K + k] = row[k];
      model.n_d_[d] += row[k];
    }
  }
  model.total_tokens_ = j.at("total_tokens").get<std::size_t>();
  if (j.contains("z")) {
    model.z_ = j["z"].get<std::vector<std::vector<std::uint32_t>>>();
    if (model.z_.size() != D) throw DataError("model file z has wrong length");
  } else {
    model.z_.clear();
    model.has_assignments_ = false;
  }
  return model;
}

}  // namespace paramforge::lda
