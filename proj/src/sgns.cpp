#include "tgl/sgns.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tgl/rng.hpp"
#include "tgl/thread_pool.hpp"

namespace tgl {

namespace {
constexpr std::uint64_t kInitStream = 0x1712e55ULL;
}

double clamped_sigmoid(double x) {
  const double c = std::clamp(x, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-c));
}

double sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                      const std::vector<std::span<const double>>& negatives) {
  auto dot = [](std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  };
  double loss = -std::log(clamped_sigmoid(dot(center, context)));
  for (const auto& negative : negatives) {
    loss += -std::log(clamped_sigmoid(-dot(center, negative)));
  }
  return loss;
}

EmbeddingTable::EmbeddingTable(const std::vector<NodeId>& nodes, std::size_t dimension,
                               std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ < 1) throw ConfigError("embedding table: dimension must be >= 1");
  ensure_nodes(nodes);
}

void EmbeddingTable::ensure_nodes(const std::vector<NodeId>& nodes) {
  for (NodeId v : nodes) {
    if (slot_of_.contains(v)) continue;
    const std::size_t s = node_of_.size();
    slot_of_.emplace(v, s);
    node_of_.push_back(v);
    input_.resize(input_.size() + dimension_, 0.0);
    context_.resize(context_.size() + dimension_, 0.0);
    init_vector(v, s);
  }
}

void EmbeddingTable::init_vector(NodeId v, std::size_t s) {
  // Per-node stream, so vectors do not depend on registration order.
  Rng rng(derive_seed(seed_, v, kInitStream));
  const double half = 0.5 / static_cast<double>(dimension_);
  double* dst = input_.data() + s * dimension_;
  for (std::size_t i = 0; i < dimension_; ++i) dst[i] = rng.next_double(-half, half);
}

std::size_t EmbeddingTable::slot(NodeId v) const {
  auto it = slot_of_.find(v);
  if (it == slot_of_.end()) {
    throw ContractError("embedding table: unknown node " + std::to_string(v));
  }
  return it->second;
}

std::span<const double> EmbeddingTable::input_vector(NodeId v) const {
  return {input_.data() + slot(v) * dimension_, dimension_};
}

std::span<const double> EmbeddingTable::context_vector(NodeId v) const {
  return {context_.data() + slot(v) * dimension_, dimension_};
}

void EmbeddingTable::rebuild_unigram_table(const WalkCorpus& corpus, double power) {
  const auto freq = corpus.node_frequencies();
  unigram_cdf_.clear();
  unigram_node_.clear();
  double total = 0.0;
  for (NodeId v : node_of_) {  // slot order keeps the table deterministic
    auto it = freq.find(v);
    if (it == freq.end() || it->second == 0) continue;
    total += std::pow(static_cast<double>(it->second), power);
    unigram_cdf_.push_back(total);
    unigram_node_.push_back(v);
  }
}

NodeId EmbeddingTable::sample_negative(Rng& rng) const {
  if (unigram_node_.empty()) {
    // No table built yet; fall back to uniform over registered nodes.
    return node_of_[rng.next_below(node_of_.size())];
  }
  const double u = rng.next_double() * unigram_cdf_.back();
  const auto it = std::upper_bound(unigram_cdf_.begin(), unigram_cdf_.end(), u);
  const std::size_t idx = std::min<std::size_t>(
      static_cast<std::size_t>(it - unigram_cdf_.begin()), unigram_node_.size() - 1);
  return unigram_node_[idx];
}

void EmbeddingTable::train_range(const std::vector<const Walk*>& walks, std::size_t begin,
                                 std::size_t end, const SgnsHyper& hyper, std::uint64_t round,
                                 std::uint64_t stream, std::uint64_t total_pairs,
                                 TrainStats& stats) {
  Rng rng(derive_seed(seed_, round ^ 0xc0ffee, stream));
  const auto window = static_cast<std::ptrdiff_t>(hyper.window);
  std::vector<double> center_grad(dimension_);
  double loss_sum = 0.0;
  std::uint64_t processed = 0;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t w = begin; w < end; ++w) {
      const auto& nodes = walks[w]->nodes;
      const auto n = static_cast<std::ptrdiff_t>(nodes.size());
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        double* center = input_.data() + slot(nodes[i]) * dimension_;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
        const std::ptrdiff_t hi = std::min(n - 1, i + window);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const NodeId target = nodes[j];
          const double progress =
              total_pairs ? static_cast<double>(processed) / static_cast<double>(total_pairs) : 0.0;
          const double alpha = hyper.learning_rate * std::max(1e-4, 1.0 - progress);

          std::fill(center_grad.begin(), center_grad.end(), 0.0);
          double pair_loss = 0.0;
          for (std::size_t neg = 0; neg <= hyper.negatives; ++neg) {
            NodeId ctx_node = target;
            double label = 1.0;
            if (neg > 0) {
              ctx_node = sample_negative(rng);
              if (ctx_node == target) continue;
              label = 0.0;
            }
            double* ctx = context_.data() + slot(ctx_node) * dimension_;
            double dot = 0.0;
            for (std::size_t k = 0; k < dimension_; ++k) dot += center[k] * ctx[k];
            const double sig = clamped_sigmoid(dot);
            pair_loss += neg == 0 ? -std::log(sig) : -std::log(clamped_sigmoid(-dot));
            const double g = (sig - label) * alpha;
            for (std::size_t k = 0; k < dimension_; ++k) {
              center_grad[k] += g * ctx[k];
              ctx[k] -= g * center[k];
            }
          }
          for (std::size_t k = 0; k < dimension_; ++k) center[k] -= center_grad[k];
          loss_sum += pair_loss;
          ++processed;
        }
      }
    }
  }
  stats.pairs_trained = processed;
  stats.mean_loss = loss_sum;  // caller divides by the merged pair count
}

TrainStats EmbeddingTable::train_on_walks(const std::vector<const Walk*>& walks,
                                          const SgnsHyper& hyper, std::uint64_t round,
                                          int threads) {
  std::uint64_t window_pairs = 0;
  for (const Walk* walk : walks) {
    const auto n = static_cast<std::ptrdiff_t>(walk->nodes.size());
    const auto window = static_cast<std::ptrdiff_t>(hyper.window);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      if (!slot_of_.contains(walk->nodes[i])) {
        throw ContractError("train_on_walks: node " + std::to_string(walk->nodes[i]) +
                            " missing from embedding table");
      }
      window_pairs += static_cast<std::uint64_t>(std::min(n - 1, i + window) -
                                                 std::max<std::ptrdiff_t>(0, i - window));
    }
  }
  const std::uint64_t total_pairs = window_pairs * hyper.epochs;

  TrainStats stats;
  const std::size_t shards =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), std::max<std::size_t>(walks.size(), 1));
  if (shards <= 1) {
    train_range(walks, 0, walks.size(), hyper, round, 0, total_pairs, stats);
  } else {
    // Hogwild-style: shards update the table unsynchronized.
    std::vector<TrainStats> partial(shards);
    const std::size_t step = (walks.size() + shards - 1) / shards;
    ThreadPool::instance().run_chunks(shards, [&](std::size_t c) {
      const std::size_t lo = std::min(walks.size(), c * step);
      const std::size_t hi = std::min(walks.size(), lo + step);
      train_range(walks, lo, hi, hyper, round, c + 1, total_pairs / shards, partial[c]);
    });
    for (const auto& p : partial) {
      stats.pairs_trained += p.pairs_trained;
      stats.mean_loss += p.mean_loss;
    }
  }
  stats.mean_loss = stats.pairs_trained ? stats.mean_loss / static_cast<double>(stats.pairs_trained)
                                        : 0.0;
  ++version_;
  return stats;
}

TrainStats EmbeddingTable::refresh(const WalkCorpus& corpus, const RepairReport& repair,
                                   const SgnsHyper& hyper, std::uint64_t round, int threads) {
  std::vector<const Walk*> walks;
  walks.reserve(repair.touched.size());
  std::vector<NodeId> occurring;
  for (WalkId id : repair.touched) {
    const Walk& walk = corpus.walk(id);
    walks.push_back(&walk);
    occurring.insert(occurring.end(), walk.nodes.begin(), walk.nodes.end());
  }
  std::sort(occurring.begin(), occurring.end());
  occurring.erase(std::unique(occurring.begin(), occurring.end()), occurring.end());
  ensure_nodes(occurring);
  rebuild_unigram_table(corpus, hyper.unigram_power);
  return train_on_walks(walks, hyper, round, threads);
}

bool EmbeddingTable::all_finite() const {
  for (double v : input_) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : context_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void EmbeddingTable::dump(std::ostream& out) const {
  for (std::size_t s = 0; s < node_of_.size(); ++s) {
    out << node_of_[s];
    for (std::size_t k = 0; k < dimension_; ++k) {
      out << ' ' << input_[s * dimension_ + k];
    }
    out << '\n';
  }
}

}  // namespace tgl
