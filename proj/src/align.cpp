#include "dicttrans/align.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dicttrans {

namespace {

// Fixed E-step chunk size. Expected counts are accumulated per chunk and
// merged in chunk-index order, so results do not depend on the thread count.
constexpr size_t kChunkSize = 256;

struct InternedPair {
    std::vector<int> src;  // real source positions only; NULL is implicit
    std::vector<int> tgt;
};

double diag_unnorm(int i_one_based, int j, int m, int n, double lambda) {
    double x = static_cast<double>(i_one_based) / m - static_cast<double>(j + 1) / n;
    return std::exp(-lambda * std::fabs(x));
}

// Alignment prior over {NULL} ∪ real positions for target position j.
// out[0] is NULL, out[1..m] are source positions 1..m.
void fill_prior(std::vector<double>& out, int j, int m, int n, bool diag, double lambda,
                double p0) {
    out.assign(static_cast<size_t>(m) + 1, 0.0);
    if (!diag) {
        double u = 1.0 / (m + 1);
        for (double& v : out) v = u;
        return;
    }
    out[0] = p0;
    double z = 0.0;
    for (int i = 1; i <= m; ++i) z += diag_unnorm(i, j, m, n, lambda);
    for (int i = 1; i <= m; ++i) out[i] = (1.0 - p0) * diag_unnorm(i, j, m, n, lambda) / z;
}

}  // namespace

int AlignmentModel::src_type_id(const TokenBytes& bytes) const {
    auto it = src_ids_.find(bytes);
    return it == src_ids_.end() ? -1 : it->second;
}

int AlignmentModel::tgt_type_id(const TokenBytes& bytes) const {
    auto it = tgt_ids_.find(bytes);
    return it == tgt_ids_.end() ? -1 : it->second;
}

double AlignmentModel::prob(const TokenBytes& src_type, const TokenBytes& tgt_type) const {
    int s = src_type_id(src_type);
    int t = tgt_type_id(tgt_type);
    if (s < 0 || t < 0) return floor_prob;
    const auto& row = ttable_[s];
    auto it = row.find(t);
    return it == row.end() ? 0.0 : it->second;
}

std::map<TokenBytes, std::map<TokenBytes, double>> AlignmentModel::table() const {
    std::map<TokenBytes, std::map<TokenBytes, double>> out;
    for (size_t s = 0; s < ttable_.size(); ++s) {
        auto& row = out[src_types_[s]];
        for (const auto& [t, p] : ttable_[s]) row[tgt_types_[t]] = p;
    }
    return out;
}

// EM machinery. Holds the interned corpus and drives E/M steps against the
// model's ttable.
class EmRunner {
public:
    EmRunner(AlignmentModel& model, const std::vector<SentencePair>& corpus,
             const AlignerConfig& cfg)
        : model_(model), cfg_(cfg) {
        if (corpus.empty()) throw std::runtime_error("alignment corpus is empty");

        if (model_.src_types_.empty()) {
            model_.src_types_.push_back("");  // NULL word
            model_.src_ids_[""] = AlignmentModel::kNullSrc;
        }
        auto intern = [](const TokenBytes& b, std::vector<TokenBytes>& types,
                         std::unordered_map<std::string, int>& ids) {
            auto it = ids.find(b);
            if (it != ids.end()) return it->second;
            int id = static_cast<int>(types.size());
            types.push_back(b);
            ids.emplace(b, id);
            return id;
        };
        pairs_.reserve(corpus.size());
        for (const SentencePair& p : corpus) {
            if (p.src.empty() || p.tgt.empty()) {
                throw std::runtime_error("sentence pair with an empty side");
            }
            InternedPair ip;
            ip.src.reserve(p.src.size());
            ip.tgt.reserve(p.tgt.size());
            for (const TokenBytes& b : p.src) {
                ip.src.push_back(intern(b, model_.src_types_, model_.src_ids_));
            }
            for (const TokenBytes& b : p.tgt) {
                ip.tgt.push_back(intern(b, model_.tgt_types_, model_.tgt_ids_));
            }
            pairs_.push_back(std::move(ip));
        }
        if (model_.ttable_.size() < model_.src_types_.size()) {
            model_.ttable_.resize(model_.src_types_.size());
        }
        init_uniform_if_needed();
    }

    void run(int iterations, EmMode mode) {
        bool diag = mode == EmMode::kDiag;
        for (int it = 0; it < iterations; ++it) {
            double ll = e_step(diag);
            model_.iteration_log_likelihood.push_back(ll);
            m_step();
        }
        model_.diag_prior = model_.diag_prior || diag;
    }

private:
    // Uniform 1/|tgt types| on every co-occurring (src, tgt) cell, NULL
    // co-occurring with everything. Rows then normalize on the first M-step.
    void init_uniform_if_needed() {
        bool empty = true;
        for (const auto& row : model_.ttable_) {
            if (!row.empty()) {
                empty = false;
                break;
            }
        }
        if (!empty) return;
        double u = 1.0 / static_cast<double>(model_.tgt_types_.size());
        for (const InternedPair& p : pairs_) {
            for (int t : p.tgt) {
                model_.ttable_[AlignmentModel::kNullSrc][t] = u;
                for (int s : p.src) model_.ttable_[s][t] = u;
            }
        }
    }

    double pair_posteriors(const InternedPair& p, bool diag, std::vector<double>& prior,
                           std::unordered_map<int64_t, double>& counts) const {
        const int m = static_cast<int>(p.src.size());
        const int n = static_cast<int>(p.tgt.size());
        const int64_t ntypes = static_cast<int64_t>(model_.tgt_types_.size());
        double ll = 0.0;
        std::vector<double> gamma(static_cast<size_t>(m) + 1);
        for (int j = 0; j < n; ++j) {
            fill_prior(prior, j, m, n, diag, model_.lambda, model_.p0);
            int t = p.tgt[j];
            double z = 0.0;
            const auto& null_row = model_.ttable_[AlignmentModel::kNullSrc];
            auto nt = null_row.find(t);
            gamma[0] = prior[0] * (nt == null_row.end() ? 0.0 : nt->second);
            z += gamma[0];
            for (int i = 1; i <= m; ++i) {
                const auto& row = model_.ttable_[p.src[i - 1]];
                auto rt = row.find(t);
                gamma[i] = prior[i] * (rt == row.end() ? 0.0 : rt->second);
                z += gamma[i];
            }
            if (z <= 0.0) continue;  // unalignable position, contributes nothing
            ll += std::log(z);
            if (gamma[0] > 0.0) {
                counts[AlignmentModel::kNullSrc * ntypes + t] += gamma[0] / z;
            }
            for (int i = 1; i <= m; ++i) {
                if (gamma[i] > 0.0) {
                    counts[static_cast<int64_t>(p.src[i - 1]) * ntypes + t] += gamma[i] / z;
                }
            }
        }
        return ll;
    }

    double e_step(bool diag) {
        const size_t nchunks = (pairs_.size() + kChunkSize - 1) / kChunkSize;
        std::vector<std::unordered_map<int64_t, double>> chunk_counts(nchunks);
        std::vector<double> chunk_ll(nchunks, 0.0);

        int nthreads = std::max(1, cfg_.threads);
        std::atomic<size_t> next_chunk{0};
        auto worker = [&]() {
            std::vector<double> prior;
            for (;;) {
                size_t c = next_chunk.fetch_add(1);
                if (c >= nchunks) break;
                size_t begin = c * kChunkSize;
                size_t end = std::min(begin + kChunkSize, pairs_.size());
                for (size_t k = begin; k < end; ++k) {
                    chunk_ll[c] += pair_posteriors(pairs_[k], diag, prior, chunk_counts[c]);
                }
            }
        };
        if (nthreads == 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            threads.reserve(nthreads);
            for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
            for (auto& t : threads) t.join();
        }

        counts_.clear();
        double ll = 0.0;
        for (size_t c = 0; c < nchunks; ++c) {
            for (const auto& [key, v] : chunk_counts[c]) counts_[key] += v;
            ll += chunk_ll[c];
        }
        return ll;
    }

    void m_step() {
        const int64_t ntypes = static_cast<int64_t>(model_.tgt_types_.size());
        std::vector<int64_t> keys;
        keys.reserve(counts_.size());
        for (const auto& [key, v] : counts_) keys.push_back(key);
        std::sort(keys.begin(), keys.end());

        for (auto& row : model_.ttable_) row.clear();
        size_t i = 0;
        while (i < keys.size()) {
            int s = static_cast<int>(keys[i] / ntypes);
            size_t row_end = i;
            double total = 0.0;
            while (row_end < keys.size() && keys[row_end] / ntypes == s) {
                total += counts_[keys[row_end]];
                ++row_end;
            }
            if (total > 0.0) {
                for (size_t k = i; k < row_end; ++k) {
                    int t = static_cast<int>(keys[k] % ntypes);
                    model_.ttable_[s][t] = counts_[keys[k]] / total;
                }
            }
            i = row_end;
        }
    }

    AlignmentModel& model_;
    AlignerConfig cfg_;
    std::vector<InternedPair> pairs_;
    std::unordered_map<int64_t, double> counts_;
};

AlignmentModel em_train(const std::vector<SentencePair>& corpus, int iterations, EmMode mode,
                        const AlignerConfig& cfg) {
    if (iterations < 1) throw std::runtime_error("EM iterations must be >= 1");
    AlignmentModel model;
    model.lambda = cfg.lambda;
    model.p0 = cfg.p0;
    model.floor_prob = cfg.floor_prob;
    EmRunner runner(model, corpus, cfg);
    runner.run(iterations, mode);
    return model;
}

AlignmentModel train_aligner(const std::vector<SentencePair>& corpus, const AlignerConfig& cfg) {
    AlignmentModel model;
    model.lambda = cfg.lambda;
    model.p0 = cfg.p0;
    model.floor_prob = cfg.floor_prob;
    EmRunner runner(model, corpus, cfg);
    if (cfg.model1_iterations > 0) runner.run(cfg.model1_iterations, EmMode::kModel1);
    if (cfg.diag_iterations > 0) runner.run(cfg.diag_iterations, EmMode::kDiag);
    return model;
}

std::vector<AlignmentLink> viterbi(const AlignmentModel& model, const SentencePair& pair) {
    const int m = static_cast<int>(pair.src.size());
    const int n = static_cast<int>(pair.tgt.size());
    std::vector<AlignmentLink> links;
    std::vector<double> prior;
    static const TokenBytes kNull;
    for (int j = 0; j < n; ++j) {
        fill_prior(prior, j, m, n, model.diag_prior, model.lambda, model.p0);
        // NULL starts as the incumbent but loses exact ties to real source
        // positions; among real positions the smaller index wins ties.
        double best = prior[0] * model.prob(kNull, pair.tgt[j]);
        int best_i = -1;
        for (int i = 1; i <= m; ++i) {
            double score = prior[i] * model.prob(pair.src[i - 1], pair.tgt[j]);
            if (score > best || (best_i < 0 && score == best)) {
                best = score;
                best_i = i - 1;
            }
        }
        if (best_i >= 0) links.push_back({j, best_i});
    }
    return links;
}

std::map<std::pair<TokenBytes, TokenBytes>, uint64_t> link_counts(
    const AlignmentModel& model, const std::vector<SentencePair>& corpus) {
    std::map<std::pair<TokenBytes, TokenBytes>, uint64_t> counts;
    for (const SentencePair& pair : corpus) {
        for (const AlignmentLink& link : viterbi(model, pair)) {
            counts[{pair.tgt[link.tgt_index], pair.src[link.src_index]}] += 1;
        }
    }
    return counts;
}

std::string format_pharaoh(const AlignmentModel& model, const std::vector<SentencePair>& corpus) {
    std::ostringstream out;
    for (const SentencePair& pair : corpus) {
        bool first = true;
        for (const AlignmentLink& link : viterbi(model, pair)) {
            if (!first) out << ' ';
            out << link.tgt_index << '-' << link.src_index;
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace dicttrans
