#include "crowdal/crowd.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "crowdal/rng.hpp"

namespace crowdal {

void WorkerModel::validate() const {
    if (subgroup_accuracy.empty())
        throw std::runtime_error("worker model: no subgroup accuracies");
    for (const auto& [g, p] : subgroup_accuracy)
        if (p <= 0.0 || p >= 1.0)
            throw std::runtime_error("worker model: p_g must be strictly inside (0,1), group " +
                                     std::to_string(g));
    if (workers_per_label < 1)
        throw std::runtime_error("worker model: workers_per_label must be >= 1");
}

int VoteSet::total_votes() const {
    int n = 0;
    for (const auto& [id, vs] : by_item) n += static_cast<int>(vs.size());
    return n;
}

void PBAConfig::validate() const {
    if (subgroups < 1) throw std::runtime_error("pba: subgroups must be >= 1");
    if (probe_items <= 1) throw std::runtime_error("pba: probe_items (n0) must be > 1");
    if (probe_votes < 1 || probe_votes % 2 == 0)
        throw std::runtime_error("pba: probe_votes (v0) must be odd");
    if (max_votes < 1 || max_votes % 2 == 0)
        throw std::runtime_error("pba: max_votes (b_max) must be odd");
    if (vote_budget < 0) throw std::runtime_error("pba: vote budget must be >= 0");
}

VoteSet simulate_votes(const WorkerModel& model, const std::vector<Item>& items,
                       const std::map<int, int>& votes_per_item) {
    VoteSet votes;
    for (const auto& item : items) {
        if (!item.gold_label)
            throw std::runtime_error("simulate_votes: item " + std::to_string(item.id) +
                                     " has no gold label");
        auto pg = model.subgroup_accuracy.find(item.subgroup);
        if (pg == model.subgroup_accuracy.end())
            throw std::runtime_error("simulate_votes: no accuracy for subgroup " +
                                     std::to_string(item.subgroup));
        auto vc = votes_per_item.find(item.id);
        int count = vc == votes_per_item.end() ? model.workers_per_label : vc->second;
        if (count < 1) throw std::runtime_error("simulate_votes: vote count must be >= 1");
        auto& out = votes.by_item[item.id];
        for (int k = 0; k < count; ++k) {
            Rng rng(hash64(model.seed, static_cast<std::uint64_t>(item.id),
                           static_cast<std::uint64_t>(k)));
            int gold = *item.gold_label;
            int label = rng.unit() < pg->second ? gold : 1 - gold;
            out.push_back({k, label});
        }
    }
    return votes;
}

VoteSet simulate_votes(const WorkerModel& model, const std::vector<Item>& items,
                       int votes_per_item) {
    std::map<int, int> counts;
    for (const auto& item : items) counts[item.id] = votes_per_item;
    return simulate_votes(model, items, counts);
}

std::map<int, int> aggregate_majority(const VoteSet& votes) {
    std::map<int, int> result;
    for (const auto& [id, vs] : votes.by_item) {
        if (vs.empty()) throw std::runtime_error("aggregate_majority: item with no votes");
        int ones = 0;
        for (const auto& v : vs) ones += v.label;
        int zeros = static_cast<int>(vs.size()) - ones;
        result[id] = ones >= zeros ? 1 : 0;
    }
    return result;
}

DawidSkeneDiagnostics aggregate_dawid_skene_full(const VoteSet& votes) {
    constexpr double kTol = 1e-6;
    constexpr int kMaxIter = 100;
    constexpr double kPseudo = 0.01;  // keeps confusion rows off exact 0/1

    std::vector<int> item_ids;
    for (const auto& [id, vs] : votes.by_item) {
        if (vs.empty()) throw std::runtime_error("aggregate_dawid_skene: item with no votes");
        item_ids.push_back(id);
    }
    std::map<int, int> worker_index;
    for (const auto& [id, vs] : votes.by_item)
        for (const auto& v : vs) worker_index.try_emplace(v.worker_id,
                                                          static_cast<int>(worker_index.size()));
    const std::size_t n_items = item_ids.size();
    const std::size_t n_workers = worker_index.size();

    // posterior[i][c]; initialized one-hot from the majority vote
    std::vector<std::array<double, 2>> posterior(n_items, {0.0, 0.0});
    auto majority = aggregate_majority(votes);
    for (std::size_t i = 0; i < n_items; ++i)
        posterior[i][static_cast<std::size_t>(majority.at(item_ids[i]))] = 1.0;

    // confusion[w][true][observed]
    std::vector<std::array<std::array<double, 2>, 2>> confusion(n_workers);
    std::array<double, 2> prior = {0.5, 0.5};

    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        // M-step
        for (auto& cw : confusion)
            cw = {{{kPseudo, kPseudo}, {kPseudo, kPseudo}}};
        for (std::size_t i = 0; i < n_items; ++i) {
            for (const auto& v : votes.by_item.at(item_ids[i])) {
                auto w = static_cast<std::size_t>(worker_index.at(v.worker_id));
                for (int c = 0; c < 2; ++c)
                    confusion[w][static_cast<std::size_t>(c)]
                             [static_cast<std::size_t>(v.label)] += posterior[i][
                                 static_cast<std::size_t>(c)];
            }
        }
        for (auto& cw : confusion) {
            for (int c = 0; c < 2; ++c) {
                double row = cw[static_cast<std::size_t>(c)][0] + cw[static_cast<std::size_t>(c)][1];
                cw[static_cast<std::size_t>(c)][0] /= row;
                cw[static_cast<std::size_t>(c)][1] /= row;
            }
        }
        prior = {0.0, 0.0};
        for (const auto& z : posterior) {
            prior[0] += z[0];
            prior[1] += z[1];
        }
        prior[0] /= static_cast<double>(n_items);
        prior[1] /= static_cast<double>(n_items);

        // E-step
        double max_change = 0.0;
        for (std::size_t i = 0; i < n_items; ++i) {
            std::array<double, 2> z = prior;
            for (const auto& v : votes.by_item.at(item_ids[i])) {
                auto w = static_cast<std::size_t>(worker_index.at(v.worker_id));
                z[0] *= confusion[w][0][static_cast<std::size_t>(v.label)];
                z[1] *= confusion[w][1][static_cast<std::size_t>(v.label)];
            }
            double norm = z[0] + z[1];
            if (norm <= 0.0) z = {0.5, 0.5};
            else {
                z[0] /= norm;
                z[1] /= norm;
            }
            max_change = std::max({max_change, std::abs(z[0] - posterior[i][0]),
                                   std::abs(z[1] - posterior[i][1])});
            posterior[i] = z;
        }
        if (max_change < kTol) {
            ++iter;
            break;
        }
    }

    DawidSkeneDiagnostics diag;
    diag.iterations = iter;
    for (std::size_t i = 0; i < n_items; ++i)
        diag.labels[item_ids[i]] = posterior[i][1] >= posterior[i][0] ? 1 : 0;
    for (const auto& [wid, w] : worker_index) {
        auto wi = static_cast<std::size_t>(w);
        diag.worker_accuracy[wid] = 0.5 * (confusion[wi][0][0] + confusion[wi][1][1]);
    }
    return diag;
}

std::map<int, int> aggregate_dawid_skene(const VoteSet& votes) {
    return aggregate_dawid_skene_full(votes).labels;
}

std::map<int, double> estimate_subgroup_accuracy(const VoteSet& votes,
                                                 const std::vector<Item>& probe_items,
                                                 ProbeMode mode,
                                                 const std::vector<int>& expected_groups) {
    std::map<int, int> truth;
    if (mode == ProbeMode::MajorityAsTruth) truth = aggregate_majority(votes);

    std::map<int, std::pair<int, int>> tally;  // g -> (matching, total)
    for (const auto& item : probe_items) {
        auto vs = votes.by_item.find(item.id);
        if (vs == votes.by_item.end() || vs->second.empty())
            throw std::runtime_error("estimate_subgroup_accuracy: no votes for probe item " +
                                     std::to_string(item.id));
        int reference;
        if (mode == ProbeMode::Gold) {
            if (!item.gold_label)
                throw std::runtime_error("estimate_subgroup_accuracy: probe item " +
                                         std::to_string(item.id) + " has no gold label");
            reference = *item.gold_label;
        } else {
            reference = truth.at(item.id);
        }
        auto& [match, total] = tally[item.subgroup];
        for (const auto& v : vs->second) {
            match += v.label == reference;
            ++total;
        }
    }

    auto groups = expected_groups;
    if (groups.empty())
        for (const auto& [g, t] : tally) groups.push_back(g);
    std::map<int, double> estimates;
    for (int g : groups) {
        auto t = tally.find(g);
        if (t == tally.end() || t->second.second == 0)
            throw std::runtime_error("estimate_subgroup_accuracy: group " + std::to_string(g) +
                                     " has no probes");
        double frac = static_cast<double>(t->second.first) /
                      static_cast<double>(t->second.second);
        estimates[g] = std::clamp(frac, 0.51, 0.99);
    }
    return estimates;
}

double majority_correct_prob(double p, int b) {
    if (p <= 0.0 || p >= 1.0)
        throw std::runtime_error("majority_correct_prob: p must be in (0,1)");
    if (b < 1 || b % 2 == 0)
        throw std::runtime_error("majority_correct_prob: vote count must be odd and >= 1");
    const int v = (b - 1) / 2;
    double prob = 0.0;
    double binom = 1.0;  // C(b, i), updated incrementally
    for (int i = 0; i <= v; ++i) {
        if (i > 0) binom = binom * static_cast<double>(b - i + 1) / static_cast<double>(i);
        prob += binom * std::pow(p, b - i) * std::pow(1.0 - p, i);
    }
    return prob;
}

namespace {

struct PbaGroups {
    std::vector<int> ids;        // ascending
    std::vector<double> p;       // clamped accuracy per group
    std::vector<long> f;         // items per group
};

PbaGroups collect_groups(const PBAConfig& pba, const std::map<int, double>& p_hat,
                         const std::map<int, int>& group_sizes) {
    pba.validate();
    if (p_hat.size() != group_sizes.size())
        throw std::runtime_error("pba: accuracy and size maps must cover the same groups");
    PbaGroups g;
    for (const auto& [id, p] : p_hat) {
        auto f = group_sizes.find(id);
        if (f == group_sizes.end())
            throw std::runtime_error("pba: missing size for group " + std::to_string(id));
        if (f->second < 0) throw std::runtime_error("pba: negative group size");
        g.ids.push_back(id);
        g.p.push_back(std::clamp(p, 0.51, 0.99));
        g.f.push_back(f->second);
    }
    long min_budget = 0;
    for (long f : g.f) min_budget += f;
    if (min_budget > pba.vote_budget)
        throw std::runtime_error("pba: infeasible budget; one vote per item needs " +
                                 std::to_string(min_budget) + " votes");
    return g;
}

// per-group error term of the ILP objective
double group_error(double p, int b, long f) {
    return (1.0 - majority_correct_prob(p, b)) * static_cast<double>(f);
}

// Canonical objective: fold from the last group toward the first, matching
// the DP's suffix accumulation so the oracle comparison is bit-exact.
double allocation_error(const PbaGroups& g, const std::vector<int>& votes) {
    double acc = 0.0;
    for (std::size_t i = g.ids.size(); i-- > 0;)
        acc = group_error(g.p[i], votes[i], g.f[i]) + acc;
    return acc;
}

PBAAllocation finish(const PbaGroups& g, const std::vector<int>& votes) {
    PBAAllocation alloc;
    long cost = 0;
    for (std::size_t i = 0; i < g.ids.size(); ++i) {
        alloc.votes_per_group[g.ids[i]] = votes[i];
        cost += static_cast<long>(votes[i]) * g.f[i];
    }
    alloc.cost = cost;
    alloc.expected_error = allocation_error(g, votes);
    return alloc;
}

}  // namespace

PBAAllocation pba_allocate(const PBAConfig& pba, const std::map<int, double>& p_hat,
                           const std::map<int, int>& group_sizes) {
    PbaGroups g = collect_groups(pba, p_hat, group_sizes);
    const std::size_t n = g.ids.size();
    const long budget = pba.vote_budget;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // suffix DP: best (objective, cost) for groups i..n-1 within budget r
    std::vector<std::vector<double>> obj(n + 1, std::vector<double>(budget + 1, kInf));
    std::vector<std::vector<long>> cost(n + 1, std::vector<long>(budget + 1, 0));
    for (long r = 0; r <= budget; ++r) obj[n][r] = 0.0;

    for (std::size_t i = n; i-- > 0;) {
        for (long r = 0; r <= budget; ++r) {
            for (int b = 1; b <= pba.max_votes; b += 2) {
                long c = static_cast<long>(b) * g.f[i];
                if (c > r) break;
                if (obj[i + 1][r - c] == kInf) continue;
                double cand_obj = group_error(g.p[i], b, g.f[i]) + obj[i + 1][r - c];
                long cand_cost = c + cost[i + 1][r - c];
                if (cand_obj < obj[i][r] ||
                    (cand_obj == obj[i][r] && cand_cost < cost[i][r])) {
                    obj[i][r] = cand_obj;
                    cost[i][r] = cand_cost;
                }
            }
        }
    }

    // reconstruct the lexicographically smallest optimal vote vector
    std::vector<int> votes(n, 1);
    long r = budget;
    for (std::size_t i = 0; i < n; ++i) {
        for (int b = 1; b <= pba.max_votes; b += 2) {
            long c = static_cast<long>(b) * g.f[i];
            if (c > r || obj[i + 1][r - c] == kInf) continue;
            if (group_error(g.p[i], b, g.f[i]) + obj[i + 1][r - c] == obj[i][r] &&
                c + cost[i + 1][r - c] == cost[i][r]) {
                votes[i] = b;
                r -= c;
                break;
            }
        }
    }
    return finish(g, votes);
}

PBAAllocation pba_brute_force(const PBAConfig& pba, const std::map<int, double>& p_hat,
                              const std::map<int, int>& group_sizes) {
    PbaGroups g = collect_groups(pba, p_hat, group_sizes);
    const std::size_t n = g.ids.size();
    if (n > 6 || pba.max_votes > 7)
        throw std::runtime_error("pba_brute_force: guard exceeded (G <= 6, b_max <= 7)");

    std::vector<int> votes(n, 1);
    std::vector<int> best_votes;
    double best_obj = std::numeric_limits<double>::infinity();
    long best_cost = 0;

    // lexicographic odometer so the first optimum wins ties
    while (true) {
        long cost = 0;
        for (std::size_t i = 0; i < n; ++i) cost += static_cast<long>(votes[i]) * g.f[i];
        if (cost <= pba.vote_budget) {
            double obj = allocation_error(g, votes);
            if (obj < best_obj || (obj == best_obj && cost < best_cost)) {
                best_obj = obj;
                best_cost = cost;
                best_votes = votes;
            }
        }
        std::size_t i = n;
        while (i-- > 0) {
            if (votes[i] + 2 <= pba.max_votes) {
                votes[i] += 2;
                for (std::size_t j = i + 1; j < n; ++j) votes[j] = 1;
                break;
            }
            if (i == 0) return finish(g, best_votes);
        }
        if (n == 0) break;
    }
    return finish(g, best_votes);
}

SimulatedCrowd::SimulatedCrowd(WorkerModel model, const std::vector<Item>& items)
    : model_(std::move(model)) {
    model_.validate();
    for (const auto& item : items) items_.emplace(item.id, item);
}

VoteSet SimulatedCrowd::request(const std::vector<AskedQuestion>& asks) {
    std::vector<Item> items;
    std::map<int, int> counts;
    for (const auto& ask : asks) {
        auto it = items_.find(ask.item_id);
        if (it == items_.end())
            throw std::runtime_error("simulated crowd: unknown item " +
                                     std::to_string(ask.item_id));
        items.push_back(it->second);
        counts[ask.item_id] = ask.votes;
    }
    return simulate_votes(model_, items, counts);
}

GoldReplay::GoldReplay(const std::vector<Item>& items) {
    for (const auto& item : items) {
        if (!item.gold_label)
            throw std::runtime_error("gold replay: item " + std::to_string(item.id) +
                                     " has no gold label");
        gold_[item.id] = *item.gold_label;
    }
}

VoteSet GoldReplay::request(const std::vector<AskedQuestion>& asks) {
    VoteSet votes;
    for (const auto& ask : asks) {
        auto g = gold_.find(ask.item_id);
        if (g == gold_.end())
            throw std::runtime_error("gold replay: unknown item " + std::to_string(ask.item_id));
        auto& out = votes.by_item[ask.item_id];
        for (int k = 0; k < ask.votes; ++k) out.push_back({k, g->second});
    }
    return votes;
}

FileQueue::FileQueue(std::string questions_path, std::string answers_path, double poll_seconds,
                     double timeout_seconds)
    : questions_path_(std::move(questions_path)),
      answers_path_(std::move(answers_path)),
      poll_seconds_(poll_seconds),
      timeout_seconds_(timeout_seconds) {}

VoteSet FileQueue::request(const std::vector<AskedQuestion>& asks) {
    {
        std::ofstream out(questions_path_, std::ios::app);
        if (!out) throw std::runtime_error("file queue: cannot append to " + questions_path_);
        for (const auto& ask : asks)
            out << ask.item_id << ',' << ask.subgroup << ',' << ask.votes << '\n';
    }

    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(timeout_seconds_));
    while (true) {
        std::map<int, std::vector<Vote>> answers;
        std::ifstream in(answers_path_);
        std::string line;
        int line_no = 0;
        while (in && std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string item_s;
            std::string worker_s;
            std::string label_s;
            if (!std::getline(ss, item_s, ',') || !std::getline(ss, worker_s, ',') ||
                !std::getline(ss, label_s))
                throw std::runtime_error("file queue: malformed answer line " +
                                         std::to_string(line_no));
            answers[std::stoi(item_s)].push_back({std::stoi(worker_s), std::stoi(label_s)});
        }

        bool complete = true;
        VoteSet votes;
        for (const auto& ask : asks) {
            auto a = answers.find(ask.item_id);
            if (a == answers.end() || static_cast<int>(a->second.size()) < ask.votes) {
                complete = false;
                break;
            }
            auto& out = votes.by_item[ask.item_id];
            out.assign(a->second.begin(), a->second.begin() + ask.votes);
        }
        if (complete) return votes;
        if (std::chrono::steady_clock::now() >= deadline)
            throw std::runtime_error("file queue: timed out waiting for answers in " +
                                     answers_path_);
        std::this_thread::sleep_for(std::chrono::duration<double>(poll_seconds_));
    }
}

}  // namespace crowdal
