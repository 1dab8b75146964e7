#pragma once

// Game-independent UCT search over a single-agent domain with terminal rewards in [0,1].
//
// A Domain supplies:
//   using State = ...;
//   std::vector<std::size_t> actions(const State&) const;   // applicable action ids
//   State apply(const State&, std::size_t action) const;
//   double reward(const State&) const;
//   std::string key(const State&) const;                    // content identity, for dedup
//
// A domain may also offer the lazy pair
//   std::vector<std::size_t> candidates(const State&) const; // superset of actions(s)
//   bool applicable(const State&, std::size_t action) const;
// in which case expansion and rollouts only test the actions they are about to take.
//
// Every state the search touches (expanded nodes and rollout states) is scored and kept.
// Nodes whose subtree has been enumerated completely are skipped by selection, so a budget
// no smaller than the number of reachable action sequences turns the search exhaustive.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "toolforge/hash.hpp"

namespace toolforge {

template <class D>
concept MctsDomain = requires(const D& d, const typename D::State& s, std::size_t a) {
    { d.actions(s) } -> std::convertible_to<std::vector<std::size_t>>;
    { d.apply(s, a) } -> std::convertible_to<typename D::State>;
    { d.reward(s) } -> std::convertible_to<double>;
    { d.key(s) } -> std::convertible_to<std::string>;
};

struct UctParams {
    std::size_t budget = 500;
    std::size_t max_depth = 3;
    double exploration = std::numbers::sqrt2;
    std::uint64_t seed = 0;
};

template <class D>
concept LazyActions = requires(const D& d, const typename D::State& s, std::size_t a) {
    { d.candidates(s) } -> std::convertible_to<std::vector<std::size_t>>;
    { d.applicable(s, a) } -> std::convertible_to<bool>;
};

template <class State>
struct ScoredState {
    State state;
    std::string key;
    double reward = 0.0;
};

template <MctsDomain D>
class UctSearch {
public:
    using State = typename D::State;

    UctSearch(const D& domain, UctParams params) : domain_(domain), params_(params), rng_(params.seed) {}

    /// Runs up to `budget` simulations from `root`. Returns every distinct state seen,
    /// keyed by content, the root excluded.
    std::vector<ScoredState<State>> run(State root)
    {
        root_ = make_node(std::move(root), nullptr, 0, 0);
        seen_.clear();
        simulations_ = 0;
        while (simulations_ < params_.budget && !root_->complete) {
            simulate();
            ++simulations_;
        }
        std::vector<ScoredState<State>> out;
        out.reserve(seen_.size());
        for (auto& [k, s] : seen_) out.push_back(s);
        return out;
    }

    std::size_t simulations() const { return simulations_; }
    bool exhausted() const { return root_ && root_->complete; }

private:
    struct Node {
        State state;
        Node* parent = nullptr;
        std::size_t action = 0;
        std::size_t depth = 0;
        std::vector<std::size_t> untried; // ascending; expanded front first
        std::vector<std::unique_ptr<Node>> children;
        double total = 0.0;
        std::size_t visits = 0;
        bool complete = false;
    };

    std::unique_ptr<Node> make_node(State s, Node* parent, std::size_t action, std::size_t depth)
    {
        auto n = std::make_unique<Node>();
        n->parent = parent;
        n->action = action;
        n->depth = depth;
        if (depth < params_.max_depth) {
            if constexpr (LazyActions<D>) {
                n->untried = domain_.candidates(s);
            } else {
                n->untried = domain_.actions(s);
            }
            std::sort(n->untried.begin(), n->untried.end());
            n->untried.erase(std::unique(n->untried.begin(), n->untried.end()), n->untried.end());
            std::reverse(n->untried.begin(), n->untried.end());
        }
        n->complete = n->untried.empty();
        n->state = std::move(s);
        return n;
    }

    double score(const State& s)
    {
        auto k = domain_.key(s);
        auto it = seen_.find(k);
        if (it == seen_.end()) {
            const double r = domain_.reward(s);
            it = seen_.emplace(k, ScoredState<State>{s, k, r}).first;
        }
        return it->second.reward;
    }

    Node* select_child(Node* n) const
    {
        Node* best = nullptr;
        double best_value = -std::numeric_limits<double>::infinity();
        const double log_n = std::log(static_cast<double>(std::max<std::size_t>(n->visits, 1)));
        for (const auto& c : n->children) { // children are in ascending action order
            if (c->complete) continue;
            const double mean = c->visits ? c->total / static_cast<double>(c->visits) : 0.0;
            const double bonus = c->visits ? params_.exploration * std::sqrt(log_n / static_cast<double>(c->visits))
                                           : std::numeric_limits<double>::infinity();
            const double v = mean + bonus;
            if (v > best_value) {
                best_value = v;
                best = c.get();
            }
        }
        return best;
    }

    double rollout(State s, std::size_t depth)
    {
        double best = 0.0;
        while (depth < params_.max_depth) {
            std::size_t a = 0;
            if constexpr (LazyActions<D>) {
                // first applicable action of a random permutation: uniform over the applicable set
                auto acts = domain_.candidates(s);
                bool found = false;
                for (std::size_t i = acts.size(); i > 0 && !found; --i) {
                    std::swap(acts[i - 1], acts[rng_.below(i)]);
                    if (domain_.applicable(s, acts[i - 1])) {
                        a = acts[i - 1];
                        found = true;
                    }
                }
                if (!found) break;
            } else {
                const auto acts = domain_.actions(s);
                if (acts.empty()) break;
                a = acts[rng_.below(acts.size())];
            }
            s = domain_.apply(s, a);
            ++depth;
            best = std::max(best, score(s));
        }
        return best;
    }

    void simulate()
    {
        Node* n = root_.get();
        double value = 0.0;
        for (;;) {
            if constexpr (LazyActions<D>) {
                while (!n->untried.empty() && !domain_.applicable(n->state, n->untried.back())) n->untried.pop_back();
            }
            if (!n->untried.empty()) {
                const auto a = n->untried.back();
                n->untried.pop_back();
                auto child = make_node(domain_.apply(n->state, a), n, a, n->depth + 1);
                Node* c = child.get();
                const auto pos = std::lower_bound(n->children.begin(), n->children.end(), a,
                                                  [](const auto& x, std::size_t v) { return x->action < v; });
                n->children.insert(pos, std::move(child));
                value = score(c->state);
                value = std::max(value, rollout(c->state, c->depth));
                n = c;
                break;
            }
            Node* next = select_child(n);
            if (!next) {
                n->complete = true;
                break;
            }
            n = next;
        }
        for (Node* p = n; p; p = p->parent) {
            p->visits += 1;
            p->total += value;
            if (!p->complete && p->untried.empty()
                && std::all_of(p->children.begin(), p->children.end(), [](const auto& c) { return c->complete; })) {
                p->complete = true;
            }
        }
    }

    const D& domain_;
    UctParams params_;
    Rng rng_;
    std::unique_ptr<Node> root_;
    std::map<std::string, ScoredState<State>> seen_;
    std::size_t simulations_ = 0;
};

} // namespace toolforge
