#include "usecon/explorer.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstring>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <unordered_set>

namespace usecon {

namespace {

constexpr std::size_t kShardBits = 6;
constexpr std::size_t kShards = std::size_t{1} << kShardBits;
constexpr std::size_t kChunkStates = 4096;
constexpr std::size_t kMaxDiagnostics = 64;

std::size_t shard_of(std::uint64_t hash) { return static_cast<std::size_t>(hash >> (64 - kShardBits)); }

// Open addressing with linear probing over 32-bit handles and their full
// hashes. Key equality beyond the hash is supplied by the caller.
class HandleTable {
 public:
  HandleTable() { reset(16); }

  template <class Eq>
  std::optional<std::uint32_t> find(std::uint64_t hash, Eq&& eq) const {
    for (std::size_t i = hash & mask_;; i = (i + 1) & mask_) {
      if (handles_[i] == 0) return std::nullopt;
      if (hashes_[i] == hash && eq(handles_[i] - 1)) return handles_[i] - 1;
    }
  }

  void insert(std::uint64_t hash, std::uint32_t handle) {
    if ((size_ + 1) * 4 > handles_.size() * 3) grow();
    place(hash, handle);
    ++size_;
  }

  void reset(std::size_t capacity) {
    handles_.assign(capacity, 0);
    hashes_.assign(capacity, 0);
    mask_ = capacity - 1;
    size_ = 0;
  }

  std::size_t size() const { return size_; }

 private:
  void place(std::uint64_t hash, std::uint32_t handle) {
    std::size_t i = hash & mask_;
    while (handles_[i] != 0) i = (i + 1) & mask_;
    handles_[i] = handle + 1;
    hashes_[i] = hash;
  }

  void grow() {
    auto handles = std::move(handles_);
    auto hashes = std::move(hashes_);
    const std::size_t size = size_;
    reset(handles.size() * 2);
    for (std::size_t i = 0; i < handles.size(); ++i)
      if (handles[i] != 0) place(hashes[i], handles[i] - 1);
    size_ = size;
  }

  std::vector<std::uint32_t> handles_;
  std::vector<std::uint64_t> hashes_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

// Runs fn(i, thread) for i in [0, n) and rethrows the first exception by index.
template <class Fn>
void parallel_for(std::size_t n, int workers, std::size_t grain, Fn&& fn) {
  std::exception_ptr error;
  std::size_t error_at = n;
  std::mutex guard;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, grain) num_threads(std::max(workers, 1))
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i), omp_get_thread_num());
    } catch (...) {
      std::lock_guard lock(guard);
      if (static_cast<std::size_t>(i) < error_at) {
        error_at = static_cast<std::size_t>(i);
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

int thread_slots(int workers) { return std::max(workers, 1); }

std::uint64_t edge_order(StateId id, std::uint32_t pos) { return (std::uint64_t(id) << 32) | pos; }

constexpr std::uint64_t kNoEdge = ~std::uint64_t{0};

bool is_soft(EvalError::Code code) {
  return code == EvalError::Code::select_empty || code == EvalError::Code::aggregate_empty;
}

TraceStep trace_step(std::optional<ActionLabel> label, const World& world, const SystemConfig& config) {
  return TraceStep{std::move(label), canonical_encode(world, config), describe(world, config)};
}

// The successor at `pos` of state `id`, as a full world.
Step successor_at(const StateGraph& graph, StateId id, std::uint32_t pos) {
  SuccessorBuffer buf;
  graph.kernel().expand(graph.packed(id), buf);
  const PackedSuccessor& item = buf.items.at(pos);
  if (item.side != PackedSuccessor::kNoSide) return std::move(buf.side[item.side]);
  Step s;
  s.label = graph.codec().unpack(item.label);
  s.stutter = item.stutter;
  s.post = graph.codec().decode(buf.key(pos, graph.codec().width()));
  return s;
}

Trace trace_through(const StateGraph& graph, StateId id, std::uint32_t pos) {
  Trace trace = reconstruct_trace(graph, id);
  Step s = successor_at(graph, id, pos);
  trace.steps.push_back(trace_step(s.label, s.post, graph.config()));
  return trace;
}

UseStatus finished_other(ModelKind model) {
  return model == ModelKind::pre ? UseStatus::denied : UseStatus::stopped;
}

}  // namespace

struct StateGraph::Index {
  std::array<HandleTable, kShards> shards;
  bool fingerprints = false;
};

StateGraph::StateGraph(const SystemConfig& config, bool fingerprints)
    : config_(config), codec_(config), kernel_(codec_), index_(std::make_unique<Index>()) {
  index_->fingerprints = fingerprints;
}

StateGraph::~StateGraph() = default;

std::uint32_t StateGraph::level(StateId id) const {
  auto it = std::upper_bound(level_start_.begin(), level_start_.end(), id);
  return static_cast<std::uint32_t>(it - level_start_.begin()) - 1;
}

std::optional<StateId> StateGraph::find_packed(const std::uint8_t* key) const {
  const std::size_t width = codec_.width();
  std::uint64_t h = hash_key(key, width);
  return index_->shards[shard_of(h)].find(h, [&](std::uint32_t id) {
    return index_->fingerprints || std::memcmp(packed(id), key, width) == 0;
  });
}

std::optional<StateId> StateGraph::find(const StateKey& key) const {
  World world;
  try {
    world = canonical_decode(key, config_);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  std::vector<std::uint8_t> buf(codec_.width());
  if (!codec_.encode(world, buf.data())) return std::nullopt;
  auto id = find_packed(buf.data());
  if (id && this->key(*id) != key) return std::nullopt;
  return id;
}

const EdgeSet& StateGraph::edges(int workers) const {
  if (edges_) return *edges_;
  auto set = std::make_unique<EdgeSet>();
  const std::size_t n = size();
  set->offsets.resize(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) set->offsets[i + 1] = set->offsets[i] + out_degree_[i];
  set->targets.resize(set->offsets[n]);
  set->labels.resize(set->offsets[n]);
  std::vector<SuccessorBuffer> buffers(thread_slots(workers));
  parallel_for(n, workers, 256, [&](std::size_t id, int t) {
    SuccessorBuffer& buf = buffers[t];
    buf.clear();
    kernel_.expand(packed(static_cast<StateId>(id)), buf);
    std::uint64_t at = set->offsets[id];
    for (std::size_t i = 0; i < buf.items.size(); ++i, ++at) {
      const PackedSuccessor& item = buf.items[i];
      set->labels[at] = item.label;
      if (item.stutter) {
        set->targets[at] = static_cast<StateId>(id);
      } else if (item.encodable) {
        set->targets[at] = find_packed(buf.key(i, codec_.width())).value_or(kNoState);
      } else {
        set->targets[at] = kNoState;
      }
    }
  });
  edges_ = std::move(set);
  return *edges_;
}

// Level-synchronous BFS. Each level runs three phases:
//  A. frontier chunks expand in parallel into per-chunk candidate lists,
//     grouped by index shard;
//  B. each shard resolves its candidates in chunk order against the index and
//     a level-local pending table, so the first discoverer in (source, position)
//     order wins;
//  C. new states are numbered in (source, position) order and appended.
// State ids, and with them every statistic, are independent of the worker count.
class Explorer {
 public:
  Explorer(StateGraph& graph, const ExploreOptions& options, ExplorationResult& result)
      : g_(graph), options_(options), result_(result), width_(graph.codec().width()) {}

  void run();

 private:
  struct Candidate {
    std::uint64_t hash;
    StateId src;
    std::uint32_t pos;
    PackedLabel label;
    std::uint32_t key;  // index into Chunk::keys, in units of the key width
  };

  struct Event {
    StateId src;
    std::uint32_t pos;
    Step step;
  };

  struct Chunk {
    std::vector<std::uint8_t> keys;
    std::vector<Candidate> candidates;
    std::array<std::uint32_t, kShards + 1> shard_begin{};
    std::vector<Event> events;
    std::uint64_t found = 0;
  };

  struct Fresh {
    std::uint64_t hash;
    StateId src;
    std::uint32_t pos;
    PackedLabel label;
    const std::uint8_t* key;
  };

  void expand_chunk(StateId begin, StateId end, Chunk& chunk, SuccessorBuffer& buf) const;
  void record_events(std::vector<Chunk>& chunks);
  void finish_events();

  StateGraph& g_;
  const ExploreOptions& options_;
  ExplorationResult& result_;
  const std::size_t width_;

  std::optional<Event> domain_event_;
  std::optional<Event> eval_event_;
  std::unordered_set<std::string> seen_diagnostics_;
};

void Explorer::expand_chunk(StateId begin, StateId end, Chunk& chunk, SuccessorBuffer& buf) const {
  std::vector<Candidate> raw;
  for (StateId id = begin; id < end; ++id) {
    buf.clear();
    auto n = g_.kernel_.expand(g_.packed(id), buf);
    g_.out_degree_[id] = static_cast<std::uint32_t>(n);
    chunk.found += n;
    for (std::size_t i = 0; i < n; ++i) {
      const PackedSuccessor& item = buf.items[i];
      if (item.side != PackedSuccessor::kNoSide) {
        const Step& s = buf.side[item.side];
        if (s.diagnostic || s.domain_violation)
          chunk.events.push_back(Event{id, static_cast<std::uint32_t>(i), s});
      }
      if (item.stutter || !item.encodable) continue;
      const std::uint8_t* key = buf.key(i, width_);
      auto slot = static_cast<std::uint32_t>(chunk.keys.size() / width_);
      chunk.keys.insert(chunk.keys.end(), key, key + width_);
      raw.push_back(Candidate{hash_key(key, width_), id, static_cast<std::uint32_t>(i), item.label, slot});
    }
  }
  // Stable counting sort by shard.
  std::array<std::uint32_t, kShards + 1> count{};
  for (const auto& c : raw) ++count[shard_of(c.hash) + 1];
  for (std::size_t s = 0; s < kShards; ++s) count[s + 1] += count[s];
  chunk.shard_begin = count;
  chunk.candidates.resize(raw.size());
  for (const auto& c : raw) chunk.candidates[count[shard_of(c.hash)]++] = c;
}

void Explorer::record_events(std::vector<Chunk>& chunks) {
  for (auto& chunk : chunks) {
    for (auto& event : chunk.events) {
      if (event.step.domain_violation && !domain_event_) domain_event_ = event;
      if (event.step.diagnostic) {
        if (is_soft(event.step.diagnostic->code)) {
          const std::string& message = event.step.diagnostic->message;
          if (seen_diagnostics_.size() < kMaxDiagnostics && seen_diagnostics_.insert(message).second)
            result_.diagnostics.push_back(message);
        } else if (!eval_event_) {
          eval_event_ = event;
        }
      }
    }
    chunk.events.clear();
  }
}

void Explorer::finish_events() {
  const SystemConfig& config = g_.config();
  if (domain_event_) {
    const auto& [attr, value] = *domain_event_->step.domain_violation;
    Trace trace = reconstruct_trace(g_, domain_event_->src);
    trace.steps.push_back(trace_step(domain_event_->step.label, domain_event_->step.post, config));
    result_.violations.push_back(Violation{ViolationKind::invariant, "TypeCorrectness",
                                           domain_event_->step.label.to_string() + " sets " + attr + " to " +
                                               value.to_string() + ", outside its domain",
                                           std::move(trace)});
  }
  if (eval_event_) {
    Trace trace = reconstruct_trace(g_, eval_event_->src);
    trace.steps.push_back(trace_step(eval_event_->step.label, eval_event_->step.post, config));
    result_.violations.push_back(Violation{ViolationKind::evaluation_error, "PolicyEvaluation",
                                           eval_event_->step.diagnostic->message, std::move(trace)});
  }
}

void Explorer::run() {
  const int workers = std::max(options_.workers, 1);
  auto& index = *g_.index_;

  std::vector<std::uint8_t> init(width_);
  if (!g_.codec_.encode(initial_world(), init.data())) throw Error("initial state is not representable");
  g_.keys_ = init;
  g_.parent_.push_back(kNoState);
  g_.label_.push_back(PackedLabel{});
  g_.out_degree_.push_back(0);
  g_.level_start_.push_back(0);
  std::uint64_t h0 = hash_key(init.data(), width_);
  index.shards[shard_of(h0)].insert(h0, 0);
  result_.states_found = 1;

  std::vector<SuccessorBuffer> buffers(thread_slots(workers));
  std::array<HandleTable, kShards> pending;
  std::array<std::vector<Fresh>, kShards> fresh;
  std::array<bool, kShards> graded;

  for (;;) {
    const StateId begin = g_.level_start_.back();
    const auto end = static_cast<StateId>(g_.size());

    const std::size_t nchunks = (end - begin + kChunkStates - 1) / kChunkStates;
    std::vector<Chunk> chunks(nchunks);
    parallel_for(nchunks, workers, 1, [&](std::size_t c, int t) {
      auto lo = static_cast<StateId>(begin + c * kChunkStates);
      auto hi = static_cast<StateId>(std::min<std::size_t>(end, lo + kChunkStates));
      expand_chunk(lo, hi, chunks[c], buffers[t]);
    });
    for (const auto& chunk : chunks) result_.states_found += chunk.found;
    record_events(chunks);

    graded.fill(true);
    parallel_for(kShards, workers, 1, [&](std::size_t s, int) {
      HandleTable& table = pending[s];
      std::vector<Fresh>& out = fresh[s];
      table.reset(16);
      out.clear();
      for (const auto& chunk : chunks) {
        for (auto i = chunk.shard_begin[s]; i < chunk.shard_begin[s + 1]; ++i) {
          const Candidate& c = chunk.candidates[i];
          const std::uint8_t* key = chunk.keys.data() + std::size_t(c.key) * width_;
          auto seen = index.shards[s].find(c.hash, [&](std::uint32_t id) {
            return index.fingerprints || std::memcmp(g_.packed(id), key, width_) == 0;
          });
          if (seen) {
            graded[s] = false;
            continue;
          }
          auto dup = table.find(c.hash, [&](std::uint32_t k) {
            return index.fingerprints || std::memcmp(out[k].key, key, width_) == 0;
          });
          if (dup) continue;
          table.insert(c.hash, static_cast<std::uint32_t>(out.size()));
          out.push_back(Fresh{c.hash, c.src, c.pos, c.label, key});
        }
      }
    });
    if (std::find(graded.begin(), graded.end(), false) != graded.end()) g_.graded_ = false;

    std::vector<Fresh> level;
    for (auto& part : fresh) level.insert(level.end(), part.begin(), part.end());
    if (level.empty()) break;
    std::sort(level.begin(), level.end(),
              [](const Fresh& a, const Fresh& b) { return edge_order(a.src, a.pos) < edge_order(b.src, b.pos); });

    const std::size_t base = g_.size();
    if (base + level.size() > options_.memory_limit) {
      level.resize(options_.memory_limit > base ? options_.memory_limit - base : 0);
      result_.partial = true;
      if (level.empty()) break;
    }

    g_.keys_.resize((base + level.size()) * width_);
    std::array<std::vector<std::pair<std::uint64_t, StateId>>, kShards> inserts;
    for (std::size_t i = 0; i < level.size(); ++i) {
      const Fresh& f = level[i];
      std::memcpy(g_.keys_.data() + (base + i) * width_, f.key, width_);
      g_.parent_.push_back(f.src);
      g_.label_.push_back(f.label);
      g_.out_degree_.push_back(0);
      inserts[shard_of(f.hash)].emplace_back(f.hash, static_cast<StateId>(base + i));
    }
    parallel_for(kShards, workers, 1, [&](std::size_t s, int) {
      for (const auto& [hash, id] : inserts[s]) index.shards[s].insert(hash, id);
    });
    g_.level_start_.push_back(static_cast<StateId>(base));
    if (result_.partial) break;
  }

  result_.distinct_states = g_.size();
  result_.diameter = g_.depth();
  finish_events();
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::invariant: return "invariant";
    case ViolationKind::safety: return "safety";
    case ViolationKind::liveness: return "liveness";
    case ViolationKind::deadlock: return "deadlock";
    case ViolationKind::evaluation_error: return "evaluation-error";
  }
  return "invariant";
}

std::optional<ViolationKind> parse_violation_kind(std::string_view text) {
  for (auto k : {ViolationKind::invariant, ViolationKind::safety, ViolationKind::liveness, ViolationKind::deadlock,
                 ViolationKind::evaluation_error})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::string_view to_string(Fairness fairness) { return fairness == Fairness::none ? "none" : "weak"; }

std::optional<Fairness> parse_fairness(std::string_view text) {
  if (text == "none") return Fairness::none;
  if (text == "weak") return Fairness::weak;
  return std::nullopt;
}

Exploration explore_graph(const SystemConfig& config, const ExploreOptions& options) {
  auto start = std::chrono::steady_clock::now();
  Exploration out;
  out.graph = std::make_unique<StateGraph>(config, options.fingerprints);
  out.result.approximate = options.fingerprints;
  Explorer(*out.graph, options, out.result).run();
  out.result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Exploration explore(const SystemConfig& config, const Checks& checks, const ExploreOptions& options) {
  auto start = std::chrono::steady_clock::now();
  Exploration out = explore_graph(config, options);
  const StateGraph& graph = *out.graph;
  auto& violations = out.result.violations;
  auto append = [&](std::vector<Violation> more) {
    violations.insert(violations.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  };
  if (!checks.invariants.empty()) append(check_invariant_states(graph, checks.invariants, options.workers));
  if (!checks.monitors.empty()) append(check_edge_monitors(graph, checks.monitors, options.workers));
  // Frontier states of a truncated run have no successors recorded, so
  // terminal-state and cycle checks would be meaningless there.
  if (!out.result.partial) {
    if (checks.deadlock) out.result.deadlocks = classify_deadlocks(graph, &violations);
    for (const auto& goal : checks.liveness) append(check_leads_to(graph, goal, options.workers));
  }
  out.result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ReferenceResult explore_reference(const SystemConfig& config, std::uint64_t memory_limit) {
  ReferenceResult r;
  std::unordered_set<std::string> seen;
  std::deque<std::pair<World, std::uint32_t>> queue;
  World init = initial_world();
  seen.insert(canonical_encode(init, config).bytes);
  queue.emplace_back(std::move(init), 0);
  r.states_found = 1;
  std::uint32_t deepest = 0;
  while (!queue.empty()) {
    auto [world, level] = std::move(queue.front());
    queue.pop_front();
    deepest = std::max(deepest, level);
    auto next = successors(world, config);
    r.states_found += next.size();
    if (next.empty()) r.terminals.insert(canonical_encode(world, config));
    for (auto& s : next) {
      if (s.domain_violation || s.stutter) continue;
      if (seen.size() >= memory_limit) break;
      if (seen.insert(canonical_encode(s.post, config).bytes).second) queue.emplace_back(std::move(s.post), level + 1);
    }
  }
  r.diameter = deepest + 1;
  r.distinct_states = seen.size();
  for (const auto& bytes : seen) r.keys.insert(StateKey{bytes});
  return r;
}

namespace {

void enumerate_from(const World& world, const StateKey& key, std::uint32_t budget, const SystemConfig& config,
                    std::map<StateKey, std::uint32_t>& best) {
  auto [it, inserted] = best.try_emplace(key, budget);
  if (!inserted) {
    if (it->second >= budget) return;
    it->second = budget;
  }
  if (budget == 0) return;
  for (const Step& s : successors(world, config)) {
    if (s.domain_violation) continue;
    enumerate_from(s.post, canonical_encode(s.post, config), budget - 1, config, best);
  }
}

}  // namespace

std::set<StateKey> naive_enumerate(const SystemConfig& config, std::uint32_t depth_bound) {
  std::map<StateKey, std::uint32_t> best;
  World init = initial_world();
  enumerate_from(init, canonical_encode(init, config), depth_bound, config, best);
  std::set<StateKey> out;
  for (const auto& [key, budget] : best) out.insert(key);
  return out;
}

Trace reconstruct_trace(const StateGraph& graph, StateId id) {
  if (id >= graph.size()) throw UnknownState();
  std::vector<StateId> path;
  for (StateId at = id; at != kNoState; at = graph.parent(at)) path.push_back(at);
  Trace trace;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    std::optional<ActionLabel> label;
    if (*it != 0) label = graph.codec().unpack(graph.label(*it));
    trace.steps.push_back(trace_step(std::move(label), graph.world(*it), graph.config()));
  }
  return trace;
}

Trace reconstruct_trace(const StateGraph& graph, const StateKey& key) {
  auto id = graph.find(key);
  if (!id) throw UnknownState();
  return reconstruct_trace(graph, *id);
}

bool is_expected_terminal(const World& world, const SystemConfig& config) {
  if (world.uses.size() != config.candidates().size()) return false;
  const UseStatus other = finished_other(config.model());
  return std::all_of(world.uses.begin(), world.uses.end(),
                     [&](const Use& u) { return u.st == UseStatus::completed || u.st == other; });
}

std::vector<Deadlock> classify_deadlocks(const StateGraph& graph, std::vector<Violation>* violations) {
  std::vector<Deadlock> out;
  for (StateId id = 0; id < graph.size(); ++id) {
    if (graph.out_degree(id) != 0) continue;
    World world = graph.world(id);
    Deadlock d{canonical_encode(world, graph.config()), describe(world, graph.config()),
               is_expected_terminal(world, graph.config()) ? DeadlockClass::expected_terminal
                                                           : DeadlockClass::unexpected};
    if (d.classification == DeadlockClass::unexpected && violations)
      violations->push_back(Violation{ViolationKind::deadlock, "Deadlock", "no action is enabled in " + d.state,
                                      reconstruct_trace(graph, id)});
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Violation> check_invariant_states(const StateGraph& graph, const std::vector<StatePredicate>& predicates,
                                              int workers) {
  const std::size_t np = predicates.size();
  std::vector<std::vector<StateId>> first(thread_slots(workers), std::vector<StateId>(np, kNoState));
  parallel_for(graph.size(), workers, 256, [&](std::size_t i, int t) {
    auto id = static_cast<StateId>(i);
    auto& mine = first[t];
    World world = graph.world(id);
    for (std::size_t p = 0; p < np; ++p)
      if (id < mine[p] && !predicates[p].holds(world)) mine[p] = id;
  });
  std::vector<Violation> out;
  for (std::size_t p = 0; p < np; ++p) {
    StateId id = kNoState;
    for (const auto& mine : first) id = std::min(id, mine[p]);
    if (id == kNoState) continue;
    Trace trace = reconstruct_trace(graph, id);
    std::string message = predicates[p].name + " fails in " + trace.steps.back().state;
    out.push_back(Violation{ViolationKind::invariant, predicates[p].name, std::move(message), std::move(trace)});
  }
  return out;
}

std::vector<Violation> check_edge_monitors(const StateGraph& graph, const std::vector<EdgeMonitor>& monitors,
                                           int workers) {
  const std::size_t nm = monitors.size();
  const PackedCodec& codec = graph.codec();
  std::vector<std::vector<std::uint64_t>> first(thread_slots(workers), std::vector<std::uint64_t>(nm, kNoEdge));
  std::vector<SuccessorBuffer> buffers(thread_slots(workers));
  parallel_for(graph.size(), workers, 256, [&](std::size_t i, int t) {
    auto id = static_cast<StateId>(i);
    SuccessorBuffer& buf = buffers[t];
    buf.clear();
    graph.kernel().expand(graph.packed(id), buf);
    for (std::size_t pos = 0; pos < buf.items.size(); ++pos) {
      const PackedSuccessor& item = buf.items[pos];
      if (item.stutter) continue;
      auto slot = item.label.slot();
      auto before = codec.status(graph.packed(id), slot);
      if (!before) continue;
      std::optional<UseStatus> after;
      if (item.encodable) {
        after = codec.status(buf.key(pos, codec.width()), slot);
      } else if (const Use* u = buf.side[item.side].post.find(codec.key_of(slot))) {
        after = u->st;
      }
      if (!after) continue;
      for (std::size_t m = 0; m < nm; ++m) {
        if (*before == monitors[m].former && monitors[m].forbidden.contains(*after))
          first[t][m] = std::min(first[t][m], edge_order(id, static_cast<std::uint32_t>(pos)));
      }
    }
  });
  std::vector<Violation> out;
  for (std::size_t m = 0; m < nm; ++m) {
    std::uint64_t e = kNoEdge;
    for (const auto& mine : first) e = std::min(e, mine[m]);
    if (e == kNoEdge) continue;
    auto src = static_cast<StateId>(e >> 32);
    auto pos = static_cast<std::uint32_t>(e & 0xffffffffu);
    Trace trace = trace_through(graph, src, pos);
    const ActionLabel& label = *trace.steps.back().label;
    const UseStatus after = canonical_decode(trace.steps.back().key, graph.config()).find(label.key)->st;
    std::string message = label.key.to_string() + " moves from " + std::string(to_string(monitors[m].former)) +
                          " to " + std::string(to_string(after)) + " via " + label.to_string();
    out.push_back(Violation{ViolationKind::safety, monitors[m].name, std::move(message), std::move(trace)});
  }
  return out;
}

bool is_graded(const StateGraph& graph, int workers) {
  std::vector<char> ok(thread_slots(workers), 1);
  std::vector<SuccessorBuffer> buffers(thread_slots(workers));
  parallel_for(graph.size(), workers, 256, [&](std::size_t i, int t) {
    auto id = static_cast<StateId>(i);
    SuccessorBuffer& buf = buffers[t];
    buf.clear();
    graph.kernel().expand(graph.packed(id), buf);
    const std::uint32_t level = graph.level(id);
    for (std::size_t pos = 0; pos < buf.items.size(); ++pos) {
      const PackedSuccessor& item = buf.items[pos];
      if (item.stutter || !item.encodable) continue;
      auto target = graph.find_packed(buf.key(pos, graph.codec().width()));
      if (target && graph.level(*target) != level + 1) ok[t] = 0;
    }
  });
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

namespace {

using KindMask = std::uint8_t;

KindMask kind_bit(ActionKind kind) { return static_cast<KindMask>(1u << static_cast<unsigned>(kind)); }

// Fair-cycle search for one use slot. The region is every not-Q state
// reachable from a P-and-not-Q state through not-Q states.
class LeadsToSearch {
 public:
  LeadsToSearch(const StateGraph& graph, const EdgeSet& edges, const LeadsToGoal& goal, std::uint32_t slot)
      : g_(graph), e_(edges), goal_(goal), slot_(slot), local_(graph.size(), kNone) {}

  std::optional<Violation> run();

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  bool not_target(StateId id) const {
    auto st = g_.codec().status(g_.packed(id), slot_);
    return !(st && goal_.target.contains(*st));
  }
  bool source(StateId id) const {
    auto st = g_.codec().status(g_.packed(id), slot_);
    return st && goal_.source.contains(*st);
  }

  void build_region();
  void strongly_connected();
  bool violating(std::uint32_t comp, KindMask& enabled_all, KindMask& taken) const;
  // Shortest edge path inside component `comp` from `from` to `to` (edge indices).
  std::vector<std::uint64_t> path_within(std::uint32_t comp, std::uint32_t from, std::uint32_t to) const;
  std::vector<std::uint64_t> cycle_within(std::uint32_t comp, std::uint32_t at) const;
  Trace prefix_to(std::uint32_t local) const;
  void append(Trace& trace, std::uint64_t edge) const;
  std::string use_name() const { return g_.codec().key_of(slot_).to_string(); }

  const StateGraph& g_;
  const EdgeSet& e_;
  const LeadsToGoal& goal_;
  const std::uint32_t slot_;

  std::vector<std::uint32_t> local_;  // state id -> region index
  std::vector<StateId> region_;
  std::vector<std::uint32_t> region_parent_;
  std::vector<std::uint64_t> region_edge_;
  std::vector<std::uint32_t> comp_;
  std::vector<std::vector<std::uint32_t>> members_;
};

void LeadsToSearch::build_region() {
  for (StateId id = 0; id < g_.size(); ++id) {
    if (source(id) && not_target(id)) {
      local_[id] = static_cast<std::uint32_t>(region_.size());
      region_.push_back(id);
      region_parent_.push_back(kNone);
      region_edge_.push_back(kNoEdge);
    }
  }
  for (std::size_t i = 0; i < region_.size(); ++i) {
    StateId u = region_[i];
    for (auto e = e_.offsets[u]; e < e_.offsets[u + 1]; ++e) {
      StateId t = e_.targets[e];
      if (t == kNoState || local_[t] != kNone || !not_target(t)) continue;
      local_[t] = static_cast<std::uint32_t>(region_.size());
      region_.push_back(t);
      region_parent_.push_back(static_cast<std::uint32_t>(i));
      region_edge_.push_back(e);
    }
  }
}

void LeadsToSearch::strongly_connected() {
  const std::size_t n = region_.size();
  std::vector<std::uint32_t> index(n, kNone), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  struct Frame {
    std::uint32_t v;
    std::uint64_t next;
  };
  std::vector<Frame> calls;
  comp_.assign(n, kNone);
  std::uint32_t counter = 0;

  auto internal = [&](std::uint64_t e) {
    StateId t = e_.targets[e];
    return t == kNoState ? kNone : local_[t];
  };

  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kNone) continue;
    calls.push_back({root, e_.offsets[region_[root]]});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!calls.empty()) {
      Frame& f = calls.back();
      const std::uint64_t end = e_.offsets[region_[f.v] + 1];
      if (f.next < end) {
        std::uint32_t w = internal(f.next++);
        if (w == kNone) continue;
        if (index[w] == kNone) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          calls.push_back({w, e_.offsets[region_[w]]});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      std::uint32_t v = f.v;
      calls.pop_back();
      if (!calls.empty()) low[calls.back().v] = std::min(low[calls.back().v], low[v]);
      if (low[v] == index[v]) {
        auto id = static_cast<std::uint32_t>(members_.size());
        members_.emplace_back();
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp_[w] = id;
          members_.back().push_back(w);
        } while (w != v);
      }
    }
  }
}

// An SCC is a counterexample when it has an internal edge and, under weak
// fairness, every action kind enabled in all of its states is also taken by
// one of its internal edges.
bool LeadsToSearch::violating(std::uint32_t comp, KindMask& enabled_all, KindMask& taken) const {
  enabled_all = 0xff;
  taken = 0;
  bool cyclic = false;
  for (std::uint32_t v : members_[comp]) {
    KindMask enabled = 0;
    StateId u = region_[v];
    for (auto e = e_.offsets[u]; e < e_.offsets[u + 1]; ++e) {
      enabled |= kind_bit(e_.labels[e].kind());
      StateId t = e_.targets[e];
      if (t != kNoState && local_[t] != kNone && comp_[local_[t]] == comp) {
        cyclic = true;
        taken |= kind_bit(e_.labels[e].kind());
      }
    }
    enabled_all &= enabled;
  }
  if (!cyclic) return false;
  return goal_.fairness == Fairness::none || (enabled_all & ~taken) == 0;
}

std::vector<std::uint64_t> LeadsToSearch::path_within(std::uint32_t comp, std::uint32_t from,
                                                      std::uint32_t to) const {
  if (from == to) return {};
  std::map<std::uint32_t, std::uint64_t> via;  // region index -> edge that reached it
  std::deque<std::uint32_t> queue{from};
  via[from] = kNoEdge;
  while (!queue.empty()) {
    std::uint32_t v = queue.front();
    queue.pop_front();
    StateId u = region_[v];
    for (auto e = e_.offsets[u]; e < e_.offsets[u + 1]; ++e) {
      StateId t = e_.targets[e];
      if (t == kNoState || local_[t] == kNone || comp_[local_[t]] != comp) continue;
      std::uint32_t w = local_[t];
      if (via.count(w)) continue;
      via[w] = e;
      if (w == to) {
        std::vector<std::uint64_t> path;
        for (std::uint32_t at = to; at != from;) {
          std::uint64_t edge = via[at];
          path.push_back(edge);
          auto src = static_cast<StateId>(std::upper_bound(e_.offsets.begin(), e_.offsets.end(), edge) -
                                          e_.offsets.begin() - 1);
          at = local_[src];
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(w);
    }
  }
  return {};
}

std::vector<std::uint64_t> LeadsToSearch::cycle_within(std::uint32_t comp, std::uint32_t at) const {
  StateId u = region_[at];
  std::vector<std::uint64_t> best;
  for (auto e = e_.offsets[u]; e < e_.offsets[u + 1]; ++e) {
    StateId t = e_.targets[e];
    if (t == kNoState || local_[t] == kNone || comp_[local_[t]] != comp) continue;
    std::vector<std::uint64_t> cycle{e};
    auto back = path_within(comp, local_[t], at);
    cycle.insert(cycle.end(), back.begin(), back.end());
    if (best.empty() || cycle.size() < best.size()) best = std::move(cycle);
  }
  return best;
}

void LeadsToSearch::append(Trace& trace, std::uint64_t edge) const {
  StateId t = e_.targets[edge];
  World world = g_.world(t);
  trace.steps.push_back(trace_step(g_.codec().unpack(e_.labels[edge]), world, g_.config()));
}

Trace LeadsToSearch::prefix_to(std::uint32_t v) const {
  std::vector<std::uint64_t> edges;
  std::uint32_t at = v;
  while (region_parent_[at] != kNone) {
    edges.push_back(region_edge_[at]);
    at = region_parent_[at];
  }
  Trace trace = reconstruct_trace(g_, region_[at]);
  for (auto it = edges.rbegin(); it != edges.rend(); ++it) append(trace, *it);
  return trace;
}

std::optional<Violation> LeadsToSearch::run() {
  build_region();
  if (region_.empty()) return std::nullopt;

  const std::string target = goal_.target.to_string();
  std::uint32_t terminal = kNone;
  for (std::uint32_t v = 0; v < region_.size(); ++v)
    if (g_.out_degree(region_[v]) == 0 && (terminal == kNone || region_[v] < region_[terminal])) terminal = v;
  if (terminal != kNone) {
    Trace trace = prefix_to(terminal);
    return Violation{ViolationKind::liveness, goal_.name,
                     "use " + use_name() + " halts without reaching " + target, std::move(trace)};
  }

  strongly_connected();
  std::uint32_t chosen = kNone;
  StateId chosen_min = kNoState;
  KindMask chosen_enabled = 0, chosen_taken = 0;
  for (std::uint32_t c = 0; c < members_.size(); ++c) {
    KindMask enabled_all = 0, taken = 0;
    if (!violating(c, enabled_all, taken)) continue;
    StateId lowest = kNoState;
    for (auto v : members_[c]) lowest = std::min(lowest, region_[v]);
    if (lowest < chosen_min) {
      chosen = c;
      chosen_min = lowest;
      chosen_enabled = enabled_all;
      chosen_taken = taken;
    }
  }
  if (chosen == kNone) return std::nullopt;

  const std::uint32_t anchor = local_[chosen_min];
  Trace trace = prefix_to(anchor);
  trace.cycle_start = trace.steps.size() - 1;

  std::vector<std::uint64_t> cycle;
  if (goal_.fairness == Fairness::weak) {
    // Take one internal edge of every kind that must be taken and pass through
    // a state that disables each kind that is only sometimes enabled.
    std::uint32_t cur = anchor;
    for (int k = 0; k < kActionKindCount; ++k) {
      const KindMask bit = kind_bit(static_cast<ActionKind>(k));
      if (chosen_enabled & bit) {
        if (!(chosen_taken & bit)) continue;
        std::uint64_t pick = kNoEdge;
        for (auto v : members_[chosen]) {
          StateId u = region_[v];
          for (auto e = e_.offsets[u]; e < e_.offsets[u + 1] && pick == kNoEdge; ++e) {
            StateId t = e_.targets[e];
            if ((kind_bit(e_.labels[e].kind()) & bit) && t != kNoState && local_[t] != kNone &&
                comp_[local_[t]] == chosen)
              pick = e;
          }
          if (pick != kNoEdge) break;
        }
        auto src = static_cast<StateId>(std::upper_bound(e_.offsets.begin(), e_.offsets.end(), pick) -
                                        e_.offsets.begin() - 1);
        auto leg = path_within(chosen, cur, local_[src]);
        cycle.insert(cycle.end(), leg.begin(), leg.end());
        cycle.push_back(pick);
        cur = local_[e_.targets[pick]];
      } else {
        for (auto v : members_[chosen]) {
          StateId u = region_[v];
          bool enabled = false;
          for (auto e = e_.offsets[u]; e < e_.offsets[u + 1]; ++e)
            if (kind_bit(e_.labels[e].kind()) & bit) enabled = true;
          if (!enabled) {
            auto leg = path_within(chosen, cur, v);
            cycle.insert(cycle.end(), leg.begin(), leg.end());
            cur = v;
            break;
          }
        }
      }
    }
    auto home = path_within(chosen, cur, anchor);
    cycle.insert(cycle.end(), home.begin(), home.end());
  }
  if (cycle.empty()) cycle = cycle_within(chosen, anchor);
  for (auto e : cycle) append(trace, e);

  return Violation{ViolationKind::liveness, goal_.name,
                   "use " + use_name() + " can cycle forever without reaching " + target, std::move(trace)};
}

}  // namespace

std::vector<Violation> check_leads_to(const StateGraph& graph, const LeadsToGoal& goal, int workers) {
  const EdgeSet& edges = graph.edges(workers);
  const std::size_t slots = graph.codec().slots();
  std::vector<std::optional<Violation>> found(slots);
  parallel_for(slots, workers, 1, [&](std::size_t slot, int) {
    found[slot] = LeadsToSearch(graph, edges, goal, static_cast<std::uint32_t>(slot)).run();
  });
  for (auto& v : found)
    if (v) return {std::move(*v)};
  return {};
}

bool replay_trace(const Trace& trace, const SystemConfig& config) {
  if (trace.steps.empty()) return false;
  World world = initial_world();
  if (trace.steps[0].label || canonical_encode(world, config) != trace.steps[0].key) return false;
  for (std::size_t i = 1; i < trace.steps.size(); ++i) {
    const TraceStep& step = trace.steps[i];
    if (!step.label) return false;
    auto next = successors(world, config);
    auto it = std::find_if(next.begin(), next.end(), [&](const Step& s) { return s.label == *step.label; });
    if (it == next.end() || canonical_encode(it->post, config) != step.key) return false;
    world = std::move(it->post);
  }
  if (trace.cycle_start) {
    if (*trace.cycle_start + 1 >= trace.steps.size()) return false;
    if (trace.steps[*trace.cycle_start].key != trace.steps.back().key) return false;
  }
  return true;
}

void write_edge_list(const StateGraph& graph, std::ostream& out) {
  const SystemConfig& config = graph.config();
  const PackedCodec& codec = graph.codec();
  SuccessorBuffer buf;
  for (StateId id = 0; id < graph.size(); ++id) {
    buf.clear();
    graph.kernel().expand(graph.packed(id), buf);
    const std::string pre = graph.key(id).hex();
    for (std::size_t pos = 0; pos < buf.items.size(); ++pos) {
      const PackedSuccessor& item = buf.items[pos];
      StateKey post;
      if (item.side != PackedSuccessor::kNoSide)
        post = canonical_encode(buf.side[item.side].post, config);
      else
        post = canonical_encode(codec.decode(buf.key(pos, codec.width())), config);
      out << pre << ' ' << codec.unpack(item.label).to_string() << ' ' << post.hex() << '\n';
    }
  }
}

}  // namespace usecon
