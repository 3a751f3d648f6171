#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <concurpaas/sim/time.hpp>

namespace concurpaas::sim {

struct SimConfig {
    std::uint64_t rng_seed = 1;
    VirtualTime horizon{60'000'000}; // must be > 0
    bool trace_enabled = true;
};

using EventId = std::uint64_t;
using Payload = std::vector<std::byte>;

struct SimEvent {
    VirtualTime fire_at;
    EventId seq = 0; // assigned at scheduling time, totally orders ties
    std::string target; // component id
    std::string kind;   // discriminator, optionally "Verb:detail"
    Payload payload;
};

// Deterministic random source. All randomness in a run must flow through
// the engine's single instance; uniform01 avoids std distributions because
// their output is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // 53-bit resolution in [0, 1).
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  private:
    std::mt19937_64 gen_;
};

// Record of every executed event, in execution order. Cancelled events
// never appear. The text form is the determinism surface: two runs agree
// iff their rendered traces agree byte for byte.
class TraceLog {
  public:
    struct Entry {
        VirtualTime fire_at;
        EventId seq;
        std::string target;
        std::string kind;
    };

    void record(const SimEvent &ev) {
        entries_.push_back(Entry{ev.fire_at, ev.seq, ev.target, ev.kind});
    }

    const std::vector<Entry> &entries() const { return entries_; }

    std::string to_text() const;

    // FNV-1a 64 over to_text().
    std::uint64_t digest() const;

  private:
    std::vector<Entry> entries_;
};

// Single-threaded discrete-event engine. Events execute in (fire_at, seq)
// order; seq ties cannot occur. Virtual time never runs backwards and only
// advances between events, never during one.
class Engine {
  public:
    using Handler = std::function<void(const SimEvent &)>;

    explicit Engine(SimConfig cfg);

    VirtualTime now() const { return now_; }
    VirtualTime horizon() const { return cfg_.horizon; }

    // True iff an event at now + delay would still be schedulable.
    bool within_horizon(Duration delay) const {
        return now_.ticks + delay <= cfg_.horizon.ticks;
    }

    // Throws HorizonExceeded if now + delay > horizon.
    EventId schedule(Duration delay, std::string target, std::string kind,
                     Payload payload = {});

    // True iff the event was pending; executed or unknown ids return false.
    bool cancel(EventId id);

    // Executes every pending event with fire_at <= t, then sets now = t.
    // Returns the number of events executed. Requires t >= now.
    std::size_t run_until(VirtualTime t);

    // Components register exactly once under a unique id. Dispatching to an
    // unattached target is a wiring bug and throws.
    void attach(const std::string &id, Handler handler);
    bool attached(const std::string &id) const;

    // Invoked after each event's handler returns; used by invariant checks
    // that must observe every event boundary.
    void set_event_observer(std::function<void(const SimEvent &)> fn);

    Rng &rng() { return rng_; }
    const TraceLog &trace() const { return trace_; }
    const SimConfig &config() const { return cfg_; }

  private:
    using Key = std::pair<std::uint64_t, EventId>; // (fire_at.ticks, seq)

    void dispatch_(const SimEvent &ev);

    SimConfig cfg_;
    VirtualTime now_{0};
    EventId last_seq_ = 0;
    std::map<Key, SimEvent> queue_;
    std::unordered_map<EventId, Key> pending_; // live ids only
    std::unordered_map<std::string, Handler> handlers_;
    std::function<void(const SimEvent &)> observer_;
    Rng rng_;
    TraceLog trace_;
};

} // namespace concurpaas::sim
