#include <concurpaas/sim/engine.hpp>

#include <sstream>
#include <utility>

#include <concurpaas/errors.hpp>

namespace concurpaas::sim {

std::string TraceLog::to_text() const {
    std::ostringstream out;
    for (const Entry &e : entries_) {
        out << e.fire_at.ticks << '\t' << e.seq << '\t' << e.target << '\t'
            << e.kind << '\n';
    }
    return out.str();
}

std::uint64_t TraceLog::digest() const {
    const std::string text = to_text();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Engine::Engine(SimConfig cfg) : cfg_(cfg), rng_(cfg.rng_seed) {
    if (cfg_.horizon.ticks == 0)
        throw Error("engine: horizon must be positive");
}

EventId Engine::schedule(Duration delay, std::string target, std::string kind,
                         Payload payload) {
    if (now_.ticks + delay > cfg_.horizon.ticks) {
        std::ostringstream msg;
        msg << "schedule: " << (now_.ticks + delay) << " is past horizon "
            << cfg_.horizon.ticks;
        throw HorizonExceeded(msg.str());
    }
    const EventId id = ++last_seq_;
    const VirtualTime fire_at = now_ + delay;
    const Key key{fire_at.ticks, id};
    queue_.emplace(key, SimEvent{fire_at, id, std::move(target),
                                 std::move(kind), std::move(payload)});
    pending_.emplace(id, key);
    return id;
}

bool Engine::cancel(EventId id) {
    auto it = pending_.find(id);
    if (it == pending_.end())
        return false;
    queue_.erase(it->second);
    pending_.erase(it);
    return true;
}

std::size_t Engine::run_until(VirtualTime t) {
    if (t < now_)
        throw Error("run_until: target time precedes current time");
    std::size_t executed = 0;
    while (!queue_.empty()) {
        auto it = queue_.begin();
        if (it->second.fire_at > t)
            break;
        SimEvent ev = std::move(it->second);
        queue_.erase(it);
        pending_.erase(ev.seq);
        now_ = ev.fire_at;
        if (cfg_.trace_enabled)
            trace_.record(ev);
        dispatch_(ev);
        if (observer_)
            observer_(ev);
        ++executed;
    }
    now_ = t;
    return executed;
}

void Engine::attach(const std::string &id, Handler handler) {
    if (!handler)
        throw Error("attach: empty handler for '" + id + "'");
    auto [it, inserted] = handlers_.emplace(id, std::move(handler));
    (void)it;
    if (!inserted)
        throw Error("attach: component id '" + id + "' already attached");
}

bool Engine::attached(const std::string &id) const {
    return handlers_.count(id) != 0;
}

void Engine::set_event_observer(std::function<void(const SimEvent &)> fn) {
    observer_ = std::move(fn);
}

void Engine::dispatch_(const SimEvent &ev) {
    auto it = handlers_.find(ev.target);
    if (it == handlers_.end())
        throw Error("dispatch: no component attached for target '" +
                    ev.target + "'");
    it->second(ev);
}

} // namespace concurpaas::sim
