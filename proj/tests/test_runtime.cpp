// Elastic runtime: container lifecycle, registration coupling, scale caps,
// dead-lettering, behavior plumbing.
//
// The scale-cap oracle is min(live + instances_per_trigger, max_instances)
// recomputed in the tests.  The lifecycle invariant (running containers ==
// Up registry records) is swept over randomized interleavings with the
// engine's post-event observer.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <concurpaas/errors.hpp>
#include <concurpaas/net/fabric.hpp>
#include <concurpaas/registry/registry.hpp>
#include <concurpaas/runtime/runtime.hpp>
#include <concurpaas/sim/engine.hpp>

using namespace concurpaas;
using runtime::ScaleTrigger;

namespace {

// Records every callback so tests can assert on behavior plumbing.
struct ProbeLog {
    std::vector<std::string> started; // container ids
    std::vector<std::pair<std::string, std::uint64_t>> messages;
};

class ProbeBehavior : public runtime::Behavior {
  public:
    explicit ProbeBehavior(ProbeLog &log) : log_(log) {}

    void on_start(runtime::BehaviorContext &ctx) override {
        log_.started.push_back(ctx.self().container_id);
    }

    void on_message(const net::NetMessage &msg,
                    runtime::BehaviorContext &ctx) override {
        log_.messages.emplace_back(ctx.self().container_id, msg.msg_id);
    }

  private:
    ProbeLog &log_;
};

class ThrowingBehavior : public runtime::Behavior {
  public:
    void on_message(const net::NetMessage &,
                    runtime::BehaviorContext &) override {
        throw Error("synthetic behavior failure");
    }
};

struct TestBed {
    sim::Engine engine;
    registry::ServiceRegistry reg;
    net::Fabric fabric;
    ProbeLog log;
    runtime::ElasticRuntime rt;

    explicit TestBed(std::uint64_t horizon = 600'000'000)
        : engine([&] {
              sim::SimConfig sc;
              sc.horizon = VirtualTime{horizon};
              return sc;
          }()),
          reg(engine, {},
              [this](net::NetAddress a) { return fabric.is_allocated(a); }),
          fabric(engine, {},
                 [this](const std::string &svc) { return reg.lookup(svc); }),
          rt(engine, fabric, reg, [this] {
              runtime::BehaviorCatalog cat;
              cat.add("probe", [this](const runtime::ProcessSpec &) {
                  return std::make_unique<ProbeBehavior>(log);
              });
              cat.add("thrower", [](const runtime::ProcessSpec &) {
                  return std::make_unique<ThrowingBehavior>();
              });
              return cat;
          }()) {
        reg.start_evictor();
    }
};

runtime::AppDescriptor two_service_app() {
    runtime::AppDescriptor app;
    app.app_id = "demo";
    app.processes = {{"front", "probe", {}}, {"back", "probe", {}}};
    app.scaling.max_instances = 3;
    return app;
}

} // namespace

TEST_CASE("deployed containers come up after the startup delay") {
    TestBed t;
    const auto handles = t.rt.deploy(two_service_app());
    REQUIRE(handles.size() == 2);
    CHECK(handles[0].state == runtime::ContainerState::Deploying);
    CHECK(handles[0].instance_id == "front-1");
    CHECK(handles[1].instance_id == "back-1");
    CHECK(handles[0].container_id == "demo/front-1");
    CHECK_FALSE(t.reg.try_lookup("front").has_value());

    t.engine.run_until(VirtualTime{49'999});
    CHECK_FALSE(t.reg.try_lookup("front").has_value());
    t.engine.run_until(VirtualTime{50'000});
    CHECK(t.reg.lookup("front") == handles[0].address);
    CHECK(t.reg.lookup("back") == handles[1].address);
    CHECK(t.rt.container("demo/front-1").state ==
          runtime::ContainerState::Running);
    // on_start ran for both, in spawn order.
    CHECK(t.log.started ==
          std::vector<std::string>{"demo/front-1", "demo/back-1"});
}

TEST_CASE("deploying the same app twice throws") {
    TestBed t;
    t.rt.deploy(two_service_app());
    CHECK_THROWS_AS(t.rt.deploy(two_service_app()), DuplicateApp);
}

TEST_CASE("unknown behavior ids are rejected before anything spawns") {
    TestBed t;
    runtime::AppDescriptor app;
    app.app_id = "demo";
    app.processes = {{"front", "probe", {}}, {"back", "nope", {}}};
    CHECK_THROWS_AS(t.rt.deploy(app), UnknownBehavior);
    CHECK(t.rt.running_instances().empty());
    CHECK_THROWS_AS(t.rt.containers("demo"), UnknownApp);
}

TEST_CASE("scale-out respects the instance cap") {
    TestBed t;
    auto app = two_service_app(); // max_instances 3, one per trigger
    t.rt.deploy(app);
    t.engine.run_until(VirtualTime{100'000});

    // Five triggers against a cap of 3: grows 1 -> 2 -> 3, then notices.
    std::vector<std::size_t> grown;
    for (int i = 0; i < 5; ++i)
        grown.push_back(t.rt.scale_out("demo", "front").size());
    CHECK(grown == std::vector<std::size_t>{1, 1, 0, 0, 0});
    CHECK(t.rt.stats().at_capacity_hits == 3);

    t.engine.run_until(VirtualTime{300'000});
    std::size_t front_running = 0;
    for (const auto &h : t.rt.containers("demo"))
        if (h.process.service_name == "front" &&
            h.state == runtime::ContainerState::Running)
            ++front_running;
    CHECK(front_running == 3);

    int notices = 0;
    for (const auto &e : t.engine.trace().entries())
        if (e.kind == "AtCapacity:front")
            ++notices;
    CHECK(notices == 3);
}

TEST_CASE("deploying instances count against the cap") {
    TestBed t;
    auto app = two_service_app();
    t.rt.deploy(app);
    // Before startup completes the instance is Deploying, not Running,
    // but it already occupies a slot.
    t.rt.scale_out("demo", "front");
    t.rt.scale_out("demo", "front");
    CHECK(t.rt.scale_out("demo", "front").empty());
    CHECK(t.rt.stats().at_capacity_hits == 1);
}

TEST_CASE("batch scale-out is clamped to the remaining headroom") {
    TestBed t;
    auto app = two_service_app();
    app.scaling.instances_per_trigger = 2;
    t.rt.deploy(app);
    const auto grown = t.rt.scale_out("demo", "front"); // 1 + 2 <= 3
    REQUIRE(grown.size() == 2);
    CHECK(grown[0].instance_id == "front-2");
    CHECK(grown[1].instance_id == "front-3");
    CHECK(t.rt.scale_out("demo", "front").empty()); // clamp to 0 at cap
}

TEST_CASE("manual scaling policies throw at the cap") {
    TestBed t;
    auto app = two_service_app();
    app.scaling.trigger = ScaleTrigger::Manual;
    app.scaling.max_instances = 1;
    t.rt.deploy(app);
    CHECK_THROWS_AS(t.rt.scale_out("demo", "front"), AtCapacity);
}

TEST_CASE("scaling an unknown app or service throws") {
    TestBed t;
    CHECK_THROWS_AS(t.rt.scale_out("ghost", "front"), UnknownApp);
    t.rt.deploy(two_service_app());
    CHECK_THROWS_AS(t.rt.scale_out("demo", "ghost"), Error);
}

TEST_CASE("stop_app deregisters, cancels timers, and is idempotent") {
    TestBed t;
    t.rt.deploy(two_service_app());
    t.engine.run_until(VirtualTime{100'000});
    t.rt.scale_out("demo", "front"); // leaves one instance Deploying
    CHECK(t.rt.stop_app("demo") == 3);
    CHECK(t.rt.stop_app("demo") == 0);
    CHECK_FALSE(t.reg.try_lookup("front").has_value());
    CHECK_FALSE(t.reg.try_lookup("back").has_value());
    CHECK(t.rt.running_instances().empty());

    // The cancelled start event must not resurrect the scaled instance,
    // and cancelled heartbeats must not renew leases.
    const auto snapshot = t.reg.snapshot();
    t.engine.run_until(VirtualTime{600'000'000});
    CHECK(t.rt.running_instances().empty());
    for (const auto &h : t.rt.containers("demo"))
        CHECK(h.state == runtime::ContainerState::Stopped);
    CHECK(t.reg.snapshot().size() == snapshot.size());
}

TEST_CASE("messages to non-running containers are dead-lettered") {
    TestBed t;
    const auto handles = t.rt.deploy(two_service_app());
    const auto src = t.fabric.allocate_interface("tester");
    t.engine.run_until(VirtualTime{100'000});
    t.rt.stop_app("demo");

    const auto id =
        t.fabric.send_message(src, handles[0].address,
                              net::ChannelMode::Direct, net::MsgKind::Custom,
                              std::vector<std::byte>(3, std::byte{0}));
    t.engine.run_until(VirtualTime{200'000});
    CHECK(t.log.messages.empty());
    CHECK(t.rt.stats().dead_letters == 1);
    bool noticed = false;
    for (const auto &e : t.engine.trace().entries())
        if (e.kind == "DeadLetter:" + std::to_string(id))
            noticed = true;
    CHECK(noticed);
}

TEST_CASE("running containers receive messages through their behavior") {
    TestBed t;
    const auto handles = t.rt.deploy(two_service_app());
    const auto src = t.fabric.allocate_interface("tester");
    t.engine.run_until(VirtualTime{100'000});
    const auto id =
        t.fabric.send_message(src, handles[1].address,
                              net::ChannelMode::Direct, net::MsgKind::Custom,
                              std::vector<std::byte>(3, std::byte{0}));
    t.engine.run_until(VirtualTime{200'000});
    REQUIRE(t.log.messages.size() == 1);
    CHECK(t.log.messages[0].first == "demo/back-1");
    CHECK(t.log.messages[0].second == id);
}

TEST_CASE("behavior exceptions are contained and counted") {
    TestBed t;
    runtime::AppDescriptor app;
    app.app_id = "demo";
    app.processes = {{"svc", "thrower", {}}};
    const auto handles = t.rt.deploy(app);
    const auto src = t.fabric.allocate_interface("tester");
    t.engine.run_until(VirtualTime{100'000});
    t.fabric.send_message(src, handles[0].address, net::ChannelMode::Direct,
                          net::MsgKind::Custom, {});
    t.engine.run_until(VirtualTime{200'000});
    CHECK(t.rt.stats().behavior_errors == 1);
    // The container survives the failure.
    CHECK(t.rt.container("demo/svc-1").state ==
          runtime::ContainerState::Running);
}

TEST_CASE("heartbeats keep leases alive well past the lease duration") {
    TestBed t;
    t.rt.deploy(two_service_app());
    // Default lease is 30s; run for 300s.
    t.engine.run_until(VirtualTime{300'000'000});
    CHECK(t.reg.try_lookup("front").has_value());
    CHECK(t.reg.try_lookup("back").has_value());
    for (const auto &e : t.engine.trace().entries())
        CHECK(e.kind.rfind("Evicted:", 0) != 0);
}

TEST_CASE("instance ids keep increasing across stop and redeploy cycles") {
    TestBed t;
    runtime::AppDescriptor app;
    app.app_id = "demo";
    app.processes = {{"svc", "probe", {}}};
    app.scaling.max_instances = 10;
    t.rt.deploy(app);
    t.rt.scale_out("demo", "svc");
    const auto third = t.rt.scale_out("demo", "svc");
    REQUIRE(third.size() == 1);
    CHECK(third[0].instance_id == "svc-3");

    // Addresses are never reused either.
    std::set<std::uint32_t> addrs;
    for (const auto &h : t.rt.containers("demo"))
        addrs.insert(h.address.value);
    CHECK(addrs.size() == 3);
}

TEST_CASE("running set always equals the registry's Up set") {
    // Randomized interleavings of deploy, scale, stop and time advances.
    // After every single event the invariant must hold, so the check rides
    // the engine's post-event observer.
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        TestBed t;
        std::mt19937_64 gen(seed);

        // Service names are unique per app here, so instance ids line up
        // one-to-one between the runtime and the registry.
        auto invariant = [&t] {
            std::vector<std::string> up;
            for (const auto &rec : t.reg.snapshot())
                if (rec.status == registry::RecordStatus::Up)
                    up.push_back(rec.instance_id);
            std::sort(up.begin(), up.end());
            CHECK(t.rt.running_instances() == up);
        };
        t.engine.set_event_observer(
            [&](const sim::SimEvent &) { invariant(); });

        int deployed = 0;
        for (int step = 0; step < 40; ++step) {
            switch (gen() % 4) {
            case 0: {
                runtime::AppDescriptor app;
                app.app_id = "app-" + std::to_string(++deployed);
                app.processes = {{"svc" + std::to_string(deployed), "probe",
                                  {}}};
                app.scaling.max_instances = 4;
                t.rt.deploy(app);
                break;
            }
            case 1: {
                if (deployed > 0) {
                    const auto n = 1 + gen() % deployed;
                    t.rt.scale_out("app-" + std::to_string(n),
                                   "svc" + std::to_string(n));
                }
                break;
            }
            case 2: {
                if (deployed > 1 && gen() % 4 == 0)
                    t.rt.stop_app("app-" + std::to_string(1 + gen() % deployed));
                break;
            }
            case 3:
                t.engine.run_until(t.engine.now() + gen() % 40'000);
                break;
            }
            invariant();
        }
        t.engine.run_until(t.engine.now() + 200'000);
    }
}
