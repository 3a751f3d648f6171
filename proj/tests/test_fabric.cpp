// Network fabric: latency laws, at-least-once retransmission with
// exactly-once application delivery, channel binding semantics.
//
// Latency oracles are recomputed here from the raw config numbers:
// direct = d_hop, proxied = 2*d_hop + d_proxy.  The retransmission oracle
// places a redelivery at sent + k*rto + one_way when the first k attempts
// are dropped.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <string>
#include <vector>

#include <concurpaas/errors.hpp>
#include <concurpaas/net/fabric.hpp>
#include <concurpaas/sim/engine.hpp>

using namespace concurpaas;
using net::ChannelMode;

namespace {

struct Delivery {
    std::uint64_t msg_id;
    std::uint64_t at_ticks;
    std::size_t body_size;
};

struct TestBed {
    sim::Engine engine;
    std::map<std::string, net::NetAddress> services;
    net::Fabric fabric;
    std::map<std::uint32_t, std::vector<Delivery>> inbox; // by address

    explicit TestBed(net::FabricConfig cfg = {}, std::uint64_t seed = 1,
                     std::uint64_t horizon = 60'000'000)
        : engine([&] {
              sim::SimConfig sc;
              sc.rng_seed = seed;
              sc.horizon = VirtualTime{horizon};
              return sc;
          }()),
          fabric(engine, cfg, [this](const std::string &svc) {
              const auto it = services.find(svc);
              if (it == services.end())
                  throw NotFound("no endpoint for service " + svc);
              return it->second;
          }) {}

    net::NetAddress endpoint(const std::string &owner) {
        const auto addr = fabric.allocate_interface(owner);
        // Owners are engine components in production; notices such as
        // delivery failures are addressed to them.
        engine.attach(owner, [](const sim::SimEvent &) {});
        fabric.attach_receiver(addr, [this, addr](const net::NetMessage &m) {
            inbox[addr.value].push_back(
                {m.msg_id, engine.now().ticks, m.body.size()});
        });
        return addr;
    }
};

std::vector<std::byte> body_of(std::size_t n) {
    return std::vector<std::byte>(n, std::byte{0});
}

} // namespace

TEST_CASE("interface addresses are dense from 1 and unique per owner") {
    TestBed t;
    CHECK(t.fabric.allocate_interface("a").value == 1);
    CHECK(t.fabric.allocate_interface("b").value == 2);
    CHECK(t.fabric.allocate_interface("c").value == 3);
    CHECK_THROWS_AS(t.fabric.allocate_interface("b"), AlreadyAllocated);
    CHECK(t.fabric.is_allocated(net::NetAddress{2}));
    CHECK_FALSE(t.fabric.is_allocated(net::NetAddress{9}));
    CHECK(t.fabric.owner_of(net::NetAddress{3}) == "c");
}

TEST_CASE("one-way latency follows the route shape") {
    net::FabricConfig cfg;
    cfg.d_hop = 5'000;
    cfg.d_proxy = 2'000;
    TestBed t(cfg);
    CHECK(t.fabric.one_way_latency(ChannelMode::Direct) == 5'000);
    CHECK(t.fabric.one_way_latency(ChannelMode::Proxied) ==
          2 * 5'000 + 2'000);

    net::FabricConfig odd;
    odd.d_hop = 1'234;
    odd.d_proxy = 777;
    TestBed t2(odd);
    CHECK(t2.fabric.one_way_latency(ChannelMode::Direct) == 1'234);
    CHECK(t2.fabric.one_way_latency(ChannelMode::Proxied) ==
          2 * 1'234 + 777);
}

TEST_CASE("with zero proxy overhead the proxied route costs two hops") {
    net::FabricConfig cfg;
    cfg.d_proxy = 0;
    TestBed t(cfg);
    CHECK(t.fabric.one_way_latency(ChannelMode::Proxied) ==
          2 * t.fabric.one_way_latency(ChannelMode::Direct));
}

TEST_CASE("lossless direct send arrives after exactly one hop") {
    TestBed t;
    const auto src = t.endpoint("client");
    const auto dst = t.endpoint("server");
    t.services["server"] = dst;
    t.engine.run_until(VirtualTime{100});

    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Direct);
    const auto id = t.fabric.send(ch, net::MsgKind::Custom, body_of(16));
    t.engine.run_until(VirtualTime{60'000});

    REQUIRE(t.inbox[dst.value].size() == 1);
    CHECK(t.inbox[dst.value][0].msg_id == id);
    CHECK(t.inbox[dst.value][0].at_ticks == 100 + 5'000);
    CHECK(t.inbox[dst.value][0].body_size == 16);

    const auto samples = t.fabric.drain_samples();
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].one_way == 5'000);
    CHECK(samples[0].sent_at.ticks == 100);
    CHECK(samples[0].delivered_at.ticks == 5'100);
    CHECK(samples[0].mode == ChannelMode::Direct);
    CHECK(t.fabric.drain_samples().empty()); // drain clears
}

TEST_CASE("lossless proxied send arrives after two hops plus proxy") {
    TestBed t;
    const auto src = t.endpoint("client");
    const auto dst = t.endpoint("server");
    t.services["server"] = dst;
    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Proxied);
    t.fabric.send(ch, net::MsgKind::Custom, body_of(8));
    t.engine.run_until(VirtualTime{60'000});
    REQUIRE(t.inbox[dst.value].size() == 1);
    CHECK(t.inbox[dst.value][0].at_ticks == 12'000);
    const auto samples = t.fabric.drain_samples();
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].one_way == 12'000);
    CHECK(samples[0].mode == ChannelMode::Proxied);
}

TEST_CASE("lossless deliveries preserve send order") {
    TestBed t;
    const auto src = t.endpoint("client");
    const auto dst = t.endpoint("server");
    t.services["server"] = dst;
    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Direct);
    std::vector<std::uint64_t> sent;
    for (int i = 0; i < 10; ++i)
        sent.push_back(t.fabric.send(ch, net::MsgKind::Custom, body_of(1)));
    t.engine.run_until(VirtualTime{60'000});
    std::vector<std::uint64_t> got;
    for (const auto &d : t.inbox[dst.value])
        got.push_back(d.msg_id);
    CHECK(got == sent);
}

TEST_CASE("a dropped first attempt is retransmitted after rto") {
    net::FabricConfig cfg; // d_hop 5000, rto 20000
    TestBed t(cfg);
    const auto src = t.endpoint("client");
    const auto dst = t.endpoint("server");
    t.services["server"] = dst;
    t.fabric.set_drop_override(
        [](std::uint64_t, std::uint32_t attempt) -> std::optional<bool> {
            return attempt == 1; // drop only the first attempt
        });
    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Direct);
    t.fabric.send(ch, net::MsgKind::Custom, body_of(4));
    t.engine.run_until(VirtualTime{60'000});

    REQUIRE(t.inbox[dst.value].size() == 1);
    CHECK(t.inbox[dst.value][0].at_ticks == 20'000 + 5'000);
    const auto samples = t.fabric.drain_samples();
    REQUIRE(samples.size() == 1);
    // Latency is measured from the first attempt, so the drop is visible.
    CHECK(samples[0].one_way == 25'000);
    CHECK(t.fabric.stats().transmissions == 2);
    CHECK(t.fabric.stats().delivered == 1);
}

TEST_CASE("slow acks cause spurious retransmits that are deduplicated") {
    net::FabricConfig cfg;
    cfg.rto = 20'000; // proxied round trip is 24000 > rto
    TestBed t(cfg);
    const auto src = t.endpoint("client");
    const auto dst = t.endpoint("server");
    t.services["server"] = dst;
    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Proxied);
    t.fabric.send(ch, net::MsgKind::Custom, body_of(4));
    t.engine.run_until(VirtualTime{60'000});

    CHECK(t.inbox[dst.value].size() == 1); // application sees it once
    CHECK(t.fabric.stats().transmissions >= 2);
    CHECK(t.fabric.stats().duplicates_suppressed >= 1);
    CHECK(t.fabric.stats().delivered == 1);
    CHECK(t.fabric.drain_samples().size() == 1);
}

TEST_CASE("delivery fails after max_attempts and notifies the sender") {
    net::FabricConfig cfg;
    cfg.max_attempts = 3;
    TestBed t(cfg);
    const auto src = t.endpoint("client");
    const auto dst = t.endpoint("server");
    t.services["server"] = dst;
    t.fabric.set_drop_override(
        [](std::uint64_t, std::uint32_t) -> std::optional<bool> {
            return true; // black hole
        });
    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Direct);
    const auto id = t.fabric.send(ch, net::MsgKind::Custom, body_of(4));
    t.engine.run_until(VirtualTime{60'000});

    CHECK(t.inbox[dst.value].empty());
    CHECK(t.fabric.stats().delivery_failures == 1);
    CHECK(t.fabric.stats().transmissions == 3);

    // The failure notice fires at the sender's owner when the final rto
    // lapses: 3 attempts at 0, rto, 2*rto; the last rto lapses at 3*rto.
    bool found = false;
    for (const auto &e : t.engine.trace().entries()) {
        if (e.kind == "DeliveryFailed:" + std::to_string(id)) {
            found = true;
            CHECK(e.target == "client");
            CHECK(e.fire_at.ticks == 3 * cfg.rto);
        }
    }
    CHECK(found);
    CHECK(t.fabric.drain_samples().empty());
}

TEST_CASE("lossy transport still delivers every message exactly once") {
    net::FabricConfig cfg;
    cfg.drop_prob = 0.3;
    TestBed t(cfg, 42, 600'000'000);
    const auto src = t.endpoint("client");
    const auto dst = t.endpoint("server");
    t.services["server"] = dst;
    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Direct);
    std::set<std::uint64_t> sent;
    for (int i = 0; i < 1000; ++i)
        sent.insert(t.fabric.send(ch, net::MsgKind::Custom, body_of(1)));
    t.engine.run_until(VirtualTime{600'000'000});

    std::set<std::uint64_t> got;
    for (const auto &d : t.inbox[dst.value])
        got.insert(d.msg_id);
    CHECK(t.inbox[dst.value].size() == 1000); // no app-level duplicates
    CHECK(got == sent);
    CHECK(t.fabric.stats().delivered == 1000);
    CHECK(t.fabric.stats().delivery_failures == 0);
    CHECK(t.fabric.stats().transmissions > 1000); // drops forced retries
}

TEST_CASE("channels bind to the endpoint at open time") {
    TestBed t;
    const auto src = t.endpoint("client");
    const auto first = t.endpoint("server-a");
    const auto second = t.endpoint("server-b");
    t.services["server"] = first;
    const auto ch = t.fabric.open_channel(src, "server", ChannelMode::Direct);
    t.services["server"] = second; // re-resolve would now pick b
    t.fabric.send(ch, net::MsgKind::Custom, body_of(1));
    t.engine.run_until(VirtualTime{60'000});
    CHECK(t.inbox[first.value].size() == 1);
    CHECK(t.inbox[second.value].empty());
    CHECK(t.fabric.channel(ch).dst == first);
}

TEST_CASE("opening a channel to an unresolvable service throws") {
    TestBed t;
    const auto src = t.endpoint("client");
    CHECK_THROWS_AS(t.fabric.open_channel(src, "ghost", ChannelMode::Direct),
                    NotFound);
}

TEST_CASE("sends require allocated endpoints and known channels") {
    TestBed t;
    const auto src = t.endpoint("client");
    CHECK_THROWS_AS(t.fabric.send(99, net::MsgKind::Custom, body_of(1)),
                    Error);
    CHECK_THROWS_AS(t.fabric.send_message(src, net::NetAddress{42},
                                          ChannelMode::Direct,
                                          net::MsgKind::Custom, body_of(1)),
                    Error);
    CHECK_THROWS_AS(t.fabric.send_message(net::NetAddress{42}, src,
                                          ChannelMode::Direct,
                                          net::MsgKind::Custom, body_of(1)),
                    Error);
}

TEST_CASE("config validation rejects nonsense") {
    sim::Engine engine{sim::SimConfig{}};
    const auto resolver = [](const std::string &) { return net::NetAddress{1}; };
    net::FabricConfig bad;
    bad.drop_prob = 1.0;
    CHECK_THROWS_AS(net::Fabric(engine, bad, resolver), Error);
    net::FabricConfig bad2;
    bad2.max_attempts = 0;
    CHECK_THROWS_AS(net::Fabric(engine, bad2, resolver), Error);
    net::FabricConfig bad3;
    bad3.d_hop = 0;
    CHECK_THROWS_AS(net::Fabric(engine, bad3, resolver), Error);
}

TEST_CASE("lossless runs consume no randomness") {
    // With drop_prob == 0 the outcome must be identical across seeds.
    auto run = [](std::uint64_t seed) {
        TestBed t({}, seed);
        const auto src = t.endpoint("client");
        const auto dst = t.endpoint("server");
        t.services["server"] = dst;
        const auto ch =
            t.fabric.open_channel(src, "server", ChannelMode::Direct);
        for (int i = 0; i < 20; ++i)
            t.fabric.send(ch, net::MsgKind::Custom, body_of(1));
        t.engine.run_until(VirtualTime{60'000'000});
        return t.engine.trace().to_text();
    };
    CHECK(run(1) == run(999));
}
