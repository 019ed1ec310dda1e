#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bciflow/objects.hpp"
#include "test_support.hpp"

using namespace bciflow;
using sys::ObjectKind;
using sys::Perms;
using sys::World;
using test::thrown_code;

namespace {

difc::Label secrecy_label(World& world, const std::string& tag_name) {
  difc::Label label;
  label.secrecy.insert(world.tag_named(tag_name, difc::TagKind::Secrecy).id);
  return label;
}

}  // namespace

TEST_CASE("object creation attaches labels atomically and rejects duplicates") {
  World world;
  difc::Label record = secrecy_label(world, "record_data");

  auto& file = world.create_object(ObjectKind::File, "/data/eegIDRecord.csv", record, 1);
  CHECK(file.label.has_value());
  CHECK(file.label->secrecy.size() == 1);

  difc::Label guard;
  guard.integrity.insert(world.tag_named("input_guard", difc::TagKind::Integrity).id);
  auto& port = world.create_object(ObjectKind::Port, "/dev/ttyUSB0", guard, 1,
                                   sys::PortDirection::In);
  CHECK(port.port_direction == sys::PortDirection::In);
  CHECK(port.label->integrity.size() == 1);

  CHECK(thrown_code([&] {
          world.create_object(ObjectKind::File, "/data/eegIDRecord.csv", std::nullopt, 1);
        }) == Errc::DuplicateName);
  // Same name under a different owner or kind is fine.
  world.create_object(ObjectKind::File, "/data/eegIDRecord.csv", std::nullopt, 2);
  world.create_object(ObjectKind::Pipe, "/data/eegIDRecord.csv", std::nullopt, 1);

  CHECK(thrown_code([&] { world.create_object(ObjectKind::File, "", std::nullopt, 1); }) ==
        Errc::InvalidParams);

  SUBCASE("labels referencing unregistered tags are rejected") {
    difc::Label bogus;
    bogus.secrecy.insert(987654);
    CHECK(thrown_code([&] {
            world.create_object(ObjectKind::File, "/x", bogus, 1);
          }) == Errc::UnknownTag);
  }
}

TEST_CASE("regions never overlap within a thread") {
  World world;
  world.create_thread(1, 1);
  world.map_region(1, 0x1000, 0x1000, Perms{true, true, false}, {});
  CHECK(thrown_code([&] {
          world.map_region(1, 0x1800, 0x100, Perms{true, false, false}, {});
        }) == Errc::OverlapError);
  // Adjacent is fine: [base, base+length) is half-open.
  world.map_region(1, 0x2000, 0x100, Perms{true, false, false}, {});
  world.audit();
}

TEST_CASE("the seventeenth live labeled region exhausts the domain slots") {
  World world;
  world.create_thread(1, 1);
  difc::Label label = secrecy_label(world, "taint");
  std::vector<sys::Rid> rids;
  for (int i = 0; i < 16; ++i) {
    rids.push_back(
        world.map_region(1, 0x10000 + i * 0x2000, 0x1000, Perms{true, true, false}, label).rid);
  }
  world.audit();
  CHECK(thrown_code([&] {
          world.map_region(1, 0x100000, 0x1000, Perms{true, true, false}, label);
        }) == Errc::DomainsExhausted);

  SUBCASE("slots are per process, shared across its threads") {
    world.create_thread(2, 1);  // same process
    CHECK(thrown_code([&] {
            world.map_region(2, 0x200000, 0x1000, Perms{true, true, false}, label);
          }) == Errc::DomainsExhausted);
    world.create_thread(3, 99);  // fresh process gets its own slots
    world.map_region(3, 0x200000, 0x1000, Perms{true, true, false}, label);
  }

  SUBCASE("unmapping frees the lowest slot for reuse") {
    world.unmap_region(1, rids[0]);
    auto& region = world.map_region(1, 0x300000, 0x1000, Perms{true, true, false}, label);
    CHECK(region.domain == 0);
    world.audit();
  }
}

TEST_CASE("map then unmap then map the same range is clean") {
  World world;
  world.create_thread(1, 1);
  auto& first = world.map_region(1, 0x5000, 0x1000, Perms{true, false, false}, {});
  sys::Rid rid = first.rid;
  world.unmap_region(1, rid);
  auto& second = world.map_region(1, 0x5000, 0x1000, Perms{true, false, false}, {});
  CHECK(second.rid != rid);  // region ids are not recycled
  CHECK(second.base == 0x5000);
}

TEST_CASE("unmap rejects foreign and unknown regions") {
  World world;
  world.create_thread(1, 1);
  world.create_thread(2, 2);
  sys::Rid rid = world.map_region(1, 0x1000, 0x100, Perms{true, false, false}, {}).rid;
  CHECK(thrown_code([&] { world.unmap_region(2, rid); }) == Errc::NotOwner);
  CHECK(thrown_code([&] { world.unmap_region(1, 999); }) == Errc::UnknownRegion);
  world.unmap_region(1, rid);
  CHECK(thrown_code([&] { world.unmap_region(1, rid); }) == Errc::UnknownRegion);
}

TEST_CASE("region lookup honors half-open bounds") {
  World world;
  world.create_thread(1, 1);
  const auto& region = world.map_region(1, 0x4000, 0x800, Perms{true, true, false}, {});
  const sys::ThreadContext& thread = *world.find_thread(1);
  CHECK(world.region_lookup(thread, 0x4000) == &region);         // base inclusive
  CHECK(world.region_lookup(thread, 0x47FF) == &region);         // last byte
  CHECK(world.region_lookup(thread, 0x4800) == nullptr);         // end exclusive
  CHECK(world.region_lookup(thread, 0x3FFF) == nullptr);
}

TEST_CASE("region lookup matches a linear scan oracle over random layouts") {
  std::mt19937_64 rng(20260810);
  World world{sys::WorldOptions{.domain_count = 256}};
  world.create_thread(1, 1);
  std::vector<sys::MemoryRegion> mirror;
  std::uniform_int_distribution<sys::Addr> base_dist(0, 1 << 20);
  std::uniform_int_distribution<std::uint64_t> len_dist(1, 4096);

  int placed = 0;
  while (placed < 100) {
    sys::Addr base = base_dist(rng);
    std::uint64_t length = len_dist(rng);
    bool overlaps = false;
    for (const auto& r : mirror) {
      if (base < r.base + r.length && r.base < base + length) {
        overlaps = true;
        break;
      }
    }
    if (overlaps) {
      CHECK(thrown_code([&] {
              world.map_region(1, base, length, Perms{true, false, false}, {});
            }) == Errc::OverlapError);
      continue;
    }
    mirror.push_back(world.map_region(1, base, length, Perms{true, false, false}, {}));
    ++placed;
  }
  world.audit();

  const sys::ThreadContext& thread = *world.find_thread(1);
  std::uniform_int_distribution<sys::Addr> query_dist(0, (1 << 20) + 8192);
  for (int q = 0; q < 2000; ++q) {
    sys::Addr address = query_dist(rng);
    const sys::MemoryRegion* expected = nullptr;
    for (const auto& r : mirror) {
      if (r.covers(address)) {
        expected = &r;
        break;
      }
    }
    const sys::MemoryRegion* got = world.region_lookup(thread, address);
    if (expected == nullptr) {
      CHECK(got == nullptr);
    } else {
      REQUIRE(got != nullptr);
      CHECK(got->rid == expected->rid);
    }
  }
}

TEST_CASE("audit verifies referential integrity of labels") {
  World world;
  difc::Label label = secrecy_label(world, "t");
  world.create_object(ObjectKind::File, "/f", label, 1);
  world.audit();
  world.registry().remove_tag(*label.secrecy.begin());
  CHECK(thrown_code([&] { world.audit(); }) == Errc::UnknownTag);
}

TEST_CASE("tag name table fixes the kind on first use") {
  World world;
  difc::Tag tag = world.tag_named("shared", difc::TagKind::Secrecy);
  CHECK(world.tag_named("shared", difc::TagKind::Secrecy).id == tag.id);
  CHECK(thrown_code([&] { world.tag_named("shared", difc::TagKind::Integrity); }) ==
        Errc::TagKindMismatch);
  CHECK(world.tag_name(tag.id) == "shared");
}
