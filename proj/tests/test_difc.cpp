#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <vector>

#include "bciflow/difc.hpp"
#include "test_support.hpp"

using namespace bciflow;
using difc::Direction;
using difc::Label;
using difc::LabelRegistry;
using difc::Privilege;
using difc::Rule;
using difc::Tag;
using difc::TagKind;
using test::thrown_code;

namespace {

// Independent subset oracle over bitmasks, the reference for the flow rules.
bool mask_subset(std::uint32_t a, std::uint32_t b) { return (a & ~b) == 0; }

struct TagUniverse {
  LabelRegistry registry;
  std::vector<Tag> secrecy;
  std::vector<Tag> integrity;

  explicit TagUniverse(int n) {
    for (int i = 0; i < n; ++i) {
      secrecy.push_back(registry.create_tag(TagKind::Secrecy));
      integrity.push_back(registry.create_tag(TagKind::Integrity));
    }
  }

  Label label(std::uint32_t secrecy_mask, std::uint32_t integrity_mask = 0) const {
    Label out;
    for (std::size_t i = 0; i < secrecy.size(); ++i) {
      if (secrecy_mask & (1u << i)) out.secrecy.insert(secrecy[i].id);
    }
    for (std::size_t i = 0; i < integrity.size(); ++i) {
      if (integrity_mask & (1u << i)) out.integrity.insert(integrity[i].id);
    }
    return out;
  }
};

}  // namespace

TEST_CASE("registry honors its capacity") {
  SUBCASE("default capacity admits 1024 tags and rejects the 1025th") {
    LabelRegistry registry;
    std::set<difc::TagId> ids;
    for (int i = 0; i < 1024; ++i) {
      ids.insert(registry.create_tag(TagKind::Secrecy).id);
    }
    CHECK(ids.size() == 1024);
    CHECK(thrown_code([&] { registry.create_tag(TagKind::Secrecy); }) == Errc::CapacityExceeded);
  }
  SUBCASE("capacity one") {
    LabelRegistry registry(1);
    registry.create_tag(TagKind::Integrity);
    CHECK(thrown_code([&] { registry.create_tag(TagKind::Integrity); }) ==
          Errc::CapacityExceeded);
  }
}

TEST_CASE("registry count tracks creates minus removes and never reuses ids") {
  LabelRegistry registry(64);
  std::vector<difc::TagId> all_ids;
  for (int i = 0; i < 40; ++i) {
    all_ids.push_back(registry.create_tag(TagKind::Secrecy).id);
  }
  for (int i = 0; i < 15; ++i) {
    registry.remove_tag(all_ids[static_cast<std::size_t>(i) * 2]);
  }
  CHECK(registry.live_count() == 40 - 15);
  // Freed capacity is reusable but the ids are not.
  std::set<difc::TagId> seen(all_ids.begin(), all_ids.end());
  for (int i = 0; i < 10; ++i) {
    difc::TagId fresh = registry.create_tag(TagKind::Secrecy).id;
    CHECK(!seen.contains(fresh));
    seen.insert(fresh);
  }
  CHECK(thrown_code([&] { registry.remove_tag(99999); }) == Errc::UnknownTag);
}

TEST_CASE("secrecy flow is the subset relation") {
  TagUniverse u(3);
  const Label empty = u.label(0b000);
  const Label delta = u.label(0b001);
  const Label delta_gamma = u.label(0b011);

  CHECK(difc::can_flow_secrecy(empty, delta));        // {} -> {d}
  CHECK(!difc::can_flow_secrecy(delta, empty));       // holder of d may not reach a d-free sink
  CHECK(difc::can_flow_secrecy(delta, delta_gamma));  // {d} -> {d,g}

  SUBCASE("brute-force oracle over all pairs on three tags") {
    for (std::uint32_t a = 0; a < 8; ++a) {
      for (std::uint32_t b = 0; b < 8; ++b) {
        CAPTURE(a);
        CAPTURE(b);
        CHECK(difc::can_flow_secrecy(u.label(a), u.label(b)) == mask_subset(a, b));
      }
    }
  }
}

TEST_CASE("integrity flow requires the writer to carry the target's tags") {
  TagUniverse u(3);
  const Label ab = u.label(0, 0b011);
  const Label abc = u.label(0, 0b111);
  const Label c = u.label(0, 0b100);
  const Label d_only = u.label(0, 0b000);

  CHECK(difc::can_flow_integrity(abc, ab));  // {A,B} subset of the writer's {A,B,C}
  CHECK(!difc::can_flow_integrity(d_only, c));
  CHECK(difc::can_flow_integrity(ab, ab));  // reflexive
}

TEST_CASE("exhaustive oracle equivalence on an 8-tag universe") {
  TagUniverse u(8);
  std::vector<Label> labels;
  labels.reserve(256);
  for (std::uint32_t m = 0; m < 256; ++m) {
    labels.push_back(u.label(m, m));
  }
  int mismatches = 0;
  for (std::uint32_t a = 0; a < 256; ++a) {
    for (std::uint32_t b = 0; b < 256; ++b) {
      if (difc::can_flow_secrecy(labels[a], labels[b]) != mask_subset(a, b)) ++mismatches;
      if (difc::can_flow_integrity(labels[a], labels[b]) != mask_subset(b, a)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("lattice laws") {
  TagUniverse u(4);
  std::vector<Label> labels;
  for (std::uint32_t m = 0; m < 16; ++m) labels.push_back(u.label(m));
  const Label bottom = u.label(0);
  const Label top = u.label(0b1111);

  for (const Label& label : labels) {
    CHECK(difc::can_flow_secrecy(label, label));   // reflexive
    CHECK(difc::can_flow_secrecy(label, top));     // everything may flow to the top label
    CHECK(difc::can_flow_secrecy(bottom, label));  // bottom flows anywhere
  }
  // Transitive over every triple.
  for (std::uint32_t a = 0; a < 16; ++a) {
    for (std::uint32_t b = 0; b < 16; ++b) {
      for (std::uint32_t c = 0; c < 16; ++c) {
        if (difc::can_flow_secrecy(labels[a], labels[b]) &&
            difc::can_flow_secrecy(labels[b], labels[c])) {
          CHECK(difc::can_flow_secrecy(labels[a], labels[c]));
        }
      }
    }
  }
}

TEST_CASE("check_flow_allowed combines both rules per direction") {
  TagUniverse u(3);
  const Label delta = u.label(0b001);
  const Label empty = u.label(0);

  SUBCASE("equal labels read") {
    auto decision = difc::check_flow_allowed(u.registry, delta, delta, Direction::Read);
    CHECK(decision.allowed);
  }
  SUBCASE("secrecy-tagged subject writing to an unlabeled socket leaks") {
    auto decision = difc::check_flow_allowed(u.registry, delta, empty, Direction::Write);
    CHECK(!decision.allowed);
    CHECK(decision.violated == Rule::SecrecyLeak);
  }
  SUBCASE("write into an integrity-tagged object without the tag") {
    const Label guarded = u.label(0, 0b001);
    auto decision = difc::check_flow_allowed(u.registry, empty, guarded, Direction::Write);
    CHECK(!decision.allowed);
    CHECK(decision.violated == Rule::IntegrityViolation);
  }
  SUBCASE("unregistered tag ids error") {
    Label bogus;
    bogus.secrecy.insert(424242);
    CHECK(thrown_code([&] {
            difc::check_flow_allowed(u.registry, bogus, empty, Direction::Read);
          }) == Errc::UnknownTag);
  }
}

TEST_CASE("read and write checks are duals under label exchange") {
  TagUniverse u(3);
  for (std::uint32_t s_mask = 0; s_mask < 8; ++s_mask) {
    for (std::uint32_t o_mask = 0; o_mask < 8; ++o_mask) {
      for (std::uint32_t si = 0; si < 8; ++si) {
        for (std::uint32_t oi = 0; oi < 8; ++oi) {
          Label subject = u.label(s_mask, si);
          Label object = u.label(o_mask, oi);
          auto read = difc::check_flow_allowed(u.registry, subject, object, Direction::Read);
          auto write = difc::check_flow_allowed(u.registry, object, subject, Direction::Write);
          CHECK(read == write);
        }
      }
    }
  }
}

TEST_CASE("brute-force oracle over all flow triples on three tags") {
  TagUniverse u(3);
  for (std::uint32_t s = 0; s < 8; ++s) {
    for (std::uint32_t o = 0; o < 8; ++o) {
      for (std::uint32_t si = 0; si < 8; ++si) {
        for (std::uint32_t oi = 0; oi < 8; ++oi) {
          for (Direction dir : {Direction::Read, Direction::Write}) {
            Label subject = u.label(s, si);
            Label object = u.label(o, oi);
            bool expect = dir == Direction::Read ? mask_subset(o, s) && mask_subset(si, oi)
                                                 : mask_subset(s, o) && mask_subset(oi, si);
            auto decision = difc::check_flow_allowed(u.registry, subject, object, dir);
            CAPTURE(s);
            CAPTURE(o);
            CAPTURE(si);
            CAPTURE(oi);
            CHECK(decision.allowed == expect);
          }
        }
      }
    }
  }
}

TEST_CASE("raise and lower are gated on capabilities") {
  TagUniverse u(2);
  Tag delta = u.secrecy[0];
  difc::CapabilityList add_only;
  add_only.grant(delta.id, Privilege::Add);

  SUBCASE("raise with the grant") {
    Label out = difc::raise_label(Label{}, add_only, delta);
    CHECK(out.secrecy.contains(delta.id));
  }
  SUBCASE("raise without any grant") {
    CHECK(thrown_code([&] { difc::raise_label(Label{}, difc::CapabilityList{}, delta); }) ==
          Errc::CapabilityDenied);
  }
  SUBCASE("lower needs the Remove privilege even with Add present") {
    Label holding;
    holding.secrecy.insert(delta.id);
    CHECK(thrown_code([&] { difc::lower_label(holding, add_only, delta); }) ==
          Errc::CapabilityDenied);
  }
  SUBCASE("oracle over every grant/request combination") {
    for (int has_add = 0; has_add < 2; ++has_add) {
      for (int has_remove = 0; has_remove < 2; ++has_remove) {
        difc::CapabilityList caps;
        if (has_add) caps.grant(delta.id, Privilege::Add);
        if (has_remove) caps.grant(delta.id, Privilege::Remove);
        Label held;
        held.secrecy.insert(delta.id);
        CHECK(thrown_code([&] { difc::raise_label(Label{}, caps, delta); }).has_value() ==
              !has_add);
        CHECK(thrown_code([&] { difc::lower_label(held, caps, delta); }).has_value() ==
              !has_remove);
      }
    }
  }
}

TEST_CASE("raise never shrinks and lower never grows the secrecy set") {
  TagUniverse u(4);
  difc::CapabilityList caps;
  for (const Tag& tag : u.secrecy) {
    caps.grant(tag.id, Privilege::Add);
    caps.grant(tag.id, Privilege::Remove);
  }
  for (std::uint32_t m = 0; m < 16; ++m) {
    Label start = u.label(m);
    for (const Tag& tag : u.secrecy) {
      Label raised = difc::raise_label(start, caps, tag);
      CHECK(std::includes(raised.secrecy.begin(), raised.secrecy.end(), start.secrecy.begin(),
                          start.secrecy.end()));
      Label lowered = difc::lower_label(start, caps, tag);
      CHECK(std::includes(start.secrecy.begin(), start.secrecy.end(), lowered.secrecy.begin(),
                          lowered.secrecy.end()));
    }
  }
}

TEST_CASE("grant_capability delegates without transferring") {
  TagUniverse u(1);
  Tag tag = u.secrecy[0];
  difc::CapabilityList owner;
  owner.grant(tag.id, Privilege::Add);
  difc::CapabilityList recipient;

  difc::grant_capability(owner, recipient, tag.id, Privilege::Add);
  CHECK(recipient.holds(tag.id, Privilege::Add));
  CHECK(owner.holds(tag.id, Privilege::Add));  // delegation, not transfer

  // Idempotent under set semantics.
  difc::grant_capability(owner, recipient, tag.id, Privilege::Add);
  CHECK(recipient.grants.size() == 1);

  CHECK(thrown_code([&] {
          difc::grant_capability(recipient, owner, tag.id, Privilege::Remove);
        }) == Errc::CapabilityDenied);
}
