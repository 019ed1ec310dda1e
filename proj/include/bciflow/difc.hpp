#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>

#include "bciflow/errors.hpp"

namespace bciflow::difc {

using TagId = std::uint64_t;

enum class TagKind { Secrecy, Integrity };

/// An opaque atom of policy. Ids are unique per registry and never recycled.
struct Tag {
  TagId id = 0;
  TagKind kind = TagKind::Secrecy;

  friend bool operator==(const Tag&, const Tag&) = default;
};

/// A pair of tag sets attached to a thread or object. The secrecy set holds
/// only secrecy-kind tag ids, the integrity set only integrity-kind ids;
/// the registry enforces the kind split at insertion time.
struct Label {
  std::set<TagId> secrecy;
  std::set<TagId> integrity;

  bool empty() const { return secrecy.empty() && integrity.empty(); }

  friend bool operator==(const Label&, const Label&) = default;
  friend auto operator<=>(const Label&, const Label&) = default;
};

enum class Privilege { Add, Remove };

/// Per-thread grants: (tag, Add) allows raising the tag into the thread's
/// own label, (tag, Remove) allows dropping it (declassification).
struct CapabilityList {
  std::set<std::pair<TagId, Privilege>> grants;

  bool holds(TagId tag, Privilege priv) const { return grants.contains({tag, priv}); }
  void grant(TagId tag, Privilege priv) { grants.insert({tag, priv}); }

  friend bool operator==(const CapabilityList&, const CapabilityList&) = default;
};

/// Hash-table registry of live tags. Capacity defaults to 1024; ids are
/// handed out monotonically and never reused within a registry lifetime.
class LabelRegistry {
 public:
  static constexpr std::size_t kDefaultCapacity = 1024;

  explicit LabelRegistry(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  Tag create_tag(TagKind kind);
  void remove_tag(TagId id);

  bool contains(TagId id) const { return table_.contains(id); }
  TagKind kind_of(TagId id) const;

  std::size_t live_count() const { return table_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// Throws UnknownTag unless every tag id in the label is registered with
  /// the matching kind.
  void validate(const Label& label) const;

 private:
  std::size_t capacity_;
  TagId next_id_ = 1;
  std::unordered_map<TagId, TagKind> table_;
};

enum class Direction { Read, Write };

/// Deny reasons. The first two come from the flow rules proper; the rest
/// are produced by the monitor's region and policy checks.
enum class Rule {
  SecrecyLeak,
  IntegrityViolation,
  CapabilityDenied,
  UnmappedAccess,
  UnauthorizedPortInjection,
};

const char* to_string(Rule rule);

struct FlowDecision {
  bool allowed = false;
  std::optional<Rule> violated;

  static FlowDecision allow() { return {true, std::nullopt}; }
  static FlowDecision deny(Rule rule) { return {false, rule}; }

  friend bool operator==(const FlowDecision&, const FlowDecision&) = default;
};

/// Secrecy may flow from src to dst iff src's secrecy tags are a subset of
/// dst's: a reader must already be cleared for everything the source has seen.
bool can_flow_secrecy(const Label& src, const Label& dst);

/// Integrity permits a flow from src to dst iff dst's integrity tags are a
/// subset of src's: the writer must carry at least the target's endorsements.
bool can_flow_integrity(const Label& src, const Label& dst);

/// Combined rule used by the monitor's security hooks. READ checks the
/// object-to-subject flow, WRITE the subject-to-object flow; both the secrecy
/// and integrity rules must pass. Throws UnknownTag for unregistered ids.
FlowDecision check_flow_allowed(const LabelRegistry& registry, const Label& subject,
                                const Label& object, Direction direction);

/// Inserts `tag` into the matching set of `label`; requires (tag, Add) in
/// `caps`. Returns the updated label, throws CapabilityDenied otherwise.
Label raise_label(Label label, const CapabilityList& caps, const Tag& tag);

/// Removes `tag` from the matching set; requires (tag, Remove) in `caps`.
Label lower_label(Label label, const CapabilityList& caps, const Tag& tag);

/// Delegates (tag, priv) from owner to recipient. The owner keeps the grant.
/// Throws CapabilityDenied if the owner does not hold it.
void grant_capability(const CapabilityList& owner, CapabilityList& recipient, TagId tag,
                      Privilege priv);

}  // namespace bciflow::difc
