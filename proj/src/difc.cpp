#include "bciflow/difc.hpp"

#include <algorithm>

namespace bciflow {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::UnknownTag: return "UnknownTag";
    case Errc::TagKindMismatch: return "TagKindMismatch";
    case Errc::CapabilityDenied: return "CapabilityDenied";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::UnknownObject: return "UnknownObject";
    case Errc::OverlapError: return "OverlapError";
    case Errc::DomainsExhausted: return "DomainsExhausted";
    case Errc::NotOwner: return "NotOwner";
    case Errc::UnknownRegion: return "UnknownRegion";
    case Errc::UnknownTid: return "UnknownTid";
    case Errc::UnknownRole: return "UnknownRole";
    case Errc::AlreadyEnabled: return "AlreadyEnabled";
    case Errc::NotEnabled: return "NotEnabled";
    case Errc::OutOfRegion: return "OutOfRegion";
    case Errc::DoubleFree: return "DoubleFree";
    case Errc::MalformedEvent: return "MalformedEvent";
    case Errc::ParseError: return "ParseError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TauOutOfRange: return "TauOutOfRange";
    case Errc::BadWindow: return "BadWindow";
    case Errc::BadOrder: return "BadOrder";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::ConvergenceFailure: return "ConvergenceFailure";
  }
  return "UnknownError";
}

}  // namespace bciflow

namespace bciflow::difc {

const char* to_string(Rule rule) {
  switch (rule) {
    case Rule::SecrecyLeak: return "SecrecyLeak";
    case Rule::IntegrityViolation: return "IntegrityViolation";
    case Rule::CapabilityDenied: return "CapabilityDenied";
    case Rule::UnmappedAccess: return "UnmappedAccess";
    case Rule::UnauthorizedPortInjection: return "UnauthorizedPortInjection";
  }
  return "UnknownRule";
}

Tag LabelRegistry::create_tag(TagKind kind) {
  if (table_.size() >= capacity_) {
    raise(Errc::CapacityExceeded,
          "registry holds " + std::to_string(table_.size()) + " live tags (capacity " +
              std::to_string(capacity_) + ")");
  }
  Tag tag{next_id_++, kind};
  table_.emplace(tag.id, tag.kind);
  return tag;
}

void LabelRegistry::remove_tag(TagId id) {
  if (table_.erase(id) == 0) {
    raise(Errc::UnknownTag, "tag " + std::to_string(id) + " is not registered");
  }
}

TagKind LabelRegistry::kind_of(TagId id) const {
  auto it = table_.find(id);
  if (it == table_.end()) {
    raise(Errc::UnknownTag, "tag " + std::to_string(id) + " is not registered");
  }
  return it->second;
}

void LabelRegistry::validate(const Label& label) const {
  for (TagId id : label.secrecy) {
    if (kind_of(id) != TagKind::Secrecy) {
      raise(Errc::TagKindMismatch, "tag " + std::to_string(id) + " is not a secrecy tag");
    }
  }
  for (TagId id : label.integrity) {
    if (kind_of(id) != TagKind::Integrity) {
      raise(Errc::TagKindMismatch, "tag " + std::to_string(id) + " is not an integrity tag");
    }
  }
}

bool can_flow_secrecy(const Label& src, const Label& dst) {
  return std::includes(dst.secrecy.begin(), dst.secrecy.end(), src.secrecy.begin(),
                       src.secrecy.end());
}

bool can_flow_integrity(const Label& src, const Label& dst) {
  return std::includes(src.integrity.begin(), src.integrity.end(), dst.integrity.begin(),
                       dst.integrity.end());
}

FlowDecision check_flow_allowed(const LabelRegistry& registry, const Label& subject,
                                const Label& object, Direction direction) {
  registry.validate(subject);
  registry.validate(object);
  const Label& src = direction == Direction::Read ? object : subject;
  const Label& dst = direction == Direction::Read ? subject : object;
  if (!can_flow_secrecy(src, dst)) {
    return FlowDecision::deny(Rule::SecrecyLeak);
  }
  if (!can_flow_integrity(src, dst)) {
    return FlowDecision::deny(Rule::IntegrityViolation);
  }
  return FlowDecision::allow();
}

Label raise_label(Label label, const CapabilityList& caps, const Tag& tag) {
  if (!caps.holds(tag.id, Privilege::Add)) {
    raise(Errc::CapabilityDenied, "no Add grant for tag " + std::to_string(tag.id));
  }
  (tag.kind == TagKind::Secrecy ? label.secrecy : label.integrity).insert(tag.id);
  return label;
}

Label lower_label(Label label, const CapabilityList& caps, const Tag& tag) {
  if (!caps.holds(tag.id, Privilege::Remove)) {
    raise(Errc::CapabilityDenied, "no Remove grant for tag " + std::to_string(tag.id));
  }
  (tag.kind == TagKind::Secrecy ? label.secrecy : label.integrity).erase(tag.id);
  return label;
}

void grant_capability(const CapabilityList& owner, CapabilityList& recipient, TagId tag,
                      Privilege priv) {
  if (!owner.holds(tag, priv)) {
    raise(Errc::CapabilityDenied, "owner does not hold the grant for tag " + std::to_string(tag));
  }
  recipient.grant(tag, priv);
}

}  // namespace bciflow::difc
