#include "bciflow/api.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

namespace bciflow::api {

namespace {

constexpr std::array<std::uint64_t, 5> kSizeClasses = {16, 64, 256, 1024, 4096};
constexpr std::uint64_t kArenaSize = 4 << 20;  // 1024 live blocks of the largest class

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

LabelFlags LabelFlags::parse(const std::vector<std::string>& names) {
  LabelFlags flags;
  for (const std::string& name : names) {
    if (name == "SLABEL") {
      flags.secrecy = true;
    } else if (name == "ILABEL") {
      flags.integrity = true;
    } else {
      raise(Errc::InvalidParams, "unknown label flag '" + name + "'");
    }
  }
  return flags;
}

std::vector<std::string> LabelFlags::names() const {
  std::vector<std::string> out;
  if (secrecy) out.push_back("SLABEL");
  if (integrity) out.push_back("ILABEL");
  return out;
}

bool glob_match(const std::string& pattern, const std::string& name) {
  std::size_t p = 0, n = 0;
  std::size_t star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

PolicyConfig parse_policy(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& err) {
    auto [line, column] = line_column(json_text, err.byte > 0 ? err.byte - 1 : 0);
    raise(Errc::ParseError, "policy JSON invalid at line " + std::to_string(line) + " column " +
                                std::to_string(column) + ": " + err.what());
  }
  auto fail = [](const std::string& what) {
    raise(Errc::ParseError, "policy: " + what);
  };
  if (!doc.is_object()) fail("top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "taint" && key != "roles") fail("unknown top-level key '" + key + "'");
  }

  PolicyConfig config;
  if (doc.contains("taint")) {
    if (!doc["taint"].is_array()) fail("'taint' must be an array");
    for (const auto& entry : doc["taint"]) {
      if (!entry.is_object()) fail("taint entries must be objects");
      for (const auto& [key, value] : entry.items()) {
        if (key != "pattern" && key != "kind" && key != "flags" && key != "tags") {
          fail("unknown taint key '" + key + "'");
        }
      }
      PolicyConfig::TaintEntry taint;
      if (!entry.contains("pattern") || !entry["pattern"].is_string() ||
          entry["pattern"].get<std::string>().empty()) {
        fail("taint entry needs a nonempty string 'pattern'");
      }
      taint.pattern = entry["pattern"].get<std::string>();
      if (!entry.contains("kind") || !entry["kind"].is_string()) {
        fail("taint entry needs a string 'kind'");
      }
      auto kind = sys::object_kind_from(entry["kind"].get<std::string>());
      if (!kind) fail("bad object kind '" + entry["kind"].get<std::string>() + "'");
      taint.kind = *kind;
      if (!entry.contains("flags") || !entry["flags"].is_array() || entry["flags"].empty()) {
        fail("taint entry needs a nonempty 'flags' array");
      }
      std::vector<std::string> flag_names;
      for (const auto& flag : entry["flags"]) {
        if (!flag.is_string()) fail("flags must be strings");
        flag_names.push_back(flag.get<std::string>());
      }
      try {
        taint.flags = LabelFlags::parse(flag_names);
      } catch (const Error& err) {
        fail(err.what());
      }
      if (!entry.contains("tags") || !entry["tags"].is_array() || entry["tags"].empty()) {
        fail("taint entry needs a nonempty 'tags' array");
      }
      for (const auto& tag : entry["tags"]) {
        if (!tag.is_string() || tag.get<std::string>().empty()) {
          fail("tags must be nonempty strings");
        }
        taint.tags.push_back(tag.get<std::string>());
      }
      config.taint.push_back(std::move(taint));
    }
  }
  if (doc.contains("roles")) {
    if (!doc["roles"].is_object()) fail("'roles' must be an object");
    for (const auto& [role, body] : doc["roles"].items()) {
      if (!body.is_object() || !body.contains("grants") || !body["grants"].is_array()) {
        fail("role '" + role + "' needs a 'grants' array");
      }
      sys::World::RoleGrants grants;
      for (const auto& grant : body["grants"]) {
        if (!grant.is_array() || grant.size() != 2 || !grant[0].is_string() ||
            !grant[1].is_string()) {
          fail("grants must be [tag, privilege] pairs");
        }
        std::string priv = grant[1].get<std::string>();
        if (priv != "ADD" && priv != "REMOVE") fail("bad privilege '" + priv + "'");
        grants.emplace_back(grant[0].get<std::string>(),
                            priv == "ADD" ? difc::Privilege::Add : difc::Privilege::Remove);
      }
      config.roles.emplace(role, std::move(grants));
    }
  }
  return config;
}

Session a_enable(sys::World& world, sys::Tid tid) {
  if (world.find_thread(tid)) {
    raise(Errc::AlreadyEnabled, "tid " + std::to_string(tid) + " is already tracing");
  }
  world.create_thread(tid, tid);  // the enabling thread roots its own process
  Session session;
  session.world_ = &world;
  session.tid_ = tid;
  session.enabled_ = true;
  return session;
}

void Session::journal_object(sys::Oid oid) {
  const sys::ObjectDescriptor* obj = world_->find_object(oid);
  journal_.push_back(LabelChange{LabelChange::Kind::Object, oid, 0, obj ? obj->label : std::nullopt});
}

void Session::journal_thread() {
  journal_.push_back(
      LabelChange{LabelChange::Kind::Thread, 0, tid_, world_->find_thread(tid_)->label});
}

difc::Tag Session::resolve_tag(const std::string& name, LabelFlags flags) {
  sys::ThreadContext& self = *world_->find_thread(tid_);
  if (auto existing = world_->find_tag(name)) {
    bool flagged = existing->kind == difc::TagKind::Secrecy ? flags.secrecy : flags.integrity;
    if (!flagged) {
      raise(Errc::TagKindMismatch, "tag '" + name + "' is " +
                                       (existing->kind == difc::TagKind::Secrecy ? "secrecy"
                                                                                 : "integrity") +
                                       "-kind but that flag is not set");
    }
    if (!self.caps.holds(existing->id, difc::Privilege::Add)) {
      raise(Errc::CapabilityDenied, "session lacks the Add grant for tag '" + name + "'");
    }
    return *existing;
  }
  if (flags.secrecy && flags.integrity) {
    raise(Errc::TagKindMismatch,
          "new tag '" + name + "' is ambiguous under SLABEL|ILABEL; create it under one flag");
  }
  difc::Tag tag = world_->tag_named(
      name, flags.secrecy ? difc::TagKind::Secrecy : difc::TagKind::Integrity);
  // The creator starts with both privileges over its own tag.
  self.caps.grant(tag.id, difc::Privilege::Add);
  self.caps.grant(tag.id, difc::Privilege::Remove);
  return tag;
}

void Session::apply_tags(difc::Label& label, LabelFlags flags,
                         const std::vector<std::string>& tags) {
  for (const std::string& name : tags) {
    difc::Tag tag = resolve_tag(name, flags);
    (tag.kind == difc::TagKind::Secrecy ? label.secrecy : label.integrity).insert(tag.id);
  }
}

sys::Oid a_add(Session& session, const std::string& object_name, LabelFlags flags,
               const std::vector<std::string>& tags) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (!flags.any()) raise(Errc::InvalidParams, "a_add needs SLABEL and/or ILABEL");
  sys::ObjectDescriptor* obj = session.world_->find_object_by_name(object_name);
  if (!obj) raise(Errc::UnknownObject, "'" + object_name + "'");
  difc::Label updated = obj->label.value_or(difc::Label{});
  difc::Label before = updated;
  session.apply_tags(updated, flags, tags);
  if (!(updated == before) || !obj->label) {
    session.journal_object(obj->oid);
    obj->label = std::move(updated);
  }
  return obj->oid;
}

void a_remove(Session& session, sys::Oid oid) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  sys::ObjectDescriptor* obj = session.world_->find_object(oid);
  if (!obj) raise(Errc::UnknownObject, "oid " + std::to_string(oid));
  // Undo the session's a_add layers only: find the label as it stood before
  // the oldest add (a creation label is not an "added" policy).
  auto is_add_entry = [oid](const Session::LabelChange& change) {
    return change.kind == Session::LabelChange::Kind::Object && change.oid == oid &&
           !change.creation;
  };
  auto it = std::find_if(session.journal_.begin(), session.journal_.end(), is_add_entry);
  if (it == session.journal_.end()) return;  // nothing this session added
  const difc::Label restored = it->before.value_or(difc::Label{});
  const difc::Label current = obj->label.value_or(difc::Label{});
  sys::ThreadContext& self = *session.world_->find_thread(session.tid_);
  auto require_remove = [&](const std::set<difc::TagId>& now, const std::set<difc::TagId>& then) {
    for (difc::TagId id : now) {
      if (!then.contains(id) && !self.caps.holds(id, difc::Privilege::Remove)) {
        raise(Errc::CapabilityDenied, "session lacks the Remove grant for tag '" +
                                          session.world_->tag_name(id) + "'");
      }
    }
  };
  require_remove(current.secrecy, restored.secrecy);
  require_remove(current.integrity, restored.integrity);
  obj->label = it->before;
  session.journal_.erase(
      std::remove_if(session.journal_.begin(), session.journal_.end(), is_add_entry),
      session.journal_.end());
}

sys::Oid a_create(Session& session, sys::ObjectKind kind, const std::string& name,
                  LabelFlags flags, const std::vector<std::string>& tags,
                  std::optional<sys::PortDirection> port_direction) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (!flags.any() && !tags.empty()) {
    raise(Errc::InvalidParams, "a_create with tags needs SLABEL and/or ILABEL");
  }
  difc::Label label;
  session.apply_tags(label, flags, tags);
  sys::ThreadContext& self = *session.world_->find_thread(session.tid_);
  sys::ObjectDescriptor& obj = session.world_->create_object(
      kind, name, label.empty() ? std::optional<difc::Label>{} : std::optional{label},
      self.process, port_direction);
  session.journal_.push_back(
      Session::LabelChange{Session::LabelChange::Kind::Object, obj.oid, 0, std::nullopt, true});
  return obj.oid;
}

const sys::MemoryRegion& a_mmap(Session& session, std::uint64_t length, sys::Perms perms,
                                const std::vector<std::string>& tags) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  difc::Label label;
  for (const std::string& name : tags) {
    auto tag = session.world_->find_tag(name);
    if (!tag) {
      raise(Errc::UnknownTag, "a_mmap tag '" + name + "' does not exist; declare it first");
    }
    (tag->kind == difc::TagKind::Secrecy ? label.secrecy : label.integrity).insert(tag->id);
  }
  sys::Addr base = session.world_->reserve_base(length);
  const sys::MemoryRegion& region =
      session.world_->map_region(session.tid_, base, length, perms, std::move(label));
  session.created_regions_.push_back(region.rid);
  return region;
}

void a_munmap(Session& session, sys::Rid rid) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  session.world_->unmap_region(session.tid_, rid);
  std::erase(session.created_regions_, rid);
}

Session::Arena& Session::arena() {
  if (!arena_) {
    sys::ThreadContext& self = *world_->find_thread(tid_);
    difc::Label label = self.label;  // the arena carries the thread's taint
    sys::Addr base = world_->reserve_base(kArenaSize);
    const sys::MemoryRegion& region =
        world_->map_region(tid_, base, kArenaSize, sys::Perms{true, true, false}, label);
    created_regions_.push_back(region.rid);
    arena_ = Arena{region.rid, base, kArenaSize, 0, {}, {}};
  }
  return *arena_;
}

sys::Addr a_malloc(Session& session, std::uint64_t size) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (size == 0) raise(Errc::InvalidParams, "a_malloc size must be positive");
  auto it = std::find_if(kSizeClasses.begin(), kSizeClasses.end(),
                         [size](std::uint64_t cls) { return size <= cls; });
  if (it == kSizeClasses.end()) {
    raise(Errc::OutOfRegion, "request of " + std::to_string(size) +
                                 " bytes exceeds the largest size class (4096)");
  }
  std::uint64_t cls = *it;
  Session::Arena& arena = session.arena();
  auto& free_list = arena.free_lists[cls];
  sys::Addr address = 0;
  if (!free_list.empty()) {
    address = free_list.back();
    free_list.pop_back();
  } else {
    if (arena.bump + cls > arena.size) {
      raise(Errc::OutOfRegion, "arena exhausted");
    }
    address = arena.base + arena.bump;
    arena.bump += cls;
  }
  arena.live.emplace(address, cls);
  return address;
}

void a_free(Session& session, sys::Addr address) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (!session.arena_) raise(Errc::OutOfRegion, "no allocations outstanding");
  Session::Arena& arena = *session.arena_;
  if (address < arena.base || address >= arena.base + arena.size) {
    raise(Errc::OutOfRegion, "address " + std::to_string(address) + " is outside the arena");
  }
  auto it = arena.live.find(address);
  if (it == arena.live.end()) {
    raise(Errc::DoubleFree, "address " + std::to_string(address) + " is not a live block");
  }
  arena.free_lists[it->second].push_back(address);
  arena.live.erase(it);
}

sys::Tid a_clone(Session& session, const std::string& entry) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (entry.empty()) raise(Errc::InvalidParams, "clone entry must be named");
  sys::ThreadContext& self = *session.world_->find_thread(session.tid_);
  sys::Tid child_tid = session.world_->allocate_tid();
  sys::ThreadContext& child = session.world_->create_thread(child_tid, self.process);
  child.label = self.label;
  child.caps = self.caps;
  child.completed = true;  // the simulated child runs its entry synchronously
  session.created_threads_.push_back(child_tid);
  return child_tid;
}

void a_wait(Session& session, sys::Tid child) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (!std::count(session.created_threads_.begin(), session.created_threads_.end(), child)) {
    raise(Errc::UnknownTid, "tid " + std::to_string(child) + " is not a child of this session");
  }
  // Children complete synchronously, so the completion marker is already set.
}

void a_execv(Session& session, const std::string& image, const std::string& role) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (image.empty()) raise(Errc::InvalidParams, "image must be named");
  const sys::World::RoleGrants* grants = session.world_->find_role(role);
  if (!grants) raise(Errc::UnknownRole, "'" + role + "'");
  difc::CapabilityList caps;
  for (const auto& [tag_name, priv] : *grants) {
    auto tag = session.world_->find_tag(tag_name);
    if (!tag) raise(Errc::UnknownTag, "role '" + role + "' names unknown tag '" + tag_name + "'");
    caps.grant(tag->id, priv);
  }
  session.world_->find_thread(session.tid_)->caps = std::move(caps);
}

void raise_label(Session& session, const std::string& tag_name) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  auto tag = session.world_->find_tag(tag_name);
  if (!tag) raise(Errc::UnknownTag, "'" + tag_name + "'");
  sys::ThreadContext& self = *session.world_->find_thread(session.tid_);
  difc::Label updated = difc::raise_label(self.label, self.caps, *tag);
  session.journal_thread();
  self.label = std::move(updated);
}

void lower_label(Session& session, const std::string& tag_name) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  auto tag = session.world_->find_tag(tag_name);
  if (!tag) raise(Errc::UnknownTag, "'" + tag_name + "'");
  sys::ThreadContext& self = *session.world_->find_thread(session.tid_);
  difc::Label updated = difc::lower_label(self.label, self.caps, *tag);
  session.journal_thread();
  self.label = std::move(updated);
}

difc::Tag declare_tag(Session& session, const std::string& name, difc::TagKind kind) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  if (auto existing = session.world_->find_tag(name)) {
    if (existing->kind != kind) {
      raise(Errc::TagKindMismatch, "tag '" + name + "' already bound to the other kind");
    }
    return *existing;
  }
  difc::Tag tag = session.world_->tag_named(name, kind);
  sys::ThreadContext& self = *session.world_->find_thread(session.tid_);
  self.caps.grant(tag.id, difc::Privilege::Add);
  self.caps.grant(tag.id, difc::Privilege::Remove);
  return tag;
}

void grant_to(Session& owner, sys::Tid recipient, const std::string& tag_name,
              difc::Privilege priv) {
  if (!owner.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  auto tag = owner.world_->find_tag(tag_name);
  if (!tag) raise(Errc::UnknownTag, "'" + tag_name + "'");
  sys::ThreadContext* target = owner.world_->find_thread(recipient);
  if (!target) raise(Errc::UnknownTid, "tid " + std::to_string(recipient));
  sys::ThreadContext& self = *owner.world_->find_thread(owner.tid_);
  difc::grant_capability(self.caps, target->caps, tag->id, priv);
}

std::size_t load_policy(Session& session, const PolicyConfig& config) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  std::size_t count = 0;
  for (const auto& entry : config.taint) {
    std::vector<std::string> matches;
    for (const auto& [oid, obj] : session.world_->objects()) {
      if (obj.kind == entry.kind && glob_match(entry.pattern, obj.name)) {
        matches.push_back(obj.name);
      }
    }
    for (const std::string& name : matches) {
      a_add(session, name, entry.flags, entry.tags);
      ++count;
    }
  }
  for (const auto& [role, grants] : config.roles) {
    session.world_->define_role(role, grants);
  }
  return count;
}

void a_cleanup(Session& session) {
  if (!session.enabled_) raise(Errc::NotEnabled, "session is not tracing");
  sys::World& world = *session.world_;
  // Labels first, in reverse, so layered changes unwind cleanly.
  for (auto it = session.journal_.rbegin(); it != session.journal_.rend(); ++it) {
    if (it->kind == Session::LabelChange::Kind::Object) {
      if (sys::ObjectDescriptor* obj = world.find_object(it->oid)) {
        obj->label = it->before;
      }
    } else if (sys::ThreadContext* thread = world.find_thread(it->tid)) {
      thread->label = *it->before;
    }
  }
  session.journal_.clear();
  for (sys::Rid rid : session.created_regions_) {
    try {
      world.unmap_region(session.tid_, rid);
    } catch (const Error&) {
      // already unmapped by the caller
    }
  }
  session.created_regions_.clear();
  for (sys::Tid tid : session.created_threads_) {
    if (world.find_thread(tid)) world.remove_thread(tid);
  }
  session.created_threads_.clear();
  world.remove_thread(session.tid_);
  session.arena_.reset();
  session.enabled_ = false;
}

}  // namespace bciflow::api
