#include "bciflow/objects.hpp"

#include <algorithm>

namespace bciflow::sys {

const char* to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Thread: return "thread";
    case ObjectKind::Process: return "process";
    case ObjectKind::File: return "file";
    case ObjectKind::Socket: return "socket";
    case ObjectKind::Pipe: return "pipe";
    case ObjectKind::MemoryRegion: return "memory_region";
    case ObjectKind::Port: return "port";
  }
  return "unknown";
}

std::optional<ObjectKind> object_kind_from(const std::string& name) {
  if (name == "thread") return ObjectKind::Thread;
  if (name == "process") return ObjectKind::Process;
  if (name == "file") return ObjectKind::File;
  if (name == "socket") return ObjectKind::Socket;
  if (name == "pipe") return ObjectKind::Pipe;
  if (name == "memory_region") return ObjectKind::MemoryRegion;
  if (name == "port") return ObjectKind::Port;
  return std::nullopt;
}

Perms Perms::parse(const std::string& spec) {
  Perms perms;
  for (char c : spec) {
    switch (c) {
      case 'r': perms.read = true; break;
      case 'w': perms.write = true; break;
      case 'x': perms.exec = true; break;
      case '-': break;
      default: raise(Errc::InvalidParams, std::string("bad permission char '") + c + "'");
    }
  }
  return perms;
}

std::string Perms::str() const {
  std::string s;
  if (read) s += 'r';
  if (write) s += 'w';
  if (exec) s += 'x';
  return s.empty() ? "-" : s;
}

difc::Tag World::tag_named(const std::string& name, difc::TagKind kind) {
  auto it = tags_by_name_.find(name);
  if (it != tags_by_name_.end()) {
    if (it->second.kind != kind) {
      raise(Errc::TagKindMismatch, "tag name '" + name + "' already bound to the other kind");
    }
    return it->second;
  }
  difc::Tag tag = registry_.create_tag(kind);
  tags_by_name_.emplace(name, tag);
  tag_names_.emplace(tag.id, name);
  return tag;
}

std::optional<difc::Tag> World::find_tag(const std::string& name) const {
  auto it = tags_by_name_.find(name);
  if (it == tags_by_name_.end()) return std::nullopt;
  return it->second;
}

const std::string& World::tag_name(difc::TagId id) const {
  static const std::string kUnnamed = "<unnamed>";
  auto it = tag_names_.find(id);
  return it == tag_names_.end() ? kUnnamed : it->second;
}

ObjectDescriptor& World::create_object(ObjectKind kind, const std::string& name,
                                       std::optional<difc::Label> label, Pid owner,
                                       std::optional<PortDirection> port_direction) {
  if (name.empty()) {
    raise(Errc::InvalidParams, "object name must be nonempty");
  }
  for (const auto& [oid, obj] : objects_) {
    if (obj.kind == kind && obj.owner == owner && obj.name == name) {
      raise(Errc::DuplicateName,
            std::string(to_string(kind)) + " '" + name + "' already exists for this owner");
    }
  }
  if (label) {
    registry_.validate(*label);
  }
  Oid oid = next_oid_++;
  auto [it, inserted] = objects_.emplace(
      oid, ObjectDescriptor{oid, kind, name, std::move(label), owner, port_direction});
  return it->second;
}

ObjectDescriptor* World::find_object(Oid oid) {
  auto it = objects_.find(oid);
  return it == objects_.end() ? nullptr : &it->second;
}

const ObjectDescriptor* World::find_object(Oid oid) const {
  auto it = objects_.find(oid);
  return it == objects_.end() ? nullptr : &it->second;
}

ObjectDescriptor* World::find_object_by_name(const std::string& name) {
  for (auto& [oid, obj] : objects_) {
    if (obj.name == name) return &obj;
  }
  return nullptr;
}

const ObjectDescriptor* World::find_object_by_name(const std::string& name) const {
  for (const auto& [oid, obj] : objects_) {
    if (obj.name == name) return &obj;
  }
  return nullptr;
}

void World::remove_object(Oid oid) {
  if (objects_.erase(oid) == 0) {
    raise(Errc::UnknownObject, "oid " + std::to_string(oid));
  }
}

ThreadContext& World::create_thread(Tid tid, Pid process) {
  if (threads_.contains(tid)) {
    raise(Errc::DuplicateName, "tid " + std::to_string(tid) + " already exists");
  }
  auto [it, inserted] = threads_.emplace(tid, ThreadContext{tid, process});
  return it->second;
}

ThreadContext* World::find_thread(Tid tid) {
  auto it = threads_.find(tid);
  return it == threads_.end() ? nullptr : &it->second;
}

const ThreadContext* World::find_thread(Tid tid) const {
  auto it = threads_.find(tid);
  return it == threads_.end() ? nullptr : &it->second;
}

void World::remove_thread(Tid tid) {
  auto it = threads_.find(tid);
  if (it == threads_.end()) {
    raise(Errc::UnknownTid, "tid " + std::to_string(tid));
  }
  for (const MemoryRegion& region : it->second.regions) {
    domains_in_use_[it->second.process].erase(region.domain);
  }
  threads_.erase(it);
}

int World::allocate_domain(Pid process) {
  std::set<int>& used = domains_in_use_[process];
  for (int d = 0; d < options_.domain_count; ++d) {
    if (!used.contains(d)) {
      used.insert(d);
      return d;
    }
  }
  raise(Errc::DomainsExhausted, "process " + std::to_string(process) + " already holds " +
                                    std::to_string(options_.domain_count) + " labeled regions");
}

MemoryRegion& World::map_region(Tid tid, Addr base, std::uint64_t length, Perms perms,
                                difc::Label label) {
  ThreadContext* thread = find_thread(tid);
  if (!thread) {
    raise(Errc::UnknownTid, "tid " + std::to_string(tid));
  }
  if (length == 0) {
    raise(Errc::InvalidParams, "region length must be positive");
  }
  registry_.validate(label);
  for (const MemoryRegion& region : thread->regions) {
    if (base < region.base + region.length && region.base < base + length) {
      raise(Errc::OverlapError, "region [" + std::to_string(base) + ", " +
                                    std::to_string(base + length) + ") overlaps rid " +
                                    std::to_string(region.rid));
    }
  }
  int domain = allocate_domain(thread->process);
  MemoryRegion region{next_rid_++, base, length, perms, std::move(label), domain};
  auto pos = std::lower_bound(thread->regions.begin(), thread->regions.end(), region.base,
                              [](const MemoryRegion& r, Addr b) { return r.base < b; });
  return *thread->regions.insert(pos, std::move(region));
}

void World::unmap_region(Tid tid, Rid rid) {
  ThreadContext* thread = find_thread(tid);
  if (!thread) {
    raise(Errc::UnknownTid, "tid " + std::to_string(tid));
  }
  auto it = std::find_if(thread->regions.begin(), thread->regions.end(),
                         [rid](const MemoryRegion& r) { return r.rid == rid; });
  if (it == thread->regions.end()) {
    // Distinguish a foreign region from a nonexistent one.
    for (const auto& [other_tid, other] : threads_) {
      for (const MemoryRegion& region : other.regions) {
        if (region.rid == rid) {
          raise(Errc::NotOwner, "rid " + std::to_string(rid) + " belongs to tid " +
                                    std::to_string(other_tid));
        }
      }
    }
    raise(Errc::UnknownRegion, "rid " + std::to_string(rid));
  }
  domains_in_use_[thread->process].erase(it->domain);
  thread->regions.erase(it);
}

const MemoryRegion* World::region_lookup(const ThreadContext& thread, Addr address) const {
  auto it = std::upper_bound(thread.regions.begin(), thread.regions.end(), address,
                             [](Addr a, const MemoryRegion& r) { return a < r.base; });
  if (it == thread.regions.begin()) return nullptr;
  --it;
  return it->covers(address) ? &*it : nullptr;
}

Addr World::reserve_base(std::uint64_t length) {
  constexpr Addr kAlign = 0x1000;
  Addr base = next_base_;
  Addr span = (length + kAlign - 1) / kAlign * kAlign;
  next_base_ += span + kAlign;  // one guard page between reservations
  return base;
}

Tid World::allocate_tid() {
  while (threads_.contains(next_tid_)) ++next_tid_;
  return next_tid_++;
}

void World::define_role(const std::string& name, RoleGrants grants) {
  roles_[name] = std::move(grants);
}

const World::RoleGrants* World::find_role(const std::string& name) const {
  auto it = roles_.find(name);
  return it == roles_.end() ? nullptr : &it->second;
}

void World::audit() const {
  for (const auto& [oid, obj] : objects_) {
    if (obj.label) registry_.validate(*obj.label);
  }
  std::map<Pid, std::set<int>> seen_domains;
  for (const auto& [tid, thread] : threads_) {
    registry_.validate(thread.label);
    for (std::size_t i = 0; i < thread.regions.size(); ++i) {
      const MemoryRegion& region = thread.regions[i];
      registry_.validate(region.label);
      if (region.domain < 0 || region.domain >= options_.domain_count) {
        raise(Errc::DomainsExhausted, "domain index out of range on rid " +
                                          std::to_string(region.rid));
      }
      if (!seen_domains[thread.process].insert(region.domain).second) {
        raise(Errc::DomainsExhausted, "duplicate domain index in process " +
                                          std::to_string(thread.process));
      }
      if (i > 0) {
        const MemoryRegion& prev = thread.regions[i - 1];
        if (prev.base + prev.length > region.base) {
          raise(Errc::OverlapError, "regions rid " + std::to_string(prev.rid) + " and rid " +
                                        std::to_string(region.rid) + " overlap");
        }
      }
    }
  }
}

}  // namespace bciflow::sys
