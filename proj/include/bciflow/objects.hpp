#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bciflow/difc.hpp"

namespace bciflow::sys {

using Oid = std::uint64_t;
using Tid = std::uint64_t;
using Pid = std::uint64_t;
using Rid = std::uint64_t;
using Addr = std::uint64_t;

enum class ObjectKind { Thread, Process, File, Socket, Pipe, MemoryRegion, Port };
enum class PortDirection { In, Out, InOut };

const char* to_string(ObjectKind kind);
std::optional<ObjectKind> object_kind_from(const std::string& name);

/// R/W/X subset for memory regions. No further permission-bit emulation.
struct Perms {
  bool read = false;
  bool write = false;
  bool exec = false;

  static Perms parse(const std::string& spec);  // e.g. "rw", "r", "rwx"
  std::string str() const;

  friend bool operator==(const Perms&, const Perms&) = default;
};

/// One contiguous labeled block in a thread's address space. Addresses are
/// abstract integers; the simulator never touches host memory. Each live
/// region holds one of the process's domain slots.
struct MemoryRegion {
  Rid rid = 0;
  Addr base = 0;
  std::uint64_t length = 0;
  Perms perms;
  difc::Label label;
  int domain = 0;

  bool covers(Addr address) const { return address >= base && address < base + length; }
  friend bool operator==(const MemoryRegion&, const MemoryRegion&) = default;
};

struct ObjectDescriptor {
  Oid oid = 0;
  ObjectKind kind = ObjectKind::File;
  std::string name;
  std::optional<difc::Label> label;
  Pid owner = 0;
  std::optional<PortDirection> port_direction;

  const difc::Label& effective_label() const {
    static const difc::Label kEmpty;
    return label ? *label : kEmpty;
  }
  friend bool operator==(const ObjectDescriptor&, const ObjectDescriptor&) = default;
};

struct ThreadContext {
  Tid tid = 0;
  Pid process = 0;
  difc::Label label;
  difc::CapabilityList caps;
  std::vector<MemoryRegion> regions;  // sorted by base, pairwise disjoint
  std::set<Oid> handles;              // open-file bookkeeping
  bool completed = false;             // trace completion marker for a_wait

  friend bool operator==(const ThreadContext&, const ThreadContext&) = default;
};

struct WorldOptions {
  std::size_t registry_capacity = difc::LabelRegistry::kDefaultCapacity;
  int domain_count = 16;
  /// When set, a successful read folds the object's secrecy tags into the
  /// reader's label. Off by default: labels are explicit, as in the API
  /// listings, not floating.
  bool floating_labels = false;
};

/// The simulated system: a label registry plus every traced object, thread
/// and memory region. Mutations go through a single logical owner;
/// concurrent read-only lookups are safe.
class World {
 public:
  World() = default;
  explicit World(WorldOptions options) : options_(options) {}

  const WorldOptions& options() const { return options_; }

  difc::LabelRegistry& registry() { return registry_; }
  const difc::LabelRegistry& registry() const { return registry_; }

  /// Name-to-tag table shared by the API and the policy layer. The first use
  /// of a name fixes its kind; reusing it under the other kind is an error.
  difc::Tag tag_named(const std::string& name, difc::TagKind kind);
  std::optional<difc::Tag> find_tag(const std::string& name) const;
  const std::string& tag_name(difc::TagId id) const;

  ObjectDescriptor& create_object(ObjectKind kind, const std::string& name,
                                  std::optional<difc::Label> label, Pid owner,
                                  std::optional<PortDirection> port_direction = std::nullopt);
  ObjectDescriptor* find_object(Oid oid);
  const ObjectDescriptor* find_object(Oid oid) const;
  ObjectDescriptor* find_object_by_name(const std::string& name);
  const ObjectDescriptor* find_object_by_name(const std::string& name) const;
  void remove_object(Oid oid);

  ThreadContext& create_thread(Tid tid, Pid process);
  ThreadContext* find_thread(Tid tid);
  const ThreadContext* find_thread(Tid tid) const;
  void remove_thread(Tid tid);

  MemoryRegion& map_region(Tid tid, Addr base, std::uint64_t length, Perms perms,
                           difc::Label label);
  void unmap_region(Tid tid, Rid rid);
  const MemoryRegion* region_lookup(const ThreadContext& thread, Addr address) const;

  /// Deterministic bump allocator for a_mmap bases, 4 KiB aligned.
  Addr reserve_base(std::uint64_t length);

  /// Monotone tid allocator for a_clone children.
  Tid allocate_tid();

  /// Policy roles: capability grants keyed by role name, applied on exec.
  using RoleGrants = std::vector<std::pair<std::string, difc::Privilege>>;
  void define_role(const std::string& name, RoleGrants grants);
  const RoleGrants* find_role(const std::string& name) const;

  const std::map<Oid, ObjectDescriptor>& objects() const { return objects_; }
  const std::map<Tid, ThreadContext>& threads() const { return threads_; }

  /// Referential-integrity sweep: every labeled object/thread/region must
  /// reference registered tags, regions must be disjoint with valid domains.
  void audit() const;

  /// Observable state (objects, labels, threads, regions, handles) equality.
  friend bool operator==(const World& a, const World& b) {
    return a.objects_ == b.objects_ && a.threads_ == b.threads_;
  }

 private:
  int allocate_domain(Pid process);

  WorldOptions options_;
  difc::LabelRegistry registry_{options_.registry_capacity};
  std::map<Oid, ObjectDescriptor> objects_;
  std::map<Tid, ThreadContext> threads_;
  std::map<std::string, difc::Tag> tags_by_name_;
  std::map<difc::TagId, std::string> tag_names_;
  std::map<Pid, std::set<int>> domains_in_use_;
  std::map<std::string, RoleGrants> roles_;
  Oid next_oid_ = 1;
  Rid next_rid_ = 1;
  Tid next_tid_ = 1;
  Addr next_base_ = 0x10000;
};

}  // namespace bciflow::sys
