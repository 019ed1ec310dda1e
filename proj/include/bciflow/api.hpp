#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bciflow/objects.hpp"

namespace bciflow::api {

/// SLABEL / ILABEL flag pair carried by the labeling calls.
struct LabelFlags {
  bool secrecy = false;
  bool integrity = false;

  bool any() const { return secrecy || integrity; }
  static LabelFlags parse(const std::vector<std::string>& names);
  std::vector<std::string> names() const;
};

struct PolicyConfig {
  struct TaintEntry {
    std::string pattern;  // glob over object names, '*' and '?'
    sys::ObjectKind kind = sys::ObjectKind::File;
    LabelFlags flags;
    std::vector<std::string> tags;
  };
  std::vector<TaintEntry> taint;
  std::map<std::string, sys::World::RoleGrants> roles;
};

/// Parses the JSON policy document. Throws ParseError with line/column info;
/// the config is validated in full before anything is applied.
PolicyConfig parse_policy(const std::string& json_text);

/// Glob match with '*' (any run) and '?' (one char); everything else literal.
bool glob_match(const std::string& pattern, const std::string& name);

/// A tracing session for one logical thread. Obtained from a_enable; every
/// label the session creates is journaled so a_cleanup can restore the world.
class Session {
 public:
  sys::World& world() { return *world_; }
  sys::Tid tid() const { return tid_; }
  bool enabled() const { return enabled_; }

 private:
  friend Session a_enable(sys::World& world, sys::Tid tid);
  friend void a_cleanup(Session& session);
  friend sys::Oid a_add(Session& session, const std::string& object_name, LabelFlags flags,
                        const std::vector<std::string>& tags);
  friend void a_remove(Session& session, sys::Oid oid);
  friend sys::Oid a_create(Session& session, sys::ObjectKind kind, const std::string& name,
                           LabelFlags flags, const std::vector<std::string>& tags,
                           std::optional<sys::PortDirection> port_direction);
  friend const sys::MemoryRegion& a_mmap(Session& session, std::uint64_t length, sys::Perms perms,
                                         const std::vector<std::string>& tags);
  friend void a_munmap(Session& session, sys::Rid rid);
  friend sys::Addr a_malloc(Session& session, std::uint64_t size);
  friend void a_free(Session& session, sys::Addr address);
  friend sys::Tid a_clone(Session& session, const std::string& entry);
  friend void a_wait(Session& session, sys::Tid child);
  friend void a_execv(Session& session, const std::string& image, const std::string& role);
  friend void raise_label(Session& session, const std::string& tag_name);
  friend void lower_label(Session& session, const std::string& tag_name);
  friend void grant_to(Session& owner, sys::Tid recipient, const std::string& tag_name,
                       difc::Privilege priv);
  friend difc::Tag declare_tag(Session& session, const std::string& name, difc::TagKind kind);
  friend std::size_t load_policy(Session& session, const PolicyConfig& config);

  struct LabelChange {
    enum class Kind { Object, Thread } kind = Kind::Object;
    sys::Oid oid = 0;
    sys::Tid tid = 0;
    std::optional<difc::Label> before;
    bool creation = false;  // entry from a_create, not an a_add layer
  };

  struct Arena {
    sys::Rid rid = 0;
    sys::Addr base = 0;
    std::uint64_t size = 0;
    std::uint64_t bump = 0;                        // offset of first never-used byte
    std::map<std::uint64_t, std::vector<sys::Addr>> free_lists;  // size class -> addresses
    std::map<sys::Addr, std::uint64_t> live;       // address -> size class
  };

  void journal_object(sys::Oid oid);
  void journal_thread();
  difc::Tag resolve_tag(const std::string& name, LabelFlags flags);
  void apply_tags(difc::Label& label, LabelFlags flags, const std::vector<std::string>& tags);
  Arena& arena();

  sys::World* world_ = nullptr;
  sys::Tid tid_ = 0;
  bool enabled_ = false;
  std::vector<LabelChange> journal_;
  std::vector<sys::Tid> created_threads_;
  std::vector<sys::Rid> created_regions_;
  std::optional<Arena> arena_;
};

/// Switches thread `tid` into tracing mode and allocates its ThreadContext.
Session a_enable(sys::World& world, sys::Tid tid);

/// Restores every label the session created, unmaps its regions, removes the
/// threads it spawned and its own context, and leaves tracing mode.
void a_cleanup(Session& session);

/// Labels an existing object. New tag names are registered under the kind
/// named by the flags; existing names must match a set flag. Requires the
/// Add grant for tags the session did not create.
sys::Oid a_add(Session& session, const std::string& object_name, LabelFlags flags,
               const std::vector<std::string>& tags);

/// Reverts the session's own label additions on the object; requires the
/// Remove grant for each tag being stripped.
void a_remove(Session& session, sys::Oid oid);

/// Creates an object with its label attached atomically (no unlabeled window).
sys::Oid a_create(Session& session, sys::ObjectKind kind, const std::string& name,
                  LabelFlags flags, const std::vector<std::string>& tags,
                  std::optional<sys::PortDirection> port_direction = std::nullopt);

/// Maps a tainted region at a deterministic base. Tag names must already
/// exist; a_mmap has no kind flags to register new ones under.
const sys::MemoryRegion& a_mmap(Session& session, std::uint64_t length, sys::Perms perms,
                                const std::vector<std::string>& tags);
void a_munmap(Session& session, sys::Rid rid);

/// Fixed-size-class allocation (16/64/256/1024/4096 bytes) carved from the
/// session's tainted arena region.
sys::Addr a_malloc(Session& session, std::uint64_t size);
void a_free(Session& session, sys::Addr address);

/// Spawns a child thread inheriting the parent's label and capabilities. The
/// simulated child runs `entry` to completion immediately.
sys::Tid a_clone(Session& session, const std::string& entry);
void a_wait(Session& session, sys::Tid child);

/// Swaps the thread's capability set for the role's grants; labels persist.
void a_execv(Session& session, const std::string& image, const std::string& role);

/// Raises/lowers a tag in the session thread's own label, gated on grants.
void raise_label(Session& session, const std::string& tag_name);
void lower_label(Session& session, const std::string& tag_name);

/// Delegates one of the session's grants to another thread (t+ style).
void grant_to(Session& owner, sys::Tid recipient, const std::string& tag_name,
              difc::Privilege priv);

/// Declares a named tag without labeling anything; the declaring session
/// receives both privileges over it.
difc::Tag declare_tag(Session& session, const std::string& name, difc::TagKind kind);

/// Applies every matching taint entry to existing objects and installs the
/// config's roles. Returns the number of objects labeled.
std::size_t load_policy(Session& session, const PolicyConfig& config);

}  // namespace bciflow::api
