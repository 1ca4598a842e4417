#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdfplan/grid.hpp"
#include "sdfplan/shapes.hpp"

namespace sdfplan {

enum class ObjectRole { Pusher, Movable, Obstacle, Hook, Mug };

const char* object_role_name(ObjectRole r);
ObjectRole object_role_from_name(const std::string& s);

struct SceneObject {
  std::string name;
  ObjectRole role = ObjectRole::Movable;
  SdfShape shape;
  RigidTransform pose = RigidTransform::identity(2);
};

/// A planning/simulation scene: objects with poses on a shared workspace
/// grid, an optional static goal region, and task bookkeeping.
struct Scene {
  std::string task;  // push_box, push_L, push_ood, push_obstacle, push_three_objects, hang
  GridSpec grid;
  std::vector<SceneObject> objects;
  std::optional<SdfShape> goal;  // static, parameters in world coordinates
  int pusher = -1;               // index of the pusher object
  int target = -1;               // object that must reach the goal
  int secondary = -1;            // intermediate object (three-object scenes)
  uint64_t seed = 0;
  int scene_index = 0;

  const SceneObject& pusher_obj() const { return objects.at(static_cast<size_t>(pusher)); }
  const SceneObject& target_obj() const { return objects.at(static_cast<size_t>(target)); }
  std::vector<int> movable_indices() const;
  std::vector<int> obstacle_indices() const;
  void validate() const;
};

}  // namespace sdfplan
