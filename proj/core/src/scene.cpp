#include "sdfplan/scene.hpp"

#include <stdexcept>

namespace sdfplan {

const char* object_role_name(ObjectRole r) {
  switch (r) {
    case ObjectRole::Pusher: return "pusher";
    case ObjectRole::Movable: return "movable";
    case ObjectRole::Obstacle: return "obstacle";
    case ObjectRole::Hook: return "hook";
    case ObjectRole::Mug: return "mug";
  }
  return "?";
}

ObjectRole object_role_from_name(const std::string& s) {
  for (ObjectRole r : {ObjectRole::Pusher, ObjectRole::Movable, ObjectRole::Obstacle,
                       ObjectRole::Hook, ObjectRole::Mug})
    if (s == object_role_name(r)) return r;
  throw std::invalid_argument("unknown object role: " + s);
}

std::vector<int> Scene::movable_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < objects.size(); ++i) {
    const ObjectRole r = objects[i].role;
    if (r == ObjectRole::Movable || r == ObjectRole::Mug) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Scene::obstacle_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < objects.size(); ++i)
    if (objects[i].role == ObjectRole::Obstacle) out.push_back(static_cast<int>(i));
  return out;
}

void Scene::validate() const {
  grid.validate();
  for (const auto& o : objects) sdfplan::validate(o.shape);
  if (pusher >= 0 && static_cast<size_t>(pusher) >= objects.size())
    throw std::invalid_argument("scene: pusher index out of range");
  if (target >= 0 && static_cast<size_t>(target) >= objects.size())
    throw std::invalid_argument("scene: target index out of range");
  if (goal) sdfplan::validate(*goal);
}

}  // namespace sdfplan
