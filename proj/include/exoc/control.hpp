#pragma once

#include "exoc/grid.hpp"
#include "exoc/types.hpp"

#include <vector>

namespace exoc {

/// Admissible control values: either a coordinate box or a finite atom list.
class ControlSet {
 public:
  enum class Kind { Box, Atoms };

  static ControlSet box(Vec lower, Vec upper);
  static ControlSet atoms(std::vector<Vec> atoms);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const std::vector<Vec>& atom_list() const { return atoms_; }

  /// Membership up to tolerance 1e-12 for boxes; exact match for atom sets.
  bool contains(const Vec& u) const;

  /// Representative interior value (box midpoint or first atom).
  Vec representative() const;

 private:
  ControlSet() = default;

  Kind kind_ = Kind::Box;
  int dim_ = 0;
  Vec lower_, upper_;
  std::vector<Vec> atoms_;
};

/// Piecewise-constant control: one value per grid interval [t_k, t_{k+1}).
struct Control {
  TimeGrid grid;
  std::vector<Vec> values;  // length grid.n_steps()

  Control(TimeGrid g, std::vector<Vec> vals);

  /// Constant control u(t) = value on the whole grid.
  static Control constant(const TimeGrid& g, const Vec& value);

  const Vec& at_interval(int k) const { return values[static_cast<size_t>(k)]; }
};

/// Atomic relaxed (generalized) control: a fixed atom list shared across
/// time and one probability vector over the atoms per grid interval.
struct RelaxedControl {
  TimeGrid grid;
  std::vector<Vec> atoms;
  std::vector<Eigen::VectorXd> weights;  // length n_steps, each of size atoms.size()

  RelaxedControl(TimeGrid g, std::vector<Vec> atom_list, std::vector<Eigen::VectorXd> w);
};

/// Embeds an ordinary control as the one-hot relaxed control over `atoms`.
/// Every control value must match an atom exactly; throws ValueNotAnAtom
/// otherwise (nearest-atom snapping is deliberately not performed).
RelaxedControl relax(const Control& control, const std::vector<Vec>& atoms);

/// Every interval value belongs to the set (boxes up to the 1e-12 membership
/// tolerance, atoms exactly).
bool admissible(const ControlSet& set, const Control& control);

}  // namespace exoc
