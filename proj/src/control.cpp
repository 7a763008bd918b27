#include "exoc/control.hpp"

#include <cmath>
#include <utility>

namespace exoc {

namespace {
constexpr double kBoxTol = 1e-12;
}

ControlSet ControlSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DimensionMismatch("ControlSet::box: bound dimensions disagree");
  }
  for (int i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw Error("ControlSet::box: lower > upper in component " + std::to_string(i));
    }
  }
  ControlSet s;
  s.kind_ = Kind::Box;
  s.dim_ = static_cast<int>(lower.size());
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

ControlSet ControlSet::atoms(std::vector<Vec> atoms) {
  if (atoms.empty()) {
    throw Error("ControlSet::atoms: atom list is empty");
  }
  const auto dim = atoms.front().size();
  for (const Vec& a : atoms) {
    if (a.size() != dim) {
      throw DimensionMismatch("ControlSet::atoms: atoms of mixed dimension");
    }
  }
  ControlSet s;
  s.kind_ = Kind::Atoms;
  s.dim_ = static_cast<int>(dim);
  s.atoms_ = std::move(atoms);
  return s;
}

bool ControlSet::contains(const Vec& u) const {
  if (u.size() != dim_) return false;
  if (kind_ == Kind::Box) {
    for (int i = 0; i < dim_; ++i) {
      if (u[i] < lower_[i] - kBoxTol || u[i] > upper_[i] + kBoxTol) return false;
    }
    return true;
  }
  for (const Vec& a : atoms_) {
    if ((a - u).cwiseAbs().maxCoeff() == 0.0) return true;
  }
  return false;
}

Vec ControlSet::representative() const {
  if (kind_ == Kind::Box) return 0.5 * (lower_ + upper_);
  return atoms_.front();
}

Control::Control(TimeGrid g, std::vector<Vec> vals) : grid(g), values(std::move(vals)) {
  if (static_cast<int>(values.size()) != grid.n_steps()) {
    throw DimensionMismatch("Control: expected one value per grid interval");
  }
}

Control Control::constant(const TimeGrid& g, const Vec& value) {
  return Control(g, std::vector<Vec>(static_cast<size_t>(g.n_steps()), value));
}

RelaxedControl::RelaxedControl(TimeGrid g, std::vector<Vec> atom_list,
                               std::vector<Eigen::VectorXd> w)
    : grid(g), atoms(std::move(atom_list)), weights(std::move(w)) {
  if (atoms.empty()) throw Error("RelaxedControl: empty atom list");
  if (static_cast<int>(weights.size()) != grid.n_steps()) {
    throw DimensionMismatch("RelaxedControl: expected one weight row per interval");
  }
  for (const auto& row : weights) {
    if (row.size() != static_cast<Eigen::Index>(atoms.size())) {
      throw DimensionMismatch("RelaxedControl: weight row size != atom count");
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      if (row[j] < -1e-12) throw Error("RelaxedControl: negative weight");
      sum += row[j];
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw Error("RelaxedControl: weights of an interval do not sum to 1");
    }
  }
}

bool admissible(const ControlSet& set, const Control& control) {
  for (const Vec& u : control.values) {
    if (!set.contains(u)) return false;
  }
  return true;
}

RelaxedControl relax(const Control& control, const std::vector<Vec>& atoms) {
  std::vector<Eigen::VectorXd> weights;
  weights.reserve(control.values.size());
  for (size_t k = 0; k < control.values.size(); ++k) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(atoms.size()));
    bool found = false;
    for (size_t j = 0; j < atoms.size(); ++j) {
      if (atoms[j].size() == control.values[k].size() &&
          (atoms[j] - control.values[k]).cwiseAbs().maxCoeff() == 0.0) {
        row[static_cast<Eigen::Index>(j)] = 1.0;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ValueNotAnAtom("relax: control value on interval " + std::to_string(k) +
                           " is not in the atom list");
    }
    weights.push_back(std::move(row));
  }
  return RelaxedControl(control.grid, atoms, std::move(weights));
}

}  // namespace exoc
