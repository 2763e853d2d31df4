#pragma once

#include "parak/recognizer.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace parak {

// Closed-form limit set in the tag's display coordinates. A pencil is the
// family of lines through `vertex` meeting the base curve
// {[anchor + t dir] : t in R together with t = infinity} inside `carrier`.
struct LimitSetDescriptor {
  enum class Kind { SingleLine, PencilOverCircle, WholePlane };
  Kind kind = Kind::SingleLine;
  ProjLine line;
  ProjPoint vertex;
  ProjLine carrier;
  ProjPoint baseAnchor, baseDir;
  std::string note;
};

struct RegionDescriptor {
  enum class Kind { AffinePlane, TwoHalfPlaneProduct, Empty };
  Kind kind = Kind::AffinePlane;
  bool largestProper = true;
  std::string note;
};

// Limit behaviour of the dual action, expressed in dual coordinates: a dual
// point is the coefficient triple of a line. RealLine is the real family
// {[anchor + t dir]}; ComplexLine is the full dual line of lines through
// `point`.
struct DualLimitDescriptor {
  enum class Kind { Point, RealLine, FamilyOfRealLines, ComplexLine };
  Kind kind = Kind::Point;
  ProjPoint point;
  ProjPoint anchor, dir;
  bool minimal = false;
  bool uniqueMinimal = false;
  bool dualToKulkarni = true;
  std::string note;
};

struct LineCluster {
  std::vector<ProjLine> lines;
  std::vector<double> weights;
  ProjLine representative;
  std::optional<ProjPoint> pencilVertex;
  double fitResidual = 0.0;
};

struct PointCluster {
  std::vector<ProjPoint> points;
  ProjPoint representative;
  double spread = 0.0;
  int count = 0;
};

// Concurrency and base-curve fit over a set of line clusters.
struct PencilFit {
  bool concurrent = false;
  ProjPoint vertex;
  double vertexResidual = 0.0;
  enum class Base { None, RealLine, Circle } base = Base::None;
  ProjLine carrier;
  ProjPoint baseAnchor, baseDir;  // RealLine model
  cplx circleCenter{0, 0};        // Circle model, in the carrier chart
  double circleRadius = 0.0;
  double baseResidual = 0.0;
};

std::pair<LimitSetDescriptor, RegionDescriptor> kulkarni_descriptor(const FamilyTag& tag);

DualLimitDescriptor cog_dual_descriptor(const FamilyTag& tag);

// Enumerates the L-ball, drives each element to singular divergence by
// repeated squaring, keeps rank-one collapse directions, and clusters the
// numerical kernel lines by chordal distance.
std::vector<LineCluster> sample_limit_lines(const MarkedGroup& G, int L, const Tol& tol = {},
                                            double deltaCluster = 1e-2);

// Same pipeline on the dual action; collects rank-one image points.
std::vector<PointCluster> sample_dual_limits(const MarkedGroup& G, int L, const Tol& tol = {},
                                             double deltaCluster = 1e-2);

PencilFit fit_pencil(const std::vector<LineCluster>& clusters, const Tol& tol = {});

enum class Chart { Z1, Z2, Z3 };

// CSV export with header re1,im1,re2,im2,label; deterministic grids.
void export_cloud(const LimitSetDescriptor& d, Chart chart, int n, const std::string& path);
void export_cloud(const DualLimitDescriptor& d, Chart chart, int n, const std::string& path);
void export_cloud(const std::vector<LineCluster>& clusters, Chart chart, int n,
                  const std::string& path);
void export_cloud(const std::vector<PointCluster>& clusters, Chart chart, int n,
                  const std::string& path);

}  // namespace parak
