#include "hhj/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hhj;

TEST(Mesh, Counts2D) {
  for (int n : {1, 2, 4}) {
    const Mesh m = Mesh::structured(2, n);
    EXPECT_EQ(m.num_vertices(), (n + 1) * (n + 1));
    EXPECT_EQ(m.num_elements(), 2 * n * n);
    EXPECT_EQ(m.num_facets(), 3 * n * n + 2 * n);
    EXPECT_NEAR(m.h(), std::sqrt(2.0) / n, 1e-14);
  }
}

TEST(Mesh, Counts3DSingleCube) {
  const Mesh m = Mesh::structured(3, 1);
  EXPECT_EQ(m.num_vertices(), 8);
  EXPECT_EQ(m.num_entities(1), 19);
  EXPECT_EQ(m.num_entities(2), 18);
  EXPECT_EQ(m.num_elements(), 6);
  int boundary_faces = 0;
  for (int f = 0; f < m.num_facets(); ++f) boundary_faces += m.on_boundary(2, f);
  EXPECT_EQ(boundary_faces, 12);
  int interior_edges = 0;
  for (int e = 0; e < m.num_entities(1); ++e) interior_edges += !m.on_boundary(1, e);
  EXPECT_EQ(interior_edges, 1);
}

TEST(Mesh, Euler3D) {
  for (int n : {1, 2, 3}) {
    const Mesh m = Mesh::structured(3, n);
    EXPECT_EQ(m.num_vertices() - m.num_entities(1) + m.num_entities(2) - m.num_elements(), 1);
    EXPECT_EQ(m.num_elements(), 6 * n * n * n);
  }
}

TEST(Mesh, VolumesSumToOne) {
  for (int dim : {2, 3}) {
    const Mesh m = Mesh::structured(dim, 3);
    double total = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      EXPECT_GT(m.element_geometry(e).volume, 0.0);
      total += m.element_geometry(e).volume;
    }
    EXPECT_NEAR(total, 1.0, 1e-13);
  }
}

TEST(Mesh, FacetSignsOpposeAcrossInteriorFacets) {
  for (int dim : {2, 3}) {
    const Mesh m = Mesh::structured(dim, 2);
    for (int f = 0; f < m.num_facets(); ++f) {
      const auto owners = m.facet_owners(f);
      if (m.on_boundary(dim - 1, f)) {
        ASSERT_EQ(owners.size(), 1u);
        continue;
      }
      ASSERT_EQ(owners.size(), 2u);
      EXPECT_EQ(owners[0].sign * owners[1].sign, -1);
    }
  }
}

TEST(Mesh, FacetFrameOrthonormal) {
  for (int dim : {2, 3}) {
    const Mesh m = Mesh::structured(dim, 2);
    for (int f = 0; f < m.num_facets(); ++f) {
      const FacetFrame fr = m.facet_frame(f);
      EXPECT_NEAR(fr.normal.norm(), 1.0, 1e-14);
      ASSERT_EQ(static_cast<int>(fr.tangents.size()), dim - 1);
      for (const auto& t : fr.tangents) {
        EXPECT_NEAR(t.norm(), 1.0, 1e-14);
        EXPECT_NEAR(t.dot(fr.normal), 0.0, 1e-14);
      }
      if (dim == 2) {
        // tangent is the normal rotated counter-clockwise
        EXPECT_NEAR(fr.tangents[0](0), -fr.normal(1), 1e-14);
        EXPECT_NEAR(fr.tangents[0](1), fr.normal(0), 1e-14);
      }
    }
  }
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(Mesh::structured(2, 0), Error);
  EXPECT_THROW(Mesh::structured(4, 1), Error);
}
