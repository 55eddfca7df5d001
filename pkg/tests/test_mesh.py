"""Mesh construction, refinement, scaling and validation."""
import numpy as np
import pytest

from lamecouple.mesh import (
    LSHAPE,
    SQUARE,
    Mesh,
    ScaleRecord,
    build_polygon_mesh,
    lshape,
    read_mesh,
    refine_uniform,
    scale_to_unit,
    unit_square,
    validate_regularity,
    write_mesh,
)


class TestBuildPolygonMesh:
    def test_square_coarsest(self):
        m = unit_square(1.0)
        assert m.n_triangles == 2
        assert len(m.boundary_edges) == 4
        assert validate_regularity(m) == []

    def test_square_half(self):
        m = unit_square(0.5)
        assert m.n_triangles == 8
        assert m.h <= 0.5

    def test_lshape_coarse(self):
        m = lshape(0.5)
        assert len(m.boundary_edges) == 8
        assert m.n_triangles == 6
        assert m.area == pytest.approx(0.75)
        assert validate_regularity(m) == []

    def test_ear_clipping_for_general_polygon(self):
        poly = [(0, 0), (2, 0.3), (1.7, 1.4), (0.6, 1.1), (-0.2, 0.8)]
        m = build_polygon_mesh(poly, 0.3)
        assert validate_regularity(m) == []
        x, y = np.asarray(poly).T
        shoelace = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        assert m.area == pytest.approx(shoelace, rel=1e-12)
        assert m.h <= 0.3

    def test_rejects_self_intersecting(self):
        with pytest.raises(ValueError):
            build_polygon_mesh([(0, 0), (1, 1), (1, 0), (0, 1)], 0.5)

    def test_rejects_clockwise(self):
        with pytest.raises(ValueError):
            build_polygon_mesh(SQUARE[::-1], 0.5)

    @pytest.mark.parametrize("poly", [SQUARE, LSHAPE])
    def test_boundary_loops_counterclockwise(self, poly):
        m = build_polygon_mesh(poly, 0.25)
        e = m.boundary_edges
        assert np.array_equal(e[:, 1], np.roll(e[:, 0], -1))
        p = m.nodes[e]
        enclosed = 0.5 * np.sum(p[:, 0, 0] * p[:, 1, 1] - p[:, 1, 0] * p[:, 0, 1])
        assert enclosed == pytest.approx(m.area)


class TestRefineUniform:
    def test_two_triangles_to_eight(self):
        m = refine_uniform(unit_square(1.0))
        assert m.n_triangles == 8
        assert len(m.boundary_edges) == 8

    def test_counts_and_diameter(self):
        m = lshape(0.5)
        r = refine_uniform(m)
        assert r.n_triangles == 4 * m.n_triangles
        assert r.h == pytest.approx(m.h / 2, rel=1e-14)
        assert r.n_nodes == m.n_nodes + len(m.edges)

    def test_preserves_validity(self):
        m = build_polygon_mesh([(0, 0), (2, 0.3), (1.7, 1.4), (-0.2, 0.8)], 1.0)
        for _ in range(3):
            m = refine_uniform(m)
            assert validate_regularity(m) == []


class TestScaleToUnit:
    def test_admissible_mesh_unchanged(self):
        m = Mesh.from_triangles(0.2 * np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]]) / np.sqrt(2),
                                [[0, 1, 2], [0, 2, 3]])
        s, rec = scale_to_unit(m)
        assert rec.factor == 1.0
        assert np.array_equal(s.nodes, m.nodes)

    def test_unit_square(self):
        s, rec = scale_to_unit(unit_square(0.25))
        assert rec.factor <= 1 / (2 * np.sqrt(2)) + 1e-15
        d = s.nodes[:, None, :] - s.nodes[None, :, :]
        assert np.linalg.norm(d, axis=-1).max() <= 0.5 + 1e-14
        assert np.linalg.norm(s.nodes, axis=1).max() <= 0.25 + 1e-14

    def test_roundtrip(self):
        m = lshape(0.125)
        s, rec = scale_to_unit(m)
        back = rec.inverse(s.nodes)
        assert np.abs(back - m.nodes).max() <= 1e-14 * np.abs(m.nodes).max()

    def test_data_transforms(self):
        rec = ScaleRecord(0.5, (1.0, 2.0))
        u = lambda x: x**2
        y = np.array([[0.1, 0.2]])
        x = rec.inverse(y)
        assert np.allclose(rec.displacement(u)(y), 0.5 * x**2)
        assert np.allclose(rec.volume_force(u)(y), x**2 / 0.5)
        assert np.allclose(rec.traction(u)(y), x**2)

    def test_rejects_nonpositive_factor(self):
        with pytest.raises(ValueError):
            ScaleRecord(0.0)


class TestValidateRegularity:
    def test_valid(self):
        assert validate_regularity(unit_square(1.0)) == []

    def test_flipped_triangle(self):
        m = unit_square(0.5)
        tris = m.triangles.copy()
        tris[3] = tris[3][::-1]
        bad = Mesh(m.nodes, tris, m.boundary_edges)
        kinds = {v.kind for v in validate_regularity(bad)}
        assert "negative-area" in kinds

    def test_dangling_edge(self):
        m = unit_square(1.0)
        nodes = np.vstack([m.nodes, [[2.0, 2.0]]])
        edges = np.vstack([m.boundary_edges, [[2, 4]]])
        bad = Mesh(nodes, m.triangles, edges)
        kinds = {v.kind for v in validate_regularity(bad)}
        assert "non-manifold" in kinds

    def test_clockwise_boundary(self):
        m = unit_square(0.5)
        bad = Mesh(m.nodes, m.triangles, m.boundary_edges[::-1, ::-1])
        kinds = {v.kind for v in validate_regularity(bad)}
        assert "orientation" in kinds

    def test_missing_boundary_edge(self):
        m = unit_square(0.5)
        bad = Mesh(m.nodes, m.triangles, m.boundary_edges[1:])
        kinds = {v.kind for v in validate_regularity(bad)}
        assert "boundary-mismatch" in kinds

    def test_bad_index(self):
        m = unit_square(1.0)
        bad = Mesh(m.nodes, m.triangles + 10, m.boundary_edges)
        assert validate_regularity(bad)[0].kind == "index"


class TestMeshProperties:
    def test_h_is_local_size(self):
        m = unit_square(0.25)
        assert m.h == pytest.approx(0.25)
        assert m.diameter == pytest.approx(np.sqrt(2))

    def test_boundary_nodes_order(self):
        m = unit_square(0.5)
        assert np.array_equal(m.boundary_nodes, m.boundary_edges[:, 0])
        assert m.boundary_length == pytest.approx(4.0)

    def test_arrays_read_only(self):
        m = unit_square(1.0)
        with pytest.raises(ValueError):
            m.nodes[0, 0] = 1.0


class TestMeshIO:
    def test_roundtrip(self, tmp_path):
        m = lshape(0.25)
        write_mesh(tmp_path / "l.mesh", m)
        r = read_mesh(tmp_path / "l.mesh")
        assert np.array_equal(r.nodes, m.nodes)
        assert np.array_equal(r.triangles, m.triangles)
        assert validate_regularity(r) == []

    def test_bad_header(self, tmp_path):
        (tmp_path / "x.mesh").write_text("mesh9 0 0\n")
        with pytest.raises(ValueError):
            read_mesh(tmp_path / "x.mesh")
