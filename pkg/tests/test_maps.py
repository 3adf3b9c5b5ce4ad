import math

import numpy as np
import pytest

from tanlap.errors import DomainError, GalleryError, GridFormatError, SingularPointError, StencilError
from tanlap.maps import (BoxDomain, EMBED3_MATRIX, GridMap, GridSource, catalogue, eval_jet, fd_jet,
                         fd_jets, gallery, load_grid, sample_grid, write_grid)
from tanlap.maps.gallery import KFamily, adaptive_simpson


def fd_oracle(source, x, h=1e-4):
    """Central-difference gradient of the values, independent of the jet code."""
    x = np.asarray(x, float)
    cols = []
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((source.values(x + e) - source.values(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def test_example2_value():
    assert np.array_equal(gallery("example2").values([1.0, 0.0]), [1.0, 1.0])


def test_k_family_diagonal_value():
    assert np.array_equal(gallery("k_family", c=1).values([0.2, 0.2]), [0.0, 0.0])


def test_aronsson_value():
    assert gallery("aronsson").values([1.0, 1.0])[0] == 0.0


def test_example2_grad_against_fd():
    jet = eval_jet(gallery("example2"), [1.0, 0.0])
    assert np.array_equal(jet.grad, [[4.0, 0.0], [4.0, 0.0]])
    assert np.allclose(fd_oracle(gallery("example2"), [1.0, 0.0]), jet.grad, atol=1e-6)


def test_k_family_grad_column():
    src = gallery("k_family")
    jet = eval_jet(src, [0.0, math.pi / 8])
    assert np.allclose(jet.grad[:, 1], [math.cos(math.pi / 8), math.sin(math.pi / 8)], atol=1e-15)
    assert np.allclose(fd_oracle(src, [0.0, math.pi / 8]), jet.grad, atol=1e-8)


def test_paraboloid_laplacian_trace():
    jet = eval_jet(gallery("paraboloid"), [0.0, 0.0])
    assert np.array_equal(np.trace(jet.hess, axis1=1, axis2=2), [0.0, 0.0, 4.0])


def test_example2_c2_across_seam():
    jet = eval_jet(gallery("example2"), [0.0, 0.4])
    assert not jet.grad.any() and not jet.hess.any()


def test_aronsson_singular_set():
    with pytest.raises(SingularPointError, match="axes"):
        eval_jet(gallery("aronsson"), [0.0, 0.5])


def test_k_family_off_strip():
    with pytest.raises(DomainError):
        gallery("k_family").values([0.0, 1.0])
    with pytest.raises(DomainError):
        gallery("k_family").with_domain(BoxDomain((-1, -1), (1, 1), 11))


def test_unknown_gallery_id():
    with pytest.raises(GalleryError, match="unknown gallery id"):
        gallery("helicoid")
    with pytest.raises(GalleryError):
        gallery("k_family", profile="cubic")


def test_catalogue_has_seven_documented_entries():
    entries = catalogue()
    assert len(entries) == 7
    assert all(e["summary"] for e in entries)


def test_embed3_is_isometric_composition():
    inner, outer = gallery("k_family"), gallery("embed3")
    pts = inner.domain.interior().reshape(-1, 2)[::37]
    assert np.allclose(outer.values(pts), inner.values(pts) @ EMBED3_MATRIX.T, atol=0)
    assert np.allclose(EMBED3_MATRIX.T @ EMBED3_MATRIX, np.eye(2), atol=1e-15)
    assert abs(outer.plane_normal @ EMBED3_MATRIX).max() < 1e-16


def test_k_family_custom_profile_uses_quadrature():
    custom = KFamily(K=lambda t: 2 * np.arctan(t), dK=lambda t: 2 / (1 + np.asarray(t) ** 2))
    closed = gallery("k_family", profile="arctan")
    pts = np.array([[-0.2, 0.1], [0.25, -0.3], [0.0, 0.3]])
    assert np.allclose(custom.values(pts), closed.values(pts), atol=1e-11)


def test_adaptive_simpson_sine():
    val = adaptive_simpson(lambda t: np.array([np.sin(t)]), 0.0, math.pi)
    assert abs(val[0] - 2.0) < 1e-12


def test_nu_of_f_breakpoint_is_singular():
    src = gallery("nu_of_f", f="linear", alpha=1.0, beta=0.0,
                  directions=[[1, 0, 0], [0, 1, 0]], breakpoints=[0.25])
    assert np.allclose(src.values([[0.5, 0.0]]), [[0.25, 0.25, 0.0]])
    with pytest.raises(SingularPointError):
        eval_jet(src, [0.25, 0.3])


def test_separated_pair_matches_factors():
    src = gallery("separated_pair")
    sep = src.separated()
    pts = src.domain.interior().reshape(-1, 2)[::53]
    assert np.allclose(src.values(pts), sep(pts[:, 0], pts[:, 1]), atol=1e-12)
    k = gallery("k_family")
    assert np.allclose(k.values(pts), src.values(pts), atol=1e-12)


# (source, point away from singular/degenerate sets)
ORDER_CASES = [
    ("example2", {}, (0.5, 0.3)),
    ("aronsson", {}, (0.5, -0.4)),
    ("k_family", {}, (-0.1, 0.2)),
    ("k_family", {"profile": "arctan"}, (-0.1, 0.2)),
    ("embed3", {}, (0.1, -0.15)),
    ("nu_of_f", {"directions": [[1, 0, 0], [0, 1, 1]], "breakpoints": [-0.5]}, (0.5, 0.2)),
    ("paraboloid", {}, (0.3, 0.4)),
    ("separated_pair", {"preset": "nonsolution"}, (0.4, 0.5)),
]


def _local_fd_error(src, x0, h):
    box = BoxDomain(tuple(np.subtract(x0, 2 * h)), tuple(np.add(x0, 2 * h)), 5)
    grid = sample_grid(src.with_domain(box), box)
    jet = fd_jet(grid, (2, 2))
    exact = eval_jet(src, x0)
    return (np.abs(jet.grad - exact.grad).max(), np.abs(jet.hess - exact.hess).max())


@pytest.mark.parametrize("gid, params, x0", ORDER_CASES)
def test_fd_jets_converge_at_second_order(gid, params, x0):
    src = gallery(gid, params)
    coarse = _local_fd_error(src, x0, 1e-2)
    fine = _local_fd_error(src, x0, 5e-3)
    for c, f in zip(coarse, fine):
        if c < 1e-10:
            # stencil exact on this entry (polynomial of low degree)
            assert f < 1e-9
            continue
        assert 1.7 <= math.log2(c / f) <= 2.3


def test_fd_affine_exact():
    box = BoxDomain((0, 0), (1, 2), 5)
    lat = box.lattice()
    jet = fd_jet(GridMap(box, lat.copy()), (2, 2))
    assert np.allclose(jet.grad, np.eye(2), atol=1e-14)
    assert np.allclose(jet.hess, 0.0, atol=1e-12)


def test_fd_quadratic_second_difference_exact():
    box = BoxDomain((0.0, 0.0), (1.0, 1.0), 5)
    lat = box.lattice()
    jet = fd_jet(GridMap(box, lat[..., :1] ** 2), (1, 3))
    assert abs(jet.hess[0, 0, 0] - 2.0) < 1e-12


def test_fd_sine_grad_ratio():
    errs = []
    for h in (0.1, 0.05):
        box = BoxDomain((1.0 - h, 0.0), (1.0 + h, 2 * h), 3)
        grid = GridMap(box, np.sin(box.lattice()[..., :1]))
        errs.append(abs(fd_jet(grid, (1, 1)).grad[0, 0] - math.cos(1.0)))
    assert 3.8 < errs[0] / errs[1] < 4.2


def test_fd_boundary_index_rejected():
    grid = sample_grid(gallery("paraboloid"), BoxDomain((0, 0), (1, 1), 5))
    with pytest.raises(StencilError):
        fd_jet(grid, (0, 2))


def test_fd_symmetrization_defect_small():
    src = gallery("k_family", profile="arctan")
    h = src.domain.spacing[0]
    _, defect = fd_jets(sample_grid(src))
    assert defect <= 10 * h * h
    assert src.jets(src.domain.interior()).symmetrization_defect() == 0.0


def test_grid_source_interior_jets():
    src = GridSource(sample_grid(gallery("paraboloid"), BoxDomain((-1, -1), (1, 1), 11)))
    jet, singular = src.interior_jets()
    assert jet.batch_shape == (9, 9) and not singular.any()
    assert np.allclose(np.trace(jet.hess, axis1=-2, axis2=-1)[..., 2], 4.0, atol=1e-10)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_grid_round_trip(tmp_path):
    box = BoxDomain((-1, 0), (1, 1), (3, 3))
    grid = sample_grid(gallery("example2"), box)
    write_grid(tmp_path / "g.csv", grid)
    back = load_grid(tmp_path / "g.csv")
    assert back.domain.resolution == (3, 3) and back.N == 2
    assert np.array_equal(back.samples, grid.samples)
    assert back.samples.reshape(-1, 2).shape[0] == 9


def test_load_grid_unsorted_rows(tmp_path):
    rows = ["x1,x2,u1"] + [f"{x},{y},{x + y}" for y in (2, 0, 1) for x in (1, 0, 2)]
    grid = load_grid(_write(tmp_path / "g.csv", "\n".join(rows)))
    assert np.allclose(grid.samples[..., 0], grid.domain.lattice().sum(-1))


def test_load_grid_header_dims(tmp_path):
    rows = ["x1,x2,u1,u2,u3"] + [f"{x},{y},0,0,0" for x in range(3) for y in range(3)]
    grid = load_grid(_write(tmp_path / "g.csv", "\n".join(rows)))
    assert (grid.n, grid.N) == (2, 3)


def test_load_grid_missing_row(tmp_path):
    rows = ["x1,x2,u1"] + [f"{x},{y},0" for x in range(3) for y in range(3)][:-1]
    with pytest.raises(GridFormatError, match="incomplete lattice.*\\[2.0, 2.0\\]"):
        load_grid(_write(tmp_path / "g.csv", "\n".join(rows)))


def test_load_grid_non_numeric_cell(tmp_path):
    rows = ["x1,x2,u1"] + [f"{x},{y},0" for x in range(3) for y in range(3)]
    rows[4] = "1,0,abc"
    with pytest.raises(GridFormatError, match="row 5"):
        load_grid(_write(tmp_path / "g.csv", "\n".join(rows)))


def test_load_grid_wrong_cell_count(tmp_path):
    rows = ["x1,x2,u1,u2"] + [f"{x},{y},0,0" for x in range(3) for y in range(3)]
    rows[2] = "0,1,0"
    with pytest.raises(GridFormatError, match="row 3 has 3 cells"):
        load_grid(_write(tmp_path / "g.csv", "\n".join(rows)))


def test_load_grid_irregular(tmp_path):
    rows = ["x1,u1"] + [f"{x},0" for x in (0.0, 1.0, 3.0)]
    with pytest.raises(GridFormatError, match="not regularly spaced"):
        load_grid(_write(tmp_path / "g.csv", "\n".join(rows)))


def test_load_grid_duplicate(tmp_path):
    rows = ["x1,u1"] + [f"{x},0" for x in (0.0, 1.0, 2.0, 1.0)]
    with pytest.raises(GridFormatError, match="row 5 repeats"):
        load_grid(_write(tmp_path / "g.csv", "\n".join(rows)))


def test_box_parse_and_validation():
    box = BoxDomain.parse("-0.3,0.3x-0.3,0.3", 41)
    assert box.lower == (-0.3, -0.3) and box.resolution == (41, 41)
    with pytest.raises(ValueError):
        BoxDomain((0, 0), (0, 1), 5)
    with pytest.raises(ValueError):
        BoxDomain((0,), (1,), 2)
