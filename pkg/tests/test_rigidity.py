import math

import numpy as np
import pytest

from tanlap.errors import PreconditionError
from tanlap.maps import BoxDomain, gallery
from tanlap.operators import tangential_residual
from tanlap.rigidity import (MIN_CELLS, common_subspace, fit_affine, flatness_report, image_diameter,
                             rank_segmentation, subspace_angle)


def test_fit_collinear_points():
    t = np.arange(11.0)
    fit = fit_affine(np.stack([t, 2 * t, 0 * t], axis=1), 1)
    assert fit.rms <= 1e-14 and fit.max_dev <= 1e-13
    assert np.allclose(np.abs(fit.basis[:, 0]), np.array([1, 2, 0]) / math.sqrt(5))


def test_fit_perturbed_plane():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (200, 3))
    pts[:, 2] = rng.choice([-1e-6, 1e-6], 200)
    fit = fit_affine(pts, 2)
    assert fit.rms <= 1e-6 and fit.rms <= fit.max_dev
    assert np.allclose(fit.basis.T @ fit.basis, np.eye(2), atol=1e-12)


def test_fit_paraboloid_misfit():
    src = gallery("paraboloid")
    box = BoxDomain((-1, -1), (1, 1), 101)
    fit = fit_affine(src.values(box.lattice().reshape(-1, 2)), 2)
    # independent oracle: least-squares plane z = a + bx + cy has b = c = 0 by symmetry,
    # so the vertical residual is z - mean(z) and the normal is (0, 0, 1)
    z = np.sum(box.lattice().reshape(-1, 2) ** 2, axis=1)
    assert fit.rms == pytest.approx(np.sqrt(np.mean((z - z.mean()) ** 2)), rel=1e-10)
    assert fit.rms > 1e-2


def test_fit_preconditions():
    with pytest.raises(PreconditionError):
        fit_affine(np.zeros((1, 3)), 1)
    with pytest.raises(PreconditionError):
        fit_affine(np.zeros((5, 2)), 2)


def test_diameter():
    assert image_diameter(np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])) == 5.0
    assert image_diameter(np.zeros((1, 3))) == 0.0
    big = np.zeros((5000, 2))
    big[-1] = [3.0, 4.0]
    assert image_diameter(big) == 5.0


def _assert_partition(components, singular, domain):
    interior = tuple(r - 2 for r in domain.resolution)
    seen = np.zeros(interior, dtype=int)
    for comp in components:
        seen[tuple(comp.cells.T)] += 1
    if len(singular):
        seen[tuple(singular.T)] += 1
    assert (seen == 1).all()


@pytest.mark.parametrize("gid, params", [
    ("example2", {}), ("aronsson", {}), ("k_family", {}), ("embed3", {}),
    ("nu_of_f", {"directions": [[1, 0, 0], [0, 1, 0]], "breakpoints": [0.1]}), ("paraboloid", {}),
])
def test_segmentation_is_partition(gid, params):
    src = gallery(gid, params)
    domain = src.domain.with_resolution(21)
    comps, singular = rank_segmentation(src, domain)
    _assert_partition(comps, singular, domain)
    assert [c.label for c in comps] == list(range(len(comps)))


def test_example2_segments():
    comps, singular = rank_segmentation(gallery("example2"), BoxDomain((-1, -1), (1, 1), 41))
    ranks = sorted((c.rank, c.size) for c in comps)
    assert ranks == [(0, 39), (1, 741), (1, 741)]
    seam = [c for c in comps if c.rank == 0][0]
    assert np.all(seam.points[:, 0] == 0.0)
    assert len(singular) == 0


def test_affine_single_component():
    comps, _ = rank_segmentation(gallery("nu_of_f", f="linear"))
    assert len(comps) == 1 and comps[0].rank == 1


def test_k_family_split_by_diagonal():
    comps, _ = rank_segmentation(gallery("k_family"))
    rank2 = [c for c in comps if c.rank == 2 and c.size >= MIN_CELLS]
    assert len(rank2) == 2
    assert all(c.size < MIN_CELLS for c in comps if c.rank == 1)
    for c in rank2:
        side = np.sign(c.points[:, 0] - c.points[:, 1])
        assert np.all(side == side[0])


def test_domain_without_interior_rejected():
    with pytest.raises(ValueError, match="at least 3"):
        rank_segmentation(gallery("example2"), BoxDomain((-1, -1), (1, 1), (2, 9)))


def test_example2_two_different_lines():
    report = flatness_report(gallery("example2"), BoxDomain((-1, -1), (1, 1), 41))
    lines = report.of_rank(1)
    assert len(lines) == 2 and all(v.flat and v.fit.max_dev <= 1e-9 for v in lines)
    directions = sorted(tuple(np.round(np.abs(v.fit.basis[:, 0]) * math.sqrt(2), 12)) for v in lines)
    assert directions == [(1.0, 1.0), (1.0, 1.0)]
    dots = [v.fit.basis[0, 0] * v.fit.basis[1, 0] for v in lines]
    assert sorted(np.sign(dots)) == [-1.0, 1.0]
    assert abs(subspace_angle(lines[0].fit, lines[1].fit) - math.pi / 2) <= 1e-12
    assert report.flat


def test_embed3_common_plane():
    report = flatness_report(gallery("embed3"))
    planes = report.of_rank(2)
    assert len(planes) == 2 and all(v.flat and not v.trivial for v in planes)
    angle, offset = common_subspace([v.fit for v in planes])
    assert angle <= 1e-10 and offset <= 1e-10


def test_paraboloid_not_flat():
    src = gallery("paraboloid")
    for tol in (1e-8, 1e-3):
        report = flatness_report(src, tol=tol)
        assert not report.flat
        assert all(not v.flat for v in report.of_rank(2))


def test_polygonal_line_pieces_are_flat():
    # a solution whose image bends: two straight pieces meeting at a breakpoint.
    # The kink only separates components when it falls on lattice nodes.
    kink = BoxDomain((-1, -1), (1, 1), 41).axes()[0][24]
    src = gallery("nu_of_f", f="linear", alpha=1.0, beta=0.0,
                  directions=[[1, 0, 0], [0, 1, 1]], breakpoints=[kink])
    report = flatness_report(src)
    assert len(report.singular_cells) == 39
    pieces = report.of_rank(1)
    assert len(pieces) == 2 and report.flat
    assert subspace_angle(pieces[0].fit, pieces[1].fit) > 1.0


@pytest.mark.parametrize("gid, params", [
    ("example2", {}), ("nu_of_f", {}), ("nu_of_f", {"f": "linear"}),
])
def test_rank_one_solutions_lie_on_lines(gid, params):
    src = gallery(gid, params)
    domain = src.domain.with_resolution(31)
    jet, singular = src.interior_jets(domain)
    assert np.abs(tangential_residual(jet)[~singular]).max() <= 1e-10
    for v in flatness_report(src, domain).of_rank(1):
        assert v.fit.max_dev <= 1e-8 * (1 + v.diameter)


@pytest.mark.parametrize("preset", ["kfamily", "affine"])
def test_separated_solutions_lie_in_planes(preset):
    report = flatness_report(gallery("separated_pair", preset=preset))
    for v in report.of_rank(2):
        assert v.fit.max_dev <= 1e-8 * (1 + v.diameter)


def test_rank_zero_piece_is_a_point():
    report = flatness_report(gallery("example2"), BoxDomain((-1, -1), (1, 1), 41))
    seam = report.of_rank(0)[0]
    assert seam.fit.dim == 0 and seam.flat and seam.diameter == 0.0


def test_report_dict_shape():
    d = flatness_report(gallery("example2"), BoxDomain((-1, -1), (1, 1), 11)).as_dict()
    assert d["verdict"] == "flat"
    assert {"label", "rank", "cells", "fit", "verdict", "eligible"} <= set(d["components"][0])
