import warnings

import numpy as np
import pytest

from bubblescreen.boundary import BubbleGeometry, discretize
from bubblescreen.layer_ops import (
    LayerPotentialAssembler,
    assemble_block,
    assemble_nk_adjoint,
    assemble_single_layer,
    block_rhs,
    eval_field,
)
from bubblescreen.lattice_green import EwaldParams, LatticeConfig, Wavenumbers
from bubblescreen.resonance import MediaConfig

LAT = LatticeConfig(10.0)
GEOM = BubbleGeometry(radius=1.0, standoff=2.0)


@pytest.fixture(scope="module")
def asm128():
    return LayerPotentialAssembler(discretize(GEOM, 128), LAT)


@pytest.fixture(scope="module")
def asm256():
    return LayerPotentialAssembler(discretize(GEOM, 256), LAT)


def test_static_single_layer_symmetric(asm128):
    S = np.asarray(asm128.single_layer())
    assert np.abs(S - S.T).max() < 1e-10 * np.abs(S).max()


def test_single_layer_negative_on_constants(asm128):
    bdy = asm128.bdy
    S = np.asarray(asm128.single_layer())
    assert bdy.integrate(np.linalg.solve(S, np.ones(bdy.size))).real < 0


@pytest.mark.parametrize("r,beta", [(0.1, 0.2), (0.55, 1.1), (1.0, 2.0)])
def test_single_layer_invertible(r, beta):
    bdy = discretize(BubbleGeometry(radius=r, standoff=beta), 128)
    sv = np.linalg.svd(np.asarray(assemble_single_layer(bdy, LAT)), compute_uv=False)
    assert sv[-1] > 1e-6 * sv[0]


def test_capacity_solve_self_converges(asm128, asm256):
    vals = []
    for asm in (asm128, asm256):
        bdy = asm.bdy
        vals.append(bdy.integrate(np.linalg.solve(np.asarray(asm.single_layer()), np.ones(bdy.size))))
    assert abs(vals[0] - vals[1]) < 1e-6 * abs(vals[1])


def test_nk_spectrum(asm128, asm256):
    gaps = []
    for asm in (asm128, asm256):
        ev = np.linalg.eigvals(np.asarray(asm.nk_adjoint()))
        d = np.abs(ev - 0.5)
        i = np.argmin(d)
        gaps.append(d[i])
        rest = np.delete(ev, i)
        assert np.all(rest.real > -0.5 - 1e-3) and np.all(rest.real < 0.5 - 1e-3)
    assert gaps[0] < 1e-3
    assert gaps[1] <= max(gaps[0], 1e-13)


def test_nk_row_sum_identity(asm128):
    bdy = asm128.bdy
    K = np.asarray(asm128.nk_adjoint())
    rng = np.random.default_rng(0)
    for _ in range(3):
        psi = rng.standard_normal(bdy.size)
        assert abs(bdy.integrate((K - 0.5 * np.eye(bdy.size)) @ psi)) < 1e-8 * np.abs(psi).max()


def test_free_space_disk_np_spectrum():
    # Laplace double layer on a disk: eigenvalue 1/2 once, 0 otherwise; checks
    # the curvature diagonal used by the assembler
    bdy = discretize(BubbleGeometry(radius=0.8, standoff=2.0), 64)
    x, nu, w = bdy.nodes, bdy.normals, bdy.weights
    d = x[:, None, :] - x[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    np.fill_diagonal(r2, 1.0)
    K = np.einsum("ik,ijk->ij", nu, d) / (2 * np.pi * r2) * w[None, :]
    np.fill_diagonal(K, bdy.curvature / (4 * np.pi) * w)
    ev = np.sort(np.linalg.eigvals(K).real)
    assert ev[-1] == pytest.approx(0.5, abs=1e-12)
    assert np.abs(ev[:-1]).max() < 1e-12


def test_ewald_truncation_notch(asm128):
    bdy = asm128.bdy
    fine = LayerPotentialAssembler(bdy, LAT, EwaldParams().refined())
    for k, kbar in [(0.0, 0.0), (0.05, 0.02)]:
        S0, K0 = asm128.operators(k, kbar)
        S1, K1 = fine.operators(k, kbar)
        assert np.abs(S0 - S1).max() < 1e-9
        assert np.abs(K0 - K1).max() < 1e-9


def test_operator_cache_returns_same_object(asm128):
    a = asm128.operators(0.03, 0.0)
    assert asm128.operators(0.03, 0.0) is a


def test_wrappers_match_assembler(asm128):
    wn = Wavenumbers(0.04)
    bdy = asm128.bdy
    S = assemble_single_layer(bdy, LAT, wn, assembler=asm128)
    K = assemble_nk_adjoint(bdy, LAT, wn, assembler=asm128)
    assert S.kind == "single_layer" and K.kind == "nk_adjoint"
    assert np.array_equal(np.asarray(S), asm128.operators(0.04)[0])
    psi = np.ones(bdy.size)
    assert np.allclose(S @ psi, asm128.operators(0.04)[0] @ psi)


def _smooth_density(bdy, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    return sum(c[m] * np.exp(1j * m * bdy.t) for m in range(5))


@pytest.mark.parametrize("seed", [1, 2, 3])
@pytest.mark.parametrize("k", [0.0, 0.3])
def test_jump_relations_first_order(asm256, seed, k):
    bdy = asm256.bdy
    wn = Wavenumbers(k)
    psi = _smooth_density(bdy, seed)
    S, K = asm256.operators(k)
    idx = [0, 37, 101, 190]
    x, nu = bdy.nodes[idx], bdy.normals[idx]
    target_out = ((0.5 * np.eye(bdy.size) + K) @ psi)[idx]
    target_in = ((-0.5 * np.eye(bdy.size) + K) @ psi)[idx]
    errs = []
    for h in (0.2, 0.1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            f = {s: eval_field(bdy, psi, LAT, wn, x + s * h * nu) for s in (-2, -1, 1, 2)}
        d_out = (f[2] - f[1]) / h
        d_in = (f[-1] - f[-2]) / h
        errs.append(max(np.abs(d_out - target_out).max(), np.abs(d_in - target_in).max()))
        jump = d_out - d_in
        assert np.abs(jump - psi[idx]).max() < 3 * h * np.abs(psi).max()
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.35)


def test_trace_continuity(asm256):
    bdy = asm256.bdy
    psi = _smooth_density(bdy, 5)
    S, _ = asm256.operators(0.0)
    idx = [3, 77]
    x, nu = bdy.nodes[idx], bdy.normals[idx]
    on = (S @ psi)[idx]
    h = 0.1
    out = eval_field(bdy, psi, LAT, None, x + h * nu)
    inn = eval_field(bdy, psi, LAT, None, x - h * nu)
    # both one-sided limits approach the trace; their mean cancels the kink
    assert np.abs(0.5 * (out + inn) - on).max() < 2e-2 * np.abs(psi).max()
    assert np.abs(out - on).max() < 0.5 * np.abs(psi).max()


def test_field_vanishes_on_plane(asm128):
    bdy = asm128.bdy
    psi = _smooth_density(bdy, 9)
    vals = eval_field(bdy, psi, LAT, Wavenumbers(0.05), np.array([[0.0, 0.0], [3.3, 0.0]]))
    assert np.abs(vals).max() < 1e-13


def test_field_near_boundary_warns(asm128):
    bdy = asm128.bdy
    with pytest.warns(UserWarning):
        eval_field(bdy, np.ones(bdy.size), LAT, None, bdy.nodes[0] + 1e-3 * bdy.normals[0])


def test_a0_has_kernel(asm128):
    bdy = asm128.bdy
    media = MediaConfig.from_contrast(1e-3)
    A = assemble_block(bdy, LAT, media, 0.05, epsilon=0.0, assembler=asm128)
    assert np.abs(A.blocks[1][1]).max() == 0
    sv = A.singular_values()
    assert sv[-1] < 1e-4 * sv[0]


def test_physical_block_dips_at_minnaert(asm128):
    bdy = asm128.bdy
    media = MediaConfig.from_contrast(1e-3)
    omega_M = 0.036561545
    vals = [assemble_block(bdy, LAT, media, f * omega_M, assembler=asm128).smallest_singular_value()
            for f in (0.8, 1.0, 1.2)]
    assert vals[1] < 0.2 * min(vals[0], vals[2])


def test_scaled_block_eps_one_equals_physical(asm128):
    bdy = asm128.bdy
    media = MediaConfig.from_contrast(1e-3)
    A = assemble_block(bdy, LAT, media, 0.04, assembler=asm128).matrix()
    B = assemble_block(bdy, LAT, media, 0.04, epsilon=1.0, assembler=asm128).matrix()
    assert np.array_equal(A, B)


def test_block_rhs_shape_and_scaling(asm128):
    bdy = asm128.bdy
    wn = Wavenumbers(0.04)
    F = block_rhs(bdy, wn, 1.0, 1e-3)
    assert F.shape == (2 * bdy.size,)
    assert np.allclose(block_rhs(bdy, wn, 1.0, 1e-3, u0=2.0), 2 * F)
    assert np.allclose(block_rhs(bdy, wn, 1.0, 1e-3, u0=0.0), 0)


def test_block_solve_residual(asm128):
    bdy = asm128.bdy
    media = MediaConfig.from_contrast(1e-3)
    A = assemble_block(bdy, LAT, media, 0.03, assembler=asm128)
    F = block_rhs(bdy, Wavenumbers(0.03, k_b=0.03), 1.0, 1e-3)
    X = A.solve(F)
    assert np.abs(A.matrix() @ X - F).max() < 1e-10 * np.abs(F).max()
