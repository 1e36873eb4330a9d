import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubblescreen.boundary import BubbleGeometry, discretize
from bubblescreen.errors import ConfigurationError, ConvergenceError, DomainError, PoleError
from bubblescreen.lattice_green import LatticeConfig, Wavenumbers
from bubblescreen.layer_ops import LayerPotentialAssembler, eval_field
from bubblescreen.resonance import (
    DampingModel,
    MediaConfig,
    alpha_infinity,
    calibrate_standoff_ratio,
    capacity_from_psi0,
    compute_capacity,
    compute_m1_psi1,
    compute_psi0,
    compute_report,
    eta_rad,
    find_characteristic_value,
    minnaert_frequency,
    reflection,
    reflection_epsilon,
    scattered_field,
    scattering_gs,
    solve_reflection,
)

LAT = LatticeConfig(10.0)
MEDIA = MediaConfig.from_contrast(1e-3)
GEOM = BubbleGeometry(radius=1.0, standoff=2.0)


@pytest.fixture(scope="module")
def asm():
    return LayerPotentialAssembler(discretize(GEOM, 128), LAT)


@pytest.fixture(scope="module")
def report(asm):
    return compute_report(GEOM, LAT, MEDIA, 128, assembler=asm)


# --- media and damping -------------------------------------------------------


def test_media_derived_quantities():
    m = MediaConfig(rho=1000.0, rho_b=1.0, kappa=4000.0, kappa_b=9.0)
    assert m.delta == pytest.approx(1e-3)
    assert m.v == pytest.approx(2.0)
    assert m.v_b == pytest.approx(3.0)
    assert m.contrast_scale == m.delta
    assert not m.weak_contrast
    assert MediaConfig(rho=1.0, rho_b=0.5, kappa=1.0, kappa_b=1.0).weak_contrast


def test_media_from_contrast_roundtrip():
    m = MediaConfig.from_contrast(2e-3, v=1.5, v_b=0.7, mu=0.2)
    assert (m.delta, m.v, m.v_b, m.contrast_scale) == pytest.approx((2e-3, 1.5, 0.7, 0.2))


@pytest.mark.parametrize("kw", [{"rho": 0.0}, {"kappa_b": -1.0}, {"mu": 0.0}])
def test_media_validation(kw):
    with pytest.raises(ConfigurationError):
        MediaConfig(**kw)


def test_damping_validation():
    with pytest.raises(ConfigurationError):
        DampingModel(-0.1)


# --- psi0, capacity, M1, psi1 --------------------------------------------------


def test_psi0_normalized_and_S_constant(asm, report):
    bdy = asm.bdy
    S0, _ = asm.operators(0.0)
    assert bdy.integrate(report.psi0) == pytest.approx(1.0, abs=1e-14)
    s = S0 @ report.psi0
    assert np.abs(s - s.mean()).max() < 1e-6 * abs(s.mean())
    assert s.mean().real == pytest.approx(-1 / report.C_cap, rel=1e-10)


def test_psi0_eigen_residual_fine_grid():
    bdy = discretize(GEOM, 256)
    _, K = LayerPotentialAssembler(bdy, LAT).operators(0.0)
    psi0 = compute_psi0(K, bdy)
    assert np.abs(K @ psi0 - 0.5 * psi0).max() < 1e-6


def test_psi0_errors(asm):
    bdy = asm.bdy
    _, K = asm.operators(0.0)
    with pytest.raises(ConvergenceError):
        compute_psi0(K - 0.2 * np.eye(bdy.size), bdy)
    with pytest.raises(ConvergenceError):
        compute_psi0(0.5 * np.eye(bdy.size), bdy)


def test_capacity_routes_agree(asm, report):
    S0, _ = asm.operators(0.0)
    assert report.C_cap > 0
    assert capacity_from_psi0(S0, report.psi0) == pytest.approx(report.C_cap, rel=1e-6)
    assert compute_capacity(asm.bdy, S0) == report.C_cap


def test_capacity_non_positive_signals_assembly_error(asm):
    S0, _ = asm.operators(0.0)
    with pytest.raises(ConvergenceError):
        compute_capacity(asm.bdy, -S0)


def _capacity(r, beta, a=10.0, N=96):
    bdy = discretize(BubbleGeometry(radius=r, standoff=beta), N)
    return compute_capacity(bdy, LayerPotentialAssembler(bdy, LatticeConfig(a)).operators(0.0)[0])


def test_capacity_grows_with_radius():
    assert _capacity(0.5, 2.0) > _capacity(0.1, 2.0)


@pytest.mark.parametrize("s", [0.5, 3.0])
def test_capacity_scale_invariant(s):
    assert _capacity(0.6 * s, 1.5 * s, 10.0 * s) == pytest.approx(_capacity(0.6, 1.5), rel=1e-6)


def test_psi1_properties(asm, report):
    bdy = asm.bdy
    S0, _ = asm.operators(0.0)
    assert abs(bdy.integrate(report.psi1)) < 1e-10
    err = S0 @ report.psi1 - (bdy.nodes[:, 1] - report.M1)
    assert np.abs(err).max() < 1e-5


def test_m1_far_from_plane():
    beta, r = 2.0, 0.1
    bdy = discretize(BubbleGeometry(radius=r, standoff=beta), 64)
    S0, K0 = LayerPotentialAssembler(bdy, LAT).operators(0.0)
    M1, _ = compute_m1_psi1(bdy, S0, K0)
    assert M1 == pytest.approx(beta, rel=0.02)


def test_psi1_ill_conditioned(asm, report):
    bdy = asm.bdy
    with pytest.raises(ConvergenceError):
        compute_m1_psi1(bdy, None, 0.5 * np.eye(bdy.size) - np.outer(report.psi0, bdy.weights),
                        report.psi0)


# --- Minnaert frequency ------------------------------------------------------


def test_minnaert_scalings():
    base = minnaert_frequency(4.0, np.pi, MEDIA)
    assert minnaert_frequency(4.0, np.pi, MediaConfig.from_contrast(4e-3)) == pytest.approx(2 * base)
    assert minnaert_frequency(4.0, np.pi, MediaConfig.from_contrast(1e-3, v_b=2.0)) == pytest.approx(2 * base)
    assert base == pytest.approx(np.sqrt(1e-3 * 4.0 / np.pi))
    with pytest.raises(DomainError):
        minnaert_frequency(-1.0, np.pi, MEDIA)


def test_report_consistency(report):
    assert report.omega_M > 0
    assert report.mu_M == pytest.approx(MEDIA.delta, rel=1e-12)
    assert report.alpha0_inf == pytest.approx(report.M1 * report.C_cap / 10.0, rel=1e-14)
    assert alpha_infinity(report) == (report.alpha0_inf, report.alpha1_inf)
    d = report.as_dict()
    assert d["C_cap"] == report.capacity and d["omega_c"] is None


# --- characteristic value ----------------------------------------------------


def test_char_value_near_minnaert_and_sample_stable():
    rep = compute_report(GEOM, LAT, MEDIA, 64)
    bdy = rep.boundary
    asm = LayerPotentialAssembler(bdy, LAT)
    rng = (0.7 * rep.omega_M, 1.3 * rep.omega_M)
    w20, curve = find_characteristic_value(bdy, LAT, MEDIA, rng, 20, assembler=asm)
    w40, _ = find_characteristic_value(bdy, LAT, MEDIA, rng, 40, assembler=asm)
    assert len(curve) == 20
    assert abs(w20 / rep.omega_M - 1) < 0.02
    assert abs(w40 - w20) < 1e-3 * w40
    we, _, sv = find_characteristic_value(bdy, LAT, MEDIA, rng, 20, assembler=asm,
                                          detector="eig", return_eig=True)
    assert abs(we / w20 - 1) < 0.01
    assert [w for w, _ in sv] == [w for w, _ in curve]


def test_char_value_errors(asm, report):
    bdy = asm.bdy
    with pytest.raises(DomainError):
        find_characteristic_value(bdy, LAT, MEDIA, (0.01, 0.02), 1, assembler=asm)
    with pytest.raises(ConvergenceError) as info:
        find_characteristic_value(bdy, LAT, MEDIA, (1.1 * report.omega_M, 1.4 * report.omega_M),
                                  5, assembler=asm)
    assert len(info.value.payload["curve"]) == 5


def test_singular_value_and_phase_transition_align(asm, report):
    w = np.linspace(0.8, 1.2, 4001) * report.omega_M
    R = reflection(w, report, MEDIA)
    w_phase = w[np.argmax(np.abs(np.gradient(R, w)))]
    omega_c, _ = find_characteristic_value(asm.bdy, LAT, MEDIA,
                                           (0.8 * report.omega_M, 1.2 * report.omega_M), 21,
                                           assembler=asm)
    assert abs(w_phase - omega_c) / omega_c < 0.03


# --- scattering function and reflection ---------------------------------------


def _consts(report, kd=0.03):
    return report.constants(kd)


def test_gs_special_values(report):
    c = _consts(report)
    assert scattering_gs(report.mu_M, 0.0, c) == 0
    at_pole = scattering_gs(report.mu_M, 0.3, c)
    expected = 1j * 10.0 / (report.M1 * c["k_d"] * report.C_cap)
    assert at_pole == pytest.approx(expected, rel=1e-12)
    assert scattering_gs(report.mu_M, 0.01, c) == pytest.approx(expected, rel=1e-12)
    far = scattering_gs(1e6 * report.mu_M, 1e-4, c)
    assert far == pytest.approx(1e-4 * report.M1, rel=1e-5)


def test_gs_pole_and_domain(report):
    c = dict(_consts(report), k_d=0.0)
    with pytest.raises(PoleError):
        scattering_gs(c["mu_M"], 0.5, c)
    with pytest.raises(DomainError):
        scattering_gs(-1.0, 0.5, c)
    with pytest.raises(DomainError):
        scattering_gs(1.0, -0.5, c)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.5))
def test_gs_peaks_at_mu_M(eps):
    c = {"mu_M": 1e-3, "M1": 1.6, "C": 4.2, "k_d": 0.03, "cell": 10.0}
    mus = np.geomspace(1e-4, 1e-2, 401)
    g = [abs(scattering_gs(m, eps, c)) for m in mus]
    assert abs(np.log(mus[int(np.argmax(g))] / 1e-3)) < 0.05


def test_reflection_unimodular(report):
    w = np.linspace(0.01, 5.0, 1000) * report.omega_M
    R = reflection(w, report, MEDIA)
    assert R.shape == (1000,)
    assert np.abs(np.abs(R) - 1).max() < 1e-12


def test_reflection_at_resonance(report):
    assert reflection(report.omega_M, report, MEDIA) == 1
    eta = eta_rad(report.omega_M, report, MEDIA)
    R = reflection(report.omega_M, report, MEDIA, DampingModel(float(eta)))
    assert abs(R) < 1e-12


def test_reflection_limits(report):
    assert reflection(1e-6 * report.omega_M, report, MEDIA) == pytest.approx(-1, abs=1e-6)
    assert reflection(1e4 * report.omega_M, report, MEDIA) == pytest.approx(-1, abs=1e-3)
    with pytest.raises(DomainError):
        reflection(0.0, report, MEDIA)


def test_direct_solve_conserves_energy_and_resonates(asm, report):
    w = np.linspace(0.98, 1.02, 9) * report.omega_M
    R = np.array([solve_reflection(asm.bdy, LAT, MEDIA, x, assembler=asm) for x in w])
    assert np.abs(np.abs(R) - 1).max() < 1e-10
    assert R.real.max() > 0.99
    far = solve_reflection(asm.bdy, LAT, MEDIA, 0.3 * report.omega_M, assembler=asm)
    assert far.real < -0.99


def test_reflection_epsilon_dipole_correction(report):
    wn = Wavenumbers(0.03, k_b=0.03)
    R0 = reflection_epsilon(report, wn, 0.0, 1e-3)
    assert R0 == -1
    # mu_M is taken at the macroscopic k_b carried by wn
    mu_M = 0.03**2 * report.area / report.C_cap
    R = reflection_epsilon(report, wn, 1.0, mu_M)
    g = 1j * 10.0 / (report.M1 * 0.03 * report.C_cap)
    assert R == pytest.approx(-1 + 2j * 0.03 * (report.alpha1_inf - g * report.alpha0_inf))


# --- far field and boundary layer ---------------------------------------------


def test_alpha0_plateau(report):
    bdy = report.boundary
    ybar = bdy.pair(bdy.nodes[:, 1], report.psi0) / 10.0
    for h in (30.0, 45.0):
        s = eval_field(bdy, report.psi0, LAT, None, (0.0, h))
        assert abs(-report.C_cap * (s + ybar)) < 1e-6


def test_alpha1_boundary_values(asm, report):
    S0, _ = asm.operators(0.0)
    a1 = S0 @ (report.psi1 - report.M1 * report.C_cap * report.psi0)
    assert np.abs(a1 - asm.bdy.nodes[:, 1]).max() < 1e-5


def test_scattered_field(report):
    wn = Wavenumbers(0.03, k_b=0.03)
    eps, mu = 0.5, 4e-3
    u1, ubl = scattered_field(report, LAT, wn, eps, (1.0, 50.0), mu=mu, parts=True)
    assert abs(ubl) / abs(u1) < 1e-6
    X_d = eps * 50.0
    coeff = -1 + (u1 + ubl) / np.exp(1j * wn.kd * X_d)
    assert coeff == pytest.approx(reflection_epsilon(report, wn, eps, mu), abs=1e-6)
    assert scattered_field(report, LAT, wn, eps, (0.0, 40.0), mu=mu, u0=0.0) == 0
    near_u1, near_bl = scattered_field(report, LAT, wn, eps, (0.0, 3.5), mu=mu, parts=True)
    assert abs(near_bl) > 1e-6 * abs(near_u1)
    with pytest.raises(DomainError):
        scattered_field(report, LAT, wn, eps, (0.0, 1.0), mu=mu)


def test_calibration_recovers_standoff():
    target = compute_report(BubbleGeometry(radius=0.3, standoff=0.75), LAT, MEDIA, 64).omega_M
    c = calibrate_standoff_ratio(target, 0.3, LAT, MEDIA, N=64)
    assert c == pytest.approx(2.5, rel=1e-6)
    with pytest.raises(ConvergenceError):
        calibrate_standoff_ratio(10.0, 0.3, LAT, MEDIA, N=64)
