import math

import numpy as np
import pytest

from antires.network import Mode, ModeNetwork, ProbeGrid, steady_state_batch
from antires.presets import emitter_resonator, five_node_demo
from antires.spectra import (
    AmbiguityError,
    MotionEnsemble,
    antiresonances,
    cancel_pole_zero_pairs,
    detect_antiresonances_numeric,
    ensemble_mean_amplitudes,
    lossy_component_identify,
    motion_average,
    poles_zeros_report,
    read_spectrum_csv,
    resonances,
    sweep,
    write_spectrum_csv,
)

from helpers import dense_mode_matrix, quadratic_eigs, random_network, two_mode_network

GRID = ProbeGrid(-25.0, 25.0, 1001)


# ------------------------------------------------------------------- poles


def test_degenerate_pair_pole_positions():
    # delta_er = 0, g = 16, gamma = 3, kappa = 1.5:
    # eigenvalues -(gamma+kappa)/2 i +/- sqrt(g^2 - (gamma-kappa)^2/4)
    net = emitter_resonator(delta_er=0.0)
    poles = sorted(resonances(net), key=lambda p: p.center)
    split = math.sqrt(16.0**2 - ((3.0 - 1.5) / 2.0) ** 2)
    assert len(poles) == 2
    assert poles[0].center == pytest.approx(-split, abs=1e-9)
    assert poles[1].center == pytest.approx(+split, abs=1e-9)
    for p in poles:
        assert p.half_width == pytest.approx((3.0 + 1.5) / 2.0, abs=1e-9)


def test_detuned_pole_positions_match_quadratic_formula():
    net = emitter_resonator(delta_er=-3.0)
    lo, hi = quadratic_eigs(0.0, 1.5, -3.0, 3.0, 16.0)
    want = sorted([lo, hi], key=lambda z: z.real)
    got = sorted(resonances(net), key=lambda p: p.center)
    for p, z in zip(got, want):
        assert p.center == pytest.approx(z.real, abs=1e-10)
        assert p.half_width == pytest.approx(-z.imag, abs=1e-10)


def test_uncoupled_poles_are_the_bare_modes():
    net = emitter_resonator(coupling=0.0)
    got = sorted(resonances(net), key=lambda p: p.center)
    assert got[0].center == pytest.approx(-3.0) and got[0].half_width == pytest.approx(3.0)
    assert got[1].center == pytest.approx(0.0) and got[1].half_width == pytest.approx(1.5)


def test_poles_do_not_depend_on_drive_port():
    net = five_node_demo()
    tables = []
    for label in net.labels:
        ps = resonances(net.with_drive_on(label))
        tables.append([(p.center, p.half_width, p.multiplicity) for p in ps])
    for other in tables[1:]:
        assert other == tables[0]


def test_degenerate_eigenvalues_are_merged():
    # two identical uncoupled modes -> one pole with multiplicity 2
    modes = (
        Mode("r1", "resonator", 5.0, 1.0),
        Mode("r2", "resonator", 5.0, 1.0),
    )
    net = ModeNetwork(modes, np.zeros((2, 2)), np.array([1.0 + 0j, 0j]))
    poles = resonances(net)
    assert len(poles) == 1
    assert poles[0].multiplicity == 2
    assert poles[0].center == pytest.approx(5.0)


def test_random_network_poles_match_raw_eigvals():
    rng = np.random.default_rng(3)
    for _ in range(10):
        net = random_network(rng)
        vals = np.linalg.eigvals(dense_mode_matrix(net))
        got = resonances(net)
        assert sum(p.multiplicity for p in got) == len(net.modes)
        centers = sorted(v.real for v in vals)
        assert centers == pytest.approx(
            sorted(c for p in got for c in [p.center] * p.multiplicity), abs=1e-8
        )


# ------------------------------------------------------------------- zeros


def test_resonator_driven_zero_sits_on_the_emitter():
    for g in (1.5, 5.0, 16.0, 30.0, 49.5):
        net = emitter_resonator(delta_er=-3.0, coupling=g)
        zeros = antiresonances(net, "cavity")
        assert len(zeros) == 1
        assert zeros[0].center == pytest.approx(-3.0, abs=1e-12)
        assert zeros[0].half_width == pytest.approx(3.0, abs=1e-12)


def test_emitter_driven_zero_sits_on_the_resonator():
    net = emitter_resonator(delta_er=-3.0, drive="atom")
    zeros = antiresonances(net, "atom")
    assert len(zeros) == 1
    assert zeros[0].center == pytest.approx(0.0, abs=1e-12)
    assert zeros[0].half_width == pytest.approx(1.5, abs=1e-12)


def test_single_mode_has_no_zeros():
    net = ModeNetwork(
        (Mode("c", "resonator", 0.0, 1.5),), np.zeros((1, 1)), np.array([1.0 + 0j])
    )
    assert antiresonances(net, "c") == []


def test_three_mode_zeros_match_quadratic_formula():
    # chain m0 - m1 - m2 driven on m0: zeros are the eigenvalues of the
    # (m1, m2) submatrix, which is 2x2 and solvable by hand.
    modes = (
        Mode("m0", "resonator", 0.0, 1.0),
        Mode("m1", "emitter", -7.0, 2.0),
        Mode("m2", "emitter", 9.0, 0.5),
    )
    c = np.zeros((3, 3))
    c[0, 1] = c[1, 0] = 4.0
    c[1, 2] = c[2, 1] = 6.0
    net = ModeNetwork(modes, c, np.array([1.0 + 0j, 0j, 0j]))
    lo, hi = quadratic_eigs(-7.0, 2.0, 9.0, 0.5, 6.0)
    want = sorted([lo, hi], key=lambda z: z.real)
    got = sorted(antiresonances(net, "m0"), key=lambda z: z.center)
    for z, w in zip(got, want):
        assert z.center == pytest.approx(w.real, abs=1e-10)
        assert z.half_width == pytest.approx(-w.imag, abs=1e-10)


def test_zero_count_is_modes_minus_one():
    rng = np.random.default_rng(17)
    for _ in range(6):
        net = random_network(rng)
        zs = antiresonances(net, net.driven_label())
        assert len(zs) == len(net.modes) - 1


def test_pole_zero_cancellation_for_decoupled_emitter():
    net = emitter_resonator(coupling=0.0)
    poles = resonances(net)
    zeros = antiresonances(net, "cavity")
    kept_p, kept_z = cancel_pole_zero_pairs(poles, zeros)
    assert kept_z == []
    assert len(kept_p) == 1
    assert kept_p[0].center == pytest.approx(0.0)
    assert kept_p[0].half_width == pytest.approx(1.5)


def test_no_cancellation_when_coupled():
    net = emitter_resonator()
    poles = resonances(net)
    zeros = antiresonances(net, "cavity")
    kept_p, kept_z = cancel_pole_zero_pairs(poles, zeros)
    assert len(kept_p) == 2 and len(kept_z) == 1


# --------------------------------------------------------------- sweeps


def test_sweep_columns_and_excitation():
    spec = sweep(emitter_resonator(), GRID)
    col = spec.column("cavity")
    assert col.shape == (1001,)
    np.testing.assert_allclose(spec.magnitude("cavity"), np.abs(col), rtol=0, atol=0)
    np.testing.assert_allclose(spec.excitation("cavity"), np.abs(col) ** 2, rtol=1e-15)


def test_unwrapped_phase_differs_from_wrapped_by_full_turns():
    spec = sweep(emitter_resonator(), GRID)
    wrapped = np.angle(spec.column("cavity"))
    unwrapped = spec.phase_unwrapped("cavity")
    turns = (unwrapped - wrapped) / (2.0 * np.pi)
    np.testing.assert_allclose(turns, np.round(turns), atol=1e-9)


def test_empty_resonator_phase_rises_by_pi():
    spec = sweep(emitter_resonator(coupling=0.0), ProbeGrid(-60.0, 60.0, 2001))
    phase = spec.phase_unwrapped("cavity")
    assert phase[-1] - phase[0] == pytest.approx(np.pi, abs=0.06)
    assert np.all(np.diff(phase) > 0)  # monotone rise through resonance


def test_phase_swing_quantized_in_units_of_pi():
    """Isolated features move the phase by an integer multiple of pi.

    Narrow decays keep the two poles and the zero mutually separated by
    >= 15 half-widths, so each window sees one feature plus small tails.
    """
    net = emitter_resonator(delta_er=0.0, coupling=16.0, gamma=0.3, kappa=0.15)
    grid = ProbeGrid(-40.0, 40.0, 8001)
    spec = sweep(net, grid)
    phase = spec.phase_unwrapped("cavity")
    probes = spec.probes
    split = math.sqrt(16.0**2 - ((0.3 - 0.15) / 2.0) ** 2)

    def swing(lo, hi):
        sel = (probes >= lo) & (probes <= hi)
        seg = phase[sel]
        return seg[-1] - seg[0]

    for window, expected in [
        ((-4.5, 4.5), -1),           # the antiresonance
        ((-split - 4.5, -split + 4.5), +1),  # lower pole
        ((split - 4.5, split + 4.5), +1),    # upper pole
    ]:
        s = swing(*window) / np.pi
        assert round(s) == expected
        assert abs(s - expected) < 0.1
    # whole-grid excursion: two poles up, one zero down -> net +pi
    assert (phase[-1] - phase[0]) == pytest.approx(np.pi, abs=0.1)


def test_zero_centers_are_magnitude_minima_for_random_networks():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(50):
        net = random_network(rng)
        label = net.driven_label()
        col = net.index(label)
        zs = antiresonances(net, label)
        ps = resonances(net)
        for z in zs:
            w = max(z.half_width, 1e-3)
            # a zero nearly on top of a pole is cancelled to an invisible
            # wiggle and need not show its own minimum
            clear_of_poles = all(
                abs(z.center - p.center) >= 0.5 * (w + p.half_width) for p in ps
            )
            clear_of_zeros = all(
                z is other or abs(z.center - other.center) >= 2.0 * (w + other.half_width)
                for other in zs
            )
            if not (clear_of_poles and clear_of_zeros):
                continue
            local = np.linspace(z.center - 3 * w, z.center + 3 * w, 121)
            mags = np.abs(steady_state_batch(net, local)[:, col])
            k = int(np.argmin(mags))
            assert 0 < k < len(local) - 1, "dip must be interior"
            assert abs(local[k] - z.center) <= w
            checked += 1
    assert checked >= 40


# ------------------------------------------------------------ dip detection


def test_detect_recovers_the_algebraic_zero():
    spec = sweep(emitter_resonator(), GRID)
    found = detect_antiresonances_numeric(spec, "cavity")
    assert len(found) == 1
    z = found[0]
    assert not z.at_boundary
    assert z.center == pytest.approx(-3.0, abs=1e-6)
    assert z.half_width == pytest.approx(3.0, rel=1e-4)


def test_detect_follows_the_emitter_frequency():
    for f in (-12.0, 5.0, 14.0):
        spec = sweep(emitter_resonator(delta_er=f), GRID)
        found = detect_antiresonances_numeric(spec, "cavity")
        assert len(found) == 1
        assert found[0].center == pytest.approx(f, abs=GRID.step)


def test_detect_on_empty_resonator_finds_nothing():
    spec = sweep(emitter_resonator(coupling=0.0), GRID)
    assert detect_antiresonances_numeric(spec, "cavity") == []


def test_detect_flags_truncated_dip_at_grid_edge():
    # the dip at -3 MHz lies just beyond the right edge of this grid
    spec = sweep(emitter_resonator(), ProbeGrid(-25.0, -3.4, 500))
    found = detect_antiresonances_numeric(spec, "cavity")
    assert len(found) == 1
    assert found[0].at_boundary
    assert math.isnan(found[0].half_width)


def test_detect_does_not_flag_plain_rolloff():
    # an empty resonator line also decays towards the grid edges, but the
    # edge is not a zero: no boundary flag may appear
    spec = sweep(emitter_resonator(coupling=0.0), ProbeGrid(2.0, 30.0, 400))
    assert detect_antiresonances_numeric(spec, "cavity") == []


def _random_star(rng):
    """Hub-driven star: zeros are exactly the bare outer modes, poles are
    strongly repelled, so every dip is deep and resolvable."""
    n_outer = int(rng.integers(2, 4))
    freqs = np.cumsum(rng.uniform(9.0, 16.0, size=n_outer + 1))
    freqs -= freqs.mean()
    order = rng.permutation(n_outer + 1)
    modes = tuple(
        Mode(f"s{i}", "resonator", float(freqs[order[i]]), float(rng.uniform(0.4, 2.0)))
        for i in range(n_outer + 1)
    )
    c = np.zeros((n_outer + 1, n_outer + 1))
    for j in range(1, n_outer + 1):
        g = float(rng.uniform(8.0, 14.0))
        c[0, j] = c[j, 0] = g
    drive = np.zeros(n_outer + 1, dtype=complex)
    drive[0] = 1.0
    return ModeNetwork(modes, c, drive)


def test_detected_centers_within_one_grid_step_of_algebra():
    rng = np.random.default_rng(99)
    matched = 0
    for _ in range(10):
        net = _random_star(rng)
        label = net.driven_label()
        zs = antiresonances(net, label)
        lo = min(m.frequency for m in net.modes) - 10.0
        hi = max(m.frequency for m in net.modes) + 10.0
        step = min(z.half_width for z in zs) / 20.0
        step = max(step, 1e-3)
        grid = ProbeGrid(lo, hi, int((hi - lo) / step) + 1)
        found = detect_antiresonances_numeric(sweep(net, grid), label)
        assert len(found) == len(zs), "every bare-mode dip should be detected"
        for z in found:
            assert not z.at_boundary
            nearest = min(zs, key=lambda t: abs(t.center - z.center))
            assert abs(z.center - nearest.center) <= grid.step
            assert z.half_width == pytest.approx(nearest.half_width, rel=0.05)
            matched += 1
    assert matched >= 20


def test_emitter_column_shows_no_dip_at_its_own_frequency():
    spec = sweep(emitter_resonator(), GRID)
    mag = spec.magnitude("atom")
    probes = spec.probes
    sel = np.abs(probes + 3.0) < 1.0
    inner = mag[sel]
    # the undriven-mode response peaks between the normal modes instead of
    # dipping: no interior local minimum near the emitter frequency
    assert inner.min() > 0.5 * inner.max()


# ------------------------------------------------------------------ motion


def test_ensemble_draw_is_deterministic():
    ens = MotionEnsemble(samples=8, seed=5)
    net = emitter_resonator()
    a = ensemble_mean_amplitudes(net, GRID.frequencies(), ens)
    b = ensemble_mean_amplitudes(net, GRID.frequencies(), ens)
    np.testing.assert_array_equal(a, b)
    other = MotionEnsemble(samples=8, seed=6)
    c = ensemble_mean_amplitudes(net, GRID.frequencies(), other)
    assert not np.array_equal(a, c)


def test_zero_variance_ensemble_equals_plain_sweep():
    ens = MotionEnsemble(
        scale_mean=1.0, scale_sigma=0.0, frequency_jitter=0.0, samples=4, seed=1
    )
    net = emitter_resonator()
    averaged = motion_average(net, GRID, ens)
    plain = sweep(net, GRID)
    np.testing.assert_array_equal(averaged.amplitudes, plain.amplitudes)


def test_ensemble_scale_only_touches_emitter_couplings():
    ens = MotionEnsemble(scale_mean=0.5, scale_sigma=0.0, frequency_jitter=0.0, samples=1)
    net = five_node_demo()
    drawn = ens.draw(net, 0)
    kinds = [m.kind for m in net.modes]
    for i in range(len(net.modes)):
        for j in range(len(net.modes)):
            factor = 0.5 if "emitter" in (kinds[i], kinds[j]) else 1.0
            assert drawn.couplings[i, j] == pytest.approx(net.couplings[i, j] * factor)
    # resonator frequencies untouched
    for m0, m1 in zip(net.modes, drawn.modes):
        if m0.kind == "resonator":
            assert m0.frequency == m1.frequency


def test_scale_bounds_validation():
    with pytest.raises(ValueError):
        MotionEnsemble(scale_bounds=(0.0, 1.0))
    with pytest.raises(ValueError):
        MotionEnsemble(scale_bounds=(0.8, 0.6))
    with pytest.raises(ValueError):
        MotionEnsemble(scale_bounds=(0.7, 1.2))
    with pytest.raises(ValueError):
        MotionEnsemble(scale_sigma=-0.1)
    with pytest.raises(ValueError):
        MotionEnsemble(samples=0)


def test_thread_pool_reproduces_serial_result(monkeypatch):
    net = emitter_resonator()
    ens = MotionEnsemble(samples=12, seed=3)
    probes = np.linspace(-10.0, 10.0, 51)
    monkeypatch.delenv("ANTIRES_THREADS", raising=False)
    serial = ensemble_mean_amplitudes(net, probes, ens)
    monkeypatch.setenv("ANTIRES_THREADS", "3")
    threaded = ensemble_mean_amplitudes(net, probes, ens)
    np.testing.assert_array_equal(serial, threaded)


# -------------------------------------------------------- loss localisation


def _three_node(decays):
    modes = tuple(
        Mode(f"n{i+1}", "resonator", f, d)
        for i, (f, d) in enumerate(zip((-8.0, 0.0, 9.0), decays))
    )
    c = np.zeros((3, 3))
    c[0, 1] = c[1, 0] = 5.0
    c[1, 2] = c[2, 1] = 6.0
    net = ModeNetwork(modes, c, np.array([1.0 + 0j, 0j, 0j]))
    return net


def test_lossy_mode_is_found_by_width_minimum():
    net = _three_node((0.5, 5.0, 0.5))
    verdict = lossy_component_identify(net)
    assert verdict.label == "n2"
    # mean width under the lossy drive equals the mean of the *other* decays
    assert verdict.mean_widths["n2"] == pytest.approx(0.5, rel=1e-9)
    assert verdict.mean_widths["n1"] == pytest.approx((5.0 + 0.5) / 2.0, rel=1e-9)


def test_uniform_decay_is_ambiguous():
    net = _three_node((0.7, 0.7, 0.7))
    with pytest.raises(AmbiguityError) as err:
        lossy_component_identify(net)
    assert set(err.value.candidates) >= {"n1", "n2"}


def test_identification_from_measured_spectra():
    net = five_node_demo(lossy="n4")
    grid = ProbeGrid(-45.0, 45.0, 9001)
    spectra = {lab: sweep(net.with_drive_on(lab), grid) for lab in net.labels}
    verdict = lossy_component_identify(net, spectra=spectra)
    assert verdict.label == "n4"


def test_candidate_subset_restricts_the_verdict():
    net = five_node_demo(lossy="n3")
    verdict = lossy_component_identify(net, candidates=("n1", "n3"))
    assert verdict.label == "n3"
    assert set(verdict.mean_widths) == {"n1", "n3"}


# ------------------------------------------------------------------- files


def test_spectrum_csv_round_trip(tmp_path):
    spec = sweep(emitter_resonator(), ProbeGrid(-20.0, 20.0, 201))
    path = tmp_path / "spec.csv"
    write_spectrum_csv(spec, path)
    back = read_spectrum_csv(path)
    assert back.labels == spec.labels
    np.testing.assert_array_equal(back.probes, spec.probes)
    np.testing.assert_array_equal(back.amplitudes, spec.amplitudes)


def test_poles_zeros_report_shape():
    net = emitter_resonator()
    rep = poles_zeros_report(resonances(net), antiresonances(net, "cavity"))
    assert {p["center_mhz"] for p in rep["poles"]}
    assert rep["antiresonances"][0]["drive_label"] == "cavity"
    assert rep["antiresonances"][0]["at_boundary"] is False
