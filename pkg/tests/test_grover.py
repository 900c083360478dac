import json

import numpy as np
import pytest
from scipy.linalg import expm

from grover_decoherence.calibration import CnotCalibration
from grover_decoherence.grover import (apply_channel, average_purity, grover_purity_scan, input_states,
                                       monte_carlo_channel, result_json, run_noiseless, run_noisy_ensemble,
                                       run_redfield, scan_point, trace_unitaries)
from grover_decoherence.noise import generate_ensemble
from grover_decoherence.plan import (IdealGate, TwoQubitEvolution, W12, build_gate_plan, ideal_plan,
                                     ideal_unitary, noiseless_success, with_tau)
from grover_decoherence.propagation import EvolutionConfig, TraceExhaustedError, block_unitaries
from grover_decoherence.quantum import basis_ket, ket_to_dm, propagator, purity, trace_distance
from grover_decoherence.system import Z1, coupling_in_energy_basis

ALPHA = 63.66


def cfg_for(m, plan, alpha=ALPHA, kind="Z2"):
    return EvolutionConfig("exact", plan.tau, alpha, coupling_in_energy_basis(m, kind))


class TestPlan:
    def test_ideal_gates_find_target(self):
        for target in ("00", "01", "10", "11"):
            psi = ideal_unitary(target) @ ideal_plan(target).initial_state
            assert abs(psi[int(target, 2)]) ** 2 > 1 - 1e-9

    def test_initial_state(self, plans):
        np.testing.assert_allclose(plans["system-I"].initial_state, np.full(4, 0.5), atol=1e-15)
        np.testing.assert_allclose(W12 @ basis_ket("00"), np.full(4, 0.5), atol=1e-15)

    @pytest.mark.parametrize("name,segments", [("system-I", (20, 60)), ("system-II", (40, 40))])
    def test_layout(self, plans, name, segments):
        plan = plans[name]
        assert tuple(ev.n_segments for ev in plan.evolutions) == segments
        assert plan.n_segments == 80
        assert plan.total_duration == pytest.approx(24.35e-3, abs=plan.tau)
        for ev in plan.evolutions:
            assert ev.duration == ev.n_segments * ev.tau

    def test_step_order(self, plans):
        steps = plans["system-I"].steps
        kinds = [type(s).__name__ for s in steps]
        assert kinds == ["IdealGate", "TwoQubitEvolution", "IdealGate", "IdealGate", "IdealGate",
                         "TwoQubitEvolution", "IdealGate", "IdealGate", "IdealGate"]
        assert steps[-1].label == "W12"

    def test_low_fidelity_rejected(self, models):
        with pytest.raises(ValueError):
            build_gate_plan(models["system-I"], CnotCalibration(5e-3, 0.0, 0.99, "SystemI"))

    def test_bad_target(self, models, calibrations):
        with pytest.raises(ValueError):
            build_gate_plan(models["system-I"], calibrations["system-I"][0], target="2")

    def test_calibrated_timing(self, models, calibrations):
        cal = calibrations["system-I"][0]
        plan = build_gate_plan(models["system-I"], cal, timing="calibrated")
        assert plan.evolutions[0].duration == pytest.approx(cal.t_c, rel=1e-12)
        assert plan.evolutions[1].duration == pytest.approx(3 * cal.t_c, rel=1e-12)
        assert noiseless_success(plan, models["system-I"]) >= 0.999

    def test_with_tau(self, plans):
        p = with_tau(plans["system-II"], 1e-4)
        assert p.tau == 1e-4
        assert all(ev.tau == 1e-4 for ev in p.evolutions)


class TestNoiseless:
    @pytest.mark.parametrize("name", ["system-I", "system-II"])
    def test_success(self, models, plans, name):
        res = run_noiseless(plans[name], models[name])
        assert res.success_prob >= 0.999
        assert res.f_rho == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("target", ["01", "10"])
    def test_retarget(self, models, calibrations, target):
        m = models["system-II"]
        plan = build_gate_plan(m, calibrations["system-II"][-1], target=target)
        rho = run_noiseless(plan, m).rho_final
        assert rho[int(target, 2), int(target, 2)].real >= 0.99
        assert plan.target_index == int(target, 2)


@pytest.fixture(scope="module")
def traces(reservoirs):
    return generate_ensemble(reservoirs["R1"], 12, 80, 304.38e-6, 2024)


class TestMonteCarlo:
    def test_zero_alpha(self, models, plans, traces):
        m, plan = models["system-I"], plans["system-I"]
        res = run_noisy_ensemble(plan, m, traces, cfg_for(m, plan, 0.0))
        ref = run_noiseless(plan, m)
        assert res.f_rho == pytest.approx(ref.purity, abs=1e-12)
        assert trace_distance(res.rho_final, ref.rho_final) < 1e-12

    @pytest.mark.parametrize("name", ["system-I", "system-II"])
    def test_single_traces_unitary(self, models, plans, traces, name):
        m, plan = models[name], plans[name]
        res = run_noisy_ensemble(plan, m, traces, cfg_for(m, plan))
        assert np.abs(res.per_trace_purities - 1).max() < 1e-10
        assert res.success_prob == pytest.approx(res.per_trace_success.mean(), abs=1e-12)
        assert 0 <= res.success_prob <= 1
        # averaging distinct pure states strictly lowers purity
        assert res.purity < res.per_trace_purities.max() - 1e-6
        assert res.n_traces == 12

    def test_z1_noise_is_a_phase(self, models, plans, traces):
        m, plan = models["system-I"], plans["system-I"]
        cfg = cfg_for(m, plan, kind="Z1")
        vals = np.array([t.values[:20] for t in traces])
        u = block_unitaries(m, cfg, vals)
        for uk, s in zip(u, vals):
            phase = expm(-1j * np.pi * ALPHA * s.sum() * plan.tau * Z1)
            np.testing.assert_allclose(uk, propagator(m.h_s, 20 * plan.tau) @ phase, atol=1e-9)

    def test_f_rho_ordering(self, models, plans, traces):
        f = {n: run_noisy_ensemble(plans[n], models[n], traces, cfg_for(models[n], plans[n])).f_rho
             for n in models}
        assert f["system-I"] < f["system-II"] - 0.2

    def test_short_traces(self, models, plans, reservoirs):
        m, plan = models["system-I"], plans["system-I"]
        short = generate_ensemble(reservoirs["R1"], 2, 79, plan.tau, 1)
        with pytest.raises(TraceExhaustedError):
            run_noisy_ensemble(plan, m, short, cfg_for(m, plan))

    def test_tau_mismatch(self, models, plans, reservoirs):
        m, plan = models["system-I"], plans["system-I"]
        tr = generate_ensemble(reservoirs["R1"], 2, 80, 2 * plan.tau, 1)
        with pytest.raises(ValueError):
            run_noisy_ensemble(plan, m, tr, cfg_for(m, plan))
        with pytest.raises(ValueError):
            trace_unitaries(plan, m, np.zeros((1, 80)), EvolutionConfig("exact", 1e-4, 1.0, cfg_for(m, plan).coupling))

    def test_channel_matches_states(self, models, plans, traces, rng):
        m, plan = models["system-II"], plans["system-II"]
        cfg = cfg_for(m, plan)
        ch = monte_carlo_channel(plan, m, traces, cfg)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho = ket_to_dm(psi / np.linalg.norm(psi))
        direct = run_noisy_ensemble(plan, m, traces, cfg, rho_in=rho).rho_final
        np.testing.assert_allclose(apply_channel(ch, rho), direct, atol=1e-12)


class TestRedfieldRun:
    def test_zero_alpha(self, models, plans, reservoirs):
        for name, m in models.items():
            res = run_redfield(plans[name], m, "Z2", reservoirs["R1"], 0.0)
            assert trace_distance(res.rho_final, run_noiseless(plans[name], m).rho_final) < 1e-9

    def test_f_rho_ordering_over_alpha(self, models, plans, reservoirs):
        for alpha in (10.0, 30.0, 45.0, ALPHA):
            f = {n: run_redfield(plans[n], models[n], "Z2", reservoirs["R1"], alpha).f_rho for n in models}
            assert f["system-II"] >= f["system-I"]

    def test_json(self, models, plans, reservoirs):
        res = run_redfield(plans["system-I"], models["system-I"], "Z1", reservoirs["R4"], 20.0)
        doc = json.loads(result_json(res, "system-I", "R4", "Z1", 20.0, {"tool": "t"}))
        assert set(doc) == {"meta", "system", "reservoir", "coupling", "alpha_hz", "M", "success_prob", "f_rho",
                            "purity"}


class TestPurity:
    def test_inputs(self):
        states = input_states()
        assert len(states) == 36
        assert all(abs(np.linalg.norm(s) - 1) < 1e-15 for s in states)
        gram = np.abs(np.array(states).conj() @ np.array(states).T) ** 2
        assert len({round(x, 12) for x in gram.reshape(-1)}) == 4   # overlaps 0, 1/4, 1/2, 1

    def test_identity_channel(self):
        assert average_purity(np.eye(16)) == pytest.approx(1.0)

    def test_depolarising_channel(self):
        full = np.outer(np.eye(4).reshape(-1), np.eye(4).reshape(-1)) / 4
        assert average_purity(full) == pytest.approx(0.25)

    def test_scan_zero_alpha(self, models, plans, reservoirs):
        pl = {n: (models[n], plans[n]) for n in models}
        scans = grover_purity_scan(pl, reservoirs["R2"], "Z2", [0.0, 20.0])
        for s in scans.values():
            assert s.purities[0] == pytest.approx(1.0, abs=1e-9)
            assert s.purities[1] < 1.0
            assert s.reservoir == "R2" and s.coupling == "Z2"

    def test_scan_thread_independent(self, models, plans, reservoirs):
        pl = {n: (models[n], plans[n]) for n in models}
        a = grover_purity_scan(pl, reservoirs["R3"], "Z2", [10.0, 40.0], threads=1)
        b = grover_purity_scan(pl, reservoirs["R3"], "Z2", [10.0, 40.0], threads=4)
        assert a == b

    def test_unknown_engine(self, models, plans, reservoirs):
        with pytest.raises(ValueError):
            scan_point(plans["system-I"], models["system-I"], "Z2", reservoirs["R1"], 1.0, engine="lindblad")


@pytest.fixture(scope="module")
def purity_table(models, plans, reservoirs):
    """Average purity at alpha = 63.66 Hz from 200 exact Monte-Carlo traces."""
    out = {}
    for kind, r in (("Z2", "R1"), ("Z2", "R2"), ("Z2", "R3"), ("Z1", "R3"), ("Z1", "R4")):
        out[kind, r] = {n: scan_point(plans[n], models[n], kind, reservoirs[r], ALPHA, engine="montecarlo",
                                      n_traces=200, seed=7) for n in models}
    return out


class TestSelectivity:
    @pytest.mark.parametrize("kind,r,low", [("Z2", "R1", "system-I"), ("Z2", "R2", "system-II"),
                                             ("Z2", "R3", "system-I")])
    def test_orderings(self, purity_table, kind, r, low):
        p = purity_table[kind, r]
        high = "system-II" if low == "system-I" else "system-I"
        assert p[low] < p[high]

    def test_z1_r4_comparable(self, purity_table):
        p = purity_table["Z1", "R4"]
        assert abs(p["system-I"] - p["system-II"]) <= 0.05
        assert max(p.values()) < 0.9

    def test_z1_r3_near_pure(self, purity_table):
        p = purity_table["Z1", "R3"]
        assert min(p.values()) >= 0.99, p
