import math
import os

import numpy as np
import pytest

from peterlin.config import parse_config
from peterlin.diagnostics import CSV_HEADER, DiagnosticsRow
from peterlin.errors import ConfigError, StepRejectedError
from peterlin.fokker_planck import read_kinetic
from peterlin.grid import TorusGrid2D, read_fields, write_fields
from peterlin.driver import (compare_closure, gamma_field, isclose_rows, run, run_fp_given,
                             run_kp, run_mp)


def make_cfg(tmp_path, body):
    return parse_config(body + f"\noutput_dir = {tmp_path / 'out'}\n")


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    return lines[0], [DiagnosticsRow.from_csv(ln) for ln in lines[1:]]


def test_mp_equilibrium_and_files(tmp_path):
    cfg = make_cfg(tmp_path, "mode = mp\ndt = 0.01\nt_end = 0.2\nnx = 16\noutput_every = 5\n"
                             "snapshot_every = 10")
    res = run_mp(cfg)
    assert [r.step for r in res.rows] == [0, 5, 10, 15, 20]
    assert isclose_rows(res.rows, 1e-12)
    header, rows = read_csv(os.path.join(res.output_dir, "diagnostics.csv"))
    assert header == CSV_HEADER
    assert len(rows) == 5 and math.isnan(rows[0].entropy)
    snap = read_fields(os.path.join(res.output_dir, "fields_000010.pkf"))
    assert list(snap) == ["u1", "u2", "p", "C11", "C12", "C22"]
    assert os.path.exists(os.path.join(res.output_dir, "fields_000020.pkf"))


def test_kp_equilibrium(tmp_path):
    cfg = make_cfg(tmp_path, "mode = kp\ndt = 0.01\nt_end = 0.1\nnx = 8\nN_H = 4\noutput_every = 1")
    res = run_kp(cfg)
    assert isclose_rows(res.rows, 1e-12)
    coeffs, N_H, a = read_kinetic(os.path.join(res.output_dir, "kinetic_000010.pkh"))
    assert N_H == 4 and a == 1.0
    np.testing.assert_array_equal(coeffs, res.coeffs)


def test_fp_given_relaxes_to_equilibrium(tmp_path):
    cfg = make_cfg(tmp_path, "mode = fp_given\ndt = 0.1\nt_end = 20\nnx = 8\noutput_every = 1\n"
                             "initial_C = gaussian_C0 1.3 0 0.9")
    res = run_fp_given(cfg, write=False)
    ent = np.array([r.entropy for r in res.rows])
    assert np.all(np.diff(ent) <= 1e-12)
    np.testing.assert_allclose(res.C[:, 0, 0], [1.0, 0.0, 1.0], atol=1e-4)


def test_fp_given_reads_series(tmp_path):
    g = TorusGrid2D(8)
    u_path, C_path = tmp_path / "u.pkf", tmp_path / "C.pkf"
    with open(u_path, "wb") as fu, open(C_path, "wb") as fc:
        for n in range(3):
            z = np.zeros(g.shape)
            write_fields(fu, {"u1": z, "u2": z})
            write_fields(fc, {"C11": z + 1 + n, "C12": z, "C22": z + 1 + n})
    body = (f"mode = fp_given\ndt = 0.1\nt_end = 0.2\nnx = 8\noutput_every = 1\n"
            f"initial_C = gaussian_C0 1.3 0 0.9\nu_series = {u_path}\nC_series = {C_path}\n"
            "gamma2 = power_law 1 1\ngamma1 = power_law 1 1")
    res = run_fp_given(make_cfg(tmp_path, body), write=False)
    assert len(res.rows) == 3
    # too short a series is a configuration error
    body = body.replace("t_end = 0.2", "t_end = 0.5")
    with pytest.raises(ConfigError):
        run_fp_given(make_cfg(tmp_path, body), write=False)


def test_compare_equilibrium(tmp_path):
    cfg = make_cfg(tmp_path, "mode = closure_compare\ndt = 0.01\nt_end = 0.1\nnx = 8\n"
                             "N_H = 4\noutput_every = 2")
    rep = compare_closure(cfg)
    assert rep.max_rel_C_error <= 1e-10
    assert rep.residual_kinetic <= 1e-12 and rep.residual_macro <= 1e-12
    text = open(os.path.join(cfg.output_dir, "closure_report.txt"), encoding="utf-8").read()
    parsed = dict(line.split(" = ", 1) for line in text.splitlines())
    assert float(parsed["max_rel_C_error"]) == rep.max_rel_C_error
    assert parsed["error_series"].endswith("closure_errors.csv")
    with open(rep.error_series_path, encoding="utf-8") as fh:
        assert fh.readline().strip() == "step,time,rel_C_error"


def test_compare_frozen_shear(tmp_path):
    cfg = make_cfg(tmp_path, "mode = closure_compare\ndt = 0.001\nt_end = 1\nnx = 8\n"
                             "output_every = 100\nfrozen_grad_u = 0.1 0 0 -0.1")
    for source in ("given_field", "self_consistent"):
        rep = compare_closure(cfg, write=False, gamma_source=source)
        assert rep.max_rel_C_error <= 1e-4


def test_cfl_error_carries_step(tmp_path):
    cfg = make_cfg(tmp_path, "mode = mp\ndt = 0.1\nt_end = 0.5\nnx = 32\n"
                             "initial_u = taylor_green\nu_amplitude = 2")
    with pytest.raises(StepRejectedError) as info:
        run(cfg, write=False)
    assert info.value.step == 1


def test_dispatch_and_gamma_field(tmp_path):
    cfg = make_cfg(tmp_path, "mode = kp\ndt = 0.01\nt_end = 0.02\nnx = 8\nN_H = 2")
    res = run(cfg, write=False)
    assert res.output_dir is None
    np.testing.assert_allclose(gamma_field(cfg, res.C), 0.5)
