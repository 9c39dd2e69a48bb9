import json

import numpy as np
import pytest

from magorbit.dynamics import MagneticSetup, Trajectory, simulate_pendulum, simulate_semidirect
from magorbit.integrals import theta_map
from magorbit.io import (read_json, read_trajectory_csv, trajectory_header, write_json,
                         write_matrix_csv, write_rows_csv, write_semidirect_csv, write_trajectory_csv)
from magorbit.orbit import random_phase_point


def test_trajectory_csv_round_trip(tmp_path, so3_ctx):
    pt = random_phase_point(so3_ctx, 1)
    traj = simulate_pendulum(so3_ctx, pt, MagneticSetup(0.5), 0.2, 0.01)
    path = write_trajectory_csv(tmp_path / "t.csv", traj, "abc123")
    assert path.read_text().startswith("# config_hash=abc123\n")
    header, data = read_trajectory_csv(path)
    assert header == trajectory_header(3)
    assert header[:4] == ["t", "x_1", "x_2", "x_3"] and header[-3:] == ["H", "res_orbit", "res_cotangent"]
    assert np.array_equal(data[:, 0], traj.times)
    assert np.array_equal(data[:, 1:7], traj.states)
    assert np.array_equal(data[:, 7], traj.diagnostics["H"])


def test_semidirect_csv(tmp_path, su3_ctx):
    z0 = theta_map(su3_ctx.algebra, random_phase_point(su3_ctx, 1), 0.7)
    traj = simulate_semidirect(su3_ctx.algebra, z0, None, 0.05, 0.01)
    header, data = read_trajectory_csv(write_semidirect_csv(tmp_path / "s.csv", traj, "h"))
    assert header[1] == "xi_1" and header[9] == "eta_1" and header[-1] == "h"
    assert np.array_equal(data[:, 9:17], traj.states.imag)


def test_json_writer_handles_numpy_and_inf(tmp_path):
    path = write_json(tmp_path / "r.json", {"a": np.arange(3), "b": np.float64(2.5), "c": float("inf"),
                                            "d": np.bool_(True)}, "hash1")
    doc = read_json(path)
    assert doc == {"config_hash": "hash1", "a": [0, 1, 2], "b": 2.5, "c": None, "d": True}
    json.loads(path.read_text())


def test_rows_and_matrix_csv(tmp_path):
    p = write_rows_csv(tmp_path / "rows.csv", [{"x": 0.1, "k": "re"}], "h2")
    assert p.read_text().splitlines()[1:] == ["x,k", "0.10000000000000001,re"]
    M = np.array([[0.0, 1 / 3], [-1 / 3, 0.0]])
    mp = write_matrix_csv(tmp_path / "m.csv", M, "h3")
    assert "config_hash=h3" in mp.read_text().splitlines()[0]
    assert np.array_equal(np.loadtxt(mp, delimiter=","), M)
