import io

import numpy as np
import pytest
import yaml

from qpauli.io import (
    BUNDLED_SYSTEMS,
    SystemFileError,
    dump_system,
    load_system,
    read_trajectory_csv,
    resolve_system,
    system_from_mapping,
    trajectory_header,
    write_diagnostics_csv,
    write_matrix_csv,
    write_trajectory_csv,
)
from qpauli.kinetics import Variant
from qpauli.solver import BoundaryKind, TimeBoundaryEvent, Trajectory
from qpauli.system import Symmetry, SystemValidationError, check_invariance, random_system


def _mapping(**changes):
    data = {
        "n": 1,
        "energies": [0.0, 0.0],
        "V_real": [[0.0, 1.0], [1.0, 0.0]],
        "V_imag": [[0.0, 0.0], [0.0, 0.0]],
        "lambda": 0.01,
    }
    data.update(changes)
    return data


def test_system_file_round_trip(tmp_path):
    sys = random_system(2, "cpt", 0.02, shell_count=2, seed=7)
    path = tmp_path / "sys.yaml"
    with open(path, "w") as fh:
        dump_system(sys, fh)
    back = load_system(path)
    assert back.n == 2
    assert back.symmetry is Symmetry.CPT
    assert np.array_equal(back.V, sys.V)
    assert np.array_equal(back.energies, sys.energies)
    assert back.lam == sys.lam


def test_missing_key_is_named():
    data = _mapping()
    del data["V_imag"]
    with pytest.raises(SystemFileError) as err:
        system_from_mapping(data)
    assert err.value.key == "V_imag"


@pytest.mark.parametrize("key, value", [
    ("V_real", [[0.0, 1.0]]),
    ("energies", [0.0, "x"]),
    ("n", 0),
    ("lambda", "small"),
    ("symmetry", "parity"),
    ("phases_re", [1.0]),
])
def test_bad_values_name_their_key(key, value):
    with pytest.raises(SystemFileError) as err:
        system_from_mapping(_mapping(**{key: value}))
    assert err.value.key == key


def test_unknown_key_rejected():
    with pytest.raises(SystemFileError) as err:
        system_from_mapping(_mapping(mass=1.0))
    assert err.value.key == "mass"


def test_non_hermitian_file_fails_validation():
    with pytest.raises(SystemValidationError):
        system_from_mapping(_mapping(V_real=[[0.0, 1.0], [2.0, 0.0]]))


def test_optional_phases():
    sys = system_from_mapping(_mapping(phases_re=[0.0, 1.0], phases_im=[1.0, 0.0]))
    assert np.allclose(sys.phases, [1j, 1.0])


def test_bundled_systems():
    assert {"two_state", "cpt_pair"} <= set(BUNDLED_SYSTEMS)
    two = resolve_system("two_state")
    assert two.n == 1 and two.lam == 0.01
    pair = resolve_system("cpt_pair")
    assert pair.n == 2
    assert check_invariance(pair, Symmetry.CPT).passed
    with pytest.raises(SystemFileError):
        resolve_system("no_such_system")


def test_invalid_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("n: [1,\n")
    with pytest.raises(SystemFileError):
        load_system(path)


def _trajectory():
    traj = Trajectory(Variant.APME)
    traj.append(0.0, np.array([0.6, 0.4]), np.zeros(2))
    traj.append(0.1, np.array([0.5, 0.5]), np.zeros(2))
    traj.events.append(TimeBoundaryEvent(BoundaryKind.END_OF_TIME, 0.6, -1))
    return traj


def test_trajectory_csv_format():
    buf = io.StringIO()
    write_trajectory_csv(_trajectory(), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,p_-1,p_+1,S,E"
    assert lines[1].startswith("0,0.59999999999999998,0.40000000000000002,")
    assert lines[-1] == "# event,EndOfTime,0.59999999999999998,-1"


def test_trajectory_csv_read_back():
    buf = io.StringIO()
    traj = _trajectory()
    write_trajectory_csv(traj, buf)
    buf.seek(0)
    back = read_trajectory_csv(buf, "apme")
    assert np.array_equal(back.p, traj.p)
    assert np.array_equal(back.t, traj.t)
    assert np.array_equal(back.S, traj.S)
    assert back.events == traj.events


def test_header_order():
    assert trajectory_header(2) == ["t", "p_-2", "p_-1", "p_+1", "p_+2", "S", "E"]


def test_matrix_and_diagnostics_csv():
    buf = io.StringIO()
    write_matrix_csv(np.array([[-1.0, 1.0], [1.0, -1.0]]), buf)
    assert buf.getvalue().splitlines() == ["row,-1,+1", "-1,-1,1", "+1,1,-1"]
    buf = io.StringIO()
    write_diagnostics_csv([{"interval": 0, "bc_residual": 0.0, "weight_min": 0.5, "cond_Uaa": 1.0}], buf)
    assert buf.getvalue().splitlines() == ["interval,bc_residual,weight_min,cond_Uaa", "0,0,0.5,1"]


def test_dump_is_plain_yaml():
    buf = io.StringIO()
    dump_system(random_system(1, seed=1), buf)
    data = yaml.safe_load(buf.getvalue())
    assert list(data) == ["n", "energies", "V_real", "V_imag", "lambda", "phases_re", "phases_im", "symmetry"]
