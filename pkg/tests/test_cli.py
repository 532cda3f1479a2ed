import json
import math

import numpy as np
import pytest

from latticedsp import cli
from latticedsp.dynamics import ControlProtocol
from latticedsp.protocols import ProtocolFile, load_protocol, save_protocol


@pytest.fixture
def short_protocol(tmp_path):
    pf = ProtocolFile(ControlProtocol(tuple(np.array([2, 5, 1, 3]) * math.pi / 12)))
    return str(save_protocol(pf, tmp_path / "short.json"))


SMALL_GRID = ["--set", "bayes.a_min=-0.02", "--set", "bayes.a_max=0.02", "--set", "bayes.a_points=5",
              "--set", "bayes.V_min=9.5", "--set", "bayes.V_max=10.5", "--set", "bayes.V_points=5"]


def manifest(path):
    return json.loads((path / "manifest.json").read_text())


def test_simulate(tmp_path, short_protocol, capsys):
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--protocol", short_protocol, "--out", str(out)]) == 0
    m = manifest(out)
    assert m["command"] == "simulate" and set(cli.SIM_FILES) <= set(m["outputs"])
    for name in cli.SIM_FILES:
        assert (out / name).read_text().splitlines()[0] == f"# manifest {m['manifest_hash']}"
    assert m["physics"]["n_max"] == 10 and m["protocol_hash"]
    assert "zeta_a" in capsys.readouterr().out


def test_bands(tmp_path):
    out = tmp_path / "b"
    assert cli.main(["bands", "--V", "4", "--q-points", "8", "--n-bands", "3", "--out", str(out)]) == 0
    data = np.loadtxt(out / "bands.csv", delimiter=",", skiprows=2)
    assert data.shape == (8, 4) and np.all(np.diff(data[:, 1:], axis=1) > 0)
    assert manifest(out)["config"]["physics"]["V_L"] == 4.0


def test_bayes(tmp_path, short_protocol):
    out = tmp_path / "bay"
    argv = ["bayes", "--protocol", short_protocol, "--N", "200", "--seeds", "1", "2", "--out", str(out),
            *SMALL_GRID]
    assert cli.main(argv) == 0
    m = manifest(out)
    assert m["seeds"] == [1, 2]
    assert {"posterior_seed1_N0.csv", "posterior_seed1_N200.csv", "summary.csv"} <= set(m["outputs"])
    summary = np.loadtxt(out / "summary.csv", delimiter=",", skiprows=2)
    assert summary.shape[0] == 2 * len(cli.snapshot_sizes(200))


def test_bayes_reproducible(tmp_path, short_protocol):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        cli.main(["bayes", "--protocol", short_protocol, "--N", "50", "--seeds", "4", "--out", str(out),
                  *SMALL_GRID])
        outs.append((out / "summary.csv").read_text())
    assert outs[0] == outs[1]


def test_bayes_truth_off_grid(tmp_path, short_protocol):
    argv = ["bayes", "--protocol", short_protocol, "--out", str(tmp_path), *SMALL_GRID,
            "--set", "bayes.truth_a=0.013"]
    assert cli.main(argv) == 2


def test_jsd(tmp_path, short_protocol):
    out = tmp_path / "j"
    argv = ["jsd", "--protocol", short_protocol, "--slice", "aa", "--out", str(out),
            "--set", "jsd.a_min=-0.02", "--set", "jsd.a_max=0.02", "--set", "jsd.a_points=5",
            "--set", "jsd.V_min=10", "--set", "jsd.V_max=10", "--set", "jsd.V_points=1"]
    assert cli.main(argv) == 0
    lines = (out / "jsd_aa.csv").read_text().splitlines()
    assert lines[0].startswith("# manifest") and len(lines) == 3 + 25


def test_train(tmp_path):
    out = tmp_path / "t"
    argv = ["train", "--episodes", "3", "--seed", "7", "--out", str(out),
            "--set", "designer.n_segments=4", "--set", "physics.n_max=8", "--set", "designer.batch=4"]
    assert cli.main(argv) == 0
    m = manifest(out)
    assert m["seeds"] == [7]
    pf = load_protocol(out / "protocol.json")
    assert pf.protocol.n_segments == 4 and pf.metadata["seed"] == 7
    hist = np.loadtxt(out / "history.csv", delimiter=",", skiprows=2)
    assert hist.shape == (3, 3)
    ck = json.loads((out / "checkpoint_q.json").read_text())
    assert ck["shapes"] == [[12, 64], [64], [64, 16], [16]]


def test_verify_passes_on_protocol_file(tmp_path, short_protocol):
    assert cli.main(["verify", "--protocol", short_protocol, "--out", str(tmp_path)]) == 0


def test_verify_coarse_dt_fails(tmp_path, short_protocol):
    assert cli.main(["verify", "--protocol", short_protocol, "--dt-factor", "64", "--out", str(tmp_path)]) == 1


def test_corrupted_protocol_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": 1, "n_max": "x"}')
    assert cli.main(["simulate", "--protocol", str(bad), "--out", str(tmp_path)]) == 2
    assert "bad.json" in capsys.readouterr().err


def test_config_errors(tmp_path):
    assert cli.main(["simulate", "--set", "physics.nonsense=1", "--out", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--set", "physics.n_max", "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_config_file_and_hash(tmp_path, short_protocol):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"physics": {"V_L": 8.0}}))
    out = tmp_path / "o"
    assert cli.main(["bands", "--config", str(cfg), "--q-points", "2", "--out", str(out)]) == 0
    m = manifest(out)
    assert m["config"]["physics"]["V_L"] == 8.0
    assert m["config_hash"] == cli.config_hash(m["config"])
