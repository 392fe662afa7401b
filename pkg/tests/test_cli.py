import numpy as np

from nematicflow.cli import main, EXIT_OK, EXIT_CONFIG, EXIT_VERIFY
from nematicflow import io as nio

TAU = 6.283185307179586

CFG = f"""
grid = 16, 16, {TAU}, {TAU}
dt = 5e-3
noise_mode_count = 4
h_vec = 0.1, 0.1, 0.1
seed = 7
"""


def write_cfg(tmp_path, text=CFG):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def test_simulate_writes_csv_and_checkpoint(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(cfg), "--tend", "0.1",
                 "--stride", "5", "--out", str(out)])
    assert code == EXIT_OK
    header, rows = nio.read_csv(out / "diagnostics.csv")
    assert header[0] == "t" and len(rows) == 5
    assert (out / "final.ckpt").exists()
    state, p, ou = nio.load_checkpoint(out / "final.ckpt")
    assert state.t == 0.1 and p.seed == 7


def test_simulate_plots(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(cfg), "--tend", "0.05",
                 "--out", str(out), "--plots"])
    assert code == EXIT_OK
    assert (out / "diagnostics.png").stat().st_size > 0


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense_key = 12\n")
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG
    bad.write_text("dt = -1\n")
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG


def test_seed_override(tmp_path):
    cfg = write_cfg(tmp_path)
    o1, o2, o3 = (tmp_path / n for n in ("a", "b", "c"))
    for out, seed in ((o1, None), (o2, 12345), (o3, 12345)):
        args = ["simulate", "--config", str(cfg), "--tend", "0.05",
                "--out", str(out)]
        if seed is not None:
            args += ["--seed", str(seed)]
        assert main(args) == EXIT_OK
    s1, _, _ = nio.load_checkpoint(o1 / "final.ckpt")
    s2, _, _ = nio.load_checkpoint(o2 / "final.ckpt")
    s3, _, _ = nio.load_checkpoint(o3 / "final.ckpt")
    assert not np.array_equal(s1.v.data, s2.v.data)
    assert np.array_equal(s2.v.data, s3.v.data)


def test_replay_split_equals_whole(tmp_path):
    cfg = write_cfg(tmp_path)
    code = main(["replay", "--config", str(cfg), "--tend", "0.1",
                 "--tmid", "0.05", "--out", str(tmp_path / "out")])
    assert code == EXIT_OK


def test_replay_rejects_bad_times(tmp_path):
    cfg = write_cfg(tmp_path)
    code = main(["replay", "--config", str(cfg), "--tend", "0.1",
                 "--tmid", "0.2", "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG


def test_basis_dump(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["basis", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    header, rows = nio.read_csv(out / "basis.csv")
    assert header == ["n", "alpha", "lambda"]
    assert len(rows) == 4
    assert rows[0]["alpha"] < rows[-1]["alpha"]


def test_pullback_and_absorb_tables(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["pullback", "--config", str(cfg), "--slist", "-0.05", "-0.1",
                 "--out", str(out)]) == EXIT_OK
    _, rows = nio.read_csv(out / "pullback.csv")
    assert len(rows) == 2
    assert main(["absorb", "--config", str(cfg), "--slist", "-0.05",
                 "--radii", "1", "--out", str(out)]) == EXIT_OK
    _, rows = nio.read_csv(out / "absorb.csv")
    assert rows[0]["status"] == "ok"


def test_identical_invocations_identical_bytes(tmp_path):
    cfg = write_cfg(tmp_path)
    outs = []
    for name in ("x", "y"):
        out = tmp_path / name
        assert main(["simulate", "--config", str(cfg), "--tend", "0.05",
                     "--out", str(out)]) == EXIT_OK
        outs.append((out / "diagnostics.csv").read_bytes()
                    + (out / "final.ckpt").read_bytes())
    assert outs[0] == outs[1]
