import json
import subprocess
import sys

import pytest

from latorbit.cli import main


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def _rows(text):
    return [l for l in text.splitlines() if l and not l.startswith("#")]


def test_enumerate_example(capsys):
    code, out = run(["enumerate", "--n", "2", "--T", "1.7320508"], capsys)
    assert code == 0
    assert len(_rows(out.out)) == 21  # header plus 20 matrices


def test_volume_json(capsys):
    code, out = run(["volume", "--m", "2", "--T", "50", "--g1", "id", "--g2", "id", "--N", "40"], capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["result"]["ratio"] < 0.01
    assert doc["header"]["software"].startswith("latorbit")


def test_missing_seed_exits_2(capsys):
    code, out = run(["measure-compare", "--T", "3"], capsys)
    assert code == 2
    assert "seed" in out.err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["enumerate", "--n", "2"])
    assert exc.value.code == 2


def test_resource_cap_exits_4(capsys):
    code, _ = run(["enumerate", "--n", "3", "--T", "31"], capsys)
    assert code == 4


def test_divergent_series_exits_2(capsys):
    code, _ = run(["series", "--m", "2", "--sigma", "2", "--N", "5"], capsys)
    assert code == 2


def test_payload_is_reproducible(tmp_path, capsys):
    outs = []
    p = tmp_path / "o.csv"
    for _ in range(2):
        assert main(["orbit", "--T", "2.5", "--out", str(p)]) == 0
        outs.append([l for l in p.read_bytes().split(b"\r\n") if not l.startswith(b"# timestamp")])
    assert outs[0] == outs[1]
    assert b"\n" not in p.read_bytes().replace(b"\r\n", b"")


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 2, "T": 1.5}))
    code, out = run(["--config", str(cfg), "enumerate"], capsys)
    assert code == 0
    assert len(_rows(out.out)) == 5


def test_verify_fast_json(tmp_path):
    p = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "latorbit", "verify", "fast", "--json", str(p)],
                          capture_output=True, text=True, timeout=900)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    doc = json.loads(p.read_text())
    crit = doc["result"]["criteria"]
    assert {c["number"] for c in crit} == {1, 3, 5, 6, 7, 8, 12}
    assert all(c["passed"] for c in crit)
