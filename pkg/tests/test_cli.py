import json
import subprocess
import sys

import pytest

from bentforge.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def run_json(capsys, *argv):
    rc, out, err = run(capsys, *argv, "--json")
    return rc, json.loads(out), err


def test_context(capsys):
    rc, d, _ = run_json(capsys, "context", "--m0", "12")
    assert rc == 0 and d["modulus_hex"] == "0x1009" and d["tower"] == [12, 6, 3]


def test_plain_text_output(capsys):
    rc, out, _ = run(capsys, "sums", "kloosterman", "--m1", "2", "--a", "1")
    assert rc == 0
    lines = dict(line.split(": ", 1) for line in out.strip().splitlines())
    assert lines["value"] == "4" and lines["sum"] == "kloosterman"


def test_sums_queries(capsys):
    rc, d, _ = run_json(capsys, "sums", "cubic", "--m1", "6", "--a", "g^5", "--check")
    assert rc == 0 and d["closed_form_used"] and d["value"] == d["oracle_value"]
    rc, d, _ = run_json(capsys, "sums", "cubic", "--m1", "6", "--a", "g^5", "--b", "0x0")
    assert rc == 0 and d["closed_form_used"] and "oracle_value" not in d
    rc, d, _ = run_json(capsys, "sums", "coset-cubic", "--m1", "6", "--a", "g^2", "--gamma", "w", "--check")
    assert rc == 0 and d["value"] == d["oracle_value"]
    rc, d, _ = run_json(capsys, "sums", "sigma", "--m", "1", "--k", "3", "--check")
    assert rc == 0 and d["value"] == d["oracle_value"] == 3


def test_walsh_both(capsys):
    rc, d, _ = run_json(capsys, "walsh", "--m0", "12", "--a", "g^7", "--b", "w", "--omega", "0x3f", "--both")
    assert rc == 0 and d["agree"] and d["closed"] == d["brute"]
    rc, d, _ = run_json(capsys, "walsh", "--m0", "6", "--a", "g^3", "--omega", "0", "--closed")
    assert rc == 0 and d["route"] == "odd-closed" and "brute" not in d


def test_walsh_dump(capsys, tmp_path):
    path = tmp_path / "w.bin"
    rc, d, _ = run_json(capsys, "walsh", "--m0", "8", "--a", "1", "--omega", "1", "--dump", str(path))
    assert rc == 0 and d["parseval_ok"]
    assert path.stat().st_size == 4 * 256
    assert json.loads((tmp_path / "w.bin.json").read_text())["count"] == 256


def test_bent(capsys):
    rc, d, _ = run_json(capsys, "bent", "--m0", "12", "--a", "g^7", "--b", "w")
    assert rc == 0 and d["method"] == "spectrum" and d["agree"]
    rc, d, _ = run_json(capsys, "bent", "--m0", "12", "--a", "g^7", "--no-spectrum")
    assert rc == 0 and d["method"] == "kloosterman"


def test_inconsistency_exits_1(capsys):
    # at m0 = 6 the Kloosterman criterion misses a bent function
    rc, d, _ = run_json(capsys, "bent", "--m0", "6", "--a", "1", "--b", "w")
    assert rc == 1 and d["bent"] and not d["kloosterman_criterion"]


def test_conjecture_single_omega(capsys):
    rc, d, _ = run_json(capsys, "conjecture", "--m0", "12", "--a", "z^0", "--omega", "0x3f")
    assert rc == 0 and d["consistent"]
    rc, _, err = run(capsys, "conjecture", "--m0", "12", "--a", "z^1", "--omega", "0x3f")
    assert rc == 2 and "hypothesis" in err


def test_sweep_and_conjecture_commands(capsys, tmp_path):
    out = tmp_path / "s.ndjson"
    rc, d, _ = run_json(capsys, "sweep", "--m0", "12", "--mode", "conjecture2", "--quiet", "--output", str(out))
    assert rc == 0 and d["ok"] and d["inconsistent"] == 0 and d["units"] == 13
    rc, d, _ = run_json(capsys, "conjecture", "--m0", "12", "--a-range", "0..100", "--quiet")
    assert rc == 0 and d["units"] == 13


def test_threads_env_and_config(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m0": 12, "mode": "bent-agreement", "a_selection": "list", "a_values": [1, 3]}))
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    rc, _, _ = run_json(capsys, "sweep", "--config", str(cfg), "--quiet", "--output", str(a))
    assert rc == 0
    monkeypatch.setenv("BENTFORGE_THREADS", "2")
    rc, _, _ = run_json(capsys, "sweep", "--config", str(cfg), "--quiet", "--output", str(b))
    assert rc == 0 and a.read_bytes() == b.read_bytes()
    # flags win over the file
    rc, d, _ = run_json(capsys, "sweep", "--config", str(cfg), "--mode", "closed-vs-brute", "--quiet")
    assert rc == 0 and d["closed_compared"] > 0
    monkeypatch.setenv("BENTFORGE_THREADS", "many")
    rc, _, err = run(capsys, "sweep", "--config", str(cfg), "--quiet")
    assert rc == 2 and "BENTFORGE_THREADS" in err


def test_resume_commands(capsys, tmp_path):
    out = tmp_path / "r.ndjson"
    base = ["--m0", "12", "--a-list", "1,5,9", "--spot-fraction", "0", "--quiet"]
    rc, d, _ = run_json(capsys, "sweep", *base, "--output", str(out), "--max-units", "1")
    assert rc == 0 and d["type"] == "partial"
    ckpt = str(out) + ".ckpt"
    rc, _, err = run(capsys, "resume", "--checkpoint", ckpt, "--m0", "12", "--a-list", "1,5", "--quiet")
    assert rc == 2 and "refusing" in err
    rc, d, _ = run_json(capsys, "resume", "--checkpoint", ckpt, "--quiet")
    assert rc == 0 and d["ok"] and d["units"] == 3
    rc, d2, _ = run_json(capsys, "resume", "--checkpoint", ckpt, "--quiet")
    assert rc == 0 and d2 == d


@pytest.mark.parametrize("argv", [
    ["context", "--m0", "12", "--bogus"],
    ["walsh", "--m0", "12"],
    ["nosuch"],
])
def test_usage_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["context", "--m0", "13"],
    ["sums", "cubic", "--m1", "6", "--a", "0x800"],
    ["walsh", "--m0", "12", "--a", "0", "--omega", "1"],
    ["sums", "coset-cubic", "--m1", "6", "--a", "1"],
    ["resume", "--checkpoint", "/nonexistent/ckpt"],
])
def test_input_errors_exit_2(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc != 0 and err.startswith("bentforge:")
    if argv[0] != "resume":
        assert rc == 2


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "bentforge.cli", "context", "--m0", "6", "--json"],
                       capture_output=True, text=True, check=True)
    assert json.loads(r.stdout)["m0"] == 6
