import csv
import json

from aoisched.cli import main
from aoisched.predictions import load_prediction
from aoisched.channel import read_rsrq_csv, read_trace


def test_simulate(capsys):
    assert main(["simulate", "--scheduler", "pdoa", "--channel", "bernoulli:0.3", "--T", "200", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert "total" in out and "OPT" in out and "c             15" in out


def test_simulate_bad_spec(capsys):
    assert main(["simulate", "--channel", "bernoulli:abc"]) == 2
    assert "error" in capsys.readouterr().err


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--scheduler", "pdoa", "--channel", "bernoulli:0.2", "--channel", "bursty:13,0.9,6,0.9",
                 "--c", "15", "--T", "100", "--runs", "3", "--seed", "1", "--certificates", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 6
    assert {r["p_or_pattern"] for r in rows} == {"0.2", "13,0.9,6,0.9"}
    assert all(r["cert_ok"] == "true" for r in rows)


def test_sweep_from_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scheduler": "lapdoa", "channel": "bursty", "c": 15, "horizon": 80,
                               "runs": 2, "seed": 3, "lambda": "0.5", "prediction": "perfect"}))
    assert main(["sweep", "--config", str(cfg), "--runs", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and lines[1].startswith("lapdoa(0.5),bursty")


def test_sweep_lambdas(capsys):
    assert main(["sweep", "--lambdas", "0,0.5,1", "--qualities", "100", "--runs", "4"]) == 0
    captured = capsys.readouterr()
    assert "follow" in captured.err and "pdoa" in captured.out


def test_verify_pass_and_json(tmp_path, capsys):
    js = tmp_path / "r.json"
    cert = tmp_path / "cert.json"
    code = main(["verify", "--states", "1001", "--c", "2", "--json", str(js), "--export-cert", str(cert)])
    out = capsys.readouterr().out
    assert code == 0
    assert "D=5 <= OPT=7 <= cost=8 <= P=8" in out
    report = json.loads(js.read_text())
    assert report["ok"] and report["D"] == "5" and report["opt"] == "7"
    assert main(["verify", "--states", "1001", "--c", "2", "--certificate", str(cert)]) == 0


def test_verify_tampered_exit_nonzero(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    main(["verify", "--states", "1001", "--c", "2", "--export-cert", str(cert)])
    data = json.loads(cert.read_text())
    data["y"][1][2] = "0"
    cert.write_text(json.dumps(data))
    assert main(["verify", "--states", "1001", "--c", "2", "--certificate", str(cert)]) == 1
    assert "FAILED" in capsys.readouterr().out


def test_verify_lapdoa(capsys):
    code = main(["verify", "--channel", "bursty", "--T", "100", "--scheduler", "lapdoa", "--lambda", "0.5",
                 "--prediction", "noisy:0.5,3,0.2"])
    assert code == 0
    assert "scaled_dual_feasible@1" in capsys.readouterr().out


def test_gen_channel_and_prediction(tmp_path, capsys):
    trace = tmp_path / "t.txt"
    assert main(["gen-channel", "--channel", "bursty", "--T", "50", "--seed", "2", "--out", str(trace)]) == 0
    assert read_trace(trace).horizon == 50
    rsrq = tmp_path / "r.csv"
    assert main(["gen-channel", "--channel", "bursty", "--T", "50", "--seed", "2", "--format", "rsrq",
                 "--out", str(rsrq)]) == 0
    assert read_rsrq_csv(rsrq) == read_trace(trace)
    pred = tmp_path / "p.txt"
    assert main(["gen-prediction", "--trace", str(trace), "--c", "15", "--out", str(pred)]) == 0
    assert load_prediction(pred, 50).ack_times
    assert main(["gen-prediction", "--states", "1111", "--c", "2"]) == 0
    assert capsys.readouterr().out.strip() == "[2]"
    assert main(["simulate", "--scheduler", "follow", "--channel", f"trace:{trace}", "--prediction",
                 f"file:{pred}"]) == 0
