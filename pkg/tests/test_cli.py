import csv
import io
import json

import pytest

from geonets.cli import main
from geonets.net import build_theta, load_net, save_net


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_verify_theta(capsys):
    code, out = run(capsys, "verify-theta")
    rep = json.loads(out)
    assert code == 0
    assert rep["stationary"] and rep["minimizing"] and rep["balanced_count"] == 2
    assert rep["config"]["command"] == "verify-theta" and rep["config"]["seed"] == 0


def test_verify_theta_perturbed_reports_non_stationary(capsys):
    code, out = run(capsys, "verify-theta", "--perturb", "0.05", "--max-iters", "20")
    rep = json.loads(out)
    assert rep["perturbed"]["stationary"] is False
    assert code == (0 if rep["relaxed"]["converged"] else 1)


def test_flower_rp2(capsys):
    code, out = run(capsys, "flower", "--manifold", "rp2", "--petals", "5", "--grid-deg", "6")
    rep = json.loads(out)
    assert code == 0 and rep["minimizing"] and rep["satisfied"] and rep["equality"]
    assert rep["bound"] == pytest.approx(5 * 3.141592653589793)


def test_flower_s2_two_petals_flags_single_point(capsys):
    code, out = run(capsys, "flower", "--manifold", "s2", "--petals", "2", "--grid-deg", "6")
    rep = json.loads(out)
    assert code == 0 and rep["minimizing"]
    assert rep["distinct_halfway_points"] == 1 and "note" in rep


def test_scan_csv(capsys):
    code, out = run(capsys, "scan", "--manifold", "s2", "--center", "0,0,1", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["x", "y", "z", "distance", "critical"]
    assert len(rows) == 2 and float(rows[1][2]) == pytest.approx(-1.0)


def test_scan_json_to_file(tmp_path, capsys):
    out = tmp_path / "scan.json"
    code, _ = run(capsys, "scan", "--manifold", "rp2", "--center", "0,0,1", "--grid-deg", "10", "--out", str(out))
    rep = json.loads(out.read_text())
    assert code == 0 and rep["critical_radius"] == pytest.approx(3.141592653589793 / 2)


def test_certify(capsys):
    code, out = run(capsys, "certify", "--samples", "10")
    rep = json.loads(out)
    assert code == 0 and rep["all_valid"] and len(rep["certificates"]) == 10
    code, out = run(capsys, "certify", "--manifold", "rp2", "--q", "1,0,0", "--x", "0,1,0")
    assert code == 1
    assert json.loads(out)["certificates"][0]["failed_hypotheses"] == ["injectivity radius > pi/2"]


def test_relax_command(tmp_path, capsys, s2):
    path = tmp_path / "theta.json"
    save_net(build_theta(s2), path)
    code, out = run(capsys, "relax", str(path), "--out", str(tmp_path / "out.json"))
    rep = json.loads(out)
    assert code == 0 and rep["converged"] and rep["iterations"] == 0
    assert load_net(tmp_path / "out.json").total_length() == pytest.approx(build_theta(s2).total_length())
    history = (tmp_path / "out.residuals.csv").read_text().splitlines()
    assert history[0] == "iteration,residual,total_length"


def test_input_errors(capsys, tmp_path):
    assert main(["flower", "--petals", "0"]) == 2
    assert main(["scan", "--manifold", "torus"]) == 2
    assert main(["relax", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["scan", "--center", "a,b"])
    assert exc.value.code == 2
    assert main(["certify", "--q", "1,0,0"]) == 2  # not a mutual pair on the sphere


def test_numerical_failure_exit_code(tmp_path, capsys):
    prof = tmp_path / "cyl.json"
    prof.write_text(json.dumps({"radius_sq_poly": [1.0], "z_min": -0.5, "z_max": 0.5}))
    net = {
        "manifold": f"revolution:{prof}",
        "vertices": [{"id": "a", "kind": "boundary", "coords": [1, 0, 0.4]}, {"id": "b", "kind": "boundary", "coords": [0.5403023058681398, 0.8414709848078965, -0.4]}],
        "edges": [{"id": "e", "from": "a", "to": "b"}],
    }
    path = tmp_path / "net.json"
    path.write_text(json.dumps(net))
    assert main(["relax", str(path)]) == 3
