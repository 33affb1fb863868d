import csv
import io
import json

import pytest

from poa_lab.cli import EXIT_INPUT, EXIT_MISMATCH, EXIT_OK, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_reproduce_identical(capsys):
    code, out = run(["reproduce", "identical"], capsys)
    assert code == EXIT_OK
    r = rows(out)
    assert r[3]["printed"] == "2.895" and r[3]["match"] == "True"


def test_reproduce_unweighted_row3(capsys):
    code, out = run(["reproduce", "unweighted", "--json"], capsys)
    assert code == EXIT_OK
    cells = {(c["d"], c["metric"]): c for c in json.loads(out)}
    assert cells[(3, "poa")]["printed"] == "41.54"
    assert cells[(3, "crs")]["printed"] == "527.3"
    assert cells[(3, "crc")]["printed"] == "755.2"
    assert all(c["match"] for c in cells.values())


def test_reproduce_weighted_reports_mismatch(capsys):
    code, out = run(["reproduce", "weighted"], capsys)
    r = rows(out)
    assert [x["match"] for x in r[:3]] == ["True"] * 3
    bad = [(x["d"], x["metric"]) for x in r if x["match"] != "True"]
    assert code == (EXIT_MISMATCH if bad else EXIT_OK)


def test_bounds_command(capsys):
    code, out = run(["bounds", "--mode", "weighted", "--metric", "crs", "--degrees", "1"], capsys)
    assert code == EXIT_OK
    assert float(rows(out)[0]["value"]) == pytest.approx(7.464101615137754)
    code, out = run(["bounds", "--mode", "identical", "--degrees", "1,2"], capsys)
    assert [round(float(r["closed_form"]), 3) for r in rows(out)] == [1.125, 1.412]


@pytest.mark.parametrize(
    "argv",
    [
        ["weighted-tree", "--s", "2", "--n", "2"],
        ["weighted-walk-tree", "--s", "2", "--n", "3"],
        ["weighted-walk-tree", "--s", "2", "--walk-mode", "cooperative"],
        ["unweighted-multipartite", "--s", "3"],
        ["unweighted-walk-multipartite", "--s", "3", "--walk-mode", "cooperative"],
        ["identical-weighted", "--m", "16", "--h", "7", "--x", "8", "--eps", "0.2"],
        ["identical-unweighted-walk", "--o", "1,1,2"],
    ],
)
def test_gen_then_verify(tmp_path, capsys, argv):
    out = tmp_path / "inst.json"
    code, _ = run(["gen", *argv, "--out", str(out)], capsys)
    assert code == EXIT_OK
    assert (tmp_path / "inst.manifest.json").exists()
    code, text = run(["verify", str(out)], capsys)
    assert code == EXIT_OK
    assert all(r["agree"] == "True" for r in rows(text))


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["gen", "unweighted-multipartite", "--s", "2", "--out", str(a)], capsys)
    run(["gen", "unweighted-multipartite", "--s", "2", "--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_verify_detects_tampering(tmp_path, capsys):
    out = tmp_path / "inst.json"
    run(["gen", "weighted-tree", "--s", "1", "--n", "2", "--out", str(out)], capsys)
    data = json.loads(out.read_text())
    data["players"][0]["weight"] *= 3
    out.write_text(json.dumps(data))
    code, _ = run(["verify", str(out)], capsys)
    assert code == EXIT_MISMATCH


def test_walk_and_poa_brute(tmp_path, capsys):
    out = tmp_path / "inst.json"
    run(["gen", "identical-unweighted-walk", "--o", "1,1", "--out", str(out)], capsys)
    code, text = run(["walk", str(out), "--order", "instance", "--tiebreak", "prescribed-choice-list", "--json"], capsys)
    assert code == EXIT_OK
    data = json.loads(text)
    assert data["ratio_to_stored_optimum"] == pytest.approx(json.loads((tmp_path / "inst.manifest.json").read_text())["closed_form"]["ratio"])
    code, text = run(["walk", str(out), "--order", "random:3", "--mode", "cooperative"], capsys)
    assert code == EXIT_OK and len(rows(text)) > 0
    small = tmp_path / "small.json"
    small.write_text(
        json.dumps(
            {
                "resources": [{"id": 0, "latency": {"kind": "poly", "coeffs": [0, 1]}}, {"id": 1, "latency": {"kind": "poly", "coeffs": [2]}}],
                "players": [{"id": 0, "weight": 1, "strategies": [[0], [1]]}, {"id": 1, "weight": 1, "strategies": [[0], [1]]}],
            }
        )
    )
    code, text = run(["poa-brute", str(small)], capsys)
    assert code == EXIT_OK
    assert float(rows(text)[0]["ratio"]) == pytest.approx(4 / 3)


def test_converge_commands(capsys):
    code, out = run(["converge", "unweighted-multipartite", "--s-values", "2-5"], capsys)
    r = rows(out)
    assert code == EXIT_OK and len(r) == 4
    assert all(x["agree"] == "True" and x["non_decreasing"] == "True" for x in r)
    code, out = run(["converge", "identical-unweighted-walk", "--n-values", "100,1000"], capsys)
    assert code == EXIT_OK and len(rows(out)) == 2


def test_input_errors(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "missing.json")]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["poa-brute", str(bad)]) == EXIT_INPUT
    assert main(["gen", "identical-weighted", "--m", "15", "--out", str(tmp_path / "x.json")]) == EXIT_INPUT
    with pytest.raises(SystemExit):
        main(["reproduce", "nonsense"])
