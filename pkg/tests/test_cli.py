import json
from fractions import Fraction

import pytest

from novikov import io as fileio
from novikov.cli import main
from novikov.complex import FilteredComplex, Generator, random_complex
from novikov.core import NovikovScalar

F = Fraction


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def records(out):
    return [json.loads(line) for line in out.splitlines()]


@pytest.fixture
def planted_file(tmp_path):
    C = random_complex(5, 5, [F(1, 2)], [F(1, 2)], p=3, precision=4, graded=True,
                       action_pool=[F(0), F(1, 2)])
    path = tmp_path / "planted.json"
    path.write_text(fileio.complex_to_text(C))
    return path


@pytest.fixture
def graded_bar_file(tmp_path):
    gens = [Generator("x", F(0), 1), Generator("y", F(0), 0)]
    C = FilteredComplex(3, 4, gens, {("y", "x"): NovikovScalar.monomial(1, F(1, 2), 3)}, graded=True)
    path = tmp_path / "bar.json"
    path.write_text(fileio.complex_to_text(C))
    return path


def test_barcode_machine_report(capsys, planted_file):
    code, out = run(capsys, "barcode", planted_file, "--format", "machine")
    assert code == 0
    recs = records(out.out)
    assert recs[0]["schema"] == "novikov-report" and recs[0]["command"] == "barcode"
    bc = next(r for r in recs if r.get("kind") == "barcode")
    assert bc["lengths"] == [[1, 2]] and bc["free_rank"] == 3
    assert next(r for r in recs if r.get("kind") == "boundary_depth")["value"] == [1, 2]
    assert recs[-1] == {"kind": "result", "status": "PASS"}


def test_barcode_acyclic_flag(capsys, tmp_path):
    gens = [Generator("x"), Generator("y")]
    C = FilteredComplex(2, 2, gens, {("y", "x"): NovikovScalar.monomial(1, 3, 2)})
    path = tmp_path / "long.json"
    path.write_text(fileio.complex_to_text(C))
    code, out = run(capsys, "barcode", path, "--acyclic", "--format", "machine")
    bc = next(r for r in records(out.out) if r.get("kind") == "barcode")
    assert bc["bars"] == [[None, {"at_least": [2, 1]}]] and bc["free_rank"] == 0


def test_text_output(capsys, planted_file):
    code, out = run(capsys, "barcode", planted_file)
    assert code == 0
    assert "lengths = [1/2]" in out.out and out.out.rstrip().endswith("PASS")


def test_qf_passes(capsys, graded_bar_file):
    code, out = run(capsys, "qf", graded_bar_file, "--format", "machine")
    assert code == 0
    check = next(r for r in records(out.out) if r.get("kind") == "check")
    assert check["got"] == [[3, 2], [3, 2]]


def test_tate_and_equivariant(capsys, graded_bar_file):
    assert run(capsys, "tate", graded_bar_file)[0] == 0
    code, out = run(capsys, "equivariant", graded_bar_file, "--seed", 1, "--samples", 20, "--format", "machine")
    assert code == 0
    depth = [r for r in records(out.out) if r.get("name") == "boundary depth >= equivariant depth"][0]
    assert depth["delta1"] == depth["equivariant_depth"] == [3, 2]


def test_strictify_writes_output(capsys, planted_file, tmp_path):
    out_path = tmp_path / "strict.json"
    code, _ = run(capsys, "strictify", planted_file, "--output", out_path)
    assert code == 0
    assert fileio.load(str(out_path)).complex.is_strict()


def test_validate_flags_corruption(capsys, tmp_path):
    doc = json.loads(fileio.complex_to_text(random_complex(1, 4, [F(1)], [F(1)], p=2, precision=4)))
    doc["differential"].append({"from": doc["generators"][0]["id"], "to": doc["generators"][0]["id"],
                                "terms": [[1, 0, 1]]})
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out = run(capsys, "validate", path, "--format", "machine")
    assert code == 1
    assert records(out.out)[-1]["status"] == "FAIL"


def test_bad_input_exits_with_two(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"header": ')
    code, out = run(capsys, "barcode", path)
    assert code == 2
    assert "line 1" in out.err
    assert run(capsys, "barcode", tmp_path / "missing.json")[0] == 2


def test_promote_without_operators_is_bad_input(capsys, planted_file):
    assert run(capsys, "promote", planted_file, "--target", 3)[0] == 2


def test_gen_is_deterministic(capsys, tmp_path):
    args = ["gen", "--seed", 4, "--n", 6, "--plant", "1/3,1", "--modulus", 3, "--actions"]
    _, first = run(capsys, *args)
    _, second = run(capsys, *args)
    assert first.out == second.out
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, *args, "--output", a)
    run(capsys, *args, "--output", b)
    assert a.read_bytes() == b.read_bytes() == first.out.encode()


def test_window_command(capsys, planted_file):
    code, out = run(capsys, "window", planted_file, "--from=0,2", "--to=-1,1", "--format", "machine")
    assert code == 0
    kinds = [r.get("kind") for r in records(out.out)]
    assert kinds.count("window") == 2 and "map" in kinds


def test_primegap(capsys):
    code, out = run(capsys, "primegap", "--prime", 7, "--C", 2, "--format", "machine")
    assert code == 0
    check = records(out.out)[1]
    assert check["next_prime"] == 11 and check["passed"]
    code, out = run(capsys, "primegap", "--sweep", 10000, "--format", "machine")
    assert code == 0
    sweep = records(out.out)[1]
    assert sweep["failures"] == [2, 3, 7] and sweep["first_pass_from"] == 11


def test_scenario_default_and_halt(capsys):
    code, out = run(capsys, "scenario", "--format", "machine")
    assert code == 0
    assert sum(r.get("kind") == "check" for r in records(out.out)) == 6
    code, out = run(capsys, "scenario", "--C", "1/2", "--format", "machine")
    assert code == 1
    assert any(r.get("kind") == "halted" and r["step"] == 1 for r in records(out.out))


def test_report_file(capsys, planted_file, tmp_path):
    rpt = tmp_path / "r.jsonl"
    code, out = run(capsys, "barcode", planted_file, "--report", rpt)
    assert code == 0
    assert records(rpt.read_text())[-1]["status"] == "PASS"


def test_promote_round_trip(capsys, tmp_path):
    from novikov.complex import Generator as G
    from novikov.matrix import Matrix

    ops = [Matrix.from_ints(2, [[0, 0], [1, 0]]), Matrix.identity(2, 2)]
    C = FilteredComplex.from_normalized(2, 4, [G("a"), G("b")], ops[0])
    path, out_path = tmp_path / "x.json", tmp_path / "x8.json"
    path.write_text(fileio.dumps(fileio.ComplexFile(C, xk_operators=ops)))
    code, out = run(capsys, "promote", path, "--target", 8, "--output", out_path, "--format", "machine")
    assert code == 0
    check = next(r for r in records(out.out) if r.get("kind") == "check")
    assert check["order"] == 8 and check["failing_orders"] == []
    assert len(fileio.load(str(out_path)).xk_operators) == 9
