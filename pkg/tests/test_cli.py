import json
import subprocess
import sys

import pytest

from boolalg import fixtures
from boolalg.cli import main


def family_json(fam):
    return {"ground": fam[0].ground, "subalgebras": [{"blocks": A.to_json()["blocks"]} for A in fam]}


@pytest.fixture
def write(tmp_path):
    def _write(obj, name="in.json"):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)
    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_commutes_false(capsys, write):
    code, out, _ = run(capsys, "commutes", write(family_json(fixtures.noncomm())))
    assert code == 1
    data = json.loads(out)
    assert data["result"] is False and data["counterexample"] is not None


def test_weakly_commutes_true(capsys, write):
    code, out, _ = run(capsys, "weakly-commutes", write(family_json(fixtures.strictlyweakcomm())))
    assert code == 0 and json.loads(out)["result"] is True


def test_commutes_well(capsys, write):
    path = write(family_json(fixtures.lowcoherenothigh()))
    assert run(capsys, "commutes-well", path, "--max-arity", "2")[0] == 0
    code, out, _ = run(capsys, "commutes-well", path)
    assert code == 1 and json.loads(out)["counterexample"] == [0, 1, 2]


def test_amalgamates_badoverlap(capsys, write):
    code, out, _ = run(capsys, "amalgamates", write(fixtures.badoverlap().to_json()))
    assert code == 1 and json.loads(out)["counterexample"]


def test_pushout(capsys, write):
    code, out, _ = run(capsys, "pushout", write(fixtures.badoverlap().to_json()), "--emit-coprojections")
    data = json.loads(out)
    assert code == 0 and "coprojections" in data


def test_assemble_failure(capsys, write):
    code, out, _ = run(capsys, "assemble", write(fixtures.badoverlap().to_json()))
    data = json.loads(out)
    assert code == 1 and data["which"] == "trace-noncommuting"


def test_reflects(capsys, write):
    system, traces = fixtures.reflection_failure()
    path = write({"system": system.to_json(), "traces": [t.to_json() for t in traces]})
    code, out, _ = run(capsys, "reflects", path)
    assert code == 1 and json.loads(out)["condition"] == 3


def test_interpolate(capsys):
    code, out, _ = run(capsys, "interpolate", "p & q", "!p & r")
    assert code == 0 and out.split() == ["p", "!p"]
    code, out, _ = run(capsys, "interpolate", "--json", "p", "q")
    assert code == 1 and json.loads(out)["model"] == {"p": 1, "q": 1}


@pytest.mark.parametrize("argv", [
    ["interpolate", "p &", "q"],
    ["interpolate", "p"],
    ["commutes", "/nonexistent.json"],
    ["search", "algebra"],
    ["search", "cube", "--universe", "-1"],
    ["nosuchcommand"],
])
def test_invalid_input(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_bad_json(capsys, write):
    assert run(capsys, "commutes", write("{not json"))[0] == 2
    assert run(capsys, "commutes", write({"ground": 3, "subalgebras": [{"blocks": [[0], [0, 1]]}]}))[0] == 2


def test_search_cube(capsys):
    code, out, _ = run(capsys, "search", "cube", "--functor", "exp", "--universe", "4", "--json")
    data = json.loads(out)
    assert code == 0 and data["witness"]["sets"] == [[0, 1], [0, 2], [1, 2]]


def test_search_algebra_none(capsys):
    code, out, _ = run(capsys, "search", "algebra", "--functor", "sp2", "--ground", "3")
    assert code == 1 and out.strip() == "none"


def test_verify_paper(capsys):
    code, out, _ = run(capsys, "verify-paper", "--json")
    reports = json.loads(out)
    assert code == 0 and len(reports) == 7 and all(r["pass"] for r in reports)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "boolalg", "interpolate", "p & q", "!p & r"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.split() == ["p", "!p"]
