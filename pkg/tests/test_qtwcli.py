import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qtw import qtwcli as cli
from qtw.qtwcli import Diff, Gen, Neg, Num, Prod, QPow, Sum


@pytest.fixture(scope="module")
def twistor_alphabet(twistor):
    return twistor.alphabet


leaves = st.one_of(
    st.fractions(min_value=0, max_value=20, max_denominator=5).map(Num),
    st.integers(-4, 4).map(QPow),
    st.builds(Gen, st.sampled_from(["z", "dz"]),
              st.tuples(st.integers(1, 2), st.integers(1, 4))),
)


def extend(children):
    several = st.lists(children, min_size=2, max_size=3)
    return st.one_of(
        children.map(Neg),
        children.map(Diff),
        several.map(lambda fs: Prod(tuple(fs))),
        st.lists(st.tuples(st.sampled_from("+-"), children), min_size=2, max_size=3).map(
            lambda ts: Sum((("+", ts[0][1]),) + tuple(ts[1:]))),
    )


asts = st.recursive(leaves, extend, max_leaves=8)


@given(asts)
def test_render_parse_round_trip(twistor_alphabet, e):
    text = cli.render_ast(e)
    assert cli.parse(text, twistor_alphabet) == e
    assert cli.render_ast(cli.parse(text)) == text


@pytest.mark.parametrize("src, pos", [
    ("z[1,5]", 4), ("q^1.5 * z[1,1]", 3), ("w[1,1]", 0), ("z[1,1", 5),
    ("z[1]", 0), ("2 * ", 4), ("z[1,1] \t\n", None), ("1/0", 2), ("z[1,1] )", 7),
])
def test_parse_errors_carry_offsets(twistor_alphabet, src, pos):
    if pos is None:
        cli.parse(src, twistor_alphabet)
        return
    with pytest.raises(cli.ParseError) as info:
        cli.parse(src, twistor_alphabet)
    assert info.value.pos == pos


def test_evaluate(twistor):
    alpha = twistor.alphabet
    p = cli.evaluate(cli.parse("d(z[1,1]) - dz[1,1]", alpha), alpha)
    assert not p
    p = cli.evaluate(cli.parse("1/2 * q^-1 * z[2,3]", alpha), alpha)
    assert p == twistor.z(1, 2) * cli.qpow(-1, Fraction(1, 2))


def test_render_residual():
    assert cli.render_residual({"a": [], "b": {}}) == "0"
    many = {i: cli.NcPoly.const(i) for i in range(1, 6)}
    text = cli.render_residual(many)
    assert text.endswith("(5 non-zero entries)")
    assert text.startswith("1 ")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_json_is_deterministic(capsys):
    code, first, _ = run(capsys, "check", "rmx:eps", "--report", "json", "--no-timings")
    assert code == 0
    _, second, _ = run(capsys, "check", "rmx:eps", "--report", "json", "--no-timings")
    assert first == second
    data = json.loads(first)
    assert data["suite"] == "rmx:eps" and data["schema_version"] == 1
    assert data["q"] == "generic"
    assert set(data["pinned_conventions"]) >= {"epsilon", "leibniz_twist", "trace_weights",
                                               "eq16_reading"}
    assert all(c["pass"] and c["residual"] == "0" and c["ms"] == 0 for c in data["checks"])


def test_check_text_and_out_file(capsys, tmp_path):
    target = tmp_path / "r.txt"
    code, out, _ = run(capsys, "check", "rmx:hecke", "--r", "glq:3", "--q", "5/7",
                       "--out", str(target))
    assert code == 0 and out == ""
    text = target.read_text()
    assert "q = 5/7" in text
    assert text.splitlines()[-1].startswith("PASS rmx:hecke")


def test_usage_errors(capsys):
    code, _, err = run(capsys, "check", "no:such-suite")
    assert code == 2 and "unknown suite" in err
    code, _, err = run(capsys, "check", "rmx:hecke", "--r", "eps4")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["check", "rmx:hecke", "--q", "0"])
    assert info.value.code == 2
    capsys.readouterr()


def test_reduce_and_parse_commands(capsys, tmp_path):
    f = tmp_path / "e.txt"
    f.write_text("d(z[1,1]) - dz[1,1]\n")
    assert run(capsys, "reduce", str(f))[:2] == (0, "0\n")
    f.write_text("z[2,1] * z[1,1]")
    code, out, _ = run(capsys, "reduce", str(f), "--q", "1")
    assert code == 0 and "z[1,1]" in out
    code, out, _ = run(capsys, "parse", str(f))
    assert (code, out) == (0, "z[2,1] * z[1,1]\n")
    f.write_text("z[1,5]")
    code, _, err = run(capsys, "parse", str(f))
    assert code == 2 and "out of range" in err
    code, _, err = run(capsys, "parse", str(tmp_path / "missing.txt"))
    assert code == 2


def test_failing_suite_exits_one(monkeypatch, capsys):
    def bad(params):
        rep = cli.inst.VerificationReport("fake")
        rep.add("nonzero", "", lambda: cli.NcPoly.const(1))
        return rep

    monkeypatch.setitem(cli.SUITES, "fake", bad)
    code, out, _ = run(capsys, "check", "fake")
    assert code == 1 and "FAIL nonzero" in out
