import io
import json

import jsonschema
import numpy as np
import pytest

from alcp.alc import parse_concept
from alcp.cli import run_cli
from alcp.engine import Reasoner, belief_interval, belief_stream
from alcp.errors import BoundsError, ParseError, UndeclaredVariableError
from alcp.kbio import (
    CHECK_SCHEMA,
    ME_SCHEMA,
    QUERY_SCHEMA,
    WORLDS_SCHEMA,
    QueryReport,
    check_report,
    document_from_kb,
    dumps,
    emit_report,
    format_number,
    me_report,
    parse_document,
    parse_kb,
    parse_report,
    render_document,
    worlds_report,
)

import oracles
from conftest import random_kb

STREP = ("some sf.strep", "some suc.ab")


def same_kb(a, b):
    assert a.context_signature == b.context_signature
    assert a.labeled_tbox == b.labeled_tbox
    assert a.concept_names == b.concept_names and a.role_names == b.role_names
    A1, c1 = a.constraints.matrix
    A2, c2 = b.constraints.matrix
    assert np.array_equal(A1, A2) and np.array_equal(c1, c2)


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


class TestKbFormat:
    def test_antibiotics(self, antibiotics):
        assert antibiotics.context_signature.variables == ("res", "h")
        assert len(antibiotics.labeled_tbox) == 6
        assert {"strep", "bac", "inf", "vir", "ab"} <= set(antibiotics.concept_names)
        assert set(antibiotics.role_names) == {"sf", "suc"}

    def test_round_trip_antibiotics(self, antibiotics):
        same_kb(parse_kb(render_document(document_from_kb(antibiotics))), antibiotics)

    def test_round_trip_statements(self):
        text = """
        vars a, b, c.
        concepts X.
        roles r.
        gci X sqsubseteq some r.(Y and not Z) : a -> b | c.
        gci top sqsubseteq all r.X.
        prob (a & !b) in [0.1, 0.25].
        cond ((a | b) | c) = 0.5.
        linear 0.25*P(a & b) - P(a & !b) + 0.1 >= 0.
        linear P(c) <= 0.9.
        """
        doc = parse_document(text)
        again = parse_document(render_document(doc))
        same_kb(again.to_kb(), doc.to_kb())
        assert render_document(again) == render_document(doc)

    @pytest.mark.parametrize("seed", range(10))
    def test_round_trip_random(self, seed):
        kb = random_kb(np.random.default_rng(900 + seed))
        same_kb(parse_kb(render_document(document_from_kb(kb))), kb)

    def test_cond_splits_at_first_bar(self):
        kb = parse_kb("vars a, b, c. cond (a | b | c) = 0.5.")
        ref = parse_kb("vars a, b, c. cond (a | (b | c)) = 0.5.")
        same_kb(kb, ref)

    def test_linear_forms_agree(self):
        a = parse_kb("vars x. linear P(x) - 0.3 >= 0.")
        b = parse_kb("vars x. linear -P(x) <= -0.3.")
        c = parse_kb("vars x. linear P(x) >= 0.3.")
        for other in (b, c):
            assert np.allclose(Reasoner(a).probs, Reasoner(other).probs)
        A1, c1 = a.constraints.matrix
        A2, c2 = b.constraints.matrix
        assert np.array_equal(A1, A2) and np.array_equal(c1, c2)

    def test_comments_and_whitespace(self):
        kb = parse_kb("# head\nvars x.   # trailing\n\n gci A sqsubseteq B. # done\n")
        assert len(kb.labeled_tbox) == 1


class TestParseErrors:
    @pytest.mark.parametrize(
        "text, line, column",
        [
            ("vars x.\ngci A sqsubseteq : x.", 2, 18),
            ("vars x.\nprob (y) = 0.5.", 2, 7),
            ("vars x.\nprob (x) = 0.5", 2, 15),
            ("gci A sqsubseteq B.", 1, 1),
            ("vars x.\nfoo bar.", 2, 1),
            ("vars x.\ncond (x) = 0.5.", 2, 8),
        ],
    )
    def test_positions(self, text, line, column):
        with pytest.raises(ParseError) as exc:
            parse_kb(text)
        assert (exc.value.line, exc.value.column) == (line, column), str(exc.value)

    def test_undeclared(self):
        with pytest.raises(UndeclaredVariableError) as exc:
            parse_kb("vars x.\ngci A sqsubseteq B : z.")
        assert exc.value.name == "z"

    @pytest.mark.parametrize("bounds", ["= 1.5", "in [0.6, 0.4]", "= -0.1"])
    def test_bounds(self, bounds):
        with pytest.raises(BoundsError):
            parse_kb(f"vars x. prob (x) {bounds}.")

    @pytest.mark.parametrize(
        "text",
        ["", "vars x. vars y.", "vars true.", "vars x, x.", "vars x. concepts some.", "vars x. linear >= 0."],
    )
    def test_rejected(self, text):
        with pytest.raises(ParseError):
            parse_kb(text)

    def test_concept_role_clash(self):
        with pytest.raises(ParseError):
            parse_kb("vars x. gci r sqsubseteq some r.top.")


class TestNumbers:
    @pytest.mark.parametrize("x", [0.0, 1.0, 0.05, 1 / 3, 1e-300, 0.9405083902558592, 2.0**-52])
    def test_exact(self, x):
        s = format_number(x)
        assert float(s) == x
        assert any(ch in s for ch in ".eE")

    def test_significant_digits(self):
        s = format_number(0.9405083902558592)
        assert len(s.replace("0.", "", 1).lstrip("0")) >= 12

    @pytest.mark.parametrize("bad", [float("nan"), float("inf")])
    def test_non_finite(self, bad):
        with pytest.raises(ValueError):
            format_number(bad)

    def test_dumps_is_valid_json(self):
        obj = {"a": [1, 2], "b": {"c": 0.1, "d": None, "e": True}, "f": [], "g": [0.5, "x"]}
        assert json.loads(dumps(obj)) == obj


class TestReports:
    def _report(self, antibiotics, **kw):
        lhs, rhs = (parse_concept(s) for s in STREP)
        r = belief_interval(antibiotics, lhs, rhs)
        return QueryReport.from_result(r, lhs, rhs, "true", "disjoint", **kw)

    def test_schema_and_round_trip(self, antibiotics):
        lhs, rhs = (parse_concept(s) for s in STREP)
        snaps = belief_stream(antibiotics, lhs, rhs)
        rep = QueryReport.from_result(snaps[-1].result, lhs, rhs, "true", "disjoint", trace=True, snapshots=snaps)
        data = emit_report(rep)
        jsonschema.validate(json.loads(data), QUERY_SCHEMA)
        assert parse_report(data) == rep

    def test_endpoints_survive_exactly(self, antibiotics):
        rep = self._report(antibiotics)
        back = parse_report(emit_report(rep))
        assert back.sceptical == rep.sceptical and back.credulous == rep.credulous
        assert back.sceptical == pytest.approx(oracles.running_example_me_vector(tol=1e-15)[0], abs=1e-9)

    def test_deterministic(self, antibiotics):
        assert emit_report(self._report(antibiotics)) == emit_report(self._report(antibiotics))

    def test_text_format(self, antibiotics):
        text = emit_report(self._report(antibiotics), "text").decode()
        assert "sceptical:" in text and "credulous:" in text
        with pytest.raises(ValueError):
            emit_report(self._report(antibiotics), "xml")

    def test_other_schemas(self, antibiotics, kbs_dir):
        r = Reasoner(antibiotics)
        for obj, schema in ((check_report(r), CHECK_SCHEMA), (me_report(r), ME_SCHEMA), (worlds_report(r), WORLDS_SCHEMA)):
            jsonschema.validate(json.loads(dumps(obj)), schema)
        from alcp.kbio import load_kb

        bad = check_report(Reasoner(load_kb(kbs_dir / "contradiction.alcp")))
        jsonschema.validate(bad, CHECK_SCHEMA)
        assert bad["witness"] == {"index": 1, "assignment": {"x": True}}


class TestCli:
    def test_query(self, kbs_dir):
        code, out, _ = cli("query", str(kbs_dir / "antibiotics.alcp"), "--lhs", STREP[0], "--rhs", STREP[1], "--json")
        assert code == 0
        obj = json.loads(out)
        jsonschema.validate(obj, QUERY_SCHEMA)
        assert obj["credulous"] == pytest.approx(0.95, abs=1e-9)

    def test_query_given(self, kbs_dir):
        code, out, _ = cli("query", str(kbs_dir / "antibiotics.alcp"), "--lhs", STREP[0], "--rhs", STREP[1], "--given", "h", "--json")
        obj = json.loads(out)
        assert code == 0 and obj["credulous"] == pytest.approx(0.2, abs=1e-9)

    def test_anytime_and_trace(self, kbs_dir):
        code, out, _ = cli("query", str(kbs_dir / "antibiotics.alcp"), "--lhs", STREP[0], "--rhs", STREP[1],
                           "--anytime", "--trace", "--order", "index", "--json")
        obj = json.loads(out)
        assert code == 0 and len(obj["snapshots"]) == 5 and len(obj["trace"]) == 4

    def test_text_outputs(self, kbs_dir):
        for cmd in ("check", "me", "worlds"):
            code, out, _ = cli(cmd, str(kbs_dir / "antibiotics.alcp"))
            assert code == 0 and out

    @pytest.mark.parametrize("cmd, schema", [("check", CHECK_SCHEMA), ("me", ME_SCHEMA), ("worlds", WORLDS_SCHEMA)])
    def test_json_outputs(self, kbs_dir, cmd, schema):
        code, out, _ = cli(cmd, str(kbs_dir / "antibiotics.alcp"), "--json")
        assert code == 0
        jsonschema.validate(json.loads(out), schema)

    def test_check_inconsistent_is_ok(self, kbs_dir):
        code, out, _ = cli("check", str(kbs_dir / "contradiction.alcp"), "--json")
        assert code == 0 and json.loads(out)["me_consistent"] is False

    def test_exit_parse(self, tmp_path):
        p = tmp_path / "bad.alcp"
        p.write_text("vars x.\nprob (y) = 0.5.\n")
        code, _, err = cli("check", str(p))
        assert code == 1 and "2:7" in err
        assert cli("check", str(tmp_path / "missing.alcp"))[0] == 1

    def test_exit_infeasible(self, tmp_path):
        p = tmp_path / "inf.alcp"
        p.write_text("vars x, y.\nprob (x) = 0.2.\nprob (x & y) = 0.3.\n")
        assert cli("check", str(p))[0] == 2
        assert cli("query", str(p), "--lhs", "A", "--rhs", "A")[0] == 2

    def test_exit_inconsistent(self, kbs_dir):
        code, _, err = cli("query", str(kbs_dir / "contradiction.alcp"), "--lhs", "A", "--rhs", "A")
        assert code == 3 and "x" in err

    def test_exit_zero_context(self, kbs_dir):
        code, _, _ = cli("query", str(kbs_dir / "antibiotics.alcp"), "--lhs", "A", "--rhs", "A", "--given", "false")
        assert code == 4

    def test_exit_limit(self, kbs_dir):
        assert cli("me", str(kbs_dir / "antibiotics.alcp"), "--max-iter", "1")[0] == 5
        assert cli("me", str(kbs_dir / "antibiotics.alcp"), "--max-vars", "1")[0] == 5
        code, _, _ = cli("query", str(kbs_dir / "antibiotics.alcp"), "--lhs", STREP[0], "--rhs", STREP[1], "--node-limit", "1")
        assert code == 5

    def test_bad_given_is_parse_error(self, kbs_dir):
        assert cli("query", str(kbs_dir / "antibiotics.alcp"), "--lhs", "A", "--rhs", "A", "--given", "res &")[0] == 1
        assert cli("query", str(kbs_dir / "antibiotics.alcp"), "--lhs", "A and", "--rhs", "A")[0] == 1
