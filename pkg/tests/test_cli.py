"""CLI surface: compute/check/script commands, DSL, cache persistence."""

import re

import pytest

from gwverify import point_oracle, target_oracle
from gwverify.cache import CacheError, cache_load, cache_store
from gwverify.cli import main
from gwverify.script import (
    CheckStmt,
    ComputeStmt,
    ScriptError,
    SetStmt,
    parse_script,
    pretty_print,
    run_script,
)

SCRIPT = """
# demo script
compute <tau_4(1); g=2>
check conjB(target=point, g=3, k=3, form=T)
check conjA(g=2, m=7)
check conjA(g=1, m=2, probe=1)
set target = P2
set cutoff = 2
check conjA(g=0, m=2, extras=[tau_0(2)])
compute <tau_0(3) tau_0(3); g=0, d=1>
"""


def mask_ms(text: str) -> str:
    return re.sub(r"\bms=\d+", "ms=X", text)


class TestComputeCommand:
    def test_point_values(self, capsys):
        assert main(["compute", "--target", "point", "--genus", "1",
                     "--ins", "1:1", "--no-cache"]) == 0
        out = capsys.readouterr()
        assert out.out == "1/24\n"
        assert "selection: ok" in out.err

    def test_trivial_value(self, capsys):
        assert main(["compute", "--target", "point", "--genus", "0",
                     "--ins", "0:1,0:1,0:1", "--no-cache"]) == 0
        assert capsys.readouterr().out == "1\n"

    def test_target_value(self, capsys):
        assert main(["compute", "--target", "P2", "--genus", "0", "--degree", "1",
                     "--ins", "0:3,0:3", "--no-cache"]) == 0
        assert capsys.readouterr().out == "1\n"

    def test_selection_status(self, capsys):
        main(["compute", "--target", "point", "--genus", "1", "--ins", "2:1",
              "--no-cache"])
        out = capsys.readouterr()
        assert out.out == "0\n" and "selection: vanishes" in out.err


class TestCheckCommand:
    def test_probe_exit_zero(self, capsys):
        code = main(["check", "conjA", "--target", "point", "--g", "1", "--m", "2",
                     "--probe", "--no-cache"])
        out = capsys.readouterr().out
        assert code == 0
        assert "residual=1/24" in out and "verdict=FAILS" in out and "probe=1" in out

    def test_named_relation(self, capsys):
        assert main(["check", "g2T4", "--target", "point", "--no-cache"]) == 0
        assert "verdict=HOLDS" in capsys.readouterr().out

    def test_range_sweep(self, capsys):
        code = main(["check", "conjA", "--target", "point", "--g", "2",
                     "--m", "6..10", "--extras-level", "2", "--max-extras", "2",
                     "--no-cache"])
        out = capsys.readouterr().out
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 5 * len_batteries(2, 2)
        assert all(("verdict=HOLDS" in l) or ("verdict=TRIVIAL" in l) for l in lines)

    def test_out_of_range_usage_error(self, capsys):
        assert main(["check", "conjA", "--g", "1", "--m", "2", "--no-cache"]) == 2

    def test_unknown_relation_usage_error(self, capsys):
        assert main(["check", "bogus", "--no-cache"]) == 2


def len_batteries(max_extras, level):
    from gwverify.relations import battery_multisets
    return len(battery_multisets(max_extras, level))


class TestScriptDSL:
    def test_parse_statements(self):
        stmts = parse_script(SCRIPT)
        assert isinstance(stmts[0], ComputeStmt)
        assert stmts[0].insertions == ((4, 1),) and stmts[0].genus == 2
        assert isinstance(stmts[1], CheckStmt) and stmts[1].ident == "conjB"
        assert dict(stmts[1].kvs)["form"] == "T"
        assert isinstance(stmts[4], SetStmt)

    def test_pretty_round_trip(self):
        stmts = parse_script(SCRIPT)
        assert parse_script(pretty_print(stmts)) == stmts

    def test_syntax_error_position(self):
        with pytest.raises(ScriptError, match="line 2"):
            parse_script("compute <tau_0(1) tau_0(1) tau_0(1); g=0>\nfrob x\n")

    def test_unknown_param_rejected_at_parse(self):
        with pytest.raises(ScriptError, match="unknown parameter"):
            parse_script("check conjA(g=1, m=4, bogus=2)\n")

    def test_unknown_option_rejected(self):
        with pytest.raises(ScriptError, match="unknown option"):
            parse_script("set colour = red\n")

    def test_unknown_relation_rejected(self):
        with pytest.raises(ScriptError, match="unknown relation"):
            parse_script("check nosuch(g=1)\n")

    def test_run_script_output(self):
        result = run_script(parse_script(SCRIPT))
        lines = result.lines
        assert lines[0] == "1/1152"
        assert lines[1].startswith("CHECK conjB")
        assert "verdict=TRIVIAL" in lines[2]      # odd m
        assert "verdict=FAILS" in lines[3] and "probe=1" in lines[3]
        assert "CHECK conjA\tP2" in lines[4]
        assert lines[5] == "1"
        from gwverify.relations import exit_code
        assert exit_code(result.reports) == 0

    def test_range_expansion(self):
        result = run_script(parse_script("check conjA(g=1, m=4..8)\n"))
        assert len(result.reports) == 5

    def test_script_command(self, tmp_path, capsys):
        path = tmp_path / "s.gws"
        path.write_text(SCRIPT)
        assert main(["script", str(path), "--no-cache"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("1/1152\n")


class TestCache:
    def test_round_trip_bit_exact(self, tmp_path):
        from gwverify.model import get_model
        point_oracle.psi_correlator(2, (4,))
        target_oracle.descendant_g0(get_model("P2"), 1, ((0, 3), (0, 3)))
        p1 = tmp_path / "a.cache"
        p2 = tmp_path / "b.cache"
        n1 = cache_store(p1)
        assert n1 > 0
        point_oracle.clear_caches()
        target_oracle.clear_caches()
        assert cache_load(p1) == n1
        # warm values must round-trip: recompute nothing, re-store identically
        point_oracle.psi_correlator(2, (4,))
        cache_store(p2)
        assert set(p1.read_text().splitlines()) <= set(p2.read_text().splitlines())

    def test_corrupt_rational_refused(self, tmp_path):
        bad = tmp_path / "bad.cache"
        bad.write_text("point|g=2|d=0|ins=4:1\t1/0\n")
        with pytest.raises(CacheError):
            cache_load(bad)

    def test_noncanonical_key_refused(self, tmp_path):
        bad = tmp_path / "bad.cache"
        bad.write_text("point|g=2|d=0|ins=0:1,4:1\t1/2\n")
        with pytest.raises(CacheError):
            cache_load(bad)

    def test_noncanonical_value_refused(self, tmp_path):
        bad = tmp_path / "bad.cache"
        bad.write_text("point|g=2|d=0|ins=4:1\t2/2304\n")
        with pytest.raises(CacheError):
            cache_load(bad)

    def test_no_partial_load(self, tmp_path):
        bad = tmp_path / "bad.cache"
        bad.write_text("point|g=1|d=0|ins=1:1\t1/24\npoint|g=2|d=0|ins=4:1\t1/0\n")
        point_oracle.clear_caches()
        with pytest.raises(CacheError):
            cache_load(bad)
        assert (1, (1,)) not in point_oracle.psi_cache()


class TestDeterminism:
    def test_cold_vs_warm_script(self):
        stmts = parse_script(SCRIPT)
        point_oracle.clear_caches()
        target_oracle.clear_caches()
        cold = mask_ms(run_script(stmts).output)
        warm = mask_ms(run_script(stmts).output)
        assert cold == warm

    def test_golden_output(self):
        point_oracle.clear_caches()
        target_oracle.clear_caches()
        got = mask_ms(run_script(parse_script(SCRIPT)).output)
        expected = (
            "1/1152\n"
            "CHECK conjB\tpoint\tform=T;g=3;k=3\tdegree=0\tresidual=0\t"
            "verdict=TRIVIAL\tterms=0\tms=X\n"
            "CHECK conjA\tpoint\tg=2;m=7\tdegree=0\tresidual=0\t"
            "verdict=TRIVIAL\tterms=0\tms=X\n"
            "CHECK conjA\tpoint\tg=1;m=2;probe=1\tdegree=0\tresidual=1/24\t"
            "verdict=FAILS\tterms=2\tms=X\n"
            "CHECK conjA\tP2\tg=0;m=2;extras=0:2\tdegree=2\tresidual=0,0,0\t"
            "verdict=HOLDS\tterms=2\tms=X\n"
            "1\n"
        )
        assert got == expected
