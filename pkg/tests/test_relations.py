"""Identity checks: verdict logic, hypothesis gating, report format."""

from fractions import Fraction

import pytest

from gwverify.relations import (
    RELATIONS,
    CheckParamError,
    CheckSpec,
    battery_multisets,
    exit_code,
    run_check,
    run_sweep,
)

F = Fraction


def check(ident, target="point", probe=False, extras=(), cutoff=None, **params):
    return run_check(CheckSpec(ident, target=target, params=params,
                               extras=tuple(extras), cutoff=cutoff, probe=probe))


class TestVerdicts:
    def test_probe_regression_value(self):
        # fixed nonzero residual demonstrating the checker is not vacuous
        r = check("conjA", g=1, m=2, probe=True)
        assert r.verdict == "FAILS"
        assert r.residual.coeffs == (F(1, 24),)

    def test_out_of_range_needs_probe(self):
        with pytest.raises(CheckParamError):
            check("conjA", g=1, m=2)

    def test_odd_m_symbolically_trivial(self):
        r = check("conjA", g=2, m=7)
        assert r.verdict == "TRIVIAL" and r.terms == 0

    def test_holds_with_nonzero_terms(self):
        r = check("conjA", g=1, m=4, extras=[(0, 1), (0, 1)])
        assert r.verdict == "HOLDS" and r.terms > 0

    def test_unknown_relation(self):
        with pytest.raises(CheckParamError):
            check("nosuch", g=1)

    def test_unknown_param(self):
        with pytest.raises(CheckParamError):
            check("conjA", g=1, m=4, bogus=2)

    def test_report_line_format(self):
        r = check("conjA", g=1, m=4, extras=[(0, 1), (0, 1)])
        line = r.render()
        fields = line.split("\t")
        assert fields[0] == "CHECK conjA"
        assert fields[1] == "point"
        assert fields[2] == "g=1;m=4;extras=0:1,0:1"
        assert fields[3] == "degree=0"
        assert fields[4] == "residual=0"
        assert fields[5] == "verdict=HOLDS"
        assert fields[6].startswith("terms=") and fields[7].startswith("ms=")

    def test_exit_code_contract(self):
        ok = check("conjA", g=1, m=4)
        probe_fail = check("conjA", g=1, m=2, probe=True)
        assert exit_code([ok, probe_fail]) == 0
        # a forced failure: genuinely perturb an in-range check is impossible,
        # so synthesize one by marking the probe as non-probe
        probe_fail.spec.probe = False
        assert exit_code([ok, probe_fail]) == 1

    def test_run_sweep_order_and_jobs(self):
        specs = [CheckSpec("conjA", params={"g": 1, "m": m}) for m in (4, 6, 8)]
        seq = [r.render().split("\tms=")[0] for r in run_sweep(specs, jobs=1)]
        par = [r.render().split("\tms=")[0] for r in run_sweep(specs, jobs=3)]
        assert seq == par


class TestConjsOnPoint:
    def test_conjA_sweep_small(self):
        for m in (4, 6):
            for batt in battery_multisets(2, 3):
                r = check("conjA", g=1, m=m, extras=batt)
                assert r.verdict in ("HOLDS", "TRIVIAL"), r.render()

    def test_conjB_string_equation_case(self):
        r = check("conjB", g=0, k=0, form="direct", extras=[(0, 1), (0, 1)])
        assert r.verdict == "HOLDS"

    def test_conjB_T_cases(self):
        assert check("conjB", g=2, k=2, form="T", extras=[(1, 1)]).verdict == "HOLDS"
        assert check("conjB", g=3, k=3, form="T", extras=[(2, 1)]).verdict == "HOLDS"

    def test_conjB_range(self):
        with pytest.raises(CheckParamError):
            check("conjB", g=1, k=0, form="direct")

    def test_conjC_examples(self):
        fours = dict(ws=["tau_0(1)", "tau_0(1)"], vs=["tau_0(1)", "tau_0(1)"])
        assert check("conjC", g=0, m=1, **fours).verdict in ("HOLDS", "TRIVIAL")
        r = check("conjC", g=2, m=5, **fours)
        assert r.residual.is_zero
        assert r.spec.probe  # below the proved range: auto-labeled probe
        assert not check("conjC", g=2, m=7, **fours).spec.probe

    def test_conjC_nontrivial_with_battery(self):
        r = check("conjC", g=1, m=2, extras=[(1, 1), (0, 1)])
        assert r.verdict in ("HOLDS", "TRIVIAL")
        swept = [check("conjC", g=1, m=2, extras=b) for b in battery_multisets(3, 3)]
        assert any(r.verdict == "HOLDS" for r in swept)
        assert all(r.residual.is_zero for r in swept)

    def test_allg1_examples(self):
        r = check("allg1", g=2, h=1, m=7,
                  ws=["tau_0(1)", "tau_0(1)"], vs=["tau_0(1)", "tau_0(1)"])
        assert r.residual.is_zero

    def test_allg1_hypothesis_guard(self):
        with pytest.raises(CheckParamError):
            check("allg1", g=0, h=0, m=5, ws=["tau_0(1)"], vs=["tau_0(1)", "tau_0(1)"])

    def test_allg2_example(self):
        base = dict(g=1, m=4, p=0, x=1, vs=["tau_0(1)", "tau_0(1)"])
        assert check("allg2", **base).residual.is_zero
        r = check("allg2", extras=[(1, 1), (0, 1), (0, 1)], **base)
        assert r.verdict == "HOLDS"


class TestTCalculus:
    def test_EX(self):
        for g in (1, 2, 3):
            for batt in ((), ((1, 1),), ((2, 1), (0, 1))):
                r = check("EX", g=g, extras=batt)
                assert r.residual.is_zero, (g, batt)

    def test_g1_g2_powers(self):
        assert check("g1Tk", k=2, extras=[(2, 1), (0, 1)]).residual.is_zero
        assert check("g2Tk", k=5, extras=[(1, 1)]).residual.is_zero
        with pytest.raises(CheckParamError):
            check("g1Tk", k=1)

    def test_two_slot(self):
        for j in range(4):
            assert check("twoT", g=1, j=j, m=3, extras=[(1, 1)]).residual.is_zero

    def test_propTtau_both_sides_value(self):
        # at the origin both alternating tensor sums evaluate to -1/576
        from gwverify.expr import ScalarExpr, apply_T_power, bracket, coord_field, evaluate
        from gwverify.model import get_model
        point = get_model("point")
        lhs = ScalarExpr.zero()
        rhs = ScalarExpr.zero()
        for j in range(3):
            sign = F(1) if j % 2 == 0 else F(-1)
            lhs = lhs + (bracket(1, [coord_field(j, 1)])
                         * bracket(1, [coord_field(2 - j, 1)])).scale(sign)
            rhs = rhs + (bracket(1, [apply_T_power(coord_field(0, 1), j, point)])
                         * bracket(1, [apply_T_power(coord_field(0, 1), 2 - j, point)])
                         ).scale(sign)
        assert evaluate(lhs, point, 0).coeffs == (F(-1, 576),)
        assert evaluate(rhs, point, 0).coeffs == (F(-1, 576),)

    def test_propTtau_checks(self):
        assert check("propTtau", m=2, ph=1, qh=1, extras=[(2, 1)]).residual.is_zero
        r = check("propTtau", m=4, ph=0, qh=1,
                  ws=["tau_2(1)"], vs=["tau_1(1)", "tau_0(1)"], extras=[(0, 1)])
        assert r.residual.is_zero
        assert check("propTtau", m=0, ph=1, qh=1).verdict == "TRIVIAL"   # T^0 = id

    def test_lemma21(self):
        assert check("lemma21", l=1, g=1, extras=[(1, 1), (0, 1)]).verdict == "HOLDS"
        assert check("lemma21", l=2, g=2, extras=[(1, 1), (1, 1)]).residual.is_zero
        assert check("lemma21", l=3, g=1, extras=[(0, 1)]).residual.is_zero


class TestNamedOnPoint:
    @pytest.mark.parametrize("ident,params", [
        ("TRRg2M", dict(w="tau_2(1)")),
        ("g2T3", dict(w="tau_1(1)")),
        ("g2T4", dict(w="tau_0(1)")),
        ("genTRR", dict(g=1, m=1)),
        ("genTRR", dict(g=2, m=4)),
        ("geng1TRR", dict(m=0, w="tau_1(1)")),
        ("geng1TRR", dict(m=2, w="tau_1(1)")),
        ("conjCg1pt2", dict(m=2, w="tau_0(1)", vs=["tau_1(1)"])),
        ("conjCg1pt3", dict(m=3, ws=["tau_0(1)", "tau_0(1)"], vs=["tau_1(1)"])),
        ("lemma22", dict(g=1, k=1)),
        ("lemma22", dict(g=2, k=2)),
        ("FPGW", dict(g=1, l=2)),
        ("FPGW", dict(g=2, l=3)),
        ("Srec", dict(w="tau_1(1)", v="tau_1(1)")),
        ("genSrec", dict(m=4, w="tau_1(1)", v="tau_0(1)")),
        ("geng0TRR", dict(m=2, w="tau_1(1)", u="tau_0(1)", v="tau_0(1)")),
        ("conjCg0pt2", dict(m=1, w="tau_1(1)", vs=["tau_0(1)", "tau_0(1)"])),
        ("conjCg0pt3", dict(m=2, ws=["tau_0(1)", "tau_1(1)"],
                            vs=["tau_0(1)", "tau_0(1)"])),
        ("ttau2", dict(k=3, g=1)),
        ("lemma41", dict(k=4, g=1)),
        ("ttaug0", dict(w="tau_2(1)", v="tau_1(1)")),
        ("g0TRR", dict(ws=["tau_1(1)", "tau_0(1)", "tau_0(1)"])),
        ("g1TRR", dict(w="tau_1(1)")),
    ])
    def test_zero_residual_under_batteries(self, ident, params):
        for batt in battery_multisets(2, 3):
            r = check(ident, extras=batt, **params)
            assert r.residual.is_zero, (ident, params, batt, r.render())

    def test_g2T4_example(self):
        assert check("g2T4").verdict == "HOLDS"   # nonzero at the origin already

    def test_g3_relations(self):
        for batt in ((), ((2, 1),), ((1, 1), (1, 1)), ((4, 1), (2, 1))):
            assert check("g3TRR", extras=batt).residual.is_zero, batt
            assert check("g3T6", extras=batt).residual.is_zero, batt
        swept = [check("g3TRR", extras=b) for b in
                 (((4, 1), (2, 1)), ((3, 1), (3, 1)), ((5, 1), (1, 1)))]
        assert any(r.verdict == "HOLDS" for r in swept)


class TestTargets:
    def test_genSrec_p2(self):
        r = check("genSrec", target="P2", m=3, w="tau_0(3)", v="tau_0(2)", cutoff=2)
        assert r.verdict == "HOLDS"

    def test_g0conjA_p2(self):
        for m in (2, 4):
            for batt in (((0, 2),), ((1, 3), (0, 2)), ((0, 2), (0, 2))):
                r = check("conjA", target="P2", g=0, m=m, extras=batt, cutoff=3)
                assert r.residual.is_zero, (m, batt)

    def test_euler_quasihomogeneity(self):
        assert check("derg0conjA", target="P2", m=2, cutoff=3).verdict == "HOLDS"
        for m in (2, 4):
            for target, ncls in (("P1", 2), ("P2", 3)):
                swept = [check("derg0conjA", target=target, m=m, cutoff=3, extras=b)
                         for b in battery_multisets(2, 2, n_classes=ncls)]
                assert all(r.residual.is_zero for r in swept), (target, m)
                assert any(r.verdict == "HOLDS" for r in swept), (target, m)

    def test_wdvv_p2_with_derivatives(self):
        r = check("wdvv", target="P2", cutoff=3, extras=[(0, 3), (0, 3)],
                  ws=["tau_0(2)", "tau_0(3)", "tau_0(2)", "tau_0(3)"])
        assert r.verdict == "HOLDS"

    def test_conjC_on_target(self):
        r = check("conjC", target="P2", g=0, m=1, cutoff=2,
                  ws=["tau_0(2)", "tau_0(3)"], vs=["tau_0(2)", "tau_0(2)"])
        assert r.residual.is_zero

    def test_registry_docs(self):
        for ident, rel in RELATIONS.items():
            assert rel["doc"], ident


class TestCombinedIdentity:
    def test_splits_into_its_two_halves(self):
        # the combined vanishing identity is term-for-term the sum of the
        # string-shift residual and half the alternating two-point residual
        # one genus down; for genus 0 the two coincide outright
        from fractions import Fraction
        from gwverify.model import get_model
        from gwverify.relations import RELATIONS, FieldResolver
        point = get_model("point")
        for g, l in ((1, 2), (2, 3), (3, 4)):
            resolver = FieldResolver(point, 3)
            fp = RELATIONS["FPGW"]["builder"](point, {"g": g, "l": l}, resolver)
            cb = RELATIONS["conjB"]["builder"](
                point, {"g": g, "k": l, "form": "direct"}, resolver)
            ca = RELATIONS["conjA"]["builder"](point, {"g": g - 1, "m": 2 * l - 2},
                                               resolver)
            assert (fp - cb - ca.scale(Fraction(1, 2))).is_zero_expr, (g, l)
        for l in (1, 2):
            resolver = FieldResolver(point, 3)
            fp = RELATIONS["FPGW"]["builder"](point, {"g": 0, "l": l}, resolver)
            cb = RELATIONS["conjB"]["builder"](
                point, {"g": 0, "k": l, "form": "direct"}, resolver)
            assert (fp - cb).is_zero_expr, l
