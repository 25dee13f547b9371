"""TRE statistics, the paired t test, and the method comparison harness."""

import numpy as np
import pytest
import scipy.special
import scipy.stats

from landreg.core import AffineMatrix, AffineParams9, PointSet, compose, transform_array
from landreg.errors import (
    CorrespondenceError,
    DegenerateConfigurationError,
    DegenerateTestError,
    InsufficientSampleError,
)
from landreg.evaluate import (
    EvalCase,
    TREStat,
    compare_methods,
    identity_method,
    paired_ttest,
    refined_method,
    regularized_incomplete_beta,
    tre,
    umeyama_method,
)
from landreg.refine import RefineConfig
from landreg.synth import SynthConfig, generate_cases

TETRA = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0], [0.0, 0.0, 10.0]])


def test_stat_recomputable_from_values():
    stat = TREStat.from_values([1.0, 2.0, 3.0, 10.0])
    assert stat.mean == np.mean(stat.per_case)
    assert stat.std == np.std(stat.per_case, ddof=1)
    assert not stat.degenerate


def test_stat_single_value_is_degenerate():
    stat = TREStat.from_values([4.5])
    assert (stat.mean, stat.std) == (4.5, 0.0)
    assert stat.degenerate


def test_stat_empty_rejected():
    with pytest.raises(InsufficientSampleError):
        TREStat.from_values([])


def test_stat_format():
    assert str(TREStat.from_values([1.0, 2.0])) == "1.500 ± 0.707 mm"


def test_tre_identity_on_aligned_sets():
    ps = PointSet(TETRA)
    stat = tre(AffineMatrix.identity(), ps, ps)
    assert (stat.mean, stat.std) == (0.0, 0.0)


def test_tre_three_four_five_offset():
    moving = PointSet(TETRA)
    fixed = PointSet(TETRA + np.array([3.0, 4.0, 0.0]))
    stat = tre(AffineMatrix.identity(), moving, fixed)
    assert abs(stat.mean - 5.0) < 1e-12
    assert stat.std == 0.0


def test_tre_matches_per_point_distances():
    rng = np.random.default_rng(3)
    moving = rng.uniform(-20, 20, size=(5, 3))
    fixed = rng.uniform(-20, 20, size=(5, 3))
    matrix = compose(AffineParams9((1, 2, -3), (0.1, 0.2, -0.1), (1.2, 0.9, 1.0)))
    stat = tre(matrix, PointSet(moving), PointSet(fixed))
    moved = transform_array(matrix, moving)
    expected = [float(np.linalg.norm(fixed[i] - moved[i])) for i in range(5)]
    assert np.allclose(stat.per_case, expected, atol=1e-12)
    assert stat.mean == pytest.approx(np.mean(expected))


def test_tre_size_mismatch():
    with pytest.raises(CorrespondenceError):
        tre(AffineMatrix.identity(), PointSet(TETRA), PointSet(TETRA[:2]))


def test_incomplete_beta_matches_reference():
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(200):
        a = float(rng.uniform(0.5, 30.0))
        b = float(rng.uniform(0.5, 30.0))
        x = float(rng.uniform(0.0, 1.0))
        got = regularized_incomplete_beta(a, b, x)
        want = float(scipy.special.betainc(a, b, x))
        worst = max(worst, abs(got - want))
    assert worst < 1e-10
    assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
    assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


def test_paired_ttest_matches_reference():
    rng = np.random.default_rng(20)
    for _ in range(20):
        n = int(rng.integers(3, 30))
        a = rng.normal(5.0, 2.0, size=n)
        b = a + rng.normal(0.3, 1.0, size=n)
        t, p = paired_ttest(a, b)
        ref = scipy.stats.ttest_rel(a, b)
        assert abs(t - ref.statistic) < 1e-10
        assert abs(p - ref.pvalue) < 1e-10


def test_paired_ttest_antisymmetric():
    a = [1.0, 2.5, 3.0, 4.5, 5.0]
    b = [0.5, 2.7, 2.1, 4.9, 4.0]
    t_ab, p_ab = paired_ttest(a, b)
    t_ba, p_ba = paired_ttest(b, a)
    assert t_ab == -t_ba
    assert p_ab == p_ba


def test_paired_ttest_degenerate_inputs():
    with pytest.raises(DegenerateTestError):
        paired_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateTestError):
        paired_ttest([1.0, 2.0, 3.0, 4.0, 5.0], [0.0, 1.0, 2.0, 3.0, 4.0])
    with pytest.raises(InsufficientSampleError):
        paired_ttest([1.0], [2.0])
    with pytest.raises(CorrespondenceError):
        paired_ttest([1.0, 2.0], [1.0])


def aligned_case(case_id="c0"):
    ps = PointSet(TETRA)
    return EvalCase(case_id=case_id, moving=ps, fixed=ps)


def test_compare_single_identity_case():
    table = compare_methods([aligned_case()], [identity_method()])
    stat = table.fit["identity"]
    assert (stat.mean, stat.std) == (0.0, 0.0)
    assert table.n_cases == 1
    assert table.reports[0].case_id == "c0"
    assert table.ttests == {}


def test_compare_identity_vs_umeyama_on_similarity_cases():
    cases = [c.as_eval_case() for c in generate_cases(2, 4, SynthConfig())]
    table = compare_methods(cases, [identity_method(), umeyama_method()])
    assert table.fit["umeyama"].mean < 1e-9
    assert table.fit["identity"].mean > 1.0
    assert ("identity", "umeyama") in table.ttests
    assert table.holdout["umeyama"].mean < 1e-9


def test_compare_refinement_improves_nonuniform_cases():
    cfg = SynthConfig(scale_mode="nonuniform")
    cases = [c.as_eval_case() for c in generate_cases(6, 4, cfg)]
    table = compare_methods(
        cases, [umeyama_method(), refined_method(RefineConfig(iterations=3000))]
    )
    assert table.fit["umeyama+refine"].mean < table.fit["umeyama"].mean


def test_compare_annotates_errors_with_case_id():
    bad = EvalCase(
        case_id="broken",
        moving=PointSet(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])),
        fixed=PointSet(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])),
    )
    with pytest.raises(DegenerateConfigurationError, match="broken"):
        compare_methods([bad], [umeyama_method()])


def test_compare_requires_cases_and_unique_names():
    with pytest.raises(InsufficientSampleError):
        compare_methods([], [identity_method()])
    with pytest.raises(CorrespondenceError):
        compare_methods([aligned_case()], [identity_method(), identity_method()])


def test_compare_degenerate_ttest_recorded_as_none():
    cases = [aligned_case("a"), aligned_case("b")]
    table = compare_methods(cases, [identity_method(), umeyama_method()])
    # both methods are exact on aligned data, so differences are all zero
    assert table.ttests[("identity", "umeyama")] is None


def test_compare_csv_and_text_output():
    cases = [c.as_eval_case() for c in generate_cases(4, 3, SynthConfig())]
    table = compare_methods(cases, [identity_method(), umeyama_method()])
    csv = table.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "method,mean_mm,std_mm,n_cases"
    assert lines[1].startswith("identity,") and lines[1].endswith(",3")
    assert lines[2].startswith("umeyama,")
    assert float(lines[2].split(",")[1]) < 1e-9

    text = table.to_text()
    assert "identity" in text and "umeyama" in text
    assert "±" in text
    assert "t =" in text and "p =" in text


def test_compare_skips_holdout_when_any_case_lacks_it():
    with_holdout = generate_cases(5, 1, SynthConfig())[0].as_eval_case()
    table = compare_methods([with_holdout, aligned_case()], [identity_method()])
    assert table.holdout == {}
