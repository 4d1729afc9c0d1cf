import numpy as np
import pandas as pd
import pytest

from core import scaling
from experiments import scaling_study


class TestScalingFit:

    def test_exact_power_law(self):
        fit = scaling.scaling_fit({d: 5.0 * d ** 3 for d in (2, 3, 4, 5)})
        assert fit.slope == pytest.approx(3.0)
        assert fit.intercept == pytest.approx(np.log(5.0))
        assert fit.residual == pytest.approx(0.0, abs=1e-12)

    def test_quadratic_law(self):
        assert scaling.scaling_fit({d: 7.0 * d ** 2 for d in (2, 3, 4)}).slope == pytest.approx(2.0)

    def test_accepts_frame_and_pairs(self):
        frame = pd.DataFrame({"d": [2, 3, 5], "n_star": [40.0, 90.0, 250.0]})
        assert scaling.scaling_fit(frame).slope == pytest.approx(scaling.scaling_fit(
            [(2, 40.0), (3, 90.0), (5, 250.0)]).slope)

    def test_needs_three_dimensions(self):
        with pytest.raises(ValueError, match="at least 3"):
            scaling.scaling_fit({2: 100.0, 3: 300.0})


class TestSummaryNStar:

    def test_smallest_passing_n(self):
        summary = pd.DataFrame({
            "d": [2, 2, 2, 3, 3], "alpha": [0.2] * 5, "epsilon": [0.3] * 5,
            "n": [100, 200, 400, 200, 400], "total": [0.6, 0.3, 0.1, 0.5, 0.2],
        })
        n_star = scaling.n_star_from_summary(summary)
        assert n_star[["d", "n_star"]].values.tolist() == [[2, 200], [3, 400]]

    def test_nothing_passes(self):
        summary = pd.DataFrame({"d": [2], "alpha": [0.2], "epsilon": [0.3], "n": [10], "total": [0.9]})
        assert scaling.n_star_from_summary(summary).empty


class TestMinimalSampleSize:

    def test_bisection_brackets_target(self):
        n = scaling.minimal_sample_size(2, 0.4, 0.45, trials=30, seed=3, alternative="pure", rel_tol=0.25)
        assert n >= 2
        type1, type2 = scaling.estimate_errors(2, 0.4, 0.45, n, 30, 3, alternative="pure")
        assert type1 + type2 <= scaling.TARGET_ERROR

    def test_calibrated_constant_reproduces_minimal_n(self):
        kwargs = dict(trials=30, seed=3, alternative="pure", rel_tol=0.25)
        n = scaling.minimal_sample_size(2, 0.4, 0.45, **kwargs)
        constant = scaling.calibrate_constant(0.4, 0.45, d=2, **kwargs)
        assert constant == pytest.approx(n * 0.45 ** 2 * 0.4 ** 2 / 8)


@pytest.mark.slow
def test_sample_size_grows_near_cubically():
    fit = scaling_study.run_scaling_study({"trials": 100, "rel_tol": 0.1})
    assert 2.3 <= fit.slope <= 3.7
