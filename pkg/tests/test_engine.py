import json

import numpy as np
import pytest

from core import config_parser, engine, error_rates, lowerbound, qmat


def small_config(tmp_path, **overrides):
    raw = {
        "name": "engine_unit",
        "dims": [2],
        "alphas": [0.2],
        "epsilons": [0.3],
        "sample_size": [200, 400],
        "trials": 3,
        "alternative": "random_admissible",
        "seed": 5,
        "output": str(tmp_path / "records.ndjson"),
    }
    raw.update(overrides)
    return config_parser.parse_sweep_config(raw)


class TestAlternatives:

    @pytest.mark.parametrize("d,epsilon", [(2, 0.3), (3, 0.3), (5, 0.2)])
    def test_random_admissible_is_far_state(self, d, epsilon, rng):
        rho = engine.make_alternative("random_admissible", d, 0.2, epsilon, rng)
        qmat.DensityMatrix(rho)
        assert qmat.trace_norm_dist(rho, qmat.maximally_mixed(d)) >= epsilon

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_random_admissible_lies_in_least_sensitive_span(self, d, rng):
        s = lowerbound.gentle_superop(engine.gentle_povm_for(d, 0.2), mode="classes")
        count, _ = lowerbound.direction_range(d)
        span = s.traceless_eigenvectors[:, :count]
        rho = engine.make_alternative("random_admissible", d, 0.2, 0.2, rng)
        coeffs = qmat.expand_in_basis(rho - np.eye(d) / d, s.basis)
        assert np.linalg.norm(coeffs - span @ (span.T @ coeffs)) < 1e-9
        # Each of the count directions carries the same weight, ±1 times the scale.
        weights = np.abs(span.T @ coeffs)
        np.testing.assert_allclose(weights, weights[0], rtol=1e-9)

    def test_random_admissible_varies_with_rng(self, rng):
        draws = {tuple(np.round(engine.make_alternative("random_admissible", 3, 0.2, 0.2, rng).real.ravel(), 9))
                 for _ in range(20)}
        assert len(draws) > 1

    def test_worst_case_direction(self, rng):
        rho = engine.make_alternative("worst_case", 2, 0.2, 0.3, rng)
        qmat.DensityMatrix(rho)
        assert qmat.trace_norm_dist(rho, np.eye(2) / 2) == pytest.approx(0.3, rel=1e-5)

    def test_pure_alternative(self, rng):
        rho = engine.make_alternative("pure", 3, 0.2, 0.5, rng)
        assert rho[0, 0] == 1.0
        with pytest.raises(ValueError, match="too large"):
            engine.make_alternative("pure", 2, 0.2, 0.5, rng)

    def test_unknown_kind(self, rng):
        with pytest.raises(ValueError, match="Unknown alternative"):
            engine.make_alternative("mystery", 2, 0.2, 0.3, rng)


class TestTrials:

    def test_trial_is_reproducible(self):
        cell = engine.Cell(d=2, alpha=0.2, epsilon=0.3, n=300)
        a = engine.run_trial("x", cell, 4, "alt", 9, "random_admissible", "counts")
        b = engine.run_trial("x", cell, 4, "alt", 9, "random_admissible", "counts")
        assert a.statistic == b.statistic
        assert a.truth_distance == b.truth_distance
        assert a.stream == b.stream

    def test_null_trial_records_zero_distance(self):
        cell = engine.Cell(d=3, alpha=0.1, epsilon=0.3, n=100)
        record = engine.run_trial("x", cell, 0, "null", 1, "pure", "outcomes")
        assert record.truth_distance == pytest.approx(0.0, abs=1e-12)
        assert record.D == 12
        assert record.reject == (record.statistic > record.threshold)

    def test_cells_follow_sample_rule(self, tmp_path):
        cells = engine.build_cells(small_config(tmp_path, dims=[2, 3]))
        assert [(c.d, c.n) for c in cells] == [(2, 200), (2, 400), (3, 200), (3, 400)]


class TestSweep:

    def test_sweep_writes_every_task(self, tmp_path):
        config = small_config(tmp_path)
        records = engine.run_sweep(config)
        assert len(records) == 2 * 3 * 2
        with open(config.output) as f:
            lines = [json.loads(line) for line in f]
        assert len(lines) == 12
        assert {line["label"] for line in lines} == {"null", "alt"}

    def test_sweep_resumes(self, tmp_path):
        config = small_config(tmp_path)
        first = engine.run_sweep(config)
        second = engine.run_sweep(config)
        with open(config.output) as f:
            assert sum(1 for _ in f) == 12
        assert [r.statistic for r in first] == [r.statistic for r in second]

    def test_new_seed_does_not_reuse_old_records(self, tmp_path):
        first = engine.run_sweep(small_config(tmp_path, seed=5))
        second = engine.run_sweep(small_config(tmp_path, seed=6))
        assert {r.seed for r in first} == {5}
        assert {r.seed for r in second} == {6}
        with open(small_config(tmp_path).output) as f:
            assert sum(1 for _ in f) == 24
        again = engine.run_sweep(small_config(tmp_path, seed=5))
        assert [r.statistic for r in again] == [r.statistic for r in first]

    def test_new_name_does_not_reuse_old_records(self, tmp_path):
        engine.run_sweep(small_config(tmp_path))
        renamed = engine.run_sweep(small_config(tmp_path, name="engine_other"))
        assert {r.name for r in renamed} == {"engine_other"}

    def test_partial_file_is_completed(self, tmp_path):
        config = small_config(tmp_path)
        full = engine.run_sweep(config, output=str(tmp_path / "full.ndjson"))
        with open(config.output, "w") as f:
            for record in full[:5]:
                f.write(json.dumps(record.to_dict()) + "\n")
            f.write("not json\n")
        resumed = engine.run_sweep(config)
        assert [r.statistic for r in resumed] == [r.statistic for r in full]

    def test_worker_pool_matches_serial(self, tmp_path):
        serial = engine.run_sweep(small_config(tmp_path), output=str(tmp_path / "serial.ndjson"))
        pooled = engine.run_sweep(small_config(tmp_path, workers=2), output=str(tmp_path / "pooled.ndjson"))
        assert [r.statistic for r in serial] == [r.statistic for r in pooled]


@pytest.mark.slow
def test_power_at_rate_constant(tmp_path):
    config = config_parser.parse_sweep_config({
        "name": "power",
        "dims": [2],
        "alphas": [0.1],
        "epsilons": [0.3],
        "sample_size": {"rule": "rate", "constant": 10.0},
        "trials": 300,
        "alternative": "random_admissible",
        "sampler": "counts",
        "seed": 20240611,
        "output": str(tmp_path / "power.ndjson"),
    })
    summary = error_rates.summarize(engine.run_sweep(config))
    assert len(summary) == 1
    row = summary.iloc[0]
    sigma = np.sqrt((row["type1"] * (1 - row["type1"]) + row["type2"] * (1 - row["type2"])) / config.trials)
    assert row["total"] <= 1 / 3 + 3 * sigma
